"""Benchmark values, regret reports, experiment configuration, and sweeps.

Benchmarks are computed against exact expected rewards (piecewise regimes
use per-window means, not realized draws). The everywhere-realizable
benchmark is exact for constant models and a grid outer approximation
otherwise; reports carry an `exact` flag so over-estimates are labelled.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .core import SmoothedSimplexParams, as_menu
from .errors import (ConfigurationError, InvalidInputError,
                     ResourceLimitError)
from .menus import menu_choice_distribution
from .models import PreferenceModel, model_from_spec
from .recommend import (Alg1Params, Alg2Params, Alg3Params,
                        MemorylessEstimateParams, mu_polytope_halfspaces,
                        run_alg1, run_alg2, run_alg3, run_memoryless_estimate,
                        run_memoryless_exp3)
from .simulate import (Episode, FixedMenuRecommender, RewardProcess, RunTrace,
                       UniformRandomRecommender, run_episode)

MENU_ENUM_CAP = 12


def default_memory_grid(n: int, phi: float = 0.1, extra: int = 50,
                        seed: int = 0) -> np.ndarray:
    """Smoothed-simplex vertices, the uniform vector, and seeded random
    interior points; the default outer-approximation grid."""
    params = SmoothedSimplexParams(phi=phi, n=n)
    rng = np.random.default_rng(seed)
    rows = [params.vertices(), np.full((1, n), 1.0 / n)]
    if extra > 0:
        rows.append(rng.dirichlet(np.ones(n), size=extra))
    return np.vstack(rows)


def best_point_smoothed_simplex(R, phi: float) -> tuple[np.ndarray, float]:
    """Best vertex of the smoothed simplex for cumulative rewards R; a linear
    objective over the hull peaks at a vertex, ties to the lowest index."""
    R = np.asarray(R, dtype=float)
    if not np.all(np.isfinite(R)):
        raise InvalidInputError("cumulative rewards must be finite")
    params = SmoothedSimplexParams(phi=phi, n=R.shape[0])
    values = params.vertices() @ R
    i_star = int(np.argmax(values))
    return params.vertex(i_star), float(values[i_star])


def best_point_eird(R, model: PreferenceModel, k: int,
                    v_grid=None) -> tuple[np.ndarray, float, bool]:
    """LP max R.x over the simplex cut by the menu-time constraints at every
    grid memory vector. Exact for constant models (any single vector); an
    upper bound on the true optimum otherwise."""
    from scipy.optimize import linprog

    R = np.asarray(R, dtype=float)
    n = model.n
    if R.shape != (n,):
        raise InvalidInputError("reward vector dimension mismatch")
    exact = model.meta.lipschitz == 0.0
    if v_grid is None:
        v_grid = (np.full((1, n), 1.0 / n) if exact
                  else default_memory_grid(n))
    blocks = []
    for v in np.asarray(v_grid, dtype=float):
        A, _ = mu_polytope_halfspaces(model.scores(v), k)
        blocks.append(A)
    A_ub = np.vstack(blocks)
    res = linprog(-R, A_ub=A_ub, b_ub=np.zeros(A_ub.shape[0]),
                  A_eq=np.ones((1, n)), b_eq=np.ones(1),
                  bounds=[(0, None)] * n, method="highs")
    if not res.success:
        raise InvalidInputError(f"benchmark LP failed: {res.message}")
    return res.x, float(-res.fun), exact


def best_fixed_menu(model: PreferenceModel, rewards: RewardProcess,
                    T: int, k: int) -> tuple[tuple[int, ...], float]:
    """Exact best fixed menu for a constant model: expected cumulative reward
    is the menu's fixed choice distribution dotted with the summed expected
    rewards. Ties go to the lexicographically smallest menu."""
    if model.meta.lipschitz != 0.0:
        raise ConfigurationError("fixed-menu benchmark needs a constant model")
    n = model.n
    if n > MENU_ENUM_CAP:
        raise ResourceLimitError(f"menu enumeration capped at n <= {MENU_ENUM_CAP}")
    R = rewards.cumulative_expected(T, n)
    scores = model.scores(np.full(n, 1.0 / n))
    best_menu, best_value = None, -np.inf
    for menu in combinations(range(n), k):
        value = float(menu_choice_distribution(menu, scores) @ R)
        if value > best_value + 1e-15:
            best_menu, best_value = menu, value
    return best_menu, best_value


@dataclass
class BenchmarkResult:
    """A fixed comparator (point or menu) and its exact expected value at any
    checkpoint under the experiment's reward process."""

    name: str
    rewards: RewardProcess
    n: int
    point: np.ndarray | None = None
    menu: tuple[int, ...] | None = None
    menu_choice: np.ndarray | None = None
    exact: bool = True

    def value_at(self, t: int) -> float:
        R = self.rewards.cumulative_expected(t, self.n)
        weights = self.point if self.point is not None else self.menu_choice
        return float(weights @ R)

    def describe(self) -> dict:
        d = {"name": self.name, "exact": self.exact}
        if self.point is not None:
            d["point"] = [float(x) for x in self.point]
        if self.menu is not None:
            d["menu"] = list(self.menu)
        return d


def compute_benchmark(name: str, model: PreferenceModel, rewards: RewardProcess,
                      T: int, k: int, phi: float | None = None,
                      v_grid=None) -> BenchmarkResult:
    n = model.n
    R = rewards.cumulative_expected(T, n)
    if name in ("smoothed-simplex", "smoothed_simplex"):
        if phi is None:
            raise ConfigurationError("smoothed-simplex benchmark needs phi")
        point, _ = best_point_smoothed_simplex(R, phi)
        return BenchmarkResult(name="smoothed-simplex", rewards=rewards, n=n, point=point)
    if name == "eird":
        point, _, exact = best_point_eird(R, model, k, v_grid=v_grid)
        return BenchmarkResult(name="eird", rewards=rewards, n=n, point=point, exact=exact)
    if name in ("fixed-menus", "fixed_menus"):
        menu, _ = best_fixed_menu(model, rewards, T, k)
        scores = model.scores(np.full(n, 1.0 / n))
        return BenchmarkResult(name="fixed-menus", rewards=rewards, n=n, menu=menu,
                               menu_choice=menu_choice_distribution(menu, scores))
    raise ConfigurationError(f"unknown benchmark {name!r}")


@dataclass
class RegretReport:
    """Per-seed and aggregate regret at checkpoints against one benchmark."""

    benchmark: dict
    checkpoints: list[int]
    rows: list[dict]

    def aggregate(self) -> dict:
        out = {}
        for i, cp in enumerate(self.checkpoints):
            vals = np.array([row["regret"][i] for row in self.rows])
            out[cp] = {"mean": float(np.mean(vals)),
                       "stderr": float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
                       if len(vals) > 1 else 0.0}
        return out

    def csv_lines(self) -> list[str]:
        lines = ["T_checkpoint,seed,regret,benchmark_value,alg_reward"]
        for row in sorted(self.rows, key=lambda r: r["seed"]):
            for i, cp in enumerate(self.checkpoints):
                lines.append(
                    f"{cp},{row['seed']},{row['regret'][i]:.9g},"
                    f"{row['benchmark_value'][i]:.9g},{row['alg_reward'][i]:.9g}")
        return lines

    def summary_lines(self) -> list[str]:
        agg = self.aggregate()
        lines = [f"benchmark {self.benchmark['name']}",
                 f"benchmark_exact {str(self.benchmark['exact']).lower()}",
                 f"seeds {len(self.rows)}"]
        for cp in self.checkpoints:
            lines.append(f"regret_mean_T{cp} {agg[cp]['mean']:.9g}")
            lines.append(f"regret_stderr_T{cp} {agg[cp]['stderr']:.9g}")
        return lines

    def save(self, csv_path, summary_path):
        with open(csv_path, "w") as fh:
            fh.write("\n".join(self.csv_lines()) + "\n")
        with open(summary_path, "w") as fh:
            fh.write("\n".join(self.summary_lines()) + "\n")


def regret_curve(trace: RunTrace, benchmark: BenchmarkResult,
                 checkpoints) -> dict:
    """Regret at each checkpoint: benchmark cumulative value minus the
    trace's realized cumulative reward."""
    checkpoints = [int(c) for c in checkpoints]
    if any(c > trace.T for c in checkpoints):
        raise InvalidInputError("checkpoint beyond the trace horizon")
    cum = np.concatenate([[0.0], np.cumsum(trace.rewards)])
    row = {"seed": trace.seed, "regret": [], "benchmark_value": [], "alg_reward": []}
    for cp in checkpoints:
        bench_val = benchmark.value_at(cp)
        alg_val = float(cum[cp])
        row["benchmark_value"].append(bench_val)
        row["alg_reward"].append(alg_val)
        row["regret"].append(bench_val - alg_val)
    return row


# ---------------------------------------------------------------------------
# Experiment configuration and drivers.

_PARAM_CLASSES = {
    "alg1": Alg1Params,
    "alg2": Alg2Params,
    "alg3": Alg3Params,
    "memoryless_estimate": MemorylessEstimateParams,
}


@dataclass
class ExperimentConfig:
    """Everything needed to replay a run: model, horizon, discount (direct or
    via the exponent c with gamma = 1 - 1/T^c), algorithm, rewards,
    benchmark, seeds, checkpoints, output paths."""

    name: str
    model: dict
    k: int
    T: int
    algorithm: dict
    rewards: dict
    benchmark: dict
    seeds: list[int]
    gamma: float | None = None
    c: float | None = None
    checkpoints: list[int] | None = None
    initial_memory: list | None = None
    output_dir: str = "out"
    sweep_T: list[int] | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(**d)
        except TypeError as exc:
            raise ConfigurationError(f"bad config: {exc}") from exc
        if (cfg.gamma is None) == (cfg.c is None):
            raise ConfigurationError("config needs exactly one of gamma or c")
        if not cfg.seeds:
            raise ConfigurationError("config needs at least one seed")
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__
                if getattr(self, f) is not None or f in ("gamma", "c")}

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def effective_gamma(self, T: int | None = None) -> float:
        if self.gamma is not None:
            return self.gamma
        T = self.T if T is None else T
        return 1.0 - T ** (-self.c)

    def default_checkpoints(self, T: int | None = None) -> list[int]:
        T = self.T if T is None else T
        if self.checkpoints is not None:
            return [c for c in self.checkpoints if c <= T] or [T]
        cps = sorted({max(1, T // 10), T // 4, T // 2, (3 * T) // 4, T})
        return [c for c in cps if c >= 1]


def _dispatch_algorithm(episode: Episode, algorithm: dict) -> RunTrace:
    name = algorithm.get("name")
    params_dict = dict(algorithm.get("params", {}))
    if name == "alg1":
        return run_alg1(episode, Alg1Params(**params_dict))
    if name == "alg2":
        return run_alg2(episode, Alg2Params(**params_dict))
    if name == "alg3":
        strict = bool(algorithm.get("strict", True))
        return run_alg3(episode, Alg3Params(**params_dict), strict=strict)
    if name == "memoryless_exp3":
        return run_memoryless_exp3(episode)
    if name == "memoryless_estimate":
        return run_memoryless_estimate(episode, MemorylessEstimateParams(**params_dict))
    if name == "uniform":
        rec = UniformRandomRecommender()
    elif name == "fixed_menu":
        rec = FixedMenuRecommender(as_menu(params_dict["menu"], episode.n, episode.k))
    else:
        raise ConfigurationError(f"unknown algorithm {name!r}")
    rec.begin(episode)
    while not episode.done:
        t = episode.t
        menu = rec.next_menu(t)
        chosen, reward = episode.show(menu)
        rec.feedback(t, menu, chosen, reward)
    return episode.trace()


def run_cell(config_dict: dict, T: int, seed: int,
             save_trace: bool = True) -> dict:
    """Run one (T, seed) cell from a plain config dict (safe to ship to a
    worker process) and return the regret row; optionally write the trace."""
    cfg = ExperimentConfig.from_dict(config_dict)
    model = model_from_spec(cfg.model)
    rewards = RewardProcess.from_spec(cfg.rewards, n=model.n)
    episode = Episode(model, cfg.effective_gamma(T), rewards, T, seed, cfg.k,
                      initial_memory=cfg.initial_memory)
    trace = _dispatch_algorithm(episode, cfg.algorithm)
    benchmark = compute_benchmark(
        cfg.benchmark["name"], model, rewards, T, cfg.k,
        phi=cfg.benchmark.get("phi"),
        v_grid=cfg.benchmark.get("v_grid"))
    row = regret_curve(trace, benchmark, cfg.default_checkpoints(T))
    out = {"T": T, "seed": seed, "row": row, "benchmark": benchmark.describe(),
           "checkpoints": cfg.default_checkpoints(T)}
    if save_trace:
        os.makedirs(cfg.output_dir, exist_ok=True)
        path = os.path.join(cfg.output_dir, f"{cfg.name}_T{T}_seed{seed}.trace")
        trace.save(path)
        out["trace_path"] = path
    return out


def run_experiment(config: ExperimentConfig, save: bool = True) -> RegretReport:
    """All seeds at the configured horizon; writes report.csv and summary.txt."""
    rows, benchmark = [], None
    for seed in config.seeds:
        cell = run_cell(config.to_dict(), config.T, seed, save_trace=save)
        rows.append(cell["row"])
        benchmark = cell["benchmark"]
    report = RegretReport(benchmark=benchmark,
                          checkpoints=config.default_checkpoints(config.T),
                          rows=rows)
    if save:
        os.makedirs(config.output_dir, exist_ok=True)
        report.save(os.path.join(config.output_dir, f"{config.name}_report.csv"),
                    os.path.join(config.output_dir, f"{config.name}_summary.txt"))
    return report


def run_sweep(config: ExperimentConfig, workers: int = 1,
              save: bool = True) -> dict[int, RegretReport]:
    """Parallel grid over (T, seed); each cell owns its own episode and trace
    file, aggregation is sequential and sorted for byte-stable output."""
    Ts = config.sweep_T or [config.T]
    cells = [(T, seed) for T in Ts for seed in config.seeds]
    cfg_dict = config.to_dict()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, [(cfg_dict, T, s, save) for T, s in cells]))
    else:
        results = [_sweep_cell((cfg_dict, T, s, save)) for T, s in cells]
    reports = {}
    for T in Ts:
        got = sorted((r for r in results if r["T"] == T), key=lambda r: r["seed"])
        reports[T] = RegretReport(benchmark=got[0]["benchmark"],
                                  checkpoints=got[0]["checkpoints"],
                                  rows=[g["row"] for g in got])
        if save:
            os.makedirs(config.output_dir, exist_ok=True)
            reports[T].save(
                os.path.join(config.output_dir, f"{config.name}_T{T}_report.csv"),
                os.path.join(config.output_dir, f"{config.name}_T{T}_summary.txt"))
    return reports


def _sweep_cell(args) -> dict:
    cfg_dict, T, seed, save = args
    return run_cell(cfg_dict, T, seed, save_trace=save)
