"""Agent dynamics and the round loop.

The agent's memory is the discount-weighted empirical distribution of its
past selections, kept exactly via an (unnormalized sum, normalizer)
recurrence. Episodes are strictly sequential; distinct episodes share no
state and derive independent random streams from one seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import as_distribution, as_menu
from .errors import (ConfigurationError, InvalidInputError,
                     ProtocolViolationError)


@dataclass(frozen=True)
class MemoryState:
    """Discounted memory: vector = weighted_sum / normalizer.

    `t` counts absorbed selections (including any priming pseudo-selection),
    so normalizer = (1 - gamma^t) / (1 - gamma) for gamma < 1 and t for
    gamma = 1.
    """

    weighted_sum: np.ndarray
    normalizer: float
    gamma: float
    t: int

    @classmethod
    def empty(cls, n: int, gamma: float) -> "MemoryState":
        if not (0.0 <= gamma <= 1.0):
            raise InvalidInputError(f"gamma must lie in [0,1], got {gamma}")
        return cls(np.zeros(n), 0.0, gamma, 0)

    @classmethod
    def uniform_prior(cls, n: int, gamma: float) -> "MemoryState":
        """Primed as if one uniform pseudo-selection occurred."""
        state = cls.empty(n, gamma)
        return cls(np.full(n, 1.0 / n), 1.0, state.gamma, 1)

    @classmethod
    def from_vector(cls, v, gamma: float) -> "MemoryState":
        v = as_distribution(v)
        if not (0.0 <= gamma <= 1.0):
            raise InvalidInputError(f"gamma must lie in [0,1], got {gamma}")
        return cls(v.copy(), 1.0, gamma, 1)

    @property
    def vector(self) -> np.ndarray:
        if self.normalizer <= 0:
            raise InvalidInputError("memory vector undefined before any selection")
        return self.weighted_sum / self.normalizer


def update_memory(state: MemoryState, chosen: int) -> MemoryState:
    """Absorb one selection: discount everything by gamma, add the new item."""
    n = state.weighted_sum.shape[0]
    if not (0 <= chosen < n):
        raise InvalidInputError(f"chosen item {chosen} out of range [0,{n})")
    ws = state.gamma * state.weighted_sum
    ws[chosen] += 1.0
    return MemoryState(ws, state.gamma * state.normalizer + 1.0, state.gamma, state.t + 1)


def memory_from_history(history, n: int, gamma: float) -> np.ndarray:
    """Closed-form discounted average over an explicit selection history."""
    t = len(history)
    if t == 0:
        raise InvalidInputError("empty history")
    weights = np.array([gamma ** (t - 1 - s) for s in range(t)])
    v = np.zeros(n)
    for s, item in enumerate(history):
        v[item] += weights[s]
    return v / weights.sum()


class RewardProcess:
    """Per-round per-item rewards in [0,1] under one of four regimes.

    fixed / indicator / sequence are deterministic; piecewise draws
    Bernoulli rewards whose means are constant within windows of t_hold
    rounds (repeating the last window if the run outlasts the listed ones).
    """

    def __init__(self, kind: str, *, vector=None, item=None, n=None,
                 matrix=None, window_means=None, t_hold=None):
        self.kind = kind
        if kind == "fixed":
            self.vector = _check_rewards(vector)
        elif kind == "indicator":
            if n is None or item is None or not (0 <= int(item) < int(n)):
                raise InvalidInputError("indicator rewards need a valid item and n")
            self.item = int(item)
            self.vector = np.zeros(int(n))
            self.vector[self.item] = 1.0
        elif kind == "sequence":
            self.matrix = np.asarray(matrix, dtype=float)
            if self.matrix.ndim != 2:
                raise InvalidInputError("reward sequence must be a T x n matrix")
            _check_rewards(self.matrix.ravel())
        elif kind == "piecewise":
            self.window_means = np.asarray(window_means, dtype=float)
            if self.window_means.ndim != 2 or self.window_means.shape[0] < 1:
                raise InvalidInputError("piecewise rewards need a windows x n mean matrix")
            _check_rewards(self.window_means.ravel())
            if t_hold is None or int(t_hold) < 1:
                raise InvalidInputError("piecewise rewards need t_hold >= 1")
            self.t_hold = int(t_hold)
        else:
            raise InvalidInputError(f"unknown reward regime {kind!r}")

    @classmethod
    def fixed(cls, vector) -> "RewardProcess":
        return cls("fixed", vector=vector)

    @classmethod
    def indicator(cls, item: int, n: int) -> "RewardProcess":
        return cls("indicator", item=item, n=n)

    @classmethod
    def sequence(cls, matrix) -> "RewardProcess":
        return cls("sequence", matrix=matrix)

    @classmethod
    def piecewise(cls, window_means, t_hold: int) -> "RewardProcess":
        return cls("piecewise", window_means=window_means, t_hold=t_hold)

    @classmethod
    def from_spec(cls, spec: dict, n: int | None = None) -> "RewardProcess":
        kind = spec.get("kind")
        if kind == "fixed":
            return cls.fixed(np.asarray(spec["vector"], dtype=float))
        if kind == "indicator":
            return cls.indicator(spec["item"], spec.get("n", n))
        if kind == "sequence":
            return cls.sequence(np.asarray(spec["matrix"], dtype=float))
        if kind == "piecewise":
            return cls.piecewise(np.asarray(spec["window_means"], dtype=float),
                                 spec["t_hold"])
        raise InvalidInputError(f"unknown reward regime {kind!r}")

    def to_spec(self) -> dict:
        if self.kind == "fixed":
            return {"kind": "fixed", "vector": self.vector.tolist()}
        if self.kind == "indicator":
            return {"kind": "indicator", "item": self.item, "n": int(self.vector.shape[0])}
        if self.kind == "sequence":
            return {"kind": "sequence", "matrix": self.matrix.tolist()}
        return {"kind": "piecewise", "window_means": self.window_means.tolist(),
                "t_hold": self.t_hold}

    def expected(self, t: int) -> np.ndarray:
        """Exact mean reward vector for round t (1-based)."""
        if self.kind in ("fixed", "indicator"):
            return self.vector
        if self.kind == "sequence":
            if not (1 <= t <= self.matrix.shape[0]):
                raise InvalidInputError(f"round {t} outside the reward sequence")
            return self.matrix[t - 1]
        w = min((t - 1) // self.t_hold, self.window_means.shape[0] - 1)
        return self.window_means[w]

    def realized(self, t: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "piecewise":
            means = self.expected(t)
            return (rng.random(means.shape[0]) < means).astype(float)
        return self.expected(t)

    def realized_item(self, t: int, item: int, rng: np.random.Generator) -> float:
        """Realized reward of one item; a single draw for stochastic regimes."""
        if self.kind == "piecewise":
            return float(rng.random() < self.expected(t)[item])
        return float(self.expected(t)[item])

    @property
    def stochastic(self) -> bool:
        return self.kind == "piecewise"

    def cumulative_expected(self, T: int, n: int) -> np.ndarray:
        """Sum of exact mean reward vectors over rounds 1..T."""
        if self.kind in ("fixed", "indicator"):
            return T * self.vector
        if self.kind == "sequence":
            if self.matrix.shape[0] < T:
                raise InvalidInputError("reward sequence shorter than horizon")
            return self.matrix[:T].sum(axis=0)
        total = np.zeros(n)
        t = 1
        while t <= T:
            w_end = min(T, ((t - 1) // self.t_hold + 1) * self.t_hold)
            total += (w_end - t + 1) * self.expected(t)
            t = w_end + 1
        return total


def _check_rewards(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.size == 0 or np.min(values) < 0 or np.max(values) > 1:
        raise InvalidInputError("rewards must lie in [0,1]")
    return values


@dataclass
class RunTrace:
    """Per-round log of one episode plus periodic memory snapshots."""

    T: int
    n: int
    k: int
    gamma: float
    seed: int
    menus: np.ndarray          # (T, k) int32
    chosen: np.ndarray         # (T,) int32
    rewards: np.ndarray        # (T,) float
    snapshot_times: np.ndarray  # (m,) int64, time 0 is the initial memory
    snapshots: np.ndarray       # (m, n) float

    def validate(self):
        for t in range(self.T):
            if self.chosen[t] not in self.menus[t]:
                raise InvalidInputError(f"round {t + 1}: chosen item not in menu")
        _check_rewards(self.rewards if self.T else np.zeros(1))

    def total_reward(self) -> float:
        return float(np.sum(self.rewards))

    def cumulative_reward(self, t: int) -> float:
        if not (0 <= t <= self.T):
            raise InvalidInputError(f"checkpoint {t} outside [0, {self.T}]")
        return float(np.sum(self.rewards[:t]))

    def save(self, path):
        """Line format: header comments, then one `R t i1,...,ik chosen reward`
        per round interleaved with `V t v1,...,vn` snapshots; floats printed
        with 9 significant digits."""
        with open(path, "w") as fh:
            fh.write("# menurec-trace v1\n")
            fh.write(f"# T {self.T}\n# n {self.n}\n# k {self.k}\n")
            fh.write(f"# gamma {self.gamma:.9g}\n# seed {self.seed}\n")
            snaps = {int(t): row for t, row in zip(self.snapshot_times, self.snapshots)}
            if 0 in snaps:
                fh.write(_snapshot_line(0, snaps[0]))
            for t in range(1, self.T + 1):
                menu = ",".join(str(i) for i in self.menus[t - 1])
                fh.write(f"R {t} {menu} {self.chosen[t - 1]} {self.rewards[t - 1]:.9g}\n")
                if t in snaps:
                    fh.write(_snapshot_line(t, snaps[t]))

    @classmethod
    def load(cls, path) -> "RunTrace":
        header: dict[str, str] = {}
        menus, chosen, rewards, snap_t, snap_v = [], [], [], [], []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    parts = line[1:].split()
                    if len(parts) == 2:
                        header[parts[0]] = parts[1]
                    continue
                tag, rest = line.split(" ", 1)
                if tag == "R":
                    t_str, menu_str, chosen_str, reward_str = rest.split(" ")
                    menus.append([int(i) for i in menu_str.split(",")])
                    chosen.append(int(chosen_str))
                    rewards.append(float(reward_str))
                elif tag == "V":
                    t_str, vec_str = rest.split(" ")
                    snap_t.append(int(t_str))
                    snap_v.append([float(x) for x in vec_str.split(",")])
        n = int(header["n"])
        trace = cls(
            T=int(header["T"]), n=n, k=int(header["k"]),
            gamma=float(header["gamma"]), seed=int(header["seed"]),
            menus=np.asarray(menus, dtype=np.int32),
            chosen=np.asarray(chosen, dtype=np.int32),
            rewards=np.asarray(rewards, dtype=float),
            snapshot_times=np.asarray(snap_t, dtype=np.int64),
            snapshots=np.asarray(snap_v, dtype=float) if snap_v else np.zeros((0, n)),
        )
        trace.validate()
        return trace


def _snapshot_line(t: int, v: np.ndarray) -> str:
    return f"V {t} " + ",".join(f"{x:.9g}" for x in v) + "\n"


def agent_choose(model, state: MemoryState, menu, rng: np.random.Generator) -> int:
    """Sample the agent's pick: probability proportional to scores within the menu."""
    menu = as_menu(menu, model.n)
    scores = model.scores(state.vector)
    weights = scores[list(menu)]
    c = np.cumsum(weights)
    return menu[int(np.searchsorted(c, rng.random() * c[-1], side="right"))]


class Episode:
    """Stateful driver of one run: recommenders call show(menu) once per round
    and get back the agent's pick and its realized reward (bandit feedback).

    The memory vector is exposed for convenience; it is reconstructible from
    the observable choice history, the known discount, and the initial state.
    """

    def __init__(self, model, gamma: float, rewards: RewardProcess, T: int,
                 seed: int, k: int, initial_memory=None, snapshot_stride=None):
        if T < 1:
            raise ConfigurationError("episode horizon must be >= 1")
        if not (0.0 <= gamma <= 1.0):
            raise ConfigurationError(f"gamma must lie in [0,1], got {gamma}")
        if not (1 <= k < model.n):
            raise ConfigurationError(f"need 1 <= k < n, got k={k}, n={model.n}")
        self.model = model
        self.gamma = float(gamma)
        self.rewards = rewards
        self.T = int(T)
        self.k = int(k)
        self.seed = int(seed)
        self.n = model.n
        streams = np.random.SeedSequence(self.seed).spawn(3)
        self.agent_rng = np.random.Generator(np.random.PCG64(streams[0]))
        self.reward_rng = np.random.Generator(np.random.PCG64(streams[1]))
        self.algo_rng = np.random.Generator(np.random.PCG64(streams[2]))
        if initial_memory is None:
            self._ws = np.full(self.n, 1.0 / self.n)
        else:
            self._ws = as_distribution(initial_memory, self.n).copy()
        self._norm = 1.0
        self._mem_t = 1
        self._t = 1
        self._last_menu = None
        self.snapshot_stride = (max(1, math.ceil(self.T / 10_000))
                                if snapshot_stride is None else int(snapshot_stride))
        self._menus = np.zeros((self.T, self.k), dtype=np.int32)
        self._chosen = np.zeros(self.T, dtype=np.int32)
        self._rewards = np.zeros(self.T, dtype=float)
        self._snap_t = [0]
        self._snaps = [self._ws / self._norm]

    @property
    def t(self) -> int:
        """1-based index of the next round to be played."""
        return self._t

    @property
    def done(self) -> bool:
        return self._t > self.T

    @property
    def remaining(self) -> int:
        return self.T - self._t + 1

    @property
    def memory_vector(self) -> np.ndarray:
        return self._ws / self._norm

    def memory_state(self) -> MemoryState:
        return MemoryState(self._ws.copy(), self._norm, self.gamma, self._mem_t)

    def show(self, menu) -> tuple[int, float]:
        """Play one round: agent chooses from `menu`, memory updates, and the
        chosen item's realized reward is returned."""
        if self.done:
            raise ProtocolViolationError("episode already finished")
        menu = self._validate_menu(menu)
        v = self._ws / self._norm
        scores = self.model.scores(v)
        total = 0.0
        for j in menu:
            total += scores[j]
        r = self.agent_rng.random() * total
        chosen = menu[-1]
        acc = 0.0
        for j in menu:
            acc += scores[j]
            if r < acc:
                chosen = j
                break
        reward = self.rewards.realized_item(self._t, chosen, self.reward_rng)
        self._ws *= self.gamma
        self._ws[chosen] += 1.0
        self._norm = self.gamma * self._norm + 1.0
        self._mem_t += 1
        i = self._t - 1
        self._menus[i] = menu
        self._chosen[i] = chosen
        self._rewards[i] = reward
        if self._t % self.snapshot_stride == 0 or self._t == self.T:
            self._snap_t.append(self._t)
            self._snaps.append(self._ws / self._norm)
        self._t += 1
        return chosen, reward

    def _validate_menu(self, menu) -> tuple[int, ...]:
        if menu is self._last_menu:
            return menu
        try:
            menu = as_menu(menu, self.n, self.k)
        except InvalidInputError as exc:
            raise ProtocolViolationError(f"invalid menu at round {self._t}: {exc}") from exc
        self._last_menu = menu
        return menu

    def trace(self) -> RunTrace:
        played = self._t - 1
        return RunTrace(
            T=played, n=self.n, k=self.k, gamma=self.gamma, seed=self.seed,
            menus=self._menus[:played].copy(), chosen=self._chosen[:played].copy(),
            rewards=self._rewards[:played].copy(),
            snapshot_times=np.asarray(self._snap_t, dtype=np.int64),
            snapshots=np.asarray(self._snaps),
        )


class FixedMenuRecommender:
    """Shows one constant menu every round."""

    def __init__(self, menu):
        self.menu = tuple(menu)

    def begin(self, episode: Episode):
        pass

    def next_menu(self, t: int):
        return self.menu

    def feedback(self, t: int, menu, chosen: int, reward: float):
        pass


class UniformRandomRecommender:
    """Shows an independent uniform-random k-subset every round."""

    def begin(self, episode: Episode):
        self._n = episode.n
        self._k = episode.k
        self._rng = episode.algo_rng

    def next_menu(self, t: int):
        return tuple(sorted(self._rng.choice(self._n, size=self._k, replace=False)))

    def feedback(self, t: int, menu, chosen: int, reward: float):
        pass


def run_episode(model, gamma: float, rewards: RewardProcess, recommender,
                T: int, seed: int, k: int, **episode_kwargs) -> RunTrace:
    """Drive a per-round recommender (begin / next_menu / feedback) through a
    full episode. Deterministic given the seed."""
    episode = Episode(model, gamma, rewards, T, seed, k, **episode_kwargs)
    recommender.begin(episode)
    while not episode.done:
        t = episode.t
        menu = recommender.next_menu(t)
        chosen, reward = episode.show(menu)
        recommender.feedback(t, menu, chosen, reward)
    return episode.trace()
