"""Online menu recommendation for agents with discount-weighted adaptive
preferences: simulator, recommender algorithms, and regret benchmarks."""

from .core import (MenuDistribution, SetDescriptor, SmoothedSimplexParams,
                   as_distribution, as_menu, project_to_set,
                   smoothed_simplex_contains, tv_distance)
from .errors import (ConfigurationError, ContractViolationError,
                     InfeasibleParametersError, InfeasibleSetError,
                     InvalidInputError, InvalidModelError, MenurecError,
                     NotRealizableError, ProtocolViolationError,
                     ResourceLimitError)
from .menus import (build_menu_distribution, eird_contains_grid, ird_contains,
                    ird_contains_oracle, induced_item_distribution, menu_times)
from .models import (ClassReport, ClassSpec, PreferenceModel,
                     make_constant_model, make_linear_mix_model,
                     make_lottery_model, make_mis_model,
                     make_pseudo_increasing_model, model_from_spec,
                     verify_class)
from .simulate import (Episode, MemoryState, RewardProcess, RunTrace,
                       agent_choose, run_episode, update_memory)

__version__ = "0.1.0"

__all__ = [
    "MenuDistribution", "SetDescriptor", "SmoothedSimplexParams",
    "as_distribution", "as_menu", "project_to_set",
    "smoothed_simplex_contains", "tv_distance",
    "build_menu_distribution", "eird_contains_grid", "ird_contains",
    "ird_contains_oracle", "induced_item_distribution", "menu_times",
    "ClassReport", "ClassSpec", "PreferenceModel", "make_constant_model",
    "make_linear_mix_model", "make_lottery_model", "make_mis_model",
    "make_pseudo_increasing_model", "model_from_spec", "verify_class",
    "Episode", "MemoryState", "RewardProcess", "RunTrace", "agent_choose",
    "run_episode", "update_memory",
    "MenurecError", "InvalidInputError", "InvalidModelError",
    "InfeasibleSetError", "NotRealizableError", "InfeasibleParametersError",
    "ConfigurationError", "ResourceLimitError", "ProtocolViolationError",
    "ContractViolationError",
]
