"""Secrecy bounds for the wiretap channel with causal state at both terminals.

Modules: :mod:`info` (information measures), :mod:`channel` (channels,
policies and bound evaluators), :mod:`optimize` (grid maximization),
:mod:`simulate` (block-Markov coding scheme), :mod:`oracle` (exact
enumeration) and :mod:`cli`.
"""

__version__ = "0.1.0"

from .channel import (
    AuxChain,
    BoundReport,
    CausalPolicy,
    ChannelWithState,
    ShannonStrategy,
    embed_policy,
    evaluate_policy,
    example_channel,
    liu_chen_value,
    rate_csi_1_value,
    rate_csi_2_value,
    upper_bound_value,
)
from .errors import ConsistencyError, ContractError, DomainError, ResourceError, WiretapError
from .info import JointPmf, conditional_entropy, conditional_mutual_information, entropy, mutual_information
from .optimize import SearchConfig, maximize_lower_bound, maximize_special_case
from .oracle import exact_error_probability, exact_leakage, key_statistics
from .simulate import SchemeConfig, run_session

__all__ = [
    "AuxChain",
    "BoundReport",
    "CausalPolicy",
    "ChannelWithState",
    "ConsistencyError",
    "ContractError",
    "DomainError",
    "JointPmf",
    "ResourceError",
    "SchemeConfig",
    "SearchConfig",
    "ShannonStrategy",
    "WiretapError",
    "conditional_entropy",
    "conditional_mutual_information",
    "embed_policy",
    "entropy",
    "evaluate_policy",
    "exact_error_probability",
    "exact_leakage",
    "example_channel",
    "key_statistics",
    "liu_chen_value",
    "maximize_lower_bound",
    "maximize_special_case",
    "mutual_information",
    "rate_csi_1_value",
    "rate_csi_2_value",
    "run_session",
    "upper_bound_value",
]
