"""Revenue optimization for threshold-discount promotion menus."""

from .domain import (
    CampaignSet,
    ConsumerProfile,
    Money,
    RuleSet,
    ThresholdDiscountPair,
    dollars,
    payable_amount,
    satisfies_rules,
    triggered_pair,
)
from .oracle import ChoiceModelParams, RevenueOracle, SimulatorOracle, TabularOracle, choice_simulate
from .optimizer import (
    CandidatePool,
    OptimizationResult,
    UsmTrace,
    check_submodularity,
    exhaustive_search,
    filter_by_rules,
    generate_candidates,
    greedy_search,
    randomized_usm,
    recommend_top_k,
    score_candidates,
)

__all__ = [
    "CampaignSet",
    "CandidatePool",
    "ChoiceModelParams",
    "ConsumerProfile",
    "Money",
    "OptimizationResult",
    "RevenueOracle",
    "RuleSet",
    "SimulatorOracle",
    "TabularOracle",
    "ThresholdDiscountPair",
    "UsmTrace",
    "check_submodularity",
    "choice_simulate",
    "dollars",
    "exhaustive_search",
    "filter_by_rules",
    "generate_candidates",
    "greedy_search",
    "payable_amount",
    "randomized_usm",
    "recommend_top_k",
    "satisfies_rules",
    "score_candidates",
    "triggered_pair",
]

__version__ = "0.1.0"
