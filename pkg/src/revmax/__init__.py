"""Revenue-maximizing recommendation planning over a time horizon."""

from .baselines import FlowNetwork, brute_force_opt, dcs_optimal_t1, global_no, top_ra, top_re
from .datagen import SynthConfig, generate
from .greedy import SolveReport, g_greedy, rl_greedy, sample_permutations, sl_greedy, split_horizon, staged_solve
from .model import (
    Instance,
    InstanceError,
    InstanceParseError,
    InstanceValidationError,
    ItemSpec,
    Strategy,
    Triple,
    ValidityReport,
    build_instance,
    fingerprint,
    instance_from_text,
    instance_to_text,
    load_instance,
    repeat_histogram,
    save_instance,
    validate_strategy,
)
from .pricing import (
    KdeModel,
    RandomPriceModel,
    fit_kde,
    instance_at_means,
    primitive_adoption,
    sample_prices,
    silverman_bandwidth,
    taylor_expected_revenue,
    valuation_tail,
)
from .relaxed import (
    CapacityTailEstimate,
    at_most_probability,
    capacity_tail_exact,
    capacity_tail_mc,
    check_capacity,
    check_partition_matroid,
    effective_adoption_prob,
    local_search_rrevmax,
    relaxed_revenue,
)
from .revenue import RevenueEvaluator, commit, dynamic_adoption_prob, marginal_revenue, memory, revenue

__all__ = [name for name in dir() if not name.startswith("_")]
