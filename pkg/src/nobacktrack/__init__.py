"""Finite Markov chains, no-backtracking lifts and Peskun-ordering harnesses."""

from .chain import (
    FiniteChain,
    check_detailed_balance,
    check_invariant,
    check_irreducible,
    metropolize,
    period,
    stationary_distribution,
    validate_chain,
)
from .errors import *  # noqa: F401,F403
from .examples import (
    ExampleSpec,
    line_walk,
    peskun_counterexample,
    peskun_matrices,
    random_dominated_pair,
    random_reversible,
    rectangle,
)
from .no_backtrack import (
    ExpandedChain,
    UpdateKernel,
    build_nobacktrack,
    expand_states,
    identity_kernel,
    lift_chain,
    lift_distribution,
    lift_function,
    liu_kernel,
    sample_update,
    simulate_nobacktrack,
    verify_update_conditions,
)
from .peskun import (
    BlockLawSpec,
    BlockTrace,
    DiscreteLaw,
    PeskunPair,
    block_statistics,
    delta_coupled_simulate,
    elementary_pair,
    expanded_elementary_pair,
    lemma1_check,
    lemma2_check,
    pairwise_decomposition,
    segment_blocks,
    stratified_block_simulate,
)
from .variance import (
    Trajectory,
    VarianceReport,
    autocovariance_variance,
    empirical_estimate,
    exact_asymptotic_variance,
    replicated_variance,
    simulate,
)

__version__ = "0.1.0"
