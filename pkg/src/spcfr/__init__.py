"""Stable-predictive counterfactual regret minimization for two-player
zero-sum extensive-form games."""

from .cfr import (
    SolveOptions,
    StabilitySchedule,
    TreeplexMinimizer,
    assign_stability,
    average_strategies,
    run_alternating,
    run_simultaneous,
)
from .games import (
    ExtensiveFormGame,
    GameInstance,
    build_kuhn,
    build_leduc,
    build_random_game,
    expected_payoff,
    parse_game_file,
    to_sequence_form_game,
)
from .local_rm import (
    ENTROPY,
    EUCLIDEAN,
    OftrlMinimizer,
    RegretMatchingMinimizer,
    argmin_reg,
    cumulative_regret,
)
from .metrics import (
    SolveTrace,
    best_response_value,
    fit_convergence_rate,
    residual_to_mbbg,
    saddle_residual,
)
from .treeplex import (
    BehavioralStrategy,
    SequenceFormVector,
    TreePlex,
    slice_down,
    subtree_norm_bounds,
    to_behavioral,
    to_sequence_form,
)

__version__ = "0.1.0"
