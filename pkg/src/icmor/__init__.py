"""Model-order reduction for LTI systems with nonzero initial conditions.

Balanced truncation, augmented BT, IRKA, and a split reduction that
handles the input-to-output and initial-condition-to-output maps
independently, with computable output error bounds and an exact-in-scheme
simulation engine.
"""

from .bounds import (
    BalancedPartition,
    ErrorBudget,
    abt_bound,
    aca_bound,
    bt_bound,
    irka_linf_bound,
    split_bound,
)
from .gramians import (
    BalancedRealization,
    GramianFactors,
    HankelSpectrum,
    balance_realization,
    gramian_factors,
    h2_error_norm,
    h2_norm,
    hankel_spectrum,
)
from .linalg import matrix_exponential, solve_lyapunov, solve_sylvester, stability_margin
from .model import (
    InitialCondition,
    InitialConditionBasis,
    StateSpaceModel,
    build_msd,
    coordinates_of,
    load_model,
    save_model,
    unit_vector_basis,
    validate_model,
)
from .reduction import (
    OrderSelection,
    ProjectionPair,
    ReducedModel,
    SplitReducedModel,
    abt_reduce,
    bt_reduce,
    irka_reduce,
    order_from_tolerance,
    split_reduce,
)
from .simulation import (
    InputSignal,
    SimulationTrace,
    l2_norm,
    linf_norm,
    online_phase,
    relative_errors,
    simulate,
    suggest_grid,
    superpose,
)

__version__ = "0.1.0"
