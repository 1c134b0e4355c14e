"""Grover-based list slicing and maximum finding on a statevector simulator.

The package simulates the full oracle circuits densely where they fit and
exactly on the index subspace where they do not, and applies them to
selecting portfolios by return/risk thresholds and maximum Sharpe ratio.
"""

from .comparators import (
    ComparatorLayout,
    and_combiner,
    eq_circuit,
    gt_circuit,
    lt_circuit,
    or_combiner,
)
from .oracles import (
    EffectiveState,
    OracleCircuit,
    RegisterLayout,
    ValueTable,
    all_of,
    any_of,
    condition_oracle,
    diffusion_circuit,
    direct_marking_oracle,
    effective_grover_step,
    effective_state_new,
    equals,
    greater_than,
    grover_operator,
    index_amplitudes,
    less_than,
    single_list_oracle,
    two_list_oracle,
)
from .portfolio import (
    FrontierFormatError,
    FrontierTable,
    PortfolioRecord,
    load_frontier,
    max_sharpe,
    quantize,
    sharpe_values,
    slice_portfolios,
)
from .search import (
    CountEstimate,
    GroverPlan,
    SearchOutcome,
    counting_distribution,
    delta_m_bound,
    enumerate_solutions,
    gas,
    grover_angle,
    grover_plan,
    grover_search,
    iteration_count,
    m_detect,
    m_exact,
    qes,
    qpe_distribution,
    quantum_counting,
    t_for_resolution,
)
from .sim import (
    DENSE_QUBIT_CAP,
    CapacityError,
    Circuit,
    Gate,
    StateVector,
    apply,
    controlled,
    format_circuit,
    h,
    inverse_qft_circuit,
    measure_subregister,
    new_basis_state,
    phase,
    phase_estimation_circuit,
    qft_circuit,
    qpe_register_size,
    remap,
    subregister_distribution,
    unitary,
    x,
    z,
)

__version__ = "0.1.0"
