"""Cooper-pair box charge oscillations in a weakly coupled noisy environment.

Fixed-number sector states and Hamiltonians, the weak-coupling dissipator
and its master-equation integrator, the closed-form decay-rate ladder for
occupation-number versus coherent-like initial states, and the semiclassical
two-mode amplitude dynamics.
"""

from .bath import BathSpec, correlation, h_k, ratio_r, spectral_function
from .lindblad import (
    DissipatorSpec,
    Trajectory,
    build_dissipator_spec,
    dissipator,
    evolve,
    jump_ops,
    master_rhs,
    numeric_gamma,
    superoperator,
)
from .meanfield import (
    OrderParameter,
    PhasePoint,
    extract_frequency,
    flow_energy,
    gp_evolve,
    gp_rhs,
    hamiltonian_function,
)
from .model import (
    ModelParams,
    derive_EJ,
    derive_ng,
    effective_two_level,
    h0_full,
    h0_number_rep,
    omega_c,
    omega_n,
    omega_q,
)
from .rates import (
    RateReport,
    estimate_report,
    f_integral,
    gamma_coherent_approx,
    gamma_coherent_closed,
    gamma_coherent_exact,
    gamma_coherent_gauss,
    gamma_fock,
    rate_ratio,
    rate_report,
)
from .sector import (
    DensityMatrix,
    PureState,
    QOperator,
    SectorBasis,
    build_basis,
    coherent_coefficients,
    fock_state,
    gaussian_weight,
    number_op,
    poisson_coefficients,
    tunneling_op,
)

__version__ = "0.1.0"
