"""Hamiltonians and characteristic frequencies of the two-electrode box.

Units: hbar = 1 throughout, so energies and angular frequencies share s^-1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .sector import QOperator, SectorBasis, tunneling_element

__all__ = [
    "ModelParams",
    "derive_ng",
    "derive_EJ",
    "h0_full",
    "h0_number_rep",
    "quantum_phase_window",
    "quantum_phase_op",
    "effective_two_level",
    "omega_q",
    "omega_c",
    "omega_n",
    "microev_to_angular",
    "angular_to_microev",
]

# mu-eV to angular s^-1: e / hbar * 1e-6 (2018 SI values), and the coarse
# power-of-ten convention in which 500 mu-eV reads as 1e11 s^-1.
_UEV_EXACT = 1.602176634e-19 / 1.054571817e-34 * 1e-6
_UEV_COARSE = 1e11 / 500.0


def microev_to_angular(energy_uev: float, convention: str = "exact") -> float:
    """Convert mu-eV to angular frequency; convention 'exact' or 'coarse'."""
    if convention == "exact":
        return energy_uev * _UEV_EXACT
    if convention == "coarse":
        return energy_uev * _UEV_COARSE
    raise ValueError(f"unknown conversion convention {convention!r}")


def angular_to_microev(omega: float, convention: str = "exact") -> float:
    if convention == "exact":
        return omega / _UEV_EXACT
    if convention == "coarse":
        return omega / _UEV_COARSE
    raise ValueError(f"unknown conversion convention {convention!r}")


def derive_ng(U_L: float, U_R: float, E_C: float, nbar: float) -> float:
    """Gate-charge parameter (U_R - U_L) / (2 E_C) - nbar."""
    if E_C <= 0:
        raise ValueError(f"charging energy must be positive, got {E_C}")
    return (U_R - U_L) / (2.0 * E_C) - nbar


def derive_EJ(K: float, nbar: float, N: float) -> float:
    """Effective tunneling scale E_J = K sqrt(nbar (N - nbar))."""
    if not 0.0 < nbar < N:
        raise ValueError(f"mean occupation must satisfy 0 < nbar < N, got nbar={nbar}, N={N}")
    return K * math.sqrt(nbar * (N - nbar))


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the box (angular-frequency units, hbar = 1).

    n_g may be given directly; if omitted it is derived from the electrode
    potentials.  E_J is always derived, E_J = K sqrt(nbar (N - nbar)).
    lam is the environment coupling; the weak-coupling guard rejects values
    above `lam_max` (default 0.1) because the dissipator is an order-lam^2
    construction.
    """

    E_C: float
    K: float
    N: int
    nbar: float
    U_L: float = 0.0
    U_R: float = 0.0
    n_g: float | None = None
    lam: float = 0.0
    lam_max: float = 0.1

    def __post_init__(self) -> None:
        if self.E_C <= 0:
            raise ValueError(f"charging energy must be positive, got {self.E_C}")
        if self.K < 0:
            raise ValueError(f"tunneling amplitude must be non-negative, got {self.K}")
        if not 0.0 < self.nbar < self.N:
            raise ValueError(
                f"mean occupation must satisfy 0 < nbar < N, got nbar={self.nbar}, N={self.N}"
            )
        if not 0.0 <= self.lam <= self.lam_max:
            raise ValueError(
                f"coupling lam={self.lam} outside weak-coupling guard [0, {self.lam_max}]"
            )
        if self.n_g is None:
            object.__setattr__(self, "n_g", derive_ng(self.U_L, self.U_R, self.E_C, self.nbar))

    @classmethod
    def from_EJ(cls, E_C: float, E_J: float, N: int, nbar: float, **kw) -> "ModelParams":
        """Construct with K back-derived from a target E_J."""
        K = E_J / math.sqrt(nbar * (N - nbar))
        return cls(E_C=E_C, K=K, N=N, nbar=nbar, **kw)

    @property
    def E_J(self) -> float:
        return derive_EJ(self.K, self.nbar, self.N)

    def at_resonance(self) -> "ModelParams":
        return replace(self, n_g=0.5)


def _diagonal(basis: SectorBasis, params: ModelParams) -> np.ndarray:
    n = basis.index_range().astype(float)
    return params.E_C * (n - params.nbar - params.n_g) ** 2


def h0_full(basis: SectorBasis, params: ModelParams, dim_cap: int | None = None) -> QOperator:
    """Sector Hamiltonian: E_C (n - nbar - n_g)^2 diagonal, exact hopping
    -K sqrt((n+1)(N-n)) on the off-diagonals.

    The constant term dropped in the (n - nbar - n_g)^2 rewriting shifts all
    eigenvalues equally; no computed observable depends on it.
    """
    from .sector import _check_dim

    _check_dim(basis, dim_cap)
    c = params.K * tunneling_element(basis.N, np.arange(basis.N))
    m = np.diag(_diagonal(basis, params)) - np.diag(c, 1) - np.diag(c, -1)
    return QOperator(basis, m, hermitian=True)


def h0_number_rep(basis: SectorBasis, params: ModelParams, dim_cap: int | None = None) -> QOperator:
    """Occupation-number form: same diagonal, uniform hopping -E_J.

    Replaces K sqrt((n+1)(N-n)) by its value at the mean occupation, valid
    for low-lying states with |n - nbar| << nbar.
    """
    from .sector import _check_dim

    _check_dim(basis, dim_cap)
    ej = np.full(basis.N, params.E_J)
    m = np.diag(_diagonal(basis, params)) - np.diag(ej, 1) - np.diag(ej, -1)
    return QOperator(basis, m, hermitian=True)


def default_window(params: ModelParams) -> tuple[int, int]:
    """Occupation window |n - nbar| <= max(10, 8 sqrt(nbar)) clipped to [0, N]."""
    half = max(10.0, 8.0 * math.sqrt(params.nbar))
    lo = max(0, int(math.floor(params.nbar - half)))
    hi = min(params.N, int(math.ceil(params.nbar + half)))
    return lo, hi


def quantum_phase_window(
    params: ModelParams, window: tuple[int, int] | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Windowed quantum-phase-model Hamiltonian E_C (n' - n_g)^2 - E_J cos(phi).

    The cos(phi) discretization couples neighbouring occupation states with
    -E_J/2 per bond (cos phi = (e^{i phi} + e^{-i phi}) / 2), so the
    resonance splitting of the two lowest levels is E_J.  Returns the dense
    window matrix and the absolute occupation indices it covers.
    """
    lo, hi = default_window(params) if window is None else window
    if hi <= lo:
        raise ValueError(f"empty window [{lo}, {hi}]")
    n = np.arange(lo, hi + 1, dtype=float)
    diag = params.E_C * (n - params.nbar - params.n_g) ** 2
    hop = np.full(n.size - 1, 0.5 * params.E_J)
    m = np.diag(diag) - np.diag(hop, 1) - np.diag(hop, -1)
    return m, n.astype(int)


def quantum_phase_op(basis: SectorBasis, params: ModelParams, dim_cap: int | None = None) -> QOperator:
    """Quantum-phase-model Hamiltonian on the full sector (hopping -E_J/2)."""
    from .sector import _check_dim

    _check_dim(basis, dim_cap)
    hop = np.full(basis.N, 0.5 * params.E_J)
    m = np.diag(_diagonal(basis, params)) - np.diag(hop, 1) - np.diag(hop, -1)
    return QOperator(basis, m, hermitian=True)


_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


def effective_two_level(params: ModelParams, warn_detuning: tuple[float, float] = (0.3, 0.7)) -> QOperator:
    """Two-level reduction -(1/2)[E_C (1 - 2 n_g) sigma_Z + E_J sigma_X].

    Valid near resonance; warns when n_g leaves `warn_detuning`.
    """
    if not warn_detuning[0] <= params.n_g <= warn_detuning[1]:
        warnings.warn(
            f"two-level reduction used at n_g={params.n_g:.3f}, outside {warn_detuning}",
            stacklevel=2,
        )
    m = -0.5 * (params.E_C * (1.0 - 2.0 * params.n_g) * _SIGMA_Z + params.E_J * _SIGMA_X)
    return QOperator(SectorBasis(1), m, hermitian=True)


def omega_q(params: ModelParams, resonance_approx: bool = False) -> float:
    """Two-level oscillation frequency sqrt(E_C^2 (1-2 n_g)^2 + E_J^2).

    With resonance_approx=True returns the on-resonance value E_J.
    """
    if resonance_approx:
        return params.E_J
    return math.sqrt((params.E_C * (1.0 - 2.0 * params.n_g)) ** 2 + params.E_J**2)


def omega_c(params: ModelParams) -> float:
    """Semiclassical charge-oscillation frequency sqrt(2 E_C E_J)."""
    return math.sqrt(2.0 * params.E_C * params.E_J)


def omega_n(params: ModelParams, n: int | np.ndarray) -> np.ndarray | float:
    """Transition frequency E_C [2 (n - nbar - n_g) + 1] for |n> <-> |n+1>."""
    n = np.asarray(n, dtype=float)
    out = params.E_C * (2.0 * (n - params.nbar - params.n_g) + 1.0)
    return float(out) if out.ndim == 0 else out
