"""Fixed-total-number two-electrode sector: basis, ladder bilinears, states.

All states live in the (N+1)-dimensional subspace spanned by
|n> = |n_L = n, n_R = N - n>, n = 0..N.  Everything here is a pure function
of its inputs; arrays inside the returned containers are write-locked so
values can be shared freely between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, gammainc

__all__ = [
    "SectorBasis",
    "QOperator",
    "PureState",
    "DensityMatrix",
    "MATRIX_DIM_CAP",
    "build_basis",
    "tunneling_element",
    "tunneling_op",
    "number_op",
    "fock_state",
    "coherent_coefficients",
    "coherent_logpmf",
    "poisson_coefficients",
    "poisson_tail_mass",
    "default_poisson_cutoff",
    "gaussian_weight",
]

# Dense matrices above this dimension are refused; large mean occupations are
# handled by closed forms and windowed sums, never by physical-scale matrices.
MATRIX_DIM_CAP = 4001

HERMITICITY_TOL = 1e-12
NORM_TOL = 1e-10


@dataclass(frozen=True)
class SectorBasis:
    """Sector with N pairs in total; index n counts pairs on electrode L."""

    N: int

    def __post_init__(self) -> None:
        if self.N < 0 or self.N != int(self.N):
            raise ValueError(f"total pair count must be a non-negative integer, got {self.N}")

    @property
    def dimension(self) -> int:
        return self.N + 1

    def index_range(self) -> np.ndarray:
        return np.arange(self.dimension)


def _locked(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class QOperator:
    """Complex matrix on a SectorBasis."""

    basis: SectorBasis
    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self) -> None:
        m = np.asarray(self.entries, dtype=complex)
        d = self.basis.dimension
        if m.shape != (d, d):
            raise ValueError(f"operator shape {m.shape} does not match basis dimension {d}")
        if self.hermitian:
            scale = max(np.max(np.abs(m)), 1.0)
            dev = np.max(np.abs(m - m.conj().T)) / scale
            if dev > HERMITICITY_TOL:
                raise ValueError(f"operator flagged hermitian deviates by {dev:.3e}")
        object.__setattr__(self, "entries", _locked(m))

    def dag(self) -> "QOperator":
        return QOperator(self.basis, self.entries.conj().T, hermitian=self.hermitian)


@dataclass(frozen=True)
class PureState:
    """Normalized amplitude vector C_n over a SectorBasis."""

    basis: SectorBasis
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.amplitudes, dtype=complex)
        if v.shape != (self.basis.dimension,):
            raise ValueError(
                f"amplitude length {v.shape} does not match basis dimension {self.basis.dimension}"
            )
        norm = np.sum(np.abs(v) ** 2)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm^2 deviates from 1 by {abs(norm - 1.0):.3e}")
        object.__setattr__(self, "amplitudes", _locked(v))

    def density_matrix(self) -> "DensityMatrix":
        v = self.amplitudes
        return DensityMatrix(self.basis, np.outer(v, v.conj()))

    def overlap(self, other: "PureState") -> complex:
        """<self|other> on the common index range."""
        n = min(self.amplitudes.size, other.amplitudes.size)
        return complex(np.vdot(self.amplitudes[:n], other.amplitudes[:n]))


@dataclass(frozen=True)
class DensityMatrix:
    """Unit-trace hermitian positive matrix on a SectorBasis."""

    basis: SectorBasis
    entries: np.ndarray
    validate_positivity: bool = field(default=False, repr=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.entries, dtype=complex)
        d = self.basis.dimension
        if m.shape != (d, d):
            raise ValueError(f"density matrix shape {m.shape} does not match dimension {d}")
        tr = np.trace(m).real
        if abs(tr - 1.0) > NORM_TOL:
            raise ValueError(f"trace deviates from 1 by {abs(tr - 1.0):.3e}")
        herm_dev = np.max(np.abs(m - m.conj().T))
        if herm_dev > HERMITICITY_TOL * max(1.0, np.max(np.abs(m))):
            raise ValueError(f"density matrix hermiticity deviation {herm_dev:.3e}")
        if self.validate_positivity:
            w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
            if w.min() < -1e-10:
                raise ValueError(f"density matrix has negative eigenvalue {w.min():.3e}")
        object.__setattr__(self, "entries", _locked(m))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.entries + self.entries.conj().T)).min())

    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)


def build_basis(N: int) -> SectorBasis:
    """Sector basis for N total pairs; dimension N + 1."""
    return SectorBasis(int(N))


def _check_dim(basis: SectorBasis, dim_cap: int | None) -> None:
    cap = MATRIX_DIM_CAP if dim_cap is None else dim_cap
    if basis.dimension > cap:
        raise ValueError(
            f"refusing to materialize a {basis.dimension}-dimensional matrix "
            f"(cap {cap}); use the closed-form/windowed routes for large occupations"
        )


def tunneling_element(N: int, n: int | np.ndarray) -> np.ndarray:
    """Matrix element sqrt((n+1)(N-n)) coupling |n> and |n+1>."""
    n = np.asarray(n, dtype=float)
    return np.sqrt((n + 1.0) * (N - n))


def tunneling_op(basis: SectorBasis, dim_cap: int | None = None) -> QOperator:
    """Pair-exchange bilinear a_L^† a_R + a_L a_R^† in the sector basis.

    Real symmetric, with sqrt((n+1)(N-n)) on the (n, n+1) / (n+1, n) entries.
    """
    _check_dim(basis, dim_cap)
    c = tunneling_element(basis.N, np.arange(basis.N))
    m = np.diag(c, 1) + np.diag(c, -1)
    return QOperator(basis, m, hermitian=True)


def number_op(basis: SectorBasis, dim_cap: int | None = None) -> QOperator:
    """Occupation operator for electrode L: diag(0, 1, ..., N)."""
    _check_dim(basis, dim_cap)
    return QOperator(basis, np.diag(np.arange(basis.dimension, dtype=float)), hermitian=True)


def fock_state(basis: SectorBasis, n: int) -> PureState:
    """Occupation-number state |n_L = n, n_R = N - n>."""
    if not 0 <= n <= basis.N:
        raise ValueError(f"occupation {n} outside sector 0..{basis.N}")
    v = np.zeros(basis.dimension, dtype=complex)
    v[n] = 1.0
    return PureState(basis, v)


def coherent_logpmf(N: int, nbar: float, n: np.ndarray) -> np.ndarray:
    """log |C_n|^2 for the N-fold product state: Binomial(N, nbar/N) in log domain.

    Evaluated through log-gamma so it stays finite for N up to 1e6 and beyond.
    """
    if not 0.0 < nbar < N:
        raise ValueError(f"mean occupation must satisfy 0 < nbar < N, got nbar={nbar}, N={N}")
    n = np.asarray(n, dtype=float)
    p = nbar / N
    return (
        gammaln(N + 1.0)
        - gammaln(n + 1.0)
        - gammaln(N - n + 1.0)
        + n * math.log(p)
        + (N - n) * math.log1p(-p)
    )


def coherent_coefficients(basis: SectorBasis, nbar: float, theta: float = 0.0) -> PureState:
    """Product-state amplitudes C_n = sqrt(binom(N,n)) psi_L^n psi_R^(N-n).

    The phase convention puts the whole relative phase on the L amplitude,
    psi_L = sqrt(nbar/N) e^{-i theta}, psi_R = sqrt(1 - nbar/N), so
    C_n carries e^{-i n theta}.  Magnitudes are accumulated in the log
    domain and exponentiated after subtracting the running maximum, which
    keeps the construction finite for any sector size.
    """
    N = basis.N
    n = np.arange(basis.dimension, dtype=float)
    logpmf = coherent_logpmf(N, nbar, n)
    mag = np.exp(0.5 * (logpmf - logpmf.max()))
    mag /= math.sqrt(float(np.sum(mag**2)))
    return PureState(basis, mag * np.exp(-1j * theta * n))


def default_poisson_cutoff(nbar: float, tail_tol: float = 1e-12) -> int:
    """Smallest cutoff >= ceil(nbar + 12 sqrt(nbar)) with tail mass < tail_tol.

    The 12-sigma start point already suffices for nbar >~ 2; the exact-tail
    walk only moves it for very small means, where the Poisson tail is
    heavier than its Gaussian envelope.
    """
    cutoff = int(math.ceil(nbar + 12.0 * math.sqrt(nbar)))
    while poisson_tail_mass(nbar, cutoff) >= tail_tol:
        cutoff += 1
    return cutoff


def poisson_tail_mass(nbar: float, cutoff: int) -> float:
    """Exact Poisson tail P(X > cutoff) via the regularized incomplete gamma."""
    return float(gammainc(cutoff + 1.0, nbar))


def poisson_coefficients(
    nbar: float,
    theta: float = 0.0,
    cutoff: int | None = None,
    tail_tol: float = 1e-12,
) -> PureState:
    """Poissonian coherent-state amplitudes sqrt(nbar^n e^-nbar / n!) e^{-i n theta}.

    Truncated at `cutoff` (default ceil(nbar + 12 sqrt(nbar))) and renormalized.
    Raises if the discarded tail mass exceeds `tail_tol`.
    """
    if nbar <= 0:
        raise ValueError(f"mean occupation must be positive, got {nbar}")
    if cutoff is None:
        cutoff = default_poisson_cutoff(nbar)
    tail = poisson_tail_mass(nbar, cutoff)
    if tail > tail_tol:
        raise ValueError(
            f"cutoff {cutoff} leaves Poisson tail mass {tail:.3e} > {tail_tol:.1e}; "
            f"increase the cutoff (default {default_poisson_cutoff(nbar)})"
        )
    n = np.arange(cutoff + 1, dtype=float)
    logp = n * math.log(nbar) - nbar - gammaln(n + 1.0)
    mag = np.exp(0.5 * (logp - logp.max()))
    mag /= math.sqrt(float(np.sum(mag**2)))
    return PureState(build_basis(cutoff), mag * np.exp(-1j * theta * n))


def gaussian_weight(nbar: float, k: int | np.ndarray) -> np.ndarray | float:
    """Central-limit weight e^{-k^2/(2 nbar)} / sqrt(2 pi nbar) at offset k from nbar."""
    if nbar <= 0:
        raise ValueError(f"mean occupation must be positive, got {nbar}")
    k = np.asarray(k, dtype=float)
    out = np.exp(-(k**2) / (2.0 * nbar)) / math.sqrt(2.0 * math.pi * nbar)
    return float(out) if out.ndim == 0 else out
