"""Weak-coupling dissipator assembly and master-equation integration.

The generator acts on the sector density matrix as

    drho/dt = -i [H, rho] + D[rho],
    D[rho]  = lam^2 sum_n { h_n (W_n^+ rho W_n - (1/2){W_n W_n^+, rho})
                          + kappa_n (W_n rho W_n^+ - (1/2){W_n^+ W_n, rho}) },

with jump operators W_n = sqrt((n+1)(N-n)) |n><n+1| and spectral weights
evaluated at the transition frequencies omega_n.  The environment-induced
Hamiltonian correction is zero by default (an injection point is provided);
the extra resonance-only dissipator term is excluded, matching its stated
suppression by 1/sqrt(nbar) relative to the terms kept here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bath import BathSpec, spectral_arrays
from .model import ModelParams, omega_n
from .sector import DensityMatrix, PureState, QOperator, SectorBasis, tunneling_element

__all__ = [
    "DissipatorSpec",
    "Trajectory",
    "StepSizeError",
    "OracleMismatchError",
    "jump_ops",
    "build_dissipator_spec",
    "dissipator",
    "master_rhs",
    "superoperator",
    "exact_propagator",
    "generator_norm_estimate",
    "default_dt",
    "evolve",
    "numeric_gamma",
    "numeric_gamma_detail",
]

EXACT_PROPAGATOR_DIM_CAP = 60


class StepSizeError(ValueError):
    """Raised when the requested time step violates dt * ||generator|| <= 0.1."""


class OracleMismatchError(RuntimeError):
    """Raised when independent rate estimates disagree beyond tolerance."""


def jump_ops(basis: SectorBasis) -> list[QOperator]:
    """Jump operators W_n = sqrt((n+1)(N-n)) |n><n+1| for n = 0..N-1.

    W_N vanishes identically and is omitted.
    """
    ops = []
    for n in range(basis.N):
        m = np.zeros((basis.dimension, basis.dimension), dtype=complex)
        m[n, n + 1] = tunneling_element(basis.N, n)
        ops.append(QOperator(basis, m))
    return ops


@dataclass(frozen=True)
class DissipatorSpec:
    """Jump channels (W_n, h_n, kappa_n) for n = 0..N-1 plus the coupling lam^2.

    Positivity of every spectral weight is what makes the generator completely
    positive; it is enforced at construction.
    """

    basis: SectorBasis
    h: np.ndarray
    kappa: np.ndarray
    lam2: float
    _w_elems: np.ndarray = field(init=False, repr=False)
    _damping: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        h = np.asarray(self.h, dtype=float)
        kap = np.asarray(self.kappa, dtype=float)
        if h.shape != (self.basis.N,) or kap.shape != (self.basis.N,):
            raise ValueError(f"need {self.basis.N} spectral weights per channel")
        if np.any(h < 0) or np.any(kap < 0):
            raise ValueError("negative spectral weight would break complete positivity")
        if self.lam2 < 0:
            raise ValueError(f"lam^2 must be non-negative, got {self.lam2}")
        w = tunneling_element(self.basis.N, np.arange(self.basis.N))
        # diagonal of sum_n h_n W_n W_n^+ + kappa_n W_n^+ W_n
        damping = np.zeros(self.basis.dimension)
        damping[:-1] += h * w**2
        damping[1:] += kap * w**2
        for a in (h, kap, w, damping):
            a.flags.writeable = False
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "kappa", kap)
        object.__setattr__(self, "_w_elems", w)
        object.__setattr__(self, "_damping", damping)

    def jump_matrices(self) -> list[np.ndarray]:
        return [op.entries for op in jump_ops(self.basis)]


def build_dissipator_spec(basis: SectorBasis, params: ModelParams, bath: BathSpec) -> DissipatorSpec:
    """Spectral weights h(omega_n), kappa(omega_n) for every sector channel."""
    if basis.N != params.N:
        raise ValueError(f"basis N={basis.N} does not match params N={params.N}")
    omegas = omega_n(params, np.arange(basis.N))
    h, kap = spectral_arrays(bath, np.atleast_1d(omegas))
    return DissipatorSpec(basis=basis, h=h, kappa=kap, lam2=params.lam**2)


def dissipator(rho: np.ndarray | DensityMatrix, spec: DissipatorSpec) -> np.ndarray:
    """Apply D[rho]; returns a traceless matrix, hermitian for hermitian rho.

    The gain terms W_n^+ rho W_n and W_n rho W_n^+ are single-entry
    sandwiches, so they reduce to shifted diagonals; the anticommutator part
    uses the precomputed damping diagonal.  This is the generator exactly as
    written above, channel by channel.
    """
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    d = spec.basis.dimension
    if m.shape != (d, d):
        raise ValueError(f"state shape {m.shape} does not match dissipator dimension {d}")
    w2 = spec._w_elems**2
    diag = np.diagonal(m)
    out = np.zeros_like(m, dtype=complex)
    # gain: channel n feeds |n+1><n+1| with weight h_n and |n><n| with kappa_n
    gains = np.zeros(d, dtype=complex)
    gains[1:] += spec.h * w2 * diag[:-1]
    gains[:-1] += spec.kappa * w2 * diag[1:]
    out[np.arange(d), np.arange(d)] = gains
    out -= 0.5 * (spec._damping[:, None] + spec._damping[None, :]) * m
    return spec.lam2 * out


def master_rhs(rho: np.ndarray | DensityMatrix, H: QOperator | np.ndarray, spec: DissipatorSpec,
               h_correction: np.ndarray | None = None) -> np.ndarray:
    """Full right-hand side -i [H + H2, rho] + D[rho].

    `h_correction` is the optional environment-induced hermitian correction
    H2 (zero when omitted).
    """
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    hm = H.entries if isinstance(H, QOperator) else np.asarray(H)
    if h_correction is not None:
        hm = hm + h_correction
    comm = hm @ m - m @ hm
    return -1j * comm + dissipator(m, spec)


def superoperator(H: QOperator | np.ndarray | None, spec: DissipatorSpec) -> np.ndarray:
    """Dense (d^2 x d^2) generator acting on row-major flattened rho.

    Independent assembly used as an oracle: vec(A rho B) = kron(A, B.T) vec(rho)
    for row-major vec, built from the explicit jump matrices.
    """
    d = spec.basis.dimension
    eye = np.eye(d)
    L = np.zeros((d * d, d * d), dtype=complex)
    if H is not None:
        hm = H.entries if isinstance(H, QOperator) else np.asarray(H)
        L += -1j * (np.kron(hm, eye) - np.kron(eye, hm.T))
    acc = np.zeros((d, d), dtype=complex)
    for n, w in enumerate(spec.jump_matrices()):
        wd = w.conj().T
        L += spec.lam2 * spec.h[n] * np.kron(wd, w.T)
        L += spec.lam2 * spec.kappa[n] * np.kron(w, wd.T)
        acc += spec.h[n] * (w @ wd) + spec.kappa[n] * (wd @ w)
    L -= 0.5 * spec.lam2 * (np.kron(acc, eye) + np.kron(eye, acc.T))
    return L


def exact_propagator(H: QOperator | np.ndarray | None, spec: DissipatorSpec, t: float) -> np.ndarray:
    """exp(L t) on the flattened state; convergence oracle for the integrator.

    Refused above sector dimension EXACT_PROPAGATOR_DIM_CAP to keep the dense
    d^2 x d^2 exponential tractable.
    """
    from scipy.linalg import expm

    if spec.basis.dimension > EXACT_PROPAGATOR_DIM_CAP:
        raise ValueError(
            f"exact propagator capped at sector dimension {EXACT_PROPAGATOR_DIM_CAP}, "
            f"got {spec.basis.dimension}"
        )
    return expm(superoperator(H, spec) * t)


def generator_norm_estimate(H: QOperator | np.ndarray | None, spec: DissipatorSpec,
                            iterations: int = 20) -> float:
    """Power-iteration estimate of the generator's spectral scale.

    Iterates rho -> L[rho] from a fixed seeded start; deterministic.
    """
    d = spec.basis.dimension
    rng = np.random.default_rng(1234)
    v = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    v /= np.linalg.norm(v)
    hm = None if H is None else (H.entries if isinstance(H, QOperator) else np.asarray(H))
    norm = 0.0
    for _ in range(iterations):
        if hm is None:
            w = dissipator(v, spec)
        else:
            w = -1j * (hm @ v - v @ hm) + dissipator(v, spec)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
    return float(norm)


def default_dt(H: QOperator | np.ndarray | None, spec: DissipatorSpec) -> float:
    """Step keeping dt * ||generator|| = 0.05, half the stability guard."""
    norm = generator_norm_estimate(H, spec)
    if norm == 0.0:
        raise ValueError("generator vanishes; evolution is trivial and dt is undefined")
    return 0.05 / norm


TRAJECTORY_COLUMNS = ("t", "survival", "trace", "min_eig", "purity")


@dataclass(frozen=True)
class Trajectory:
    """Recorded master-equation solution with scalar diagnostic series."""

    basis: SectorBasis
    times: np.ndarray
    states: list[np.ndarray]
    observables: dict[str, np.ndarray]

    def final_state(self) -> DensityMatrix:
        return DensityMatrix(self.basis, self.states[-1])

    def to_csv(self, path):
        """Write (t, survival, trace, min_eig, purity) rows, 17 significant digits."""
        from .output import write_csv

        rows = zip(self.times, *(self.observables[c] for c in TRAJECTORY_COLUMNS[1:]))
        return write_csv(path, "trajectory", TRAJECTORY_COLUMNS, rows)


def evolve(
    rho0: DensityMatrix,
    H: QOperator | np.ndarray | None,
    spec: DissipatorSpec,
    t_final: float,
    dt: float | None = None,
    record_every: int = 1,
    survival_ref: DensityMatrix | PureState | None = None,
) -> Trajectory:
    """Integrate the master equation with the classical 4th-order scheme.

    Fixed step; `dt` defaults to 0.05/||L|| and is rejected when
    dt * ||L|| > 0.1.  Every recorded point carries survival probability
    (overlap with `survival_ref`, default the initial state), trace,
    minimum eigenvalue and purity.
    """
    norm = generator_norm_estimate(H, spec)
    if dt is None:
        if norm == 0.0:
            raise ValueError("generator vanishes; supply dt explicitly")
        dt = 0.05 / norm
    if dt <= 0 or t_final <= 0:
        raise ValueError(f"need positive dt and t_final, got {dt}, {t_final}")
    if dt * norm > 0.1 + 1e-12:
        raise StepSizeError(
            f"dt * ||generator|| = {dt * norm:.3f} exceeds the 0.1 stability guard"
        )
    if survival_ref is None:
        ref = rho0.entries
    elif isinstance(survival_ref, PureState):
        ref = survival_ref.density_matrix().entries
    else:
        ref = survival_ref.entries

    hm = None if H is None else (H.entries if isinstance(H, QOperator) else np.asarray(H))

    def rhs(m: np.ndarray) -> np.ndarray:
        if hm is None:
            return dissipator(m, spec)
        return -1j * (hm @ m - m @ hm) + dissipator(m, spec)

    n_steps = max(1, int(round(t_final / dt)))
    dt = t_final / n_steps

    times = [0.0]
    states = [rho0.entries.copy()]
    rho = rho0.entries.copy()
    for step in range(1, n_steps + 1):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * dt * k1)
        k3 = rhs(rho + 0.5 * dt * k2)
        k4 = rhs(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(rho)):
            raise FloatingPointError(f"non-finite density matrix at step {step}")
        if step % record_every == 0 or step == n_steps:
            times.append(step * dt)
            states.append(rho.copy())

    times_arr = np.array(times)
    surv = np.array([np.trace(ref @ m).real for m in states])
    trace = np.array([np.trace(m).real for m in states])
    mineig = np.array([np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() for m in states])
    purity = np.array([np.trace(m @ m).real for m in states])
    obs = {"survival": surv, "trace": trace, "min_eig": mineig, "purity": purity}
    return Trajectory(basis=rho0.basis, times=times_arr, states=states, observables=obs)


def numeric_gamma_detail(
    psi0: PureState,
    H: QOperator | np.ndarray | None,
    spec: DissipatorSpec,
    fd_steps: int = 64,
) -> tuple[float, float]:
    """(direct, finite-difference) initial decay rate of the survival probability.

    Direct route: Gamma = -<psi|D[|psi><psi|]|psi>; the Hamiltonian commutator
    is verified to contribute below 1e-12 of the damping scale, as it must for
    a pure initial state.  Finite-difference route: Richardson-extrapolated
    two-point derivative 2 D(h/2) - D(h) of the survival series from two short
    integrations, h = fd_steps small steps past zero.
    """
    rho0 = psi0.density_matrix()
    psi = psi0.amplitudes
    dmat = dissipator(rho0.entries, spec)
    direct = -float(np.vdot(psi, dmat @ psi).real)
    if H is not None:
        hm = H.entries if isinstance(H, QOperator) else np.asarray(H)
        comm = hm @ rho0.entries - rho0.entries @ hm
        scale = max(float(np.max(np.abs(dmat))), float(np.max(np.abs(hm))), 1.0)
        if abs(np.vdot(psi, comm @ psi)) > 1e-12 * scale:
            raise OracleMismatchError(
                "Hamiltonian term contributes to the initial rate of a pure state; "
                "the generator assembly is inconsistent"
            )
    dt = default_dt(H, spec)
    h = fd_steps * dt
    if direct > 0:
        h = min(h, 1e-3 / direct)
    s_h = evolve(rho0, H, spec, t_final=h, dt=h / fd_steps, record_every=fd_steps,
                 survival_ref=psi0).observables["survival"][-1]
    s_h2 = evolve(rho0, H, spec, t_final=h / 2, dt=h / fd_steps, record_every=fd_steps,
                  survival_ref=psi0).observables["survival"][-1]
    d1 = (1.0 - s_h) / h
    d2 = (1.0 - s_h2) / (h / 2.0)
    fd = 2.0 * d2 - d1
    return direct, fd


def numeric_gamma(
    psi0: PureState,
    H: QOperator | np.ndarray | None,
    spec: DissipatorSpec,
    fd_tol: float = 1e-2,
) -> float:
    """Initial survival decay rate, cross-checked against the integrator.

    Raises OracleMismatchError when the direct expectation and the
    finite-difference estimate disagree beyond `fd_tol` of the dissipative
    rate scale (an integrator problem, not a physics one).  With lam = 0 the
    rate is identically zero and there is nothing to cross-check.
    """
    dissipative_scale = spec.lam2 * float(spec._damping.max())
    if dissipative_scale == 0.0:
        return 0.0
    direct, fd = numeric_gamma_detail(psi0, H, spec)
    if abs(direct - fd) / max(abs(direct), dissipative_scale * 1e-6) > fd_tol:
        raise OracleMismatchError(
            f"direct rate {direct:.6e} and finite-difference rate {fd:.6e} "
            f"disagree beyond {fd_tol:.1e} relative"
        )
    return direct
