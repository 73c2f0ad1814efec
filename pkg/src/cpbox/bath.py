"""Environment correlation functions and their spectral transforms.

The environment enters the reduced dynamics only through the Fourier
transforms of its two-point correlations,

    h(w) = int dt e^{-i w t} <B(t) B^+>,    kappa(w) = int dt e^{i w t} <B^+(t) B>,

evaluated at the system transition frequencies.  The exponential heat bath
g^2 exp(-|t|/tau_E) has both transforms equal to 2 g^2 tau_E / (1 + (w tau_E)^2);
tabulated baths may be asymmetric (kappa != h) and are integrated by exact
per-interval quadrature of the oscillatory factor over a piecewise-linear
interpolant, which avoids the Nyquist artifacts of an FFT on non-periodic
decaying data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["BathSpec", "correlation", "spectral_function", "h_k", "ratio_r", "load_correlation_csv"]

DECAY_RATIO = 1e-6


def ratio_r(E_C: float, tau_E: float) -> float:
    """Dimensionless ratio r = tau_E / tau_C = 2 E_C tau_E."""
    if E_C <= 0 or tau_E <= 0:
        raise ValueError(f"E_C and tau_E must be positive, got {E_C}, {tau_E}")
    return 2.0 * E_C * tau_E


def _check_table(t: np.ndarray, c: np.ndarray, label: str) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=float)
    c = np.asarray(c, dtype=float)
    if t.ndim != 1 or t.size < 2 or t.shape != c.shape:
        raise ValueError(f"{label}: need matching 1-d arrays with at least 2 samples")
    if t[0] < 0 or np.any(np.diff(t) <= 0):
        raise ValueError(f"{label}: time grid must be non-negative and strictly increasing")
    if abs(c[-1]) > DECAY_RATIO * abs(c[0]):
        raise ValueError(
            f"{label}: correlations must decay; |C(end)|={abs(c[-1]):.3e} exceeds "
            f"{DECAY_RATIO:.0e} x |C(0)|={abs(c[0]):.3e}"
        )
    return t, c


@dataclass(frozen=True)
class BathSpec:
    """Environment model: exponential closed form or tabulated correlations.

    Exponential: correlation strength g2 and correlation time tau_E.
    Tabulated: samples of <B(t) B^+> (and optionally <B^+(t) B>, default the
    same table) on a t >= 0 grid; correlations are extended evenly to t < 0.
    """

    form: str
    g2: float = 0.0
    tau_E: float = 0.0
    t_grid: np.ndarray | None = field(default=None, repr=False)
    c_bbdag: np.ndarray | None = field(default=None, repr=False)
    c_bdagb: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.form == "exponential":
            if self.g2 <= 0 or self.tau_E <= 0:
                raise ValueError(f"exponential bath needs g2 > 0 and tau_E > 0, got {self.g2}, {self.tau_E}")
        elif self.form == "tabulated":
            t, ch = _check_table(self.t_grid, self.c_bbdag, "<B(t)B^+> table")
            ck = self.c_bdagb if self.c_bdagb is not None else self.c_bbdag
            if np.any(np.asarray(ck) != 0.0):
                _, ck = _check_table(t, ck, "<B^+(t)B> table")
            else:
                ck = np.asarray(ck, dtype=float)
            for a in (t, ch, ck):
                a.flags.writeable = False
            object.__setattr__(self, "t_grid", t)
            object.__setattr__(self, "c_bbdag", ch)
            object.__setattr__(self, "c_bdagb", ck)
        else:
            raise ValueError(f"unknown bath form {self.form!r}")

    @classmethod
    def exponential(cls, g2: float, tau_E: float) -> "BathSpec":
        return cls(form="exponential", g2=g2, tau_E=tau_E)

    @classmethod
    def tabulated(cls, t: np.ndarray, c_bbdag: np.ndarray, c_bdagb: np.ndarray | None = None) -> "BathSpec":
        return cls(form="tabulated", t_grid=np.array(t, dtype=float),
                   c_bbdag=np.array(c_bbdag, dtype=float),
                   c_bdagb=None if c_bdagb is None else np.array(c_bdagb, dtype=float))

    def r(self, E_C: float) -> float:
        if self.form != "exponential":
            raise ValueError("the Coulomb ratio r is defined for the exponential bath")
        return ratio_r(E_C, self.tau_E)


def correlation(bath: BathSpec, t: float | np.ndarray) -> np.ndarray | float:
    """Two-point correlation <B(t) B^+>; symmetric in t, value g^2 at t = 0."""
    t = np.asarray(t, dtype=float)
    if bath.form == "exponential":
        out = bath.g2 * np.exp(-np.abs(t) / bath.tau_E)
    else:
        out = np.interp(np.abs(t), bath.t_grid, bath.c_bbdag, right=0.0)
    return float(out) if out.ndim == 0 else out


def _cos_transform_linear(t: np.ndarray, c: np.ndarray, omega: float) -> float:
    """2 * int_0^T C(t) cos(w t) dt with C piecewise linear, per-interval exact.

    On each interval C(t) = a + b (t - t0); both the a and b pieces integrate
    against cos(w t) in closed form, so the only error is the interpolation
    error of the table itself (second order in the grid spacing).
    """
    t0, t1 = t[:-1], t[1:]
    dt = t1 - t0
    a = c[:-1]
    b = (c[1:] - c[:-1]) / dt
    w = float(omega)
    if abs(w) < 1e-300:
        seg = a * dt + 0.5 * b * dt**2
    else:
        s0, s1 = np.sin(w * t0), np.sin(w * t1)
        c0, c1 = np.cos(w * t0), np.cos(w * t1)
        # int cos = (sin(w t1) - sin(w t0)) / w
        # int (t - t0) cos(w t) dt = [dt s1 + (c1 - c0)/w] / w
        seg = a * (s1 - s0) / w + b * (dt * s1 + (c1 - c0) / w) / w
    return 2.0 * float(np.sum(seg))


def spectral_function(bath: BathSpec, omega: float) -> tuple[float, float]:
    """(h(omega), kappa(omega)) at a single frequency.

    Exponential bath: both equal 2 g^2 tau_E / (1 + (omega tau_E)^2).  The
    pair is returned even though equal so asymmetric tabulated baths (for
    example thermal ones obeying detailed balance) share the call sites.
    """
    if bath.form == "exponential":
        v = 2.0 * bath.g2 * bath.tau_E / (1.0 + (omega * bath.tau_E) ** 2)
        return v, v
    h = _cos_transform_linear(bath.t_grid, bath.c_bbdag, omega)
    kap = _cos_transform_linear(bath.t_grid, bath.c_bdagb, omega)
    return h, kap


def spectral_arrays(bath: BathSpec, omegas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (h, kappa) over an array of frequencies."""
    omegas = np.asarray(omegas, dtype=float)
    if bath.form == "exponential":
        v = 2.0 * bath.g2 * bath.tau_E / (1.0 + (omegas * bath.tau_E) ** 2)
        return v, v.copy()
    h = np.array([_cos_transform_linear(bath.t_grid, bath.c_bbdag, w) for w in omegas])
    k = np.array([_cos_transform_linear(bath.t_grid, bath.c_bdagb, w) for w in omegas])
    return h, k


def h_k(bath: BathSpec, E_C: float, k: int | np.ndarray) -> np.ndarray | float:
    """Resonance spectral weight h_k = 2 g^2 tau_E / (1 + (r k)^2), r = 2 E_C tau_E."""
    if bath.form != "exponential":
        raise ValueError("h_k closed form is defined for the exponential bath")
    r = ratio_r(E_C, bath.tau_E)
    k = np.asarray(k, dtype=float)
    out = 2.0 * bath.g2 * bath.tau_E / (1.0 + (r * k) ** 2)
    return float(out) if out.ndim == 0 else out


def load_correlation_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Load a two-column (t, C(t)) correlation table; first row is a header."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if rows.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (t, C), got {rows.shape[1]}")
    return rows[:, 0], rows[:, 1]
