"""Run configuration: flat key-value files with dotted section keys.

A config file is plain text, one `section.key = value` per line, `#`
comments allowed; command-line `--set section.key=value` overrides take
precedence.  The same validation runs whichever way a value arrived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .bath import BathSpec, load_correlation_csv
from .model import ModelParams, microev_to_angular

__all__ = ["ConfigError", "RunConfig", "parse_config_text", "load_config"]


class ConfigError(ValueError):
    """Configuration problem; carries the offending field name."""

    def __init__(self, fieldname: str, message: str):
        self.fieldname = fieldname
        super().__init__(f"{fieldname}: {message}")


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path: str | Path | None, overrides: list[str] | None = None) -> "RunConfig":
    values: dict[str, str] = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text()))
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError("--set", f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        values[key.strip()] = value.strip()
    return RunConfig(values=values)


_SWEEP_AXES = ("r", "nbar", "EC_over_EJ", "lam")


@dataclass
class RunConfig:
    """Typed view over the flat key-value store."""

    values: dict[str, str] = field(default_factory=dict)

    def _get(self, key: str, default: str | None = None) -> str | None:
        return self.values.get(key, default)

    def _float(self, key: str, default: float | None = None) -> float | None:
        raw = self._get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(key, f"not a number: {raw!r}") from exc

    def _int(self, key: str, default: int | None = None) -> int | None:
        raw = self._get(key)
        if raw is None:
            return default
        try:
            return int(float(raw))
        except ValueError as exc:
            raise ConfigError(key, f"not an integer: {raw!r}") from exc

    def _require(self, key: str) -> float:
        v = self._float(key)
        if v is None:
            raise ConfigError(key, "required value missing")
        return v

    @property
    def units_convention(self) -> str:
        return self._get("model.units", "angular")

    def _energy(self, key: str, default: float | None = None) -> float | None:
        """Energy-like entries honour model.units (angular | uev_exact | uev_coarse)."""
        v = self._float(key, default)
        if v is None:
            return None
        units = self.units_convention
        if units == "angular":
            return v
        if units in ("uev_exact", "uev_coarse"):
            return microev_to_angular(v, "exact" if units == "uev_exact" else "coarse")
        raise ConfigError("model.units", f"unknown convention {units!r}")

    def model_params(self) -> ModelParams:
        e_c = self._energy("model.E_C")
        if e_c is None or e_c <= 0:
            raise ConfigError("model.E_C", f"charging energy must be positive, got {e_c}")
        n = self._int("model.N")
        if n is None or n <= 0:
            raise ConfigError("model.N", f"total pair count must be positive, got {n}")
        nbar = self._float("model.nbar")
        if nbar is None or not 0.0 < nbar < n:
            raise ConfigError("model.nbar", f"need 0 < nbar < N={n}, got {nbar}")
        k = self._energy("model.K")
        e_j = self._energy("model.E_J")
        if (k is None) == (e_j is None):
            raise ConfigError("model.K", "give exactly one of model.K and model.E_J")
        if k is None:
            k = e_j / math.sqrt(nbar * (n - nbar))
        kwargs = dict(
            E_C=e_c,
            K=k,
            N=n,
            nbar=nbar,
            U_L=self._energy("model.U_L", 0.0),
            U_R=self._energy("model.U_R", 0.0),
            lam=self._float("model.lam", 0.0),
        )
        n_g = self._float("model.n_g")
        if n_g is not None:
            kwargs["n_g"] = n_g
        lam_max = self._float("model.lam_max")
        if lam_max is not None:
            kwargs["lam_max"] = lam_max
        try:
            return ModelParams(**kwargs)
        except ValueError as exc:
            raise ConfigError("model", str(exc)) from exc

    def bath_spec(self, params: ModelParams | None = None) -> BathSpec:
        form = self._get("bath.form", "exponential")
        if form == "exponential":
            g2 = self._float("bath.g2")
            if g2 is None or g2 <= 0:
                raise ConfigError("bath.g2", f"correlation strength must be positive, got {g2}")
            tau = self._float("bath.tau_E")
            r = self._float("bath.r")
            if (tau is None) == (r is None):
                raise ConfigError("bath.tau_E", "give exactly one of bath.tau_E and bath.r")
            if tau is None:
                if params is None:
                    raise ConfigError("bath.r", "bath.r needs model.E_C to derive tau_E")
                tau = r / (2.0 * params.E_C)
            try:
                return BathSpec.exponential(g2=g2, tau_E=tau)
            except ValueError as exc:
                raise ConfigError("bath", str(exc)) from exc
        if form == "tabulated":
            table = self._get("bath.table")
            if table is None:
                raise ConfigError("bath.table", "tabulated bath needs a correlation CSV path")
            t, c = load_correlation_csv(table)
            table_k = self._get("bath.table_kappa")
            ck = None
            if table_k is not None:
                tk, ck = load_correlation_csv(table_k)
                if tk.shape != t.shape or not (tk == t).all():
                    raise ConfigError("bath.table_kappa", "kappa table must share the time grid")
            try:
                return BathSpec.tabulated(t, c, ck)
            except ValueError as exc:
                raise ConfigError("bath", str(exc)) from exc
        raise ConfigError("bath.form", f"unknown form {form!r}")

    def evolve_block(self) -> dict:
        state_raw = self._get("evolve.state", "fock")
        parts = state_raw.split()
        kind = parts[0] if parts else "fock"
        if kind not in ("fock", "coherent"):
            raise ConfigError("evolve.state", f"state must be 'fock n' or 'coherent nbar theta', got {state_raw!r}")
        return {
            "state_kind": kind,
            "state_args": [float(x) for x in parts[1:]],
            "t_final": self._float("evolve.t_final"),
            "dt": self._float("evolve.dt"),
            "record_every": self._int("evolve.record_every", 1),
        }

    def sweep_block(self) -> dict:
        axis = self._get("sweep.axis")
        if axis not in _SWEEP_AXES:
            raise ConfigError("sweep.axis", f"axis must be one of {_SWEEP_AXES}, got {axis!r}")
        start = self._require("sweep.start")
        stop = self._require("sweep.stop")
        points = self._int("sweep.points", 1)
        scale = self._get("sweep.scale", "log")
        if scale not in ("log", "linear"):
            raise ConfigError("sweep.scale", f"scale must be log or linear, got {scale!r}")
        if points < 1:
            raise ConfigError("sweep.points", f"need at least one point, got {points}")
        if not (math.isfinite(start) and math.isfinite(stop)):
            raise ConfigError("sweep.start", "sweep range must be finite")
        if scale == "log" and (start <= 0 or stop <= 0):
            raise ConfigError("sweep.start", "log sweeps need positive endpoints")
        return {"axis": axis, "start": start, "stop": stop, "points": points, "scale": scale}

    def meanfield_block(self) -> dict:
        return {
            "periods": self._int("meanfield.periods", 40),
            "steps_per_period": self._int("meanfield.steps_per_period", 400),
            "displacement": self._float("meanfield.displacement"),
        }
