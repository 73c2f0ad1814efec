"""Command-line front end.

Subcommands: freq, rates, evolve, meanfield, sweep, estimate.  Every command
reads a flat key-value config (--config) with repeatable --set overrides,
writes delimited reports (CSV with a versioned schema line, JSON with
round-trip floats) into --out, and exits with a documented code:

    0  success
    2  invalid configuration (field-level message on stderr)
    3  oracle self-test failure (--oracle disagreement beyond tolerance)
    4  integrator step-size guard violated
    5  no oscillation found where one was required

Identical configs produce byte-identical CSV/JSON; sweep figures are
rendered to SVG alongside the delimited output.  SCB_THREADS caps sweep
parallelism.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import lindblad, meanfield, rates
from .bath import BathSpec, ratio_r
from .config import ConfigError, RunConfig, load_config
from .lindblad import OracleMismatchError, StepSizeError
from .meanfield import NoOscillationError, NormDriftError
from .model import ModelParams, h0_full, omega_c, omega_q
from .output import format_number, write_csv, write_json
from .sector import build_basis, coherent_coefficients, fock_state

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ORACLE = 3
EXIT_STEP = 4
EXIT_NO_OSCILLATION = 5

ORACLE_TOL = 1e-8
ORACLE_N_CAP = 50

# Reference device scales used for side-by-side estimate tables:
# E_J ~ 1e10 1/s, E_C ~ 1e11 1/s, nbar ~ 1e8, r ~ 1.
REFERENCE_DEVICE = {"tau_fock": 1e-9, "tau_coherent": 1e-5}


def _emit(cfg_fmt: str, out: Path, stem: str, header: list[str], rows: list[list],
          payload: dict, schema: str) -> list[Path]:
    written = []
    if cfg_fmt in ("csv", "both"):
        written.append(write_csv(out / f"{stem}.csv", schema, header, rows))
    if cfg_fmt in ("json", "both"):
        written.append(write_json(out / f"{stem}.json", payload))
    return written


def cmd_freq(cfg: RunConfig, out: Path, fmt: str, oracle: bool) -> int:
    """Oscillation frequencies: omega_q (exact and on-resonance), omega_c, ratio."""
    params = cfg.model_params()
    wq = omega_q(params)
    wq_res = omega_q(params, resonance_approx=True)
    wc = omega_c(params)
    payload = {
        "omega_q": wq,
        "omega_q_resonance": wq_res,
        "omega_c": wc,
        "ratio_wc_over_wq_resonance": math.sqrt(2.0 * params.E_C / params.E_J),
        "E_C": params.E_C,
        "E_J": params.E_J,
        "n_g": params.n_g,
        "units_convention": cfg.units_convention,
    }
    _emit(fmt, out, "freq", list(payload.keys()), [list(payload.values())], payload, "freq")
    print(f"omega_q = {format_number(wq)}  (resonance approximation {format_number(wq_res)})")
    print(f"omega_c = {format_number(wc)}")
    print(f"omega_c / omega_q(res) = {format_number(payload['ratio_wc_over_wq_resonance'])}")
    return EXIT_OK


def _oracle_columns(params: ModelParams, bath: BathSpec) -> dict[str, float]:
    """Quadratic-form cross-checks of the closed-form rates (N <= 50)."""
    basis = build_basis(params.N)
    spec = lindblad.build_dissipator_spec(basis, params, bath)
    nf = int(round(params.nbar))
    psi_f = fock_state(basis, nf)
    d = lindblad.dissipator(psi_f.density_matrix().entries, spec)
    quad_f = -float(np.vdot(psi_f.amplitudes, d @ psi_f.amplitudes).real)
    gf = rates.gamma_fock(nf, params, bath)
    psi_c = coherent_coefficients(basis, params.nbar)
    d = lindblad.dissipator(psi_c.density_matrix().entries, spec)
    quad_c = -float(np.vdot(psi_c.amplitudes, d @ psi_c.amplitudes).real)
    gc = rates.gamma_coherent_exact(params, bath)
    return {
        "oracle_fock_rel": abs(gf - quad_f) / max(abs(quad_f), 1e-300),
        "oracle_coherent_rel": abs(gc - quad_c) / max(abs(quad_c), 1e-300),
    }


def cmd_rates(cfg: RunConfig, out: Path, fmt: str, oracle: bool) -> int:
    """Full decay-rate ladder; --oracle adds dissipator cross-check columns."""
    params = cfg.model_params()
    bath = cfg.bath_spec(params)
    report = rates.rate_report(params, bath)
    payload = asdict(report)
    payload["r"] = ratio_r(params.E_C, bath.tau_E)
    payload["units_convention"] = cfg.units_convention
    code = EXIT_OK
    if oracle:
        if params.N > ORACLE_N_CAP:
            raise ConfigError("model.N", f"--oracle cross-checks need N <= {ORACLE_N_CAP}")
        cols = _oracle_columns(params, bath)
        payload.update(cols)
        if max(cols.values()) > ORACLE_TOL:
            print(
                f"error: oracle disagreement {max(cols.values()):.3e} exceeds {ORACLE_TOL:.1e}",
                file=sys.stderr,
            )
            code = EXIT_ORACLE
    _emit(fmt, out, "rates", list(payload.keys()), [list(payload.values())], payload, "rates")
    print(f"Gamma_Fock({report.n_fock}) = {format_number(report.gamma_fock)}")
    print(f"Gamma_coherent_exact = {format_number(report.gamma_coherent_exact)}")
    print(f"ratio 1/f(sqrt(nbar) r) = {format_number(report.ratio)}")
    return code


def _initial_state(cfg: RunConfig, params: ModelParams):
    block = cfg.evolve_block()
    basis = build_basis(params.N)
    kind, args = block["state_kind"], block["state_args"]
    if kind == "fock":
        n = int(args[0]) if args else int(round(params.nbar))
        block["fock_n"] = n
        return basis, fock_state(basis, n), block
    nbar = args[0] if args else params.nbar
    theta = args[1] if len(args) > 1 else 0.0
    return basis, coherent_coefficients(basis, nbar, theta), block


def cmd_evolve(cfg: RunConfig, out: Path, fmt: str, oracle: bool) -> int:
    """Integrate the master equation; write trajectory.csv and rate comparison."""
    params = cfg.model_params()
    bath = cfg.bath_spec(params)
    basis, psi0, block = _initial_state(cfg, params)
    spec = lindblad.build_dissipator_spec(basis, params, bath)
    H = h0_full(basis, params)
    if block["state_kind"] == "fock":
        gamma_analytic = rates.gamma_fock(block["fock_n"], params, bath)
    else:
        gamma_analytic = rates.gamma_coherent_exact(params, bath)
    t_final = block["t_final"]
    if t_final is None:
        if gamma_analytic <= 0:
            raise ConfigError("evolve.t_final", "required when the analytic rate vanishes")
        t_final = 0.1 / gamma_analytic
    traj = lindblad.evolve(
        psi0.density_matrix(), H, spec, t_final=t_final, dt=block["dt"],
        record_every=block["record_every"], survival_ref=psi0,
    )
    direct, fd = lindblad.numeric_gamma_detail(psi0, H, spec)
    rel = abs(fd - direct) / max(abs(direct), 1e-300)
    traj.to_csv(out / "trajectory.csv")
    payload = {
        "gamma_analytic": gamma_analytic,
        "gamma_direct": direct,
        "gamma_finite_difference": fd,
        "fd_vs_direct_rel": rel,
        "t_final": t_final,
        "samples": int(traj.times.size),
        "state": f"{block['state_kind']} {' '.join(str(a) for a in block['state_args'])}".strip(),
    }
    if fmt in ("json", "both"):
        write_json(out / "evolve.json", payload)
    print(f"Gamma_numeric (finite difference) = {format_number(fd)}")
    print(f"Gamma_analytic = {format_number(gamma_analytic)}")
    print(f"relative deviation = {format_number(abs(fd - gamma_analytic) / max(gamma_analytic, 1e-300))}")
    return EXIT_OK


def cmd_meanfield(cfg: RunConfig, out: Path, fmt: str, oracle: bool) -> int:
    """Integrate the two-mode amplitude equations; report the frequency."""
    params = cfg.model_params()
    block = cfg.meanfield_block()
    centered = meanfield.params_centered_at_nbar(params)
    if params.E_J <= 0:
        raise NoOscillationError("E_J = 0: the phase-space energy has no oscillation well")
    fp = meanfield.gp_fixed_point(centered)
    disp = block["displacement"]
    if disp is None:
        disp = 0.01 * math.sqrt(centered.E_J / (2.0 * centered.E_C))
    state0 = meanfield.order_parameter_at(fp.n_L + disp, 0.0, centered.N)
    w_c = omega_c(centered)
    period = 2.0 * math.pi / w_c
    traj = meanfield.gp_evolve(
        state0, centered,
        t_final=block["periods"] * period,
        dt=period / block["steps_per_period"],
    )
    meas = meanfield.extract_frequency(traj)
    rel = (meas["omega"] - w_c) / w_c
    traj.to_csv(out / "gp_trajectory.csv")
    payload = {
        "omega_measured": meas["omega"],
        "omega_spectral": meas["omega_spectral"],
        "omega_c": w_c,
        "relative_deviation": rel,
        "amplitude": meas["amplitude"],
        "norm_drift": float(np.max(np.abs(traj.norm - 1.0))),
        "energy_rel_drift": float(
            np.max(np.abs(traj.energy - traj.energy[0])) / max(abs(traj.energy[0]), 1e-300)
        ),
        "fixed_point_n_L": fp.n_L,
    }
    if fmt in ("json", "both"):
        write_json(out / "meanfield.json", payload)
    print(f"measured omega = {format_number(meas['omega'])}")
    print(f"omega_c = {format_number(w_c)}")
    print(f"relative deviation = {format_number(rel)}")
    return EXIT_OK


def _sweep_point(cfg: RunConfig, axis: str, value: float):
    params = cfg.model_params()
    if axis == "lam":
        params = replace(params, lam=value)
    elif axis == "nbar":
        params = replace(params, nbar=value, n_g=params.n_g)
    elif axis == "EC_over_EJ":
        target_ej = params.E_J
        params = replace(params, E_C=value * target_ej)
    bath = cfg.bath_spec(params)
    if axis == "r":
        bath = BathSpec.exponential(g2=bath.g2, tau_E=value / (2.0 * params.E_C))
    elif axis == "EC_over_EJ":
        r_fixed = cfg._float("bath.r")
        if r_fixed is not None:
            bath = BathSpec.exponential(g2=bath.g2, tau_E=r_fixed / (2.0 * params.E_C))
    include_sums = params.N + 1 <= 10**7
    return rates.rate_report(params, bath, include_sums=include_sums)


def cmd_sweep(cfg: RunConfig, out: Path, fmt: str, oracle: bool) -> int:
    """Rate report over a parameter grid; CSV rows plus the ratio SVG figure."""
    sw = cfg.sweep_block()
    if sw["points"] == 1:
        values = np.array([sw["start"]])
    elif sw["scale"] == "log":
        values = np.geomspace(sw["start"], sw["stop"], sw["points"])
    else:
        values = np.linspace(sw["start"], sw["stop"], sw["points"])
    max_workers = max(1, int(os.environ.get("SCB_THREADS", "4")))
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        reports = list(pool.map(lambda v: _sweep_point(cfg, sw["axis"], float(v)), values))
    header = ["axis", "value"] + reports[0].csv_header()
    rows = [[sw["axis"], float(v)] + rep.csv_row() for v, rep in zip(values, reports)]
    write_csv(out / "sweep.csv", "sweep", header, rows)
    if fmt in ("json", "both"):
        payload = {
            "axis": sw["axis"],
            "values": [float(v) for v in values],
            "reports": [asdict(r) for r in reports],
        }
        write_json(out / "sweep.json", payload)
    from .plotting import save_ratio_plot

    x = np.array([r.sqrt_nbar_r for r in reports])
    ratio = np.array([r.ratio for r in reports])
    ratio_exact = np.array([r.ratio_exact for r in reports])
    order = np.argsort(x)
    save_ratio_plot(out / "ratio.svg", x[order], ratio[order], ratio_exact[order])
    print(f"swept {sw['axis']} over {len(values)} point(s); wrote sweep.csv and ratio.svg")
    return EXIT_OK


def cmd_estimate(cfg: RunConfig, out: Path, fmt: str, oracle: bool) -> int:
    """Calibrated order-of-magnitude chain next to reference-device values."""
    params = cfg.model_params()
    bath = cfg.bath_spec(params)
    report = rates.estimate_report(params, bath)
    r = ratio_r(params.E_C, bath.tau_E)
    tau_ratio = report.tau_coherent / report.tau_fock
    payload = {
        "E_J": params.E_J,
        "E_C": params.E_C,
        "EJ_over_EC": params.E_J / params.E_C,
        "nbar": params.nbar,
        "r": r,
        "gamma_fock_over_EJ": report.estimate_fock_over_EJ,
        "gamma_coh_over_EJ": report.estimate_coh_over_EJ,
        "tau_fock": report.tau_fock,
        "tau_fock_bracket": 1.0 / report.gamma_fock,
        "tau_coherent": report.tau_coherent,
        "tau_coherent_over_tau_fock": tau_ratio,
        "sqrt_nbar_r": report.sqrt_nbar_r,
        "reference_tau_fock": REFERENCE_DEVICE["tau_fock"],
        "reference_tau_coherent": REFERENCE_DEVICE["tau_coherent"],
        "estimate_convention": "order-of-magnitude",
    }
    _emit(fmt, out, "estimate", list(payload.keys()), [list(payload.values())], payload, "estimate")
    print(f"{'quantity':<28}{'value':<26}reference device")
    print(f"{'Gamma_Fock/E_J':<28}{format_number(report.estimate_fock_over_EJ):<26}0.1")
    print(f"{'Gamma_coh/E_J':<28}{format_number(report.estimate_coh_over_EJ):<26}1e-05")
    print(f"{'tau_Fock [s]':<28}{format_number(report.tau_fock):<26}{REFERENCE_DEVICE['tau_fock']}")
    print(f"{'tau_coherent [s]':<28}{format_number(report.tau_coherent):<26}{REFERENCE_DEVICE['tau_coherent']}")
    print(f"{'tau_coherent/tau_Fock':<28}{format_number(tau_ratio):<26}~1e4")
    return EXIT_OK


_COMMANDS = {
    "freq": cmd_freq,
    "rates": cmd_rates,
    "evolve": cmd_evolve,
    "meanfield": cmd_meanfield,
    "sweep": cmd_sweep,
    "estimate": cmd_estimate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpbox",
        description="Cooper-pair box charge oscillations under environmental noise",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", type=Path, default=None, help="flat key-value config file")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry (repeatable)")
        p.add_argument("--format", choices=("csv", "json", "both"), default=None)
        p.add_argument("--oracle", action="store_true",
                       help="enable dissipator cross-checks (rates; N <= 50)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
        out = args.out or Path(cfg._get("output.dir", "."))
        out.mkdir(parents=True, exist_ok=True)
        fmt = args.format or cfg._get("output.format", "both")
        return _COMMANDS[args.command](cfg, out, fmt, args.oracle)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepSizeError as exc:
        print(f"error: step size: {exc}", file=sys.stderr)
        return EXIT_STEP
    except OracleMismatchError as exc:
        print(f"error: oracle: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (NoOscillationError, NormDriftError) as exc:
        print(f"error: mean-field: {exc}", file=sys.stderr)
        return EXIT_NO_OSCILLATION
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
