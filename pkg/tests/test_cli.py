import json
import math

import numpy as np
import pytest

from cpbox.cli import main

BASE_CONFIG = """
# desk-scale resonant setup
model.E_C = 1.0
model.K = 1e-4
model.N = 200
model.nbar = 100
model.n_g = 0.5
model.lam = 0.1
bath.g2 = 1.0
bath.r = 1.0
"""


def write_config(tmp_path, text=BASE_CONFIG, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def run(args):
    return main([str(a) for a in args])


def test_freq_outputs(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert run(["freq", "--config", cfg, "--out", tmp_path]) == 0
    payload = json.loads((tmp_path / "freq.json").read_text())
    e_j = 1e-4 * math.sqrt(100 * 100)
    assert payload["omega_q_resonance"] == pytest.approx(e_j)
    assert payload["omega_q"] == pytest.approx(e_j)  # n_g = 1/2
    assert payload["omega_c"] == pytest.approx(math.sqrt(2 * 1.0 * e_j))
    assert payload["ratio_wc_over_wq_resonance"] == pytest.approx(math.sqrt(2 / e_j))
    assert (tmp_path / "freq.csv").read_text().startswith("# cpbox-csv v1 freq")
    assert "omega_q" in capsys.readouterr().out


def test_freq_reference_device_values(tmp_path):
    text = """
model.E_C = 1e11
model.E_J = 1e10
model.N = 1000000000000
model.nbar = 1e8
model.n_g = 0.5
"""
    cfg = write_config(tmp_path, text)
    assert run(["freq", "--config", cfg, "--out", tmp_path]) == 0
    payload = json.loads((tmp_path / "freq.json").read_text())
    assert payload["omega_q_resonance"] == pytest.approx(1e10)
    assert payload["omega_q"] == pytest.approx(1e10)
    assert payload["omega_c"] == pytest.approx(math.sqrt(2 * 1e11 * 1e10))


def test_freq_equal_scales_ratio(tmp_path):
    cfg = write_config(tmp_path, BASE_CONFIG.replace("model.K = 1e-4", "model.K = 0.01"))
    assert run(["freq", "--config", cfg, "--out", tmp_path]) == 0
    payload = json.loads((tmp_path / "freq.json").read_text())
    # E_J = E_C = 1 here
    assert payload["ratio_wc_over_wq_resonance"] == pytest.approx(math.sqrt(2.0))


def test_missing_required_field_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path, BASE_CONFIG.replace("model.E_C = 1.0\n", ""))
    assert run(["freq", "--config", cfg, "--out", tmp_path]) == 2
    assert "model.E_C" in capsys.readouterr().err


def test_set_overrides_take_precedence(tmp_path):
    cfg = write_config(tmp_path)
    assert run(["freq", "--config", cfg, "--out", tmp_path, "--set", "model.K=2e-4"]) == 0
    payload = json.loads((tmp_path / "freq.json").read_text())
    assert payload["omega_q_resonance"] == pytest.approx(2e-4 * 100.0)


@pytest.mark.filterwarnings("ignore:gamma_coherent_approx used at nbar")
def test_rates_with_oracle_columns(tmp_path):
    cfg = write_config(
        tmp_path,
        BASE_CONFIG.replace("model.N = 200", "model.N = 40").replace("model.nbar = 100", "model.nbar = 20"),
    )
    assert run(["rates", "--config", cfg, "--out", tmp_path, "--oracle"]) == 0
    payload = json.loads((tmp_path / "rates.json").read_text())
    assert payload["oracle_fock_rel"] < 1e-8
    assert payload["oracle_coherent_rel"] < 1e-8
    assert payload["r"] == pytest.approx(1.0)
    assert payload["ratio"] == pytest.approx(1.0 / payload["f_value"], rel=1e-12)


@pytest.mark.filterwarnings("ignore:gamma_coherent_approx used at nbar")
def test_rates_oracle_gate_exit_3(tmp_path, monkeypatch, capsys):
    # impossible tolerance: the self-test gate must trip and exit 3
    import cpbox.cli

    monkeypatch.setattr(cpbox.cli, "ORACLE_TOL", 0.0)
    cfg = write_config(
        tmp_path,
        BASE_CONFIG.replace("model.N = 200", "model.N = 40").replace("model.nbar = 100", "model.nbar = 20"),
    )
    assert run(["rates", "--config", cfg, "--out", tmp_path, "--oracle"]) == 3
    assert "oracle disagreement" in capsys.readouterr().err


def test_rates_r_zero_limit_ratio_one(tmp_path):
    cfg = write_config(tmp_path, BASE_CONFIG.replace("bath.r = 1.0", "bath.r = 1e-7"))
    assert run(["rates", "--config", cfg, "--out", tmp_path]) == 0
    payload = json.loads((tmp_path / "rates.json").read_text())
    assert payload["ratio"] == pytest.approx(1.0, abs=1e-4)


def test_rates_closed_form_path_reference_scale(tmp_path):
    text = """
model.E_C = 1e11
model.E_J = 1e10
model.N = 10000000000
model.nbar = 1e8
model.n_g = 0.5
model.lam = 0.0
bath.g2 = 1.0
bath.r = 1.0
"""
    cfg = write_config(tmp_path, text)
    assert run(["estimate", "--config", cfg, "--out", tmp_path]) == 0
    payload = json.loads((tmp_path / "estimate.json").read_text())
    assert payload["tau_fock"] == pytest.approx(1e-9, rel=1e-9)
    assert 1e-5 / 3 < payload["tau_coherent"] < 1e-5 * 3
    assert payload["tau_coherent_over_tau_fock"] == pytest.approx(
        math.sqrt(2 / math.pi) * 1e4, rel=0.01
    )
    assert payload["gamma_fock_over_EJ"] == pytest.approx(0.1, rel=1e-12)


def test_estimate_scaling_rows(tmp_path):
    base = """
model.E_C = 1e11
model.E_J = 1e10
model.N = 10000000000
model.nbar = 1e8
model.n_g = 0.5
model.lam = 0.0
bath.g2 = 1.0
bath.r = {r}
"""
    cfg1 = write_config(tmp_path, base.format(r=1.0), "a.cfg")
    cfg10 = write_config(tmp_path, base.format(r=10.0), "b.cfg")
    out1, out10 = tmp_path / "o1", tmp_path / "o10"
    assert run(["estimate", "--config", cfg1, "--out", out1]) == 0
    assert run(["estimate", "--config", cfg10, "--out", out10]) == 0
    p1 = json.loads((out1 / "estimate.json").read_text())
    p10 = json.loads((out10 / "estimate.json").read_text())
    assert p10["tau_fock"] == pytest.approx(p1["tau_fock"] / 10.0, rel=1e-12)
    # 100x nbar lengthens the coherent decay estimate 10x
    cfg100 = write_config(
        tmp_path,
        base.format(r=1.0)
        .replace("model.nbar = 1e8", "model.nbar = 1e10")
        .replace("model.N = 10000000000", "model.N = 1000000000000"),
        "c.cfg",
    )
    out100 = tmp_path / "o100"
    assert run(["estimate", "--config", cfg100, "--out", out100]) == 0
    p100 = json.loads((out100 / "estimate.json").read_text())
    assert p100["tau_coherent"] == pytest.approx(p1["tau_coherent"] * 10.0, rel=1e-3)


EVOLVE_CONFIG = """
model.E_C = 0.05
model.K = 0.02
model.N = 30
model.nbar = 15
model.n_g = 0.5
model.lam = 0.1
bath.g2 = 1.0
bath.r = 0.1
evolve.state = fock 15
evolve.record_every = 5
"""


def test_evolve_trajectory_and_gamma(tmp_path, capsys):
    cfg = write_config(tmp_path, EVOLVE_CONFIG)
    assert run(["evolve", "--config", cfg, "--out", tmp_path]) == 0
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("# cpbox-csv v1 trajectory")
    assert lines[1] == "t,survival,trace,min_eig,purity"
    data = np.loadtxt(lines[2:], delimiter=",")
    assert data[0, 1] == pytest.approx(1.0)
    assert np.all(np.abs(data[:, 2] - 1.0) < 1e-8)
    payload = json.loads((tmp_path / "evolve.json").read_text())
    assert payload["fd_vs_direct_rel"] < 1e-2
    out = capsys.readouterr().out
    assert "Gamma_numeric" in out and "relative deviation" in out


def test_evolve_coherent_state(tmp_path):
    cfg = write_config(tmp_path, EVOLVE_CONFIG.replace("evolve.state = fock 15",
                                                       "evolve.state = coherent 15 0.0"))
    assert run(["evolve", "--config", cfg, "--out", tmp_path]) == 0
    payload = json.loads((tmp_path / "evolve.json").read_text())
    assert abs(payload["gamma_finite_difference"] - payload["gamma_analytic"]) / payload[
        "gamma_analytic"
    ] < 0.01


def test_evolve_step_guard_exit_4(tmp_path, capsys):
    cfg = write_config(tmp_path, EVOLVE_CONFIG + "evolve.dt = 1000.0\nevolve.t_final = 2000.0\n")
    assert run(["evolve", "--config", cfg, "--out", tmp_path]) == 4
    assert "step size" in capsys.readouterr().err


def test_meanfield_report_and_schema(tmp_path):
    text = """
model.E_C = 1.0
model.E_J = 0.1
model.N = 1000
model.nbar = 100
model.n_g = 0.5
bath.g2 = 1.0
bath.r = 1.0
meanfield.periods = 30
"""
    cfg = write_config(tmp_path, text)
    assert run(["meanfield", "--config", cfg, "--out", tmp_path]) == 0
    lines = (tmp_path / "gp_trajectory.csv").read_text().splitlines()
    assert lines[1] == "t,re_psi_L,im_psi_L,re_psi_R,im_psi_R,theta,n_L,energy"
    payload = json.loads((tmp_path / "meanfield.json").read_text())
    assert abs(payload["relative_deviation"]) < 0.01
    assert payload["norm_drift"] < 1e-8
    assert payload["energy_rel_drift"] < 1e-8


def test_meanfield_no_tunneling_exit_5(tmp_path, capsys):
    text = """
model.E_C = 1.0
model.K = 0.0
model.N = 1000
model.nbar = 100
model.n_g = 0.5
bath.g2 = 1.0
bath.r = 1.0
"""
    cfg = write_config(tmp_path, text)
    assert run(["meanfield", "--config", cfg, "--out", tmp_path]) == 5
    assert "mean-field" in capsys.readouterr().err


SWEEP_CONFIG = """
model.E_C = 1.0
model.K = 1e-4
model.N = 10000
model.nbar = 400
model.n_g = 0.5
model.lam = 0.1
bath.g2 = 1.0
bath.r = 1.0
sweep.axis = r
sweep.start = 0.1
sweep.stop = 10
sweep.points = 7
sweep.scale = log
"""


def test_sweep_outputs_and_plot(tmp_path):
    cfg = write_config(tmp_path, SWEEP_CONFIG)
    assert run(["sweep", "--config", cfg, "--out", tmp_path]) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "# cpbox-csv v1 sweep"
    assert len(lines) == 2 + 7
    svg = (tmp_path / "ratio.svg").read_text()
    assert svg.startswith("<?xml")
    payload = json.loads((tmp_path / "sweep.json").read_text())
    assert len(payload["reports"]) == 7
    ratios = [rep["ratio"] for rep in payload["reports"]]
    assert all(a < b for a, b in zip(ratios[:-1], ratios[1:]))
    # plotted ratio approaches the sqrt(2/pi) sqrt(nbar) r asymptote
    for rep in payload["reports"]:
        z = rep["sqrt_nbar_r"]
        if z >= 20.0:
            assert rep["ratio"] == pytest.approx(math.sqrt(2 / math.pi) * z, rel=0.05)


def test_sweep_single_point_matches_rates(tmp_path):
    cfg = write_config(tmp_path, SWEEP_CONFIG.replace("sweep.points = 7", "sweep.points = 1"))
    out_sweep = tmp_path / "s"
    out_rates = tmp_path / "r"
    assert run(["sweep", "--config", cfg, "--out", out_sweep]) == 0
    # the single sweep point sits at sweep.start = 0.1
    assert run(["rates", "--config", cfg, "--out", out_rates, "--set", "bath.r=0.1"]) == 0
    rep = json.loads((out_sweep / "sweep.json").read_text())["reports"][0]
    rates_payload = json.loads((out_rates / "rates.json").read_text())
    for key in ("gamma_fock", "gamma_coherent_exact", "ratio", "f_value"):
        assert rep[key] == pytest.approx(rates_payload[key], rel=1e-12)


def test_sweep_unknown_axis_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, SWEEP_CONFIG.replace("sweep.axis = r", "sweep.axis = voltage"))
    assert run(["sweep", "--config", cfg, "--out", tmp_path]) == 2
    assert "sweep.axis" in capsys.readouterr().err


def test_sweep_nbar_exponent_half(tmp_path):
    text = SWEEP_CONFIG.replace("sweep.axis = r", "sweep.axis = nbar").replace(
        "sweep.start = 0.1", "sweep.start = 1000"
    ).replace("sweep.stop = 10", "sweep.stop = 100000").replace(
        "model.N = 10000", "model.N = 1000000"
    )
    cfg = write_config(tmp_path, text)
    assert run(["sweep", "--config", cfg, "--out", tmp_path]) == 0
    payload = json.loads((tmp_path / "sweep.json").read_text())
    x = np.array(payload["values"])
    y = np.array([rep["ratio"] for rep in payload["reports"]])
    slope = np.polyfit(np.log(x), np.log(y), 1)[0]
    assert slope == pytest.approx(0.5, abs=0.02)


def test_sweep_determinism_byte_identical(tmp_path):
    cfg = write_config(tmp_path, SWEEP_CONFIG)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run(["sweep", "--config", cfg, "--out", out_a]) == 0
    assert run(["sweep", "--config", cfg, "--out", out_b]) == 0
    assert (out_a / "sweep.csv").read_bytes() == (out_b / "sweep.csv").read_bytes()
    assert (out_a / "sweep.json").read_bytes() == (out_b / "sweep.json").read_bytes()


def test_tabulated_bath_config(tmp_path):
    # near-white table for h, zero table for kappa: one-way decay bath
    t = np.linspace(0.0, 5e-3, 201)
    c = 400.0 * (1.0 - t / 5e-3)
    htab = tmp_path / "h.csv"
    htab.write_text("t,C\n" + "\n".join(f"{ti:.17g},{ci:.17g}" for ti, ci in zip(t, c)) + "\n")
    ktab = tmp_path / "k.csv"
    ktab.write_text("t,C\n" + "\n".join(f"{ti:.17g},0" for ti in t) + "\n")
    text = f"""
model.E_C = 0.05
model.K = 0.02
model.N = 30
model.nbar = 15
model.n_g = 0.5
model.lam = 0.1
bath.form = tabulated
bath.table = {htab}
bath.table_kappa = {ktab}
evolve.state = fock 15
evolve.record_every = 5
"""
    cfg = write_config(tmp_path, text)
    assert run(["evolve", "--config", cfg, "--out", tmp_path]) == 0
    payload = json.loads((tmp_path / "evolve.json").read_text())
    assert payload["fd_vs_direct_rel"] < 1e-3
