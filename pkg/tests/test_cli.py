"""CLI: config schema, command behavior, exit codes, determinism."""
import json
import math

import numpy as np
import pytest

from g2cone import cli
from g2cone.cli import (
    EXIT_CONFIG,
    EXIT_FAIL,
    EXIT_HYPOTHESIS,
    EXIT_PASS,
    ConfigError,
    cmd_check_metric,
    cmd_converge,
    cmd_solve,
    cmd_torsion,
    cmd_verify_appendix,
    main,
    parse_config,
)

SQRT12 = math.sqrt(12.0)


def _csv_rows(text):
    lines = [l for l in text.splitlines() if l and not l.startswith("#")]
    header = lines[0].split(",")
    return header, [l.split(",") for l in lines[1:]]


def _meta(text):
    out = {}
    for line in text.splitlines():
        if line.startswith("# ") and " = " in line:
            k, _, v = line[2:].partition(" = ")
            out[k] = v
    return out


# -- configuration -------------------------------------------------------------


def test_defaults_resolve_without_file():
    cfg = parse_config("converge", None)
    assert cfg["K"] == 4.0
    assert cfg["n"] == 512
    assert cfg["seed"] == cli.DEFAULT_SEED
    assert cfg["tol_quadrature"] == 1e-10
    assert cfg["tol_root"] == 1e-10
    assert cfg["tol_verify"] == 1e-8


def test_config_file_parsing(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nK = 2.5\nt_values = 0,2,6\nf = gaussian:0.2\n\nseed = 7\n")
    cfg = parse_config("converge", str(p))
    assert cfg["K"] == 2.5
    assert cfg["t_values"] == [0.0, 2.0, 6.0]
    assert cfg["f"] == "gaussian:0.2"
    assert cfg["seed"] == 7


def test_unknown_key_rejected(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("notakey = 3\n")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("converge", str(p))


def test_bad_value_rejected(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("K = banana\n")
    with pytest.raises(ConfigError, match="bad value"):
        parse_config("converge", str(p))


def test_missing_file_rejected():
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config("converge", "/nonexistent/path.cfg")


def test_overrides_take_precedence(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("seed = 7\n")
    cfg = parse_config("converge", str(p), {"seed": 99})
    assert cfg["seed"] == 99


def test_malformed_line_rejected(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("just some words\n")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config("converge", str(p))


# -- verify-appendix -------------------------------------------------------------


def test_verify_appendix_default_passes():
    cfg = parse_config("verify-appendix", None)
    code, text = cmd_verify_appendix(cfg)
    report = json.loads(text)
    assert code == EXIT_PASS
    assert report["pass"] is True
    assert report["max_diff"] < 1e-10
    assert report["config"]["seed"] == cli.DEFAULT_SEED


def test_verify_appendix_detects_injected_sign_flip():
    cfg = parse_config("verify-appendix", None)
    cfg["selftest_sign_flip"] = True
    code, text = cmd_verify_appendix(cfg)
    report = json.loads(text)
    assert code == EXIT_FAIL
    assert report["pass"] is False
    assert report["worst_term"] == "e4567"


def test_verify_appendix_deterministic_output():
    cfg = parse_config("verify-appendix", None)
    out1 = cmd_verify_appendix(dict(cfg))
    out2 = cmd_verify_appendix(dict(cfg))
    assert out1 == out2


# -- solve ----------------------------------------------------------------------


def test_solve_self_similar_columns():
    cfg = parse_config("solve", None)
    code, text = cmd_solve(cfg)
    assert code == EXIT_PASS
    header, rows = _csv_rows(text)
    assert header == ["t", "r", "x", "y", "B", "A", "residual"]
    for row in rows:
        x = float(row[2])
        assert float(row[4]) == pytest.approx(x / SQRT12, abs=1e-10)
        assert float(row[5]) == pytest.approx(x / 6.0, abs=1e-10)
        assert float(row[6]) < 1e-8
    meta = _meta(text)
    assert float(meta["oracle_max_discrepancy"]) < 1e-6


def test_solve_with_unit_f_oracle_agreement(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("f = constant:1\nh = constant:0\nt_values = 0,1\nn_r = 24\noracle_checks = 10\n")
    cfg = parse_config("solve", str(p))
    code, text = cmd_solve(cfg)
    assert code == EXIT_PASS
    meta = _meta(text)
    assert int(meta["oracle_checked"]) > 0
    assert float(meta["oracle_max_discrepancy"]) < 1e-6
    assert float(meta["max_residual"]) < 1e-8


def test_solve_reports_domain_errors(tmp_path):
    # h = 2: at t = 0 the rows with r < 2 fall outside the solution domain
    p = tmp_path / "run.cfg"
    p.write_text("h = constant:2\nt_values = 0\nr_min = 1.0\nr_max = 3.0\nn_r = 8\noracle_checks = 0\n")
    cfg = parse_config("solve", str(p))
    code, text = cmd_solve(cfg)
    assert code == EXIT_FAIL
    assert "outside solution domain" in text
    assert int(_meta(text)["domain_errors"]) > 0


# -- converge ---------------------------------------------------------------------


def test_converge_shifted_cone_passes(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("n = 64\n")
    cfg = parse_config("converge", str(p))
    code, text = cmd_converge(cfg)
    report = json.loads(text)
    assert code == EXIT_PASS
    assert report["fit_exponent"] == pytest.approx(-1.0, abs=0.05)
    expected = [1.0 / (SQRT12 * (t + 1.0)) for t in report["t"]]
    assert np.allclose(report["sup_B_dev"], expected, atol=1e-9)


def test_converge_hypothesis_gate(tmp_path):
    table = tmp_path / "h.csv"
    ys = np.linspace(-70.0, 70.0, 15)
    table.write_text("y,value\n" + "\n".join(f"{y},{y}" for y in ys))
    p = tmp_path / "run.cfg"
    p.write_text(f"h = table:{table}\nn = 32\n")
    cfg = parse_config("converge", str(p))
    code, text = cmd_converge(cfg)
    assert code == EXIT_HYPOTHESIS
    assert "h_below_identity" in json.loads(text)["violated_hypotheses"]


def test_converge_negative_f_gate(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("f = constant:-0.5\nn = 32\n")
    cfg = parse_config("converge", str(p))
    code, text = cmd_converge(cfg)
    assert code == EXIT_HYPOTHESIS
    assert "f_nonneg" in json.loads(text)["violated_hypotheses"]


def test_converge_exact_case_exits_zero(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("h = constant:0\nn = 32\nt_values = 0,1,3\n")
    cfg = parse_config("converge", str(p))
    code, text = cmd_converge(cfg)
    assert code == EXIT_PASS
    assert max(json.loads(text)["sup_metric_dev"]) < 1e-9


def test_converge_csv_format(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("format = csv\nn = 32\nt_values = 0,1,3\n")
    cfg = parse_config("converge", str(p))
    code, text = cmd_converge(cfg)
    header, rows = _csv_rows(text)
    assert header == ["t", "sup_B_dev", "sup_Bsq_dev", "sup_metric_dev"]
    assert len(rows) == 3


# -- torsion / check-metric ---------------------------------------------------------


def test_torsion_cone_profile_passes():
    cfg = parse_config("torsion", None)
    code, text = cmd_torsion(cfg)
    assert code == EXIT_PASS
    header, rows = _csv_rows(text)
    assert header == ["r", "dphi_residual", "delta_phi_residual"]
    for row in rows:
        assert float(row[1]) < 1e-10
        assert float(row[2]) < 1e-10


def test_torsion_constant_profile_fails_with_residual_three(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("profile = constant:1,1\nn_r = 4\n")
    cfg = parse_config("torsion", str(p))
    code, text = cmd_torsion(cfg)
    assert code == EXIT_FAIL
    _, rows = _csv_rows(text)
    assert float(rows[0][1]) == pytest.approx(3.0, abs=1e-12)


def test_torsion_flow_profile(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("profile = flow:1.0\nf = constant:0\nh = constant:0\nn_r = 5\nr_min = 1.5\nr_max = 4\n")
    cfg = parse_config("torsion", str(p))
    code, text = cmd_torsion(cfg)
    assert code in (EXIT_PASS, EXIT_FAIL)
    _, rows = _csv_rows(text)
    assert len(rows) == 5


def test_check_metric_cone():
    cfg = parse_config("check-metric", None)
    code, text = cmd_check_metric(cfg)
    assert code == EXIT_PASS
    header, rows = _csv_rows(text)
    assert header == ["r", "max_error"]
    for row in rows:
        assert float(row[1]) < 1e-10


def test_check_metric_random_scalings(tmp_path):
    rng = np.random.default_rng(60)
    for _ in range(3):
        a, b = rng.uniform(0.5, 5.0, 2)
        p = tmp_path / "run.cfg"
        p.write_text(f"profile = constant:{a},{b}\nn_r = 3\n")
        cfg = parse_config("check-metric", str(p))
        code, text = cmd_check_metric(cfg)
        assert code == EXIT_PASS


# -- process-level behavior -----------------------------------------------------------


def test_main_writes_output_file(tmp_path):
    out = tmp_path / "report.json"
    code = main(["verify-appendix", "--out", str(out), "--seed", "7"])
    assert code == EXIT_PASS
    report = json.loads(out.read_text())
    assert report["config"]["seed"] == 7


def test_main_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nope = 1\n")
    assert main(["solve", "--config", str(bad), "--out", "/dev/null"]) == EXIT_CONFIG


def test_outputs_bit_identical_across_runs(tmp_path):
    outs = []
    for i in (1, 2):
        out = tmp_path / f"o{i}.csv"
        assert main(["solve", "--out", str(out), "--seed", "5"]) == EXIT_PASS
        text = out.read_text()
        outs.append("\n".join(l for l in text.splitlines() if not l.startswith("# out")))
    assert outs[0] == outs[1]


def test_converge_hypothesis_exit_through_main(tmp_path):
    cfgf = tmp_path / "c.cfg"
    cfgf.write_text("f = constant:-1\n")
    assert main(["converge", "--config", str(cfgf), "--out", "/dev/null"]) == EXIT_HYPOTHESIS
