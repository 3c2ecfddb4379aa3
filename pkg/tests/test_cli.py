import json

import pytest

from cfharm.cli import dispatch, EXIT_OK, EXIT_VALIDATION

LINE_CFG = """
{
  "curve": {"coefficients": [{"exponent": [0, 0, 1], "value": 1.0}]},
  "domain": {"radius": 2.0},
  "quad": {"epsilons": [0.04, 0.02], "grid": [64, 8, 8]}
}
"""

CONIC_CFG = """
{
  "curve": {"coefficients": [
    {"exponent": [0, 2, 0], "value": 1.0},
    {"exponent": [0, 0, 2], "value": 1.0},
    {"exponent": [2, 0, 0], "value": -1.0}
  ]},
  "domain": {"radius": 2.0},
  "quad": {"epsilons": [0.04, 0.02], "grid": [64, 8, 8]},
  "trace": {"n_theta": 256}
}
"""


@pytest.fixture
def line_cfg(tmp_path):
    p = tmp_path / "line.json"
    p.write_text(LINE_CFG)
    return str(p)


@pytest.fixture
def conic_cfg(tmp_path):
    p = tmp_path / "conic.json"
    p.write_text(CONIC_CFG)
    return str(p)


class TestValidation:
    def test_malformed_config_exits_2(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{ not json }")
        assert dispatch(["hefer", "--config", str(p)]) == EXIT_VALIDATION
        assert "error:" in capsys.readouterr().err

    def test_unknown_scenario_exits_2(self, capsys):
        assert dispatch(["scenario", "run", "no-such"]) == EXIT_VALIDATION

    def test_missing_config_file_exits_2(self, capsys):
        assert dispatch(["hefer", "--config", "/nonexistent.json"]) \
            == EXIT_VALIDATION

    def test_usage_error_exits_2(self, capsys):
        assert dispatch(["frobnicate"]) == EXIT_VALIDATION

    def test_config_scenario_curve_mismatch_exits_2(self, line_cfg, capsys):
        code = dispatch(["reconstruct", "--config", line_cfg,
                         "--scenario", "conic-log", "--point", "0.3,0.2"])
        assert code == EXIT_VALIDATION


class TestSubcommands:
    def test_hefer_prints_table(self, conic_cfg, capsys):
        assert dispatch(["hefer", "--config", conic_cfg]) == EXIT_OK
        out = capsys.readouterr().out
        assert "Q0" in out and "Q2" in out and "residual" in out

    def test_trace_csv(self, conic_cfg, tmp_path, capsys):
        out_file = tmp_path / "trace.csv"
        assert dispatch(["trace", "--config", conic_cfg,
                         "--out", str(out_file)]) == EXIT_OK
        lines = out_file.read_text().splitlines()
        assert lines[0] == "component,n_r,theta,x_re,x_im,y_re,y_im"
        assert len(lines) > 256

    def test_periods(self, conic_cfg, capsys):
        assert dispatch(["periods", "--scenario", "conic-log",
                         "--config", conic_cfg]) == EXIT_OK
        out = capsys.readouterr().out
        assert "a_0" in out and "a_1" in out

    def test_reconstruct_report(self, line_cfg, tmp_path):
        out_file = tmp_path / "report.json"
        code = dispatch(["reconstruct", "--config", line_cfg,
                         "--scenario", "line-rational",
                         "--point", "0.3,0.1", "--out", str(out_file)])
        assert code == EXIT_OK
        doc = json.loads(out_file.read_text())
        assert set(doc) == {"points", "diagnostics", "fingerprint"}
        pt = doc["points"][0]
        assert {"k", "w", "x", "u_rec", "u_oracle", "abs_err",
                "rel_err"} <= set(pt)
        assert pt["abs_err"] <= 1e-6

    def test_reconstruct_byte_identical_across_workers(self, line_cfg,
                                                       tmp_path):
        outs = []
        for workers in ("1", "3"):
            out_file = tmp_path / f"report{workers}.json"
            code = dispatch(["reconstruct", "--config", line_cfg,
                             "--scenario", "line-rational",
                             "--point", "0.3,0.1", "--workers", workers,
                             "--out", str(out_file)])
            assert code == EXIT_OK
            outs.append(out_file.read_bytes())
        assert outs[0] == outs[1]

    def test_scenario_run_writes_report(self, tmp_path, capsys, monkeypatch):
        code = dispatch(["scenario", "run", "line-rational",
                         "--out-root", str(tmp_path / "out")])
        assert code == EXIT_OK
        doc = json.loads(
            (tmp_path / "out" / "line-rational" / "report.json").read_text())
        assert len(doc["points"]) == 3
        assert all(p["rel_err"] <= 1e-3 for p in doc["points"])
