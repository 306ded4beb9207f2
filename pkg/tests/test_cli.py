import json
import subprocess
import sys

import pytest

from hcburger.cli import main, read_config


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestWordCommands:
    def test_reduce(self, capsys):
        code, out, _ = run(["reduce", "--word", "HCh"], capsys)
        d = json.loads(out)
        assert code == 0 and d["reduced"] == "C" and d["counts"]["d_star"] == 1

    def test_match(self, capsys):
        code, out, _ = run(["match", "--word", "HCFh"], capsys)
        assert code == 0 and json.loads(out)["pairs"] == {"1": 4, "2": 3, "3": 2, "4": 1}

    def test_path_csv(self, capsys):
        code, out, _ = run(["path", "--word", "HCFh"], capsys)
        assert code == 0 and out.splitlines() == ["j,d,d_star", "0,0,0", "1,1,0", "2,1,1",
                                                  "3,1,0", "4,0,0"]

    def test_path_scaled(self, capsys):
        code, out, _ = run(["path", "--word", "HC", "--n-scale", "4", "--scaled"], capsys)
        assert code == 0 and out.splitlines()[0] == "t,u,v"

    def test_loops(self, capsys):
        code, out, _ = run(["loops", "--word", "HCFh"], capsys)
        assert code == 0 and json.loads(out)[0]["area"] == 1

    def test_bad_symbol(self, capsys):
        code, _, err = run(["reduce", "--word", "HX"], capsys)
        assert code == 2 and "invalid symbol" in err

    def test_unmatched_flexible_is_usage_error(self, capsys):
        code, _, _ = run(["loops", "--word", "FH"], capsys)
        assert code == 2


class TestSampling:
    def test_sample_empty(self, capsys, tmp_path):
        out = tmp_path / "w.json"
        code, _, _ = run(["sample", "--n", "3", "--seed", "4", "--out", str(out)], capsys)
        d = json.loads(out.read_text())
        assert code == 0 and len(d["word"]) == 6 and d["trials"] >= 1

    def test_sample_kinds(self, capsys):
        for kind in ("iid", "backward"):
            code, out, _ = run(["sample", "--n", "5", "--kind", kind], capsys)
            assert code == 0 and len(json.loads(out)["word"]) == 5

    def test_deterministic(self, capsys):
        a = run(["sample", "--n", "4", "--seed", "9"], capsys)[1]
        b = run(["sample", "--n", "4", "--seed", "9"], capsys)[1]
        assert a == b

    def test_bm_sample(self, capsys):
        code, out, err = run(["bm-sample", "--kind", "excursion", "--dt", "0.01", "--delta", "0.04"],
                             capsys)
        rows = out.splitlines()
        assert code == 0 and rows[0] == "t,u,v" and len(rows) == 102
        assert json.loads(err)["delta"] == 0.04

    def test_density(self, capsys):
        code, out, _ = run(["density", "--grid-points", "3"], capsys)
        assert code == 0 and len(out.splitlines()) == 10

    def test_bad_p(self, capsys):
        assert run(["sample", "--n", "2", "--p", "0.9"], capsys)[0] == 2


class TestExperiment:
    ARGS = ["experiment", "--id", "E1", "--replicas", "5000",
            "--set", "n_grid=[4, 8, 16, 32, 64]"]

    def test_report_and_exit_code(self, capsys, tmp_path):
        out = tmp_path / "e1.json"
        code, _, _ = run(self.ARGS + ["--out", str(out)], capsys)
        d = json.loads(out.read_text())
        assert code == (0 if d["pass"] else 1)
        assert d["params"]["replicas"] == 5000

    def test_failing_experiment_exits_one(self, capsys):
        code, out, _ = run(self.ARGS + ["--set", "tol=0.0"], capsys)
        assert code == 1 and json.loads(out)["pass"] is False

    def test_unknown_id(self, capsys):
        assert run(["experiment", "--id", "E42"], capsys)[0] == 2

    def test_unknown_parameter(self, capsys):
        assert run(["experiment", "--id", "E1", "--set", "bogus=1"], capsys)[0] == 2

    def test_missing_id(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["experiment"])
        assert info.value.code == 2

    def test_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# tiny run\nid = E3\nreplicas = 50\nseed = 2\n")
        code, out, _ = run(["experiment", "--config", str(cfg), "--set", "n_grid=[16, 32, 64]"],
                           capsys)
        d = json.loads(out)
        assert d["id"] == "E3_flex_count" and d["params"]["replicas"] == 50
        assert d["params"]["seed"] == 2

    def test_command_line_beats_config(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("id = E3\nreplicas = 50\n")
        _, out, _ = run(["experiment", "--config", str(cfg), "--replicas", "60",
                         "--set", "n_grid=[16, 32, 64]"], capsys)
        assert json.loads(out)["params"]["replicas"] == 60

    def test_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("no equals sign\n")
        assert run(["experiment", "--config", str(cfg)], capsys)[0] == 2

    def test_report_command(self, capsys, tmp_path):
        good = tmp_path / "a.json"
        bad = tmp_path / "b.json"
        run(self.ARGS + ["--out", str(good)], capsys)
        run(self.ARGS + ["--set", "tol=0.0", "--out", str(bad)], capsys)
        assert run(["report", str(bad)], capsys)[0] == 1
        code, out, _ = run(["report", str(good), str(bad)], capsys)
        assert code == 1 and "FAIL" in out


def test_read_config(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("cap-c = 4\n\n dt=0.001 # grid\n")
    assert read_config(str(cfg)) == {"cap_c": "4", "dt": "0.001"}


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "hcburger.cli", "reduce", "--word", "Hh"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["reduced"] == ""
