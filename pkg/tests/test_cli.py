import csv
import io
import math

import pytest

from mpqkd.cli import fmt, main


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_fmt():
    assert fmt(True) == "true"
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(3) == "3"


def test_discriminate_stdout(capsys):
    assert main(["discriminate", "--steps", "3", "--grid", "100x200"]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert [float(r["p"]) for r in rows] == [0, 0.25, 0.5]
    assert float(rows[-1]["pguess_mp"]) == pytest.approx(2 / 3, abs=1e-12)
    assert float(rows[-1]["pguess_std"]) == pytest.approx(0.5, abs=1e-12)


def test_discriminate_plot(tmp_path):
    out, fig = tmp_path / "d.csv", tmp_path / "d.png"
    assert main(["discriminate", "--steps", "5", "--grid", "100x200", "--out", str(out), "--plot", str(fig)]) == 0
    assert out.exists() and fig.stat().st_size > 0


def test_thresholds(capsys, tmp_path):
    out = tmp_path / "t.csv"
    assert main(["thresholds", "--out", str(out), "--plot", str(tmp_path / "t.svg")]) == 0
    assert "mp_twoway_depol" in capsys.readouterr().out
    rows = {r["name"]: r for r in rows_of(out.read_text())}
    assert rows["oneway_sixstate"]["derived"] == "false"
    assert math.isnan(float(rows["oneway_sixstate"]["recomputed"]))
    assert abs(float(rows["mp_twoway_depol"]["recomputed"]) - 0.276393) < 1e-6


def test_simulate_and_distill(capsys):
    assert main(["simulate", "--p", "0.1", "--protection", "default", "--n-pulses", "100000", "--seed", "1"]) == 0
    row = rows_of(capsys.readouterr().out)[0]
    assert row["protected"] == "true" and int(row["twirl_size"]) == 3
    assert main(["distill", "--error-rate", "0.2", "--n-bits", "30000", "--k", "1,3"]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert [r["k"] for r in rows] == ["1", "3"]
    assert float(rows[1]["acceptance_exact"]) == pytest.approx(0.52)


def test_distill_from_simulation(capsys):
    assert main(["distill", "--p", "0.2", "--n-sifted", "20000", "--k", "2", "--seed", "4"]) == 0
    row = rows_of(capsys.readouterr().out)[0]
    assert int(row["n_bits"]) > 10000


def test_qber_sweep_small(capsys):
    assert main(["qber-sweep", "--p", "0.1", "--loss-db", "0", "--n-sifted", "20000"]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert [r["protected"] for r in rows] == ["false", "true"]


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[channel]\nkind = six_state\nqber = 0.1\n[run]\nn_pulses = 50000\nseed = 3\n")
    assert main(["simulate", "--config", str(cfg)]) == 0
    row = rows_of(capsys.readouterr().out)[0]
    assert float(row["p0"]) == pytest.approx(0.85) and row["seed"] == "3"


@pytest.mark.parametrize(
    "argv",
    [
        ["discriminate", "--p-min", "0.4", "--p-max", "0.2"],
        ["simulate", "--p", "0.7"],
        ["simulate", "--n-pulses", "0"],
        ["simulate", "--protection", "1,13"],
        ["distill", "--k", "0"],
        ["qber-sweep", "--loss-db", "-5"],
        ["simulate", "--plot", "x.png"],
        ["simulate", "--dark-count-prob", "2"],
    ],
)
def test_invalid_input_exit_2(argv, tmp_path, capsys):
    out = tmp_path / "never.csv"
    assert main([*argv, "--out", str(out)]) == 2
    assert not out.exists()
    assert "error" in capsys.readouterr().err


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[run]\nseed = 1\nseed = 2\n")
    assert main(["simulate", "--config", str(cfg)]) == 2


def test_runtime_failure_exit_3(capsys):
    assert main(["distill", "--error-rate", "0.1", "--n-bits", "2", "--k", "5"]) == 3
    assert "failed" in capsys.readouterr().err


def test_argparse_errors():
    assert main(["nope"]) == 2
    assert main([]) == 2


def test_discriminate_s0plus_noiseless_row(capsys):
    assert main(["discriminate", "--ensemble", "s0plus", "--steps", "11"]) == 0
    row = rows_of(capsys.readouterr().out)[0]
    target = 0.5 + 1 / (2 * math.sqrt(2))
    for col in ("pguess_std", "pguess_mp", "pguess_oracle_std", "pguess_oracle_mp"):
        assert float(row[col]) == pytest.approx(target, abs=1e-4)


def test_qber_sweep_examples(capsys):
    assert main(["qber-sweep", "--p", "0", "--loss-db", "0", "--dark-count-prob", "0", "--n-sifted", "5000"]) == 0
    assert all(float(r["qber_analytic"]) == 0 for r in rows_of(capsys.readouterr().out))
    assert main(["qber-sweep", "--p", "0.1", "--n-sifted", "5000"]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert len(rows) == 6
    for i in range(0, 6, 2):
        assert float(rows[i + 1]["qber_analytic"]) < float(rows[i]["qber_analytic"])
    assert main(["qber-sweep", "--p", "0.05", "--loss-db", "10,15,20,25,30", "--protection", "on", "--n-sifted", "2000"]) == 0
    q = [float(r["qber_analytic"]) for r in rows_of(capsys.readouterr().out)]
    assert all(a <= b for a, b in zip(q, q[1:]))


def test_csv_is_deterministic(capsys):
    argv = ["qber-sweep", "--p", "0.1", "--loss-db", "20", "--n-sifted", "5000", "--seed", "12", "--workers", "2"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first
