import csv

import numpy as np
import pytest

from qnsolve import bench, cli
from qnsolve.errors import InstanceGenerationError


def test_config_validation():
    with pytest.raises(ValueError):
        bench.ExperimentConfig(n=0)
    with pytest.raises(ValueError):
        bench.ExperimentConfig(n=10, phi=1.5)
    with pytest.raises(ValueError):
        bench.ExperimentConfig(n=10, phi=0.5, algorithms=(3,))
    with pytest.raises(ValueError):
        bench.ExperimentConfig(n=10, phi="sr1", algorithms=(1,))
    assert bench.ExperimentConfig(n=10, phi="SR1").algorithms == (2, 8)
    assert bench.ExperimentConfig(n=10, phi=0.0).algorithms == (1, 3, 4, 6)
    assert bench.ExperimentConfig(n=10, phi=0.99).algorithms == (1, 4, 6)


def test_instance_protocol():
    cfg = bench.ExperimentConfig(n=200, memory=5, phi=0.5, seed=11)
    inst = bench.gen_instance(cfg)
    buf = inst.buffer
    assert len(buf) == 5 and len(inst.gradients) == 6
    assert np.all(np.diag(buf.gram.StY) > 0)
    np.testing.assert_array_equal(buf.y_rows[2], inst.gradients[3] - inst.gradients[2])


def test_instance_determinism():
    cfg = bench.ExperimentConfig(n=300, memory=4, phi="sr1", seed=5)
    a, b = bench.gen_instance(cfg), bench.gen_instance(cfg)
    np.testing.assert_array_equal(a.buffer.s_rows, b.buffer.s_rows)
    np.testing.assert_array_equal(a.buffer.y_rows, b.buffer.y_rows)


def test_self_driven_sr1_is_ill_conditioned():
    # the reason SR1 runs are driven by BFGS by default
    from qnsolve import sr1_compact, spectral
    cfg = bench.ExperimentConfig(n=2000, memory=5, phi="sr1", seed=0, driver="self")
    buf = bench.gen_instance(cfg).buffer
    norms = np.linalg.norm(buf.s_rows, axis=1)
    assert np.all(np.diff(norms) < 0)
    assert spectral.spectrum(sr1_compact.build_sr1(buf)).cond_H > 1e8


def test_resampling_exhausted(monkeypatch):
    monkeypatch.setattr(bench, "MAX_RESAMPLES", 0)
    with pytest.raises(InstanceGenerationError):
        bench.gen_instance(bench.ExperimentConfig(n=10, memory=2, phi=0.5))


def test_run_benchmark_determinism():
    cfg = bench.ExperimentConfig(n=100, phi=0.5, runs=2, seed=3)
    reports = bench.run_benchmark(cfg)
    assert len(reports) == 6
    by_run = {}
    for r in reports:
        assert r.ok and r.wall_time_seconds > 0 and r.relative_residual >= 0
        by_run.setdefault(r.algorithm, []).append(r.relative_residual)
    for res in by_run.values():
        assert res[0] == res[1]


def test_breakdown_is_recorded_not_raised():
    e1 = np.eye(4)[0]
    from qnsolve.qnstore import PairBuffer
    buf = PairBuffer.from_pairs([(e1, e1)])  # y = B0 s: SR1 undefined
    inst = bench.ProblemInstance(x0=np.zeros(4), gradients=[np.ones(4)], buffer=buf)
    cfg = bench.ExperimentConfig(n=4, memory=1, phi="sr1", runs=1)
    reports = bench.run_benchmark(cfg, instance=inst)
    assert [r.algorithm for r in reports] == [2, 8]
    assert all(not r.ok for r in reports)


def test_flop_model_errors():
    with pytest.raises(ValueError):
        bench.flop_model(5, 10, 1)
    with pytest.raises(ValueError):
        bench.flop_model(1, 0, 1)


def test_flop_model_growth():
    for k in range(1, 11):
        assert bench.flop_model(1, 10**6, k) < bench.flop_model(4, 10**6, k)


def test_csv_round_trip(tmp_path):
    reports = bench.run_benchmark(bench.ExperimentConfig(n=50, phi=0.0, runs=1, seed=1))
    path = tmp_path / "out.csv"
    bench.emit_csv(reports[:1], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(bench.CSV_COLUMNS)
    bench.emit_csv(reports, path)
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == len(reports)
    for row, r in zip(rows, reports):
        assert int(row["algorithm"]) == r.algorithm
        assert int(row["predicted_flops"]) == r.predicted_flops
        assert float(row["relative_residual"]) == pytest.approx(r.relative_residual, rel=1e-5)
        assert len(row["wall_time_seconds"].split("e")[0].replace(".", "").lstrip("-")) == 6


def test_csv_empty_and_io_errors(tmp_path):
    path = tmp_path / "none.csv"
    with pytest.raises(ValueError):
        bench.emit_csv([], path)
    assert not path.exists()
    reports = bench.run_benchmark(bench.ExperimentConfig(n=20, phi=0.0, runs=1, algorithms=(1,)))
    bad = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError, match="missing"):
        bench.emit_csv(reports, bad)


def test_cli_flops(capsys):
    assert cli.main(["flops", "--alg", "2", "--n", "1000000", "--k", "5"]) == 0
    assert capsys.readouterr().out.strip() == "25000060"
    assert cli.main(["flops", "--alg", "7", "--n", "10", "--k", "1"]) != 0


def test_cli_bench_writes_csv(tmp_path, capsys):
    out = tmp_path / "b.csv"
    rc = cli.main(["bench", "--n", "300", "--memory", "5", "--phi", "sr1", "--alg", "all",
                   "--runs", "2", "--seed", "4", "--gamma", "1.5", "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert {r["algorithm"] for r in rows} == {"2", "8"}
    assert {r["phi"] for r in rows} == {"sr1"}
    assert "kernel backend" in capsys.readouterr().err


def test_cli_bench_stdout(capsys):
    assert cli.main(["bench", "--n", "40", "--phi", "0.5", "--alg", "1,6", "--runs", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("algorithm,") and len(lines) == 3


def test_cli_io_failure(tmp_path):
    rc = cli.main(["bench", "--n", "30", "--runs", "1", "--out", str(tmp_path / "no" / "x.csv")])
    assert rc == cli.EXIT_IO


def test_cli_breakdown_exit(monkeypatch):
    monkeypatch.setattr(bench, "MAX_RESAMPLES", 0)
    assert cli.main(["bench", "--n", "30", "--phi", "0.5", "--runs", "1"]) == cli.EXIT_BREAKDOWN


def test_cli_bad_phi():
    with pytest.raises(SystemExit) as exc:
        cli.main(["bench", "--n", "30", "--phi", "2"])
    assert exc.value.code != 0


def test_cli_spectrum(capsys):
    assert cli.main(["spectrum", "--n", "30", "--memory", "3", "--phi", "0.5"]) == 0
    out = capsys.readouterr().out
    assert "bulk eigenvalue" in out and "cond(B)" in out
