import csv
from pathlib import Path

import pytest
import yaml

from wsnsync.cli import BENCH_COLUMNS, RUN_COLUMNS, SUMMARY_COLUMNS, fmt, main, sweep_cells
from wsnsync.config import ConfigError, load_config, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_shipped_configs_parse():
    files = sorted(CONFIGS.glob("*.yaml"))
    assert len(files) >= 6
    for f in files:
        load_config(f)


def test_fmt():
    assert fmt(1.0) == "1.0000000000e+00"
    assert fmt(float("nan")) == "nan"
    assert fmt(7) == "7"
    assert fmt(True) == "1"
    assert fmt("x") == "x"


def test_run_row_counts(tmp_path):
    cfg = _write(tmp_path, {"run": {"scheme": "proposed", "si": 1.0, "seed": 3}})
    assert main(["run", str(cfg), "-o", str(tmp_path / "out"), "--quiet"]) == 0
    rows = _rows(tmp_path / "out" / "run_report.csv")
    assert tuple(rows[0]) == RUN_COLUMNS
    row = dict(zip(rows[0], rows[1]))
    assert (row["n_tx"], row["n_rx"], row["seed"]) == ("100", "3600", "3")
    assert len(row["config_hash"]) == 16


def test_run_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, {"run": {"si": 10.0, "trace": True}})
    for d in ("a", "b"):
        assert main(["run", str(cfg), "-o", str(tmp_path / d), "--quiet"]) == 0
    for name in ("run_report.csv", "trace.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_override_changes_row(tmp_path):
    cfg = _write(tmp_path, {"run": {"si": 10.0}})
    main(["run", str(cfg), "-o", str(tmp_path / "a"), "--quiet"])
    main(["run", str(cfg), "-o", str(tmp_path / "b"), "--quiet", "--seed", "99"])
    a = _rows(tmp_path / "a" / "run_report.csv")[1]
    b = _rows(tmp_path / "b" / "run_report.csv")[1]
    assert b[RUN_COLUMNS.index("seed")] == "99"
    assert a[RUN_COLUMNS.index("meas_time_mse")] != b[RUN_COLUMNS.index("meas_time_mse")]


@pytest.mark.parametrize(
    "data,field",
    [
        ({"run": {"si": 0}}, "run.si"),
        ({"run": {"sii": 1.0}}, "run.sii"),
        ({"run": {"delay": {"kind": "laplace"}}}, "run.delay.kind"),
        ({"sweep": {"si": []}}, "sweep.si"),
        ({"sweep": {"n_bm": [1, 0]}}, "sweep"),
        ({"bench": {"runs": 0}}, "bench.runs"),
        ({"run": {"warmup": 5000}}, "run"),
        ({"extra": 1}, "extra"),
    ],
)
def test_config_errors_name_the_field(tmp_path, capsys, data, field):
    cfg = _write(tmp_path, data)
    assert main(["run", str(cfg), "-o", str(tmp_path / "out")]) == 2
    err = capsys.readouterr().err
    assert "config error" in err and field in err


def test_unreadable_and_malformed_configs(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.yaml"), "-o", str(tmp_path)]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("run: [unclosed\n")
    assert main(["run", str(bad), "-o", str(tmp_path)]) == 2
    assert "line" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        parse_config([1, 2])


def test_missing_section_is_config_error(tmp_path):
    cfg = _write(tmp_path, {"run": {}})
    assert main(["sweep", str(cfg), "-o", str(tmp_path / "o")]) == 2
    assert main(["bench", str(cfg), "-o", str(tmp_path / "o")]) == 2


def test_runtime_error_exit_code(tmp_path):
    cfg = _write(tmp_path, {"run": {}})
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", str(cfg), "-o", str(blocker / "sub"), "--quiet"]) == 3


def test_sweep_layouts():
    si_cfg = load_config(CONFIGS / "si_sweep.yaml")
    cells = sweep_cells(si_cfg)
    keys = {(c.scheme, c.si, c.n_bm) for c in cells}
    assert len(keys) == 9
    assert len(cells) == 9 * si_cfg.sweep.n_seeds
    bm_cfg = load_config(CONFIGS / "bundling_sweep.yaml")
    keys = sorted({c.n_bm for c in sweep_cells(bm_cfg)})
    assert keys == [1, 2, 5, 10]


def test_sweep_outputs(tmp_path):
    cfg = _write(tmp_path, {
        "run": {"si": 50.0, "seed": 4},
        "sweep": {"schemes": ["proposed", "two_way"], "n_bm": [1, 5], "n_seeds": 2},
    })
    assert main(["sweep", str(cfg), "-o", str(tmp_path / "o"), "--quiet"]) == 0
    runs = _rows(tmp_path / "o" / "sweep_runs.csv")
    summary = _rows(tmp_path / "o" / "sweep_summary.csv")
    assert tuple(summary[0]) == SUMMARY_COLUMNS
    assert len(runs) == 1 + (2 + 1) * 2
    assert [r[0] for r in summary[1:]] == ["proposed", "proposed", "two_way"]
    assert [r[3] for r in summary[1:]] == ["1", "5", "1"]
    seeds = [r[RUN_COLUMNS.index("seed")] for r in runs[1:3]]
    assert seeds == ["4", "5"]
    assert main(["sweep", str(cfg), "-o", str(tmp_path / "p"), "--quiet", "--jobs", "2"]) == 0
    assert (tmp_path / "o" / "sweep_runs.csv").read_bytes() == (tmp_path / "p" / "sweep_runs.csv").read_bytes()


def test_bench_output(tmp_path):
    cfg = _write(tmp_path, {"bench": {"n_messages": 40, "runs": 1, "seed": 2}})
    assert main(["bench", str(cfg), "-o", str(tmp_path / "o"), "--quiet"]) == 0
    rows = _rows(tmp_path / "o" / "mse_vs_k.csv")
    assert tuple(rows[0]) == BENCH_COLUMNS
    by_kind = {}
    for r in rows[1:]:
        by_kind.setdefault(r[0], []).append(r)
    assert len(by_kind["mle"]) == 39
    assert len(by_kind["gmlle"]) == 19
    assert by_kind["gmlle"][-1][1] == "39"
    assert all(r[5] == "1" and r[6] == "2" for r in rows[1:])
