import csv
import io
import json

import numpy as np
import pytest

from myopic_avc import cli
from myopic_avc.coding import generate_codebook
from myopic_avc.core import bsc, make_c_qp, make_cef

from oracles import h2, hamming_shell_count

COMMANDS = ["capacity", "secrecy", "conditions", "minimax", "simulate", "sweep", "census"]


def run(capsys, *argv):
    rc = cli.main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


@pytest.mark.parametrize("cmd", COMMANDS)
def test_help(cmd, capsys):
    rc, out, _ = run(capsys, cmd, "--help")
    assert rc == 0 and "usage" in out


def test_unknown_flag_exits_2(capsys):
    rc, _, err = run(capsys, "capacity", "--preset", "c", "--frobnicate")
    assert rc == 2 and "frobnicate" in err


def test_preset_and_spec_are_exclusive(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text(make_cef(bsc(0.2), 0.1, 0.05).to_json())
    rc, _, err = run(capsys, "capacity", "--preset", "c", "--spec", str(path))
    assert rc == 2 and "not allowed" in err


def test_missing_channel_is_usage_error(capsys):
    rc, _, err = run(capsys, "capacity", "--q", "0.3")
    assert rc == 2 and "preset" in err


def test_bad_parameter_is_usage_error(capsys):
    rc, _, err = run(capsys, "capacity", "--preset", "c", "--q", "0.7", "--p", "0.1")
    assert rc == 2 and err


def test_capacity_json(capsys):
    rc, out, _ = run(capsys, "capacity", "--preset", "c", "--q", "0.3", "--p", "0.1")
    d = json.loads(out)
    assert rc == 0 and abs(d["rate"] - (1 - h2(0.1))) < 1e-15
    assert d["regime"] == "sufficiently-myopic"


def test_capacity_csv(capsys):
    rc, out, _ = run(capsys, "capacity", "--preset", "ce", "--q", "0.5", "--p", "0.2",
                     "--format", "csv")
    (row,) = list(csv.DictReader(io.StringIO(out)))
    assert rc == 0 and float(row["rate"]) == 0.8


def test_capacity_wcef2(capsys):
    rc, out, _ = run(capsys, "capacity", "--preset", "wcef2", "--p-r", "0.2", "--p-e", "0.2",
                     "--p-w", "0")
    assert rc == 0 and json.loads(out)["rate"] == 0.6


def test_capacity_from_spec_file(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text(make_cef(bsc(0.3), 0.0, 0.1).to_json())
    rc, out, _ = run(capsys, "capacity", "--spec", str(path))
    assert rc == 0 and abs(json.loads(out)["rate"] - (1 - h2(0.1))) < 1e-12


def test_secrecy(capsys):
    rc, out, _ = run(capsys, "secrecy", "--preset", "c", "--q", "0.3", "--p", "0.1")
    assert rc == 0 and abs(json.loads(out)["rate"] - (h2(0.3) - h2(0.1))) < 1e-15


def test_conditions(capsys):
    rc, out, _ = run(capsys, "conditions", "--preset", "c", "--q", "0.3", "--p", "0.1")
    conds = json.loads(out)
    assert rc == 0 and all(c["satisfied"] for c in conds)


def test_minimax(capsys):
    rc, out, _ = run(capsys, "minimax", "--preset", "ce", "--q", "0.5", "--p", "0.2")
    d = json.loads(out)
    assert rc == 0 and abs(d["value"] - 0.8) < 1e-6 and d["converged"]


def test_simulate_writes_output_file(capsys, tmp_path):
    path = tmp_path / "out.json"
    rc, out, _ = run(capsys, "simulate", "--preset", "c", "--q", "0.3", "--p", "0.1",
                     "--n", "20", "--rate", "0.3", "--trials", "40", "--seed", "2",
                     "--output", str(path))
    assert rc == 0 and out == ""
    d = json.loads(path.read_text())
    assert d["trials"] == 40 and d["leakage"] is None


def test_simulate_with_secrecy(capsys):
    rc, out, _ = run(capsys, "simulate", "--preset", "ce", "--q", "0.5", "--p", "0.1",
                     "--n", "12", "--rate", "0.5", "--trials", "20", "--pad-rate", "0.25")
    d = json.loads(out)
    assert rc == 0 and 0.0 <= d["leakage"] <= 0.25 + 1e-12


def test_simulate_codebook_too_large(capsys):
    rc, _, err = run(capsys, "simulate", "--preset", "c", "--q", "0.3", "--p", "0.1",
                     "--n", "200", "--rate", "0.9", "--trials", "1")
    assert rc == 1 and err


def test_simulate_config_file(capsys, tmp_path):
    from myopic_avc.adversary import AdversaryStrategy
    from myopic_avc.simulator import ExperimentConfig
    cfg = ExperimentConfig(make_c_qp(0.3, 0.1), 16, 0.25, 30, AdversaryStrategy("blind-iid"),
                           master_seed=5)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    rc, out, _ = run(capsys, "simulate", "--config", str(path))
    assert rc == 0 and json.loads(out)["trials"] == 30


def test_sweep_example_rows_and_determinism(capsys):
    argv = ["sweep", "--preset", "ce", "--q-grid", "0.1:0.9:0.1", "--p", "0.2", "--n", "60",
            "--rate", "0.7", "--trials", "500", "--seed", "1", "--format", "csv"]
    rc, a, _ = run(capsys, *argv)
    rows = list(csv.DictReader(io.StringIO(a)))
    assert rc == 0 and len(rows) == 9
    assert [float(r["q"]) for r in rows] == pytest.approx([0.1 * i for i in range(1, 10)])
    rc, b, _ = run(capsys, *argv)
    assert a == b


def test_sweep_list_grid_json(capsys):
    rc, out, _ = run(capsys, "sweep", "--preset", "c", "--q", "0.3", "--p-grid", "0.05,0.1",
                     "--n", "16", "--rate", "0.25", "--trials", "20")
    assert rc == 0 and len(json.loads(out)["points"]) == 2


@pytest.mark.parametrize("grid", ["0.1:0.9", "0.5:0.1:0.1", "a,b"])
def test_sweep_bad_grid(capsys, grid):
    rc, _, err = run(capsys, "sweep", "--preset", "c", "--p", "0.1", "--q-grid", grid,
                     "--n", "16", "--rate", "0.25", "--trials", "5")
    assert rc == 2 and "grid" in err


def test_census_shell(capsys):
    rc, out, _ = run(capsys, "census", "--preset", "c", "--q", "0.3", "--p", "0.1",
                     "--kind", "shell", "--n", "20", "--rate", "0.3", "--d", "5",
                     "--z", "01" * 10)
    d = json.loads(out)
    cb = generate_codebook(make_c_qp(0.3, 0.1), 20, 0.3, 0)
    expected = hamming_shell_count(cb.words(np.arange(cb.count)), np.array([0, 1] * 10), 5)
    assert rc == 0 and d["kind"] == "shell" and d["count"] == expected


def test_census_preimage_outside_w(capsys):
    rc, _, err = run(capsys, "census", "--preset", "c", "--q", "0.3", "--p", "0.1",
                     "--kind", "preimage", "--n", "12", "--rate", "0.5",
                     "--x", "01" * 6, "--s", "11" + "0" * 10)
    assert rc == 2 and "outside W" in err


def test_census_missing_option(capsys):
    rc, _, err = run(capsys, "census", "--preset", "c", "--q", "0.3", "--p", "0.1",
                     "--kind", "shell", "--n", "20", "--rate", "0.3", "--d", "5")
    assert rc == 2 and "--z" in err
