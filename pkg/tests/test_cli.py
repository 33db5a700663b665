"""Command-line behavior: exit codes, file outputs, overrides."""

import json

import pytest

from platoonkit.cli import (
    EXIT_BAD_INPUT,
    EXIT_NOT_APPLICABLE,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_UNSTABLE,
    main,
)

FAST_SIM = [
    "--override", "sim.t_final=20",
    "--override", "sim.record_stride=10",
    "--override", "topology.n_followers=4",
]


def test_topo_pf_prints_repeated_eigenvalue(capsys):
    assert main(["topo", "PF", "9"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "1 (x9)" in out
    assert "min_eig: 1" in out


def test_topo_writes_files(tmp_path, capsys):
    out = tmp_path / "t"
    assert main(["topo", "BDL", "9", "--out", str(out)]) == EXIT_OK
    assert (out / "topology.txt").exists()
    eig_lines = (out / "eigenvalues.csv").read_text().splitlines()
    assert eig_lines[0] == "index,real,imag"
    assert len(eig_lines) == 10
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "topo"


def test_topo_invalid_args(capsys):
    assert main(["topo", "PF", "0"]) == EXIT_BAD_INPUT
    assert main(["topo", "NOPE", "3"]) == EXIT_BAD_INPUT


def test_certify_default_row_stable(capsys):
    assert main(["certify"]) == EXIT_OK
    assert "STABLE" in capsys.readouterr().out


def test_certify_bad_gains_exit_one(capsys):
    code = main([
        "certify",
        "--override", "gains.kappa_s=-0.1",
        "--override", "gains.kappa_p=1.0",
        "--override", "gains.kappa_v=3.45",
        "--override", "gains.kappa_a=1.0",
    ])
    assert code == EXIT_UNSTABLE
    assert "kappa_s > 0" in capsys.readouterr().out


def test_certify_unknown_override_exit_two():
    assert main(["certify", "--override", "gains.bogus=1"]) == EXIT_BAD_INPUT
    assert main(["certify", "--override", "nonsense"]) == EXIT_BAD_INPUT


def test_certify_custom_file_not_applicable(tmp_path):
    topo_file = tmp_path / "cycle.txt"
    topo_file.write_text(
        "3 1 custom\n0 0 1\n1 0 0\n0 1 0\n1 0 0\n"
    )
    code = main(["certify", "--override", f"topology.file={topo_file}"])
    assert code == EXIT_NOT_APPLICABLE


def test_simulate_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["simulate", "--out", str(out)] + FAST_SIM) == EXIT_OK
    for name in ("trajectory.csv", "metrics.csv", "spacing_errors.png",
                 "velocities.png", "plot_spacing_errors.py", "manifest.json"):
        assert (out / name).exists(), name
    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,veh,p,v,a,u,e_spacing"


def test_simulate_outputs_are_reproducible(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--out", str(out1)] + FAST_SIM) == EXIT_OK
    assert main(["simulate", "--out", str(out2)] + FAST_SIM) == EXIT_OK
    assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()
    assert (out1 / "metrics.csv").read_bytes() == (out2 / "metrics.csv").read_bytes()


def test_simulate_bad_dt_exit_two(tmp_path):
    code = main(["simulate", "--out", str(tmp_path / "x"),
                 "--override", "sim.dt=0"])
    assert code == EXIT_BAD_INPUT


def test_simulate_divergence_exit_four(tmp_path):
    code = main([
        "simulate", "--out", str(tmp_path / "d"),
        "--override", "topology.n_followers=3",
        "--override", "gains.kappa_s=0",
        "--override", "gains.kappa_p=-1.0",
        "--override", "gains.kappa_v=3.0",
        "--override", "gains.kappa_a=1.0",
        "--override", "sim.allow_uncertified=true",
        "--override", "sim.gap_offsets=0.5 0 0",
        "--override", "sim.t_final=300",
        "--override", "sim.record_stride=100",
        "--override", "schedule.pulse.magnitude=0",
        "--override", "schedule.slope.angle_deg=0",
        "--override", "schedule.wind.speed=0",
    ])
    assert code == EXIT_NUMERICAL


def test_simulate_config_file(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        "[topology]\nkind = PFL\nn_followers = 3\n"
        "[sim]\nt_final = 15\nrecord_stride = 10\nsettle_window = 5\n"
    )
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    assert (out / "trajectory.csv").exists()


def test_config_file_missing_exit_two(tmp_path):
    assert main(["certify", "--config", str(tmp_path / "absent.ini")]) == EXIT_BAD_INPUT


def test_sweep_stability_transition(tmp_path, capsys):
    # PF with kappa_s=0.15, kappa_p=1, kappa_a=1: the velocity-gain bound
    # sits at 0.375, so a [0.1, 5] grid must straddle it
    out = tmp_path / "s"
    code = main([
        "sweep", "--out", str(out),
        "--grid", "kappa_v=0.1:5:25",
        "--override", "gains.kappa_s=0.15",
        "--override", "gains.kappa_p=1.0",
        "--override", "gains.kappa_v=1.0",
        "--override", "gains.kappa_a=1.0",
    ])
    assert code == EXIT_OK
    lines = (out / "stability_map.csv").read_text().splitlines()
    assert lines[0] == "kappa_v,certificate,numeric"
    rows = [ln.split(",") for ln in lines[1:]]
    assert len(rows) == 25
    for kv, cert, numeric in rows:
        expected = "stable" if float(kv) > 0.375 else "unstable"
        assert cert == expected
        assert numeric == expected


def test_sweep_requires_grid(tmp_path):
    assert main(["sweep", "--out", str(tmp_path / "g")]) == EXIT_BAD_INPUT
    assert main(["sweep", "--out", str(tmp_path / "g"),
                 "--grid", "kappa_q=0:1:5"]) == EXIT_BAD_INPUT
