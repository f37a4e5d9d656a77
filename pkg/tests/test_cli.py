import json

import numpy as np
import pytest

from relmotion.cli import main
from relmotion.trajio import TrajectoryFormatError, read_trajectory, write_trajectory

SIM = ["simulate", "--class", "particles", "--n", "3", "--dim", "2", "--dt", "1e-3",
       "--steps", "1000", "--seed", "7", "--drift", "constant:0.5"]


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_particles_csv(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code, stdout, _ = run(SIM + ["--out", out], capsys)
    assert code == 0
    assert "exploded=no" in stdout and "final_com=" in stdout and "wall_time=" in stdout
    lines = out.read_text().splitlines()
    assert lines[0] == "t,entity,c0,c1"
    assert len(lines) == 1 + 1001 * 3
    traj = read_trajectory(out)
    assert traj.kind == "particles" and traj.states.shape == (1001, 3, 2)


def test_simulate_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(SIM + ["--out", a], capsys)
    run(SIM + ["--out", b], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_seed_from_env_and_flag_override(tmp_path, capsys, monkeypatch):
    base = ["simulate", "--n", "2", "--steps", "20"]
    monkeypatch.setenv("RELMOTION_SEED", "7")
    run(base + ["--out", tmp_path / "env.csv"], capsys)
    run(base + ["--seed", "7", "--out", tmp_path / "flag.csv"], capsys)
    run(base + ["--seed", "8", "--out", tmp_path / "other.csv"], capsys)
    assert (tmp_path / "env.csv").read_bytes() == (tmp_path / "flag.csv").read_bytes()
    assert (tmp_path / "env.csv").read_bytes() != (tmp_path / "other.csv").read_bytes()


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nn = 3\ndim = 2\ndt = 1e-3\nsteps = 1000\nseed = 1\ndrift = constant:0.5\n")
    code, _, _ = run(["simulate", "--config", cfg, "--seed", "7", "--out", tmp_path / "c.csv"], capsys)
    assert code == 0
    run(SIM + ["--out", tmp_path / "f.csv"], capsys)
    assert (tmp_path / "c.csv").read_bytes() == (tmp_path / "f.csv").read_bytes()


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[run]\nparticles = 3\n")
    code, _, err = run(["simulate", "--config", cfg, "--out", tmp_path / "x.csv"], capsys)
    assert code == 2 and err.count("\n") == 1


@pytest.mark.parametrize("argv", [
    ["simulate", "--n", "3"],
    ["simulate", "--n", "1", "--out", "x.csv"],
    ["simulate", "--n", "3", "--drift", "bogus:1", "--out", "x.csv"],
    ["simulate", "--n", "3", "--drift", "kernel:nope", "--out", "x.csv"],
    ["simulate", "--n", "3", "--dt", "-1", "--out", "x.csv"],
    ["nosuchcommand"],
])
def test_usage_errors_single_line(tmp_path, capsys, monkeypatch, argv):
    monkeypatch.chdir(tmp_path)
    code, _, err = run(argv, capsys)
    assert code == 2
    assert err.count("\n") == 1 and err.startswith("relmotion: error[2]:")


def test_relative_inconsistent_initial_exit2(tmp_path, capsys):
    code, _, err = run(["simulate", "--class", "relative", "--n", "3", "--dim", "1",
                        "--initial", "1;2;0", "--out", tmp_path / "r.csv"], capsys)
    assert code == 2 and "inconsistent-initial" in err


def test_relative_simulation_and_reconstruction(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code, _, _ = run(["simulate", "--class", "relative", "--n", "3", "--dim", "1", "--steps", "200",
                      "--initial", "1;3;2", "--com0", "0.5", "--drift", "kernel:gaussian:width=2",
                      "--out", out], capsys)
    assert code == 0
    com = tmp_path / "r.com.csv"
    assert read_trajectory(com).labels == ["com"]
    back = tmp_path / "p.csv"
    code, _, _ = run(["transform", out, "--direction", "to-particles", "--com", com, "--out", back], capsys)
    assert code == 0
    traj = read_trajectory(back)
    np.testing.assert_allclose(traj.states[0, :, 0].mean(), 0.5)


def test_explosion_exit3(tmp_path, capsys):
    out = tmp_path / "boom.csv"
    code, stdout, err = run(["simulate", "--n", "3", "--dt", "0.1", "--steps", "5000",
                             "--initial", "0;1;2", "--drift", "constant:-50", "--out", out], capsys)
    assert code == 3 and "exploded=yes" in stdout
    assert "explosion" in err and "step" in err and err.count("\n") == 1
    assert out.exists()


def test_io_failure_exit4(tmp_path, capsys):
    code, _, err = run(SIM + ["--out", tmp_path / "missing_dir" / "x.csv"], capsys)
    assert code == 4 and err.startswith("relmotion: error[4]")


def test_transform_roundtrip(tmp_path, capsys):
    src = tmp_path / "run.csv"
    run(SIM + ["--drift", "kernel:lorentzian", "--initial", "0,0;1,0;0,2", "--out", src], capsys)
    rel = tmp_path / "rel.csv"
    assert run(["transform", src, "--direction", "to-relative", "--out", rel], capsys)[0] == 0
    assert read_trajectory(rel).kind == "relative"
    back = tmp_path / "back.csv"
    assert run(["transform", rel, "--direction", "to-particles", "--com", tmp_path / "rel.com.csv",
                "--out", back], capsys)[0] == 0
    a, b = read_trajectory(src), read_trajectory(back)
    assert np.abs(a.states - b.states).max() <= 1e-12
    np.testing.assert_array_equal(a.times, b.times)


def test_transform_constant_path(tmp_path, capsys):
    src = tmp_path / "const.csv"
    states = np.tile(np.array([[0.0], [1.0], [4.0]]), (5, 1, 1))
    write_trajectory(src, np.arange(5) * 0.1, ["p1", "p2", "p3"], states)
    rel = tmp_path / "rel.csv"
    run(["transform", src, "--direction", "to-relative", "--out", rel], capsys)
    t = read_trajectory(rel)
    assert np.all(t.states == t.states[0])


def test_transform_missing_com_exit2(tmp_path, capsys):
    src = tmp_path / "run.csv"
    run(SIM + ["--out", src], capsys)
    rel = tmp_path / "rel.csv"
    run(["transform", src, "--direction", "to-relative", "--out", rel], capsys)
    code, _, err = run(["transform", rel, "--direction", "to-particles", "--out", tmp_path / "x.csv"], capsys)
    assert code == 2 and err.count("\n") == 1


def test_transform_inconsistent_exit3(tmp_path, capsys):
    rel = tmp_path / "rel.csv"
    states = np.zeros((4, 3, 1))
    states[2] = [[1.0], [5.0], [1.0]]
    write_trajectory(rel, np.arange(4) * 0.1, ["r2_1", "r3_1", "r3_2"], states)
    com = tmp_path / "com.csv"
    write_trajectory(com, np.arange(4) * 0.1, ["com"], np.zeros((4, 1, 1)))
    code, _, err = run(["transform", rel, "--direction", "to-particles", "--com", com,
                        "--out", tmp_path / "x.csv"], capsys)
    assert code == 3 and "step 2" in err


def test_transform_parse_failure(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,who\n1,2\n")
    code, _, _ = run(["transform", bad, "--direction", "to-relative", "--out", tmp_path / "x.csv"], capsys)
    assert code == 2


def test_trajectory_file_roundtrip_exact(tmp_path, rng):
    states = rng.normal(size=(7, 3, 2)) * 10 ** rng.uniform(-8, 8, size=(7, 3, 2))
    times = np.arange(7) * 1e-3
    p = tmp_path / "t.csv"
    write_trajectory(p, times, ["p1", "p2", "p3"], states)
    t = read_trajectory(p)
    assert np.array_equal(t.states, states) and np.array_equal(t.times, times)


def test_trajectory_rejects_ragged(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("t,entity,c0\n0,p1,1\n0,p2,2\n0.1,p1,3\n")
    with pytest.raises(TrajectoryFormatError):
        read_trajectory(p)


def test_verify_inverse(tmp_path, capsys):
    report = tmp_path / "rep.json"
    code, out, _ = run(["verify", "inverse", "--n-max", "64", "--report", report], capsys)
    assert code == 0 and "PASS inverse.exact_QM" in out
    data = json.loads(report.read_text())
    assert data["passed"] and data["first_failure"] is None


def test_verify_correspondence(tmp_path, capsys):
    report = tmp_path / "rep.json"
    code, out, _ = run(["verify", "correspondence", "--n", "5", "--steps", "10000",
                        "--threads", "2", "--report", report], capsys)
    assert code == 0
    checks = json.loads(report.read_text())["suites"]["correspondence"]
    residuals = [c["value"] for c in checks if c["name"].startswith("correspondence.path_residual")]
    assert residuals and max(residuals) <= 1e-8


def test_verify_covariance(tmp_path, capsys):
    code, out, _ = run(["verify", "covariance", "--steps", "200000", "--report", tmp_path / "r.json"], capsys)
    assert code == 0 and "PASS covariance.entries_within_4se" in out


def test_verify_failure_exit1(tmp_path, capsys):
    # an absurdly tight residual tolerance must fail and name the identity
    code, out, err = run(["verify", "correspondence", "--steps", "200", "--tol", "0",
                          "--drift", "kernel:lorentzian", "--report", tmp_path / "r.json"], capsys)
    assert code == 1
    assert "check-failed: correspondence.path_residual[kernel:lorentzian]" in err
    assert err.count("\n") == 1
