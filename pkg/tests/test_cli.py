import json

import numpy as np
import pytest

from emergence.cli import main, parse_override
from emergence.errors import InputError
from emergence.experiments import ClassicalLimitConfig, ConfigError, DisturbanceConfig
from emergence.hilbert import build_grid
from emergence.io import (
    SWEEP_HEADER,
    atomic_write,
    csv_text,
    dump_state,
    fmt,
    load_state,
    write_csv,
)
from emergence.mepacket import Moments, me_packet

SMALL_SWEEP = ["potential=\"harmonic\"", "n_samples=4096", "sampler=\"mc\"", "t_end=1.0",
               "n_records=5", "-q"]


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_parse_override():
    assert parse_override("dq=[1.5]") == ("dq", [1.5])
    assert parse_override("potential=harmonic") == ("potential", "harmonic")
    with pytest.raises(ConfigError):
        parse_override("novalue")


def test_config_rejects_unknown_and_bad_values():
    with pytest.raises(ConfigError):
        DisturbanceConfig.from_mapping({"nonsense": 1})
    with pytest.raises(ConfigError):
        ClassicalLimitConfig.from_mapping({"sampler": "sobol"})
    with pytest.raises(ConfigError):
        ClassicalLimitConfig.from_mapping({"n_points": 100})


def test_config_error_exit_writes_nothing(tmp_path):
    out = tmp_path / "run"
    assert run(out, "mepacket-report", "dq=[-1.0]", "-q") == 2
    assert not out.exists()


def test_config_file_kind_mismatch(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('kind = "disturbance"\n')
    assert main(["dlocal-check", "--config", str(cfg), "--out", str(tmp_path / "o"), "-q"]) == 2
    assert main(["dlocal-check", "--config", str(tmp_path / "missing.toml"), "-q"]) == 2


def test_physics_error_exit(tmp_path):
    code = run(tmp_path, "mepacket-report", "dq=[0.4]", "dp=[0.4]", "-q")
    assert code == 3
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["status"] == "failed" and "UncertaintyViolation" in man["error"]


def test_numerical_error_exit(tmp_path):
    code = run(tmp_path, "maxent-verify", "max_iter=1", "specs=[[0.0, 0.0, 3.0, 2.0]]", "-q")
    assert code == 4
    assert json.loads((tmp_path / "manifest.json").read_text())["exit_code"] == 4


@pytest.mark.parametrize("kind,artifact", [
    ("mepacket-report", "report.csv"),
    ("maxent-verify", "maxent.csv"),
    ("disturbance", "disturbance.csv"),
    ("dlocal-check", "dlocal.csv"),
    ("separation-status", "separation.csv"),
])
def test_each_kind_runs(tmp_path, kind, artifact):
    assert run(tmp_path, kind, "-q") == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["kind"] == kind and man["seed"] == 0
    assert artifact in man["artifacts"] and all(man["checks"].values())
    assert (tmp_path / artifact).read_text().endswith("\n")


def test_classical_limit_sweep_csv(tmp_path):
    assert run(tmp_path, "classical-limit", *SMALL_SWEEP) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == ",".join(SWEEP_HEADER)
    assert len(lines) == 5 and lines[-1].startswith("# fitted_order=")
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["checks"] == {"step_halving": True, "within_5_stderr": True}


def test_determinism_and_rerun(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "classical-limit", *SMALL_SWEEP, "--seed", "123") == 0
    assert run(b, "classical-limit", *SMALL_SWEEP, "--seed", "123") == 0
    for name in ("sweep.csv", "trajectories.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    c = tmp_path / "c"
    assert main(["rerun", str(a / "manifest.json"), "--out", str(c), "-q"]) == 0
    assert (a / "sweep.csv").read_bytes() == (c / "sweep.csv").read_bytes()
    man_a = json.loads((a / "manifest.json").read_text())
    man_c = json.loads((c / "manifest.json").read_text())
    assert man_a["artifacts"] == man_c["artifacts"]


def test_seed_changes_output(tmp_path):
    run(tmp_path / "a", "classical-limit", *SMALL_SWEEP, "--seed", "1")
    run(tmp_path / "b", "classical-limit", *SMALL_SWEEP, "--seed", "2")
    assert (tmp_path / "a/sweep.csv").read_bytes() != (tmp_path / "b/sweep.csv").read_bytes()


def test_rerun_bad_manifest(tmp_path):
    bad = tmp_path / "m.json"
    bad.write_text("{}")
    assert main(["rerun", str(bad), "-q"]) == 2


def test_state_roundtrip(tmp_path):
    for rho in (me_packet(Moments.single(0.5, -0.2, 1.2, 0.9)),
                me_packet(Moments.single(0, 0, 1, 1), build_grid(-12, 12, 128))):
        path = tmp_path / "s.json"
        dump_state(rho, path, hbar=1.0)
        back = load_state(path)
        assert back.basis == rho.basis
        assert np.array_equal(back.matrix, rho.matrix)


def test_multimode_state_roundtrip(tmp_path):
    rho = me_packet(Moments((0.0, 1.0), (0.0, 0.0), (1.0, 1.0), (0.8, 1.2)))
    dump_state(rho, tmp_path / "s.json")
    assert np.array_equal(load_state(tmp_path / "s.json").matrix, rho.matrix)


def test_empty_csv_refused(tmp_path):
    with pytest.raises(InputError):
        write_csv(tmp_path / "x.csv", ("a",), [])
    assert not (tmp_path / "x.csv").exists()


def test_csv_format():
    text = csv_text(("a", "b", "c"), [(0.1, 3, True)], ["note=1"])
    assert text == "a,b,c\n1.0000000000000001e-01,3,true\n# note=1\n"
    assert float(fmt(0.1)) == 0.1
    with pytest.raises(InputError):
        csv_text(("a",), [(1, 2)])


def test_atomic_write_leaves_no_temp(tmp_path):
    atomic_write(tmp_path / "d" / "f.txt", "x")
    assert [p.name for p in (tmp_path / "d").iterdir()] == ["f.txt"]


def test_dump_fields(tmp_path):
    rho = me_packet(Moments.single(0, 0, 1, 1))
    dump_state(rho, tmp_path / "s.json")
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["purity"] == pytest.approx(0.5, abs=1e-6)
    from emergence.hilbert import von_neumann_entropy
    assert doc["entropy"] == pytest.approx(von_neumann_entropy(load_state(tmp_path / "s.json")), abs=1e-9)
    assert doc["moments"]["dQ"] == pytest.approx(1.0, abs=1e-9)


def test_single_row_csv(tmp_path):
    write_csv(tmp_path / "one.csv", ("a", "b"), [(1.0, 2.0)])
    assert len((tmp_path / "one.csv").read_text().splitlines()) == 2
