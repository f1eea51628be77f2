import pytest

from chunksched.config import load_config, parse_config
from chunksched.errors import ValidationError

MINIMAL = {
    "network": {"kind": "line", "length": 2},
    "code": {"k": 16, "q": 4},
    "policy": {"kind": "rp"},
}


def test_minimal_config():
    cfg = parse_config(MINIMAL)
    assert cfg.topology.L == 2
    assert cfg.code.chunk_size == 4
    assert cfg.policy.kind == "rp"
    assert cfg.topology.link(1).spec.delay.kind == "unit"


def test_overrides_win():
    cfg = parse_config(MINIMAL, {"policy.kind": "mdf", "policy.m": 3, "policy.delta": 2})
    assert (cfg.policy.kind, cfg.policy.m, cfg.policy.delta) == ("mdf", 3, 2)


def test_resolved_config_round_trips():
    data = dict(MINIMAL, network={"length": 3, "delay": {"model": "IV"}, "loss": {"model": "II"}})
    cfg = parse_config(data)
    again = parse_config(cfg.raw)
    assert again.raw == cfg.raw
    assert [lk.spec for lk in again.topology.links] == [lk.spec for lk in cfg.topology.links]


@pytest.mark.parametrize(
    "patch,path",
    [
        ({"code": {"k": 16, "q": 3}}, "code.q"),
        ({"code": {"k": "x", "q": 4}}, "code.k"),
        ({"network": {"length": 0}}, "network.length"),
        ({"network": {"length": 2, "kind": "mesh"}}, "network.kind"),
        ({"network": {"length": 2, "delay": {"model": "VI"}}}, "network.delay"),
        ({"network": {"length": 2, "loss": {"pe": 2}}}, "network.loss"),
        ({"policy": {"kind": "nope"}}, "policy.kind"),
        ({"run": {"trials": 0}}, "run.trials"),
    ],
)
def test_validation_paths(patch, path):
    with pytest.raises(ValidationError) as exc:
        parse_config(dict(MINIMAL, **patch))
    assert exc.value.path == path


def test_load_errors(tmp_path):
    with pytest.raises(ValidationError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("network: [unclosed")
    with pytest.raises(ValidationError):
        load_config(bad)
