"""YAML run configuration with field-path validation.

Example::

    network:
      kind: line
      length: 2
      delay: {model: I}          # or {kind: lognormal, mu: 1, sigma: 1}, {kind: unit}
      loss: {model: none}        # or {pe: 0.1}
      links:                     # optional per-link overrides, 1..L
        - {delay: {kind: unit}, loss: {pe: 0.2}}
    code: {k: 16, q: 4}
    policy: {kind: rp, m: 4, delta: 4}
    run: {realizations: 1, trials: 1, seed: 0}
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import yaml

from .coding import CodeConfig
from .errors import ParameterError, ValidationError
from .linkmodel import DEFAULT_Z_CAP, DelayModel, LinkSpec, LossModel, delay_preset, loss_preset
from .netstate import Topology
from .policy import PolicyConfig


@dataclass(frozen=True)
class RunConfig:
    realizations: int = 1
    trials: int = 1
    seed: int = 0
    max_slots: Optional[int] = None


@dataclass
class SimConfig:
    topology: Topology
    code: CodeConfig
    policy: PolicyConfig
    run: RunConfig = field(default_factory=RunConfig)
    raw: dict = field(default_factory=dict)  # resolved config, as plain data

    def resolved(self) -> dict:
        return self.raw


def _section(data: dict, key: str) -> dict:
    value = data.get(key, {})
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ValidationError(key, f"expected a mapping, got {type(value).__name__}")
    return value


def _int(section: dict, key: str, path: str, default=None, minimum=None) -> Optional[int]:
    value = section.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{path}.{key}", f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValidationError(f"{path}.{key}", f"must be >= {minimum}, got {value}")
    return value


def _delays(spec: Any, path: str, L: int) -> list:
    if spec is None:
        return [DelayModel.unit()] * L
    if not isinstance(spec, dict):
        raise ValidationError(path, "expected a mapping")
    try:
        if "model" in spec:
            return delay_preset(str(spec["model"]), L, spec.get("z_cap", DEFAULT_Z_CAP))
        return [_delay_model(spec)] * L
    except ParameterError as exc:
        raise ValidationError(path, str(exc)) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(path, f"bad delay spec: {exc}") from None


def _delay_model(spec: dict) -> DelayModel:
    kind = spec.get("kind", "unit")
    if kind == "unit":
        return DelayModel.unit()
    if kind == "lognormal":
        return DelayModel.lognormal(spec["mu"], spec["sigma"], spec.get("z_cap", DEFAULT_Z_CAP))
    if kind == "table":
        return DelayModel.table(spec["pmf"])
    raise ParameterError(f"unknown delay kind {kind!r}")


def _losses(spec: Any, path: str, L: int) -> list:
    if spec is None:
        return [LossModel(0.0)] * L
    if not isinstance(spec, dict):
        raise ValidationError(path, "expected a mapping")
    try:
        if "model" in spec:
            return loss_preset(str(spec["model"]), L)
        return [LossModel(float(spec.get("pe", 0.0)))] * L
    except (ParameterError, TypeError, ValueError) as exc:
        raise ValidationError(path, str(exc)) from None


def parse_config(data: dict, overrides: Optional[dict] = None) -> SimConfig:
    """Validate ``data`` (already-parsed YAML) and apply flag ``overrides``.

    ``overrides`` maps dotted paths such as ``"policy.kind"`` to values.
    """
    if not isinstance(data, dict):
        raise ValidationError("<root>", "config must be a mapping")
    data = _apply_overrides(data, overrides or {})

    net = _section(data, "network")
    kind = net.get("kind", "line")
    if kind != "line":
        raise ValidationError("network.kind", f"only 'line' is supported, got {kind!r}")
    L = _int(net, "length", "network", minimum=1)
    if L is None:
        raise ValidationError("network.length", "required")
    delays = _delays(net.get("delay"), "network.delay", L)
    losses = _losses(net.get("loss"), "network.loss", L)
    links = net.get("links")
    if links is not None:
        if not isinstance(links, list) or len(links) != L:
            raise ValidationError("network.links", f"expected a list of {L} entries")
        for i, entry in enumerate(links):
            if not isinstance(entry, dict):
                raise ValidationError(f"network.links[{i}]", "expected a mapping")
            if "delay" in entry:
                delays[i] = _delays(entry["delay"], f"network.links[{i}].delay", 1)[0]
            if "loss" in entry:
                losses[i] = _losses(entry["loss"], f"network.links[{i}].loss", 1)[0]
    specs = [LinkSpec(lo, de) for lo, de in zip(losses, delays)]
    topology = Topology.line(L, specs)

    code_s = _section(data, "code")
    k = _int(code_s, "k", "code", minimum=1)
    q = _int(code_s, "q", "code", minimum=1)
    if k is None or q is None:
        raise ValidationError("code", "both code.k and code.q are required")
    code = CodeConfig(k, q)

    pol = _section(data, "policy")
    policy = PolicyConfig(
        kind=str(pol.get("kind", "rp")),
        m=_int(pol, "m", "policy", 4, 0),
        delta=_int(pol, "delta", "policy", 4, 1),
        late_prob_formula=str(pol.get("late_prob_formula", "complement")),
        conditioning=str(pol.get("conditioning", "paper")),
    )

    run_s = _section(data, "run")
    run = RunConfig(
        realizations=_int(run_s, "realizations", "run", 1, 1),
        trials=_int(run_s, "trials", "run", 1, 1),
        seed=_int(run_s, "seed", "run", 0, 0),
        max_slots=_int(run_s, "max_slots", "run", None, 1),
    )

    raw = {
        "network": {
            "kind": "line",
            "length": L,
            "links": [
                {"delay": s.delay.to_config(), "loss": {"pe": s.loss.pe}} for s in specs
            ],
        },
        "code": {"k": k, "q": q},
        "policy": asdict(policy),
        "run": asdict(run),
    }
    return SimConfig(topology, code, policy, run, raw)


def _apply_overrides(data: dict, overrides: dict) -> dict:
    out = {key: (dict(v) if isinstance(v, dict) else v) for key, v in data.items()}
    for dotted, value in overrides.items():
        if value is None:
            continue
        section, key = dotted.split(".", 1)
        target = out.setdefault(section, {})
        if not isinstance(target, dict):
            raise ValidationError(section, "expected a mapping")
        target[key] = value
    return out


def load_config(path, overrides: Optional[dict] = None) -> SimConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ValidationError(str(path), f"cannot read config: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ValidationError(str(path), f"not valid YAML: {exc}") from None
    return parse_config(data or {}, overrides)
