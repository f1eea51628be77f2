"""Per-link loss and delay models.

A delay model is a pmf over integer delays ``1..z_cap``. Continuous log-normal
delays are discretized by integrating the density over ``(z-1, z]``, i.e. the
slot delay is the ceiling of the continuous delay; mass beyond ``z_cap`` is
folded into the last bin.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

from .errors import DegenerateStateError, ParameterError

DEFAULT_Z_CAP = 1024

_SQRT2 = math.sqrt(2.0)


def _lognormal_cdf(r: float, mu: float, sigma: float) -> float:
    if r <= 0:
        return 0.0
    return 0.5 * math.erfc(-(math.log(r) - mu) / (sigma * _SQRT2))


def _lognormal_sf(r: float, mu: float, sigma: float) -> float:
    if r <= 0:
        return 1.0
    return 0.5 * math.erfc((math.log(r) - mu) / (sigma * _SQRT2))


def moments(mu: float, sigma: float) -> tuple[float, float]:
    """Mean and variance of a log-normal with location ``mu`` and scale ``sigma``."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    mean = math.exp(mu + sigma * sigma / 2)
    var = (math.exp(sigma * sigma) - 1) * math.exp(2 * mu + sigma * sigma)
    return mean, var


def discretize(kind: str, z_cap: int = DEFAULT_Z_CAP, **params) -> list[float]:
    """Return ``[P[1], ..., P[z_cap]]``.

    ``kind`` is ``"unit"``, ``"lognormal"`` (``mu``, ``sigma``) or ``"table"``
    (``pmf``, a sequence starting at z=1).
    """
    if z_cap < 1:
        raise ParameterError(f"z_cap must be >= 1, got {z_cap}")
    if kind == "unit":
        return [1.0] + [0.0] * (z_cap - 1)
    if kind == "lognormal":
        mu = float(params["mu"])
        sigma = float(params["sigma"])
        if sigma <= 0:
            raise ParameterError(f"sigma must be > 0, got {sigma}")
        median = math.exp(mu)
        pmf = []
        for z in range(1, z_cap):
            # upper-tail differences keep precision far out in the tail
            if z - 1 >= median:
                p = _lognormal_sf(z - 1, mu, sigma) - _lognormal_sf(z, mu, sigma)
            else:
                p = _lognormal_cdf(z, mu, sigma) - _lognormal_cdf(z - 1, mu, sigma)
            pmf.append(max(p, 0.0))
        pmf.append(_lognormal_sf(z_cap - 1, mu, sigma))
        return pmf
    if kind == "table":
        raw = [float(p) for p in params["pmf"]]
        if not raw or any(p < 0 for p in raw):
            raise ParameterError("table pmf must be non-empty and non-negative")
        total = sum(raw)
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(f"table pmf sums to {total}, expected 1")
        if len(raw) > z_cap:
            raw = raw[: z_cap - 1] + [sum(raw[z_cap - 1 :])]
        return raw + [0.0] * (z_cap - len(raw))
    raise ParameterError(f"unknown delay kind {kind!r}")


@dataclass(frozen=True)
class LossModel:
    pe: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.pe <= 1.0:
            raise ParameterError(f"erasure probability must be in [0, 1], got {self.pe}")


@dataclass(frozen=True, eq=False)
class DelayModel:
    kind: str
    params: tuple = ()
    z_cap: int = DEFAULT_Z_CAP
    pmf: tuple = field(init=False, repr=False)
    cdf: tuple = field(init=False, repr=False)
    # survival[a] = P(Z > a), a = 0..z_cap
    survival: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind == "unit":
            z_cap = 1
            object.__setattr__(self, "z_cap", 1)
        else:
            z_cap = self.z_cap
        pmf = discretize(self.kind, z_cap, **dict(self.params))
        cdf, acc = [], 0.0
        for p in pmf:
            acc += p
            cdf.append(acc)
        surv = [0.0] * (len(pmf) + 1)
        acc = 0.0
        for a in range(len(pmf) - 1, -1, -1):
            acc += pmf[a]
            surv[a] = acc
        object.__setattr__(self, "pmf", tuple(pmf))
        object.__setattr__(self, "cdf", tuple(cdf))
        object.__setattr__(self, "survival", tuple(surv))

    @classmethod
    def unit(cls) -> "DelayModel":
        return _unit()

    @classmethod
    def lognormal(cls, mu: float, sigma: float, z_cap: int = DEFAULT_Z_CAP) -> "DelayModel":
        return _lognormal(float(mu), float(sigma), int(z_cap))

    @classmethod
    def table(cls, pmf: Sequence[float], z_cap: Optional[int] = None) -> "DelayModel":
        pmf = tuple(float(p) for p in pmf)
        return cls("table", (("pmf", pmf),), z_cap or max(len(pmf), 1))

    def prob(self, z: int) -> float:
        if 1 <= z <= len(self.pmf):
            return self.pmf[z - 1]
        return 0.0

    def sf(self, a: int) -> float:
        """P(Z > a)."""
        if a < 0:
            return 1.0
        if a >= len(self.survival):
            return 0.0
        return self.survival[a]

    def mean(self) -> float:
        return math.fsum(z * p for z, p in enumerate(self.pmf, start=1))

    def continuous_moments(self) -> Optional[tuple[float, float]]:
        if self.kind != "lognormal":
            return None
        p = dict(self.params)
        return moments(p["mu"], p["sigma"])

    def sample(self, u: float) -> int:
        """Inverse-CDF draw from a uniform ``u`` in [0, 1)."""
        z = bisect_right(self.cdf, u) + 1
        return min(z, len(self.pmf))

    def to_config(self) -> dict:
        if self.kind == "unit":
            return {"kind": "unit"}
        if self.kind == "lognormal":
            p = dict(self.params)
            return {"kind": "lognormal", "mu": p["mu"], "sigma": p["sigma"], "z_cap": self.z_cap}
        return {"kind": "table", "pmf": list(dict(self.params)["pmf"])}

    def __eq__(self, other):
        if not isinstance(other, DelayModel):
            return NotImplemented
        return (self.kind, self.params, self.z_cap) == (other.kind, other.params, other.z_cap)

    def __hash__(self):
        return hash((self.kind, self.params, self.z_cap))


@lru_cache(maxsize=None)
def _unit() -> DelayModel:
    return DelayModel("unit")


@lru_cache(maxsize=None)
def _lognormal(mu: float, sigma: float, z_cap: int) -> DelayModel:
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    return DelayModel("lognormal", (("mu", mu), ("sigma", sigma)), z_cap)


@dataclass(frozen=True)
class LinkSpec:
    loss: LossModel = field(default_factory=LossModel)
    delay: DelayModel = field(default_factory=DelayModel.unit)


ERASED = None


def sample_outcome(spec: LinkSpec, rng) -> Optional[int]:
    """``None`` if erased, else the integer delay. Always consumes two uniforms."""
    u_loss = rng.random()
    u_delay = rng.random()
    if u_loss < spec.loss.pe:
        return ERASED
    return spec.delay.sample(u_delay)


def conditional_pmf(
    spec: LinkSpec, age: int, delta: int, posterior: bool = False
) -> list[tuple[int, float]]:
    """Delay pmf of a packet sent ``age`` slots ago that has not arrived yet.

    Returns ``(z, p)`` for ``age < z <= age + delta``. By default the
    conditioning renormalizes the delay only and then scales by the success
    probability, leaving the erasure probability unconditioned. With
    ``posterior=True`` the erasure probability is updated as well.
    """
    if age < 1:
        raise ValueError(f"age must be >= 1, got {age}")
    if delta < 1:
        raise ValueError(f"delta must be >= 1, got {delta}")
    d = spec.delay
    pe = spec.loss.pe
    tail = d.sf(age)
    if posterior:
        denom = pe + (1 - pe) * tail
        if denom <= 0 or tail <= 0:
            raise DegenerateStateError(f"no delay mass beyond age {age}")
        scale = (1 - pe) / denom
    else:
        if tail <= 0:
            raise DegenerateStateError(f"no delay mass beyond age {age}")
        scale = (1 - pe) / tail
    return [(z, d.prob(z) * scale) for z in range(age + 1, age + delta + 1)]


def fresh_pmf(spec: LinkSpec, delta: int) -> list[tuple[int, float]]:
    """Delay pmf of a packet sent now, scaled by its success probability."""
    if delta < 1:
        raise ValueError(f"delta must be >= 1, got {delta}")
    s = 1 - spec.loss.pe
    return [(z, spec.delay.prob(z) * s) for z in range(1, delta + 1)]


def on_time_probability(
    spec: LinkSpec, age: int, delta: int, posterior: bool = False
) -> float:
    """Total mass of the on-time window; 0 for a degenerate (surely arrived) packet.

    ``age == 0`` means a packet sent in the current slot.
    """
    return _on_time(spec, age, delta, posterior)


@lru_cache(maxsize=1 << 16)
def _on_time(spec: LinkSpec, age: int, delta: int, posterior: bool) -> float:
    d = spec.delay
    pe = spec.loss.pe
    if age == 0:
        return (1 - pe) * (1.0 - d.sf(delta))
    tail = d.sf(age)
    if tail <= 0:
        return 0.0
    window = tail - d.sf(age + delta)
    if posterior:
        denom = pe + (1 - pe) * tail
        return (1 - pe) * window / denom
    return (1 - pe) * window / tail


@lru_cache(maxsize=256)
def on_time_table(spec: LinkSpec, delta: int, posterior: bool = False) -> tuple:
    """``table[age]`` = on-time probability for ages ``0..z_cap``; older packets get 0."""
    return tuple(_on_time(spec, a, delta, posterior) for a in range(spec.delay.z_cap + 1))


# --- named presets ---------------------------------------------------------

DELAY_PARAMS = {"I": (0.5, 0.5), "II": (1.0, 0.5), "III": (1.0, 1.0)}


def delay_preset(name: str, L: int, z_cap: int = DEFAULT_Z_CAP) -> list[DelayModel]:
    """Per-link delay models I..V (plus ``unit``) for a line of ``L`` links."""
    if name == "unit":
        return [DelayModel.unit()] * L
    if name in DELAY_PARAMS:
        return [DelayModel.lognormal(*DELAY_PARAMS[name], z_cap=z_cap)] * L
    if name in ("IV", "V"):
        first, second = ("I", "III") if name == "IV" else ("III", "I")
        out = []
        for i in range(1, L + 1):
            key = first if i <= L / 2 else second
            out.append(DelayModel.lognormal(*DELAY_PARAMS[key], z_cap=z_cap))
        return out
    raise ParameterError(f"unknown delay model {name!r}")


def loss_preset(name: str, L: int) -> list[LossModel]:
    """Per-link loss models I..III (plus ``none``) for a line of ``L`` links."""
    if name in ("none", "lossless"):
        return [LossModel(0.0)] * L
    if name == "I":
        return [LossModel(1 / 3)] * L
    if name == "II":
        return [LossModel(i / (3 * L)) for i in range(1, L + 1)]
    if name == "III":
        return [LossModel((L - i + 1) / (3 * L)) for i in range(1, L + 1)]
    raise ParameterError(f"unknown loss model {name!r}")
