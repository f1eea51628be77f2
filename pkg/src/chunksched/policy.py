"""Chunk-scheduling policies: Random, RP, LRF, MCMF and MDF.

Every policy decides for one link at one slot. Feedback policies only
consider chunks where the transmitter holds strictly more innovative packets
than the receiver, and idle when there is none. Two random streams are used:
``choice`` for chunk draws and tie-breaks, ``coding`` for coefficient
vectors. Keeping them apart means two policies that rank chunks identically
also draw identical tie-breaks, whatever vectors they generate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .coding import CodeConfig, generate_innovative_packet, generate_source_packet
from .gf2 import GF2Basis, GF2Vector
from .linkmodel import LinkSpec
from .metric import COMPLEMENT, LATE_FORMULAS, MetricState, expected_metric
from .netstate import FeedbackView

POLICY_KINDS = ("random", "rp", "lrf", "mcmf", "mdf")
CONDITIONING = ("paper", "posterior")
TIE_TOL = 1e-12


@dataclass(frozen=True)
class PolicyConfig:
    kind: str = "rp"
    m: int = 4
    delta: int = 4
    late_prob_formula: str = COMPLEMENT
    conditioning: str = "paper"

    def __post_init__(self):
        from .errors import ValidationError

        if self.kind not in POLICY_KINDS:
            raise ValidationError("policy.kind", f"must be one of {POLICY_KINDS}, got {self.kind!r}")
        if self.m < 0:
            raise ValidationError("policy.m", f"must be >= 0, got {self.m}")
        if self.delta < 1:
            raise ValidationError("policy.delta", f"must be >= 1, got {self.delta}")
        if self.late_prob_formula not in LATE_FORMULAS:
            raise ValidationError(
                "policy.late_prob_formula", f"must be one of {LATE_FORMULAS}"
            )
        if self.conditioning not in CONDITIONING:
            raise ValidationError("policy.conditioning", f"must be one of {CONDITIONING}")


@dataclass
class Decision:
    chunk: Optional[int] = None
    vector: Optional[GF2Vector] = None
    scores: dict = field(default_factory=dict)

    @property
    def idle(self) -> bool:
        return self.chunk is None


@dataclass
class DecisionContext:
    """Everything the transmitter of one link may look at in one slot."""

    view: FeedbackView
    upstream: Sequence[int]
    own_bases: Sequence[GF2Basis]
    receiver_bases: Sequence[GF2Basis]
    code: CodeConfig
    spec: LinkSpec
    is_source: bool = False


def eligible_chunks(counts: Sequence[int], upstream: Sequence[int]) -> list[int]:
    """Chunks whose upstream count strictly exceeds the receiver's count."""
    return [c for c, (u, r) in enumerate(zip(upstream, counts)) if u > r]


def _pick(candidates: list, rng):
    if len(candidates) == 1:
        return candidates[0]
    return candidates[rng.randrange(len(candidates))]


def _argmin(scores: dict, chunks: Sequence[int]) -> list[int]:
    best = min(scores[c] for c in chunks)
    return [c for c in chunks if scores[c] <= best + TIE_TOL]


def _innovative(ctx: DecisionContext, chunk: int, coding_rng) -> GF2Vector:
    return generate_innovative_packet(
        ctx.own_bases[chunk], ctx.receiver_bases[chunk], coding_rng
    )


def decide_random(ctx: DecisionContext, choice_rng, coding_rng) -> Decision:
    chunk = choice_rng.randrange(ctx.code.q)
    if ctx.is_source:
        return Decision(chunk, generate_source_packet(ctx.code, chunk, coding_rng))
    own = ctx.own_bases[chunk]
    if own.rank == 0:
        return Decision()
    return Decision(chunk, GF2Vector(own.random_combination(coding_rng), own.length))


def decide_rp(ctx: DecisionContext, choice_rng, coding_rng) -> Decision:
    elig = eligible_chunks(ctx.view.counts, ctx.upstream)
    if not elig:
        return Decision()
    chunk = _pick(elig, choice_rng)
    return Decision(chunk, _innovative(ctx, chunk, coding_rng))


def decide_lrf(ctx: DecisionContext, choice_rng, coding_rng) -> Decision:
    elig = eligible_chunks(ctx.view.counts, ctx.upstream)
    if not elig:
        return Decision()
    counts = ctx.view.counts
    low = min(counts[c] for c in elig)
    chunk = _pick([c for c in elig if counts[c] == low], choice_rng)
    return Decision(chunk, _innovative(ctx, chunk, coding_rng), {c: counts[c] for c in elig})


def metric_state(
    ctx: DecisionContext, chunk: int, cfg: PolicyConfig, candidate: Optional[GF2Vector] = None
) -> MetricState:
    """MetricState for ``chunk`` using the last ``cfg.m`` outstanding packets."""
    pending = ctx.view.outstanding[chunk]
    window = pending[-cfg.m :] if cfg.m > 0 else ()
    return MetricState(
        basis=ctx.receiver_bases[chunk],
        outstanding=[(p.vector, p.departure_time) for p in window],
        n=ctx.view.n,
        spec=ctx.spec,
        delta=cfg.delta,
        candidate=candidate,
        late_prob_formula=cfg.late_prob_formula,
        posterior=cfg.conditioning == "posterior",
    )


def current_metrics(ctx: DecisionContext, cfg: PolicyConfig, chunks: Sequence[int]) -> dict:
    """y(c) for each chunk in ``chunks``."""
    return {c: expected_metric(metric_state(ctx, c, cfg))[0] for c in chunks}


def decide_mcmf(ctx: DecisionContext, cfg: PolicyConfig, choice_rng, coding_rng) -> Decision:
    elig = eligible_chunks(ctx.view.counts, ctx.upstream)
    if not elig:
        return Decision()
    y = current_metrics(ctx, cfg, elig)
    chunk = _pick(_argmin(y, elig), choice_rng)
    return Decision(chunk, _innovative(ctx, chunk, coding_rng), y)


def decide_mdf(
    ctx: DecisionContext, cfg: PolicyConfig, choice_rng, coding_rng, candidates=None
) -> Decision:
    """``candidates`` optionally fixes the packet evaluated for each chunk."""
    elig = eligible_chunks(ctx.view.counts, ctx.upstream)
    if not elig:
        return Decision()
    c = ctx.code.chunk_size
    y = current_metrics(ctx, cfg, range(ctx.code.q))
    total = sum((c - v) ** 2 for v in y.values())
    dist, chosen = {}, {}
    for w in elig:
        cand = candidates[w] if candidates is not None else _innovative(ctx, w, coding_rng)
        x = expected_metric(metric_state(ctx, w, cfg, cand))[0]
        # only chunk w's coordinate changes when w is sent
        d2 = total - (c - y[w]) ** 2 + (c - x) ** 2
        dist[w] = math.sqrt(max(d2, 0.0))
        chosen[w] = cand
    chunk = _pick(_argmin(dist, elig), choice_rng)
    return Decision(chunk, chosen[chunk], dist)


class Policy:
    """A policy instance bound to one link of one trial."""

    def __init__(self, cfg: PolicyConfig, choice_rng, coding_rng):
        self.cfg = cfg
        self.choice_rng = choice_rng
        self.coding_rng = coding_rng

    def decide(self, ctx: DecisionContext) -> Decision:
        kind = self.cfg.kind
        if kind == "random":
            return decide_random(ctx, self.choice_rng, self.coding_rng)
        if kind == "rp":
            return decide_rp(ctx, self.choice_rng, self.coding_rng)
        if kind == "lrf":
            return decide_lrf(ctx, self.choice_rng, self.coding_rng)
        if kind == "mcmf":
            return decide_mcmf(ctx, self.cfg, self.choice_rng, self.coding_rng)
        return decide_mdf(ctx, self.cfg, self.choice_rng, self.coding_rng)
