import math
import random
from collections import Counter

import pytest

from chunksched.coding import CodeConfig, Packet
from chunksched.errors import ValidationError
from chunksched.gf2 import GF2Basis, GF2Vector
from chunksched.linkmodel import DelayModel, LinkSpec, LossModel
from chunksched.metric import MetricState, expected_metric
from chunksched.netstate import FeedbackView
from chunksched.policy import (
    DecisionContext, Policy, PolicyConfig, decide_lrf, decide_mcmf, decide_mdf, decide_random,
    decide_rp, eligible_chunks,
)

LOGNORMAL_I = LinkSpec(LossModel(0.0), DelayModel.lognormal(0.5, 0.5))


def basis_of_rank(r, length, rng):
    b = GF2Basis(length)
    while b.rank < r:
        b.insert(rng.getrandbits(length))
    return b


def context(counts, upstream=None, c=4, spec=LinkSpec(), outstanding=None, n=10, source=True, seed=0):
    rng = random.Random(seed)
    q = len(counts)
    upstream = upstream or (c,) * q
    receivers = [basis_of_rank(r, c, rng) for r in counts]
    own = [GF2Basis.full(c) if source else basis_of_rank(u, c, rng) for u in upstream]
    out = outstanding or tuple(() for _ in range(q))
    view = FeedbackView(1, n, tuple(counts), out)
    return DecisionContext(view, upstream, own, receivers, CodeConfig(c * q, q), spec, source)


def test_eligibility_examples():
    assert eligible_chunks((8, 3), (8, 8)) == [1]
    assert eligible_chunks((3, 2), (5, 2)) == [0]
    assert eligible_chunks((2, 2), (2, 2)) == []


def test_policy_config_validation():
    with pytest.raises(ValidationError):
        PolicyConfig("fastest")
    with pytest.raises(ValidationError):
        PolicyConfig("mdf", delta=0)


def test_random_is_uniform_over_chunks():
    ctx = context((0, 0))
    rng = random.Random(1)
    counts = Counter(decide_random(ctx, rng, rng).chunk for _ in range(10_000))
    assert abs(counts[0] - 5000) <= 3.5 * math.sqrt(2500)


def test_random_internal_without_packets_idles():
    ctx = context((0, 0), upstream=(0, 0), source=False)
    rng = random.Random(1)
    assert decide_random(ctx, rng, rng).idle


def test_rp_uniform_over_eligible():
    ctx = context((1, 4, 0, 4))
    rng = random.Random(2)
    counts = Counter(decide_rp(ctx, rng, rng).chunk for _ in range(4000))
    assert set(counts) == {0, 2}
    assert abs(counts[0] - 2000) <= 3.5 * math.sqrt(1000)


def test_rp_and_lrf_idle_without_eligible_chunk():
    ctx = context((4, 4))
    rng = random.Random(0)
    assert decide_rp(ctx, rng, rng).idle
    assert decide_lrf(ctx, rng, rng).idle
    assert decide_mcmf(ctx, PolicyConfig("mcmf"), rng, rng).idle
    assert decide_mdf(ctx, PolicyConfig("mdf"), rng, rng).idle


def test_lrf_ties_uniform():
    ctx = context((2, 5, 2), c=8)
    rng = random.Random(3)
    counts = Counter(decide_lrf(ctx, rng, rng).chunk for _ in range(4000))
    assert set(counts) == {0, 2}
    assert abs(counts[0] - 2000) <= 3.5 * math.sqrt(1000)


def test_lrf_picks_rarest():
    ctx = context((0, 4), c=8)
    rng = random.Random(0)
    assert decide_lrf(ctx, rng, rng).chunk == 0


def test_sent_packet_is_innovative_for_receiver():
    rng = random.Random(4)
    for kind in ("rp", "lrf", "mcmf", "mdf"):
        ctx = context((1, 3, 2), spec=LOGNORMAL_I)
        d = Policy(PolicyConfig(kind), rng, rng).decide(ctx)
        assert ctx.receiver_bases[d.chunk].is_innovative(d.vector)


def test_mcmf_without_outstanding_uses_counts():
    ctx = context((3, 1, 2), spec=LOGNORMAL_I)
    d = decide_mcmf(ctx, PolicyConfig("mcmf"), random.Random(0), random.Random(0))
    assert d.scores == {0: 3.0, 1: 1.0, 2: 2.0}
    assert d.chunk == 1


def _outstanding(rng, c, departures):
    return tuple(Packet(0, GF2Vector(rng.getrandbits(c) or 1, c), t) for t in departures)


def test_mdf_matches_direct_distance():
    """MDF's choice minimises the full Euclidean distance, computed coordinate by coordinate."""
    c = 4
    for seed in range(40):
        rng = random.Random(seed)
        counts = tuple(rng.randint(0, 3) for _ in range(3))
        out = tuple(_outstanding(rng, c, sorted(rng.sample(range(4, 10), rng.randint(0, 3))))
                    for _ in counts)
        ctx = context(counts, c=c, spec=LOGNORMAL_I, outstanding=out, n=10, seed=seed)
        cfg = PolicyConfig("mdf", m=4, delta=3)
        d = decide_mdf(ctx, cfg, random.Random(seed), random.Random(seed))

        def state(w, cand=None):
            return MetricState(ctx.receiver_bases[w], [(p.vector, p.departure_time) for p in out[w]],
                               10, LOGNORMAL_I, 3, candidate=cand)

        y = [expected_metric(state(w))[0] for w in range(3)]
        cands = {}
        rng2 = random.Random(seed)
        from chunksched.coding import generate_innovative_packet
        for w in range(3):
            if counts[w] < c:
                cands[w] = generate_innovative_packet(ctx.own_bases[w], ctx.receiver_bases[w], rng2)
        dist = {}
        for w, cand in cands.items():
            vec = list(y)
            vec[w] = expected_metric(state(w, cand))[0]
            dist[w] = math.sqrt(sum((c - v) ** 2 for v in vec))
        best = min(dist.values())
        assert d.chunk in [w for w in dist if dist[w] <= best + 1e-9]
        for w in dist:
            assert d.scores[w] == pytest.approx(dist[w], abs=1e-9)


def test_mdf_equals_mcmf_on_unit_delay():
    for seed in range(30):
        rng = random.Random(seed)
        counts = tuple(rng.randint(0, 7) for _ in range(4))
        ctx = context(counts, c=8, spec=LinkSpec(LossModel(1 / 3)), seed=seed)
        a = decide_mdf(ctx, PolicyConfig("mdf"), random.Random(seed), random.Random(1))
        b = decide_mcmf(ctx, PolicyConfig("mcmf"), random.Random(seed), random.Random(2))
        assert a.chunk == b.chunk
