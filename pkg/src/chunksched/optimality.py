"""Exhaustive check of MDF's choice on a single lossless delayed link.

Two chunks of four packets are sent over one link. Every slot ``t`` has a
pre-drawn delay ``z_t`` that applies to whatever packet is sent at ``t``.
Slots before ``N0`` are played by MDF; from ``N0`` to ``N_max`` every chunk
sequence is enumerated. A chunk's packet is innovative iff fewer than four
packets of that chunk arrived before it (counting model), so a sequence
succeeds when each chunk has at least four packets sent by ``N_max``, and
its delivery time is the slot of the last fourth arrival. ``E(w)`` averages
delivery over successful sequences that send chunk ``w`` at ``N0``; MDF is
counted as optimal when its choice lies in the argmin set of ``E``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import seeding
from .coding import CodeConfig, generate_innovative_packet
from .gf2 import GF2Basis, GF2Vector
from .linkmodel import DELAY_PARAMS, DelayModel, LinkSpec, LossModel
from .netstate import FeedbackView
from .policy import DecisionContext, PolicyConfig, decide_mdf

Q = 2
CHUNK = 4
E_TOL = 1e-9

# any four of these five vectors are independent, so the first five packets
# of a chunk behave exactly as the counting model says
GENERIC = tuple(GF2Vector.from_string(s) for s in ("1000", "0100", "0010", "0001", "1111"))


@dataclass(frozen=True)
class RealizationFixture:
    delays: tuple  # delays[t-1] = z_t for t = 1..N_max
    n0: int
    n_max: int

    def __post_init__(self):
        if not 1 <= self.n0 < self.n_max:
            raise ValueError(f"need 1 <= N0 < N_max, got N0={self.n0}, N_max={self.n_max}")
        if len(self.delays) != self.n_max or min(self.delays) < 1:
            raise ValueError("need one delay >= 1 per slot 1..N_max")

    def z(self, t: int) -> int:
        return self.delays[t - 1]


@dataclass
class _Sent:
    slot: int
    chunk: int
    vector: GF2Vector
    arrival: int


@dataclass
class OptimalityRecord:
    E: dict  # chunk -> mean delivery, None when no sequence succeeds
    omega_E: tuple  # argmin set of E
    omega_d: Optional[int]
    I: Optional[int]
    flagged: Optional[str] = None
    prefix: tuple = ()
    suffixes: int = 0
    distances: dict = field(default_factory=dict)


def draw_fixture(delay: DelayModel, n0: int, n_max: int, rng) -> RealizationFixture:
    return RealizationFixture(tuple(delay.sample(rng.random()) for _ in range(n_max)), n0, n_max)


def _packet_vector(sent: list, chunk: int, receiver: GF2Basis, coding_rng) -> GF2Vector:
    j = sum(1 for s in sent if s.chunk == chunk)
    if j < len(GENERIC):
        return GENERIC[j]
    return generate_innovative_packet(GF2Basis.full(CHUNK), receiver, coding_rng)


def _mdf_step(fixture, sent, n, spec, cfg, choice_rng, coding_rng):
    receivers = [GF2Basis(CHUNK) for _ in range(Q)]
    for s in sorted(sent, key=lambda s: (s.arrival, s.slot)):
        if s.arrival <= n:
            receivers[s.chunk].insert(s.vector)
    pending = tuple(
        tuple(s for s in sent if s.chunk == c and s.arrival > n) for c in range(Q)
    )
    view = FeedbackView(1, n, tuple(b.rank for b in receivers), _as_packets(pending))
    ctx = DecisionContext(
        view=view,
        upstream=(CHUNK,) * Q,
        own_bases=[GF2Basis.full(CHUNK) for _ in range(Q)],
        receiver_bases=receivers,
        code=CodeConfig(Q * CHUNK, Q),
        spec=spec,
        is_source=True,
    )
    cands = {
        c: _packet_vector(sent, c, receivers[c], coding_rng)
        for c in range(Q)
        if receivers[c].rank < CHUNK
    }
    return decide_mdf(ctx, cfg, choice_rng, coding_rng, candidates=cands)


class _P:
    __slots__ = ("vector", "departure_time")

    def __init__(self, vector, departure_time):
        self.vector = vector
        self.departure_time = departure_time


def _as_packets(pending):
    return tuple(tuple(_P(s.vector, s.slot) for s in chunk) for chunk in pending)


def play_prefix(fixture, spec, cfg, choice_rng, coding_rng):
    """Run MDF for slots ``1..N0-1``; returns the sent list (idle slots send nothing)."""
    sent: list = []
    for n in range(1, fixture.n0):
        dec = _mdf_step(fixture, sent, n, spec, cfg, choice_rng, coding_rng)
        if dec.idle:
            continue
        sent.append(_Sent(n, dec.chunk, dec.vector, n + fixture.z(n)))
    return sent


def suffix_delivery(fixture: RealizationFixture, prefix_arrivals: Sequence[Sequence[int]]):
    """Delivery time of every suffix sequence (``inf`` when it fails).

    Row ``s`` of the result is the sequence whose choice at slot ``N0 + j`` is
    bit ``S-1-j`` of ``s``, so the first half of the rows sends chunk 0 at ``N0``.
    """
    S = fixture.n_max - fixture.n0 + 1
    slots = np.arange(fixture.n0, fixture.n_max + 1)
    arrivals = slots + np.array([fixture.z(t) for t in slots])
    codes = np.arange(1 << S)
    bits = (codes[:, None] >> (S - 1 - np.arange(S))[None, :]) & 1
    fourth = []
    for c in range(Q):
        mine = np.where(bits == c, arrivals[None, :], np.inf)
        pre = np.broadcast_to(
            np.asarray(prefix_arrivals[c], dtype=float), (len(codes), len(prefix_arrivals[c]))
        )
        times = np.sort(np.concatenate([pre, mine], axis=1), axis=1)
        if times.shape[1] < CHUNK:
            fourth.append(np.full(len(codes), np.inf))
        else:
            fourth.append(times[:, CHUNK - 1])
    return np.maximum(*fourth), bits


def enumerate_suffixes(
    fixture: RealizationFixture,
    prefix: Sequence[tuple],
    spec: LinkSpec,
    cfg: PolicyConfig,
    choice_rng,
    coding_rng,
) -> OptimalityRecord:
    """Score every suffix and compare the best first choice with MDF's.

    ``prefix`` lists the sends before ``N0`` as ``(slot, chunk)`` or
    ``(slot, chunk, vector)``; missing vectors are assigned as in
    :func:`play_prefix`.
    """
    sent: list = []
    for entry in prefix:
        slot, chunk = entry[0], entry[1]
        if not 1 <= slot < fixture.n0:
            raise ValueError(f"prefix slot {slot} outside 1..{fixture.n0 - 1}")
        if len(entry) > 2:
            vec = entry[2]
        else:
            recv = GF2Basis(CHUNK, [s.vector for s in sent if s.chunk == chunk and s.arrival <= slot])
            vec = _packet_vector(sent, chunk, recv, coding_rng)
        sent.append(_Sent(slot, chunk, vec, slot + fixture.z(slot)))
    arrivals = [[s.arrival for s in sent if s.chunk == c] for c in range(Q)]
    delivery, bits = suffix_delivery(fixture, arrivals)
    S = bits.shape[1]
    E = {}
    for w in range(Q):
        sel = delivery[bits[:, 0] == w]
        ok = sel[np.isfinite(sel)]
        E[w] = float(ok.mean()) if len(ok) else None
    record = OptimalityRecord(
        E, (), None, None, prefix=tuple((x.slot, x.chunk) for x in sent), suffixes=1 << S
    )
    if any(v is None for v in E.values()):
        record.flagged = "E undefined for some chunk"
        return record
    best = min(E.values())
    record.omega_E = tuple(w for w in range(Q) if E[w] <= best + E_TOL)
    dec = _mdf_step(fixture, sent, fixture.n0, spec, cfg, choice_rng, coding_rng)
    if dec.idle:
        record.flagged = "MDF idle at N0"
        return record
    record.omega_d = dec.chunk
    record.distances = dict(dec.scores)
    record.I = int(dec.chunk in record.omega_E)
    return record


def verify_fixture(fixture, spec, cfg, seed) -> OptimalityRecord:
    choice_rng = seeding.stream(seed, seeding.CHOICE)
    coding_rng = seeding.stream(seed, seeding.CODING)
    sent = play_prefix(fixture, spec, cfg, choice_rng, coding_rng)
    return enumerate_suffixes(
        fixture, [(s.slot, s.chunk, s.vector) for s in sent], spec, cfg, choice_rng, coding_rng
    )


@dataclass
class GridCell:
    delay_model: str
    n0: int
    n_max: int
    m: int
    delta: int
    fixtures: int
    used: int
    flagged: int
    percent: Optional[float]


VERIFIER_COLUMNS = ("delay_model", "n0", "n_max", "m", "delta", "fixtures", "used", "flagged", "percent")


def run_verifier(
    delay_model: str = "I",
    ms: Sequence[int] = (2, 3, 4),
    deltas: Sequence[int] = (2, 3, 4),
    n0s: Sequence[int] = (4, 8),
    n_max: int = 16,
    fixtures: int = 40,
    seed: int = 0,
) -> list:
    """Percentage of fixtures where MDF's choice at N0 is optimal, per grid cell.

    The same fixtures are used for every ``(m, delta)`` cell of a given N0.
    """
    if delay_model not in DELAY_PARAMS:
        raise ValueError(f"unknown delay model {delay_model!r}")
    spec = LinkSpec(LossModel(0.0), DelayModel.lognormal(*DELAY_PARAMS[delay_model]))
    model_key = seeding.label_key(delay_model)
    out = []
    for n0 in n0s:
        fx = [
            draw_fixture(spec.delay, n0, n_max, seeding.stream(seed, model_key, n0, n_max, f))
            for f in range(fixtures)
        ]
        for m in ms:
            for delta in deltas:
                cfg = PolicyConfig("mdf", m=m, delta=delta)
                marks = []
                flagged = 0
                for f, fixture in enumerate(fx):
                    rec = verify_fixture(fixture, spec, cfg, seeding.derive(seed, model_key, n0, n_max, f, 1))
                    if rec.I is None:
                        flagged += 1
                    else:
                        marks.append(rec.I)
                pct = 100.0 * sum(marks) / len(marks) if marks else None
                out.append(GridCell(delay_model, n0, n_max, m, delta, fixtures, len(marks), flagged, pct))
    return out


def grid_csv(cells: Sequence[GridCell], header: str = "") -> str:
    buf = io.StringIO()
    if header:
        buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(VERIFIER_COLUMNS)
    for c in cells:
        row = [getattr(c, col) for col in VERIFIER_COLUMNS]
        row[-1] = "" if c.percent is None else f"{c.percent:.2f}"
        w.writerow(row)
    return buf.getvalue()
