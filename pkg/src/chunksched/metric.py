"""Expected innovative-packet metrics for MDF and MCMF.

For one link and one chunk, the metric is the expected number of innovative
packets the receiver will hold once the last ``m`` outstanding packets (and,
for ``metric_x``, a candidate sent now) have either arrived within the
``delta``-slot horizon or been written off as late.

Three routes compute the same quantity:

* :func:`enumerate_terms` walks every on-time pattern ``b`` and every delay
  assignment ``z`` in the horizon, orders arrivals by reception time and
  replays them against the receiver basis. This is the literal definition.
* :func:`expected_metric` (used by the policies) relies on the fact that the
  number of innovative arrivals in any ordering equals the rank gained by
  the whole on-time set. The delays then only enter through each packet's
  total on-time mass, and the sum collapses to a recursion over ``b`` with
  pruning on non-innovative packets.
* :func:`monte_carlo_metric` samples arrivals from the link model and
  replays them; it is the independent test oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import DegenerateStateError
from .gf2 import GF2Basis, GF2Vector
from .linkmodel import LinkSpec, conditional_pmf, fresh_pmf, on_time_table

COMPLEMENT = "complement"
PAPER_LITERAL = "paper_literal"
LATE_FORMULAS = (COMPLEMENT, PAPER_LITERAL)


@dataclass
class MetricState:
    """Snapshot for one (link, chunk, slot).

    ``outstanding`` holds ``(vector, departure_time)`` pairs, oldest first,
    already truncated to the metric window. ``basis`` is the receiver's basis
    for the chunk; its rank is rho.
    """

    basis: GF2Basis
    outstanding: Sequence[tuple]
    n: int
    spec: LinkSpec
    delta: int
    candidate: Optional[GF2Vector] = None
    late_prob_formula: str = COMPLEMENT
    posterior: bool = False
    received_times: tuple = ()

    def __post_init__(self):
        if self.late_prob_formula not in LATE_FORMULAS:
            raise ValueError(f"late_prob_formula must be one of {LATE_FORMULAS}")
        if self.delta < 1:
            raise ValueError(f"delta must be >= 1, got {self.delta}")
        prev = None
        for _, t in self.outstanding:
            if t >= self.n:
                raise ValueError(f"outstanding departure {t} is not before slot {self.n}")
            if prev is not None and t < prev:
                raise ValueError("outstanding packets must be sorted by departure")
            prev = t

    @property
    def rho(self) -> int:
        return self.basis.rank

    @property
    def chunk_size(self) -> int:
        return self.basis.length

    @classmethod
    def from_vectors(cls, received: Sequence[GF2Vector], length: int, **kw) -> "MetricState":
        return cls(basis=GF2Basis(length, received), **kw)


@dataclass
class OutcomeTerm:
    b: tuple
    z: tuple  # delay per position, None where late
    weight: float
    innovative_gain: int = 0


@dataclass
class _Position:
    bits: int
    departure: int
    window: list = field(default_factory=list)  # [(z, p)], empty if degenerate
    degenerate: bool = False


def _bits(v) -> int:
    return v.bits if isinstance(v, GF2Vector) else int(v)


def _positions(state: MetricState) -> list[_Position]:
    out = []
    for vec, t in state.outstanding:
        age = state.n - t
        try:
            window = conditional_pmf(state.spec, age, state.delta, state.posterior)
            out.append(_Position(_bits(vec), t, window))
        except DegenerateStateError:
            out.append(_Position(_bits(vec), t, [], True))
    if state.candidate is not None:
        out.append(_Position(_bits(state.candidate), state.n, fresh_pmf(state.spec, state.delta)))
    return out


def _late_weight(pos: _Position, state: MetricState) -> float:
    if pos.degenerate:
        return 1.0
    on = sum(p for _, p in pos.window)
    if state.late_prob_formula == COMPLEMENT:
        return max(0.0, 1.0 - on)
    return min(1.0, max(0.0, 1.0 - on + state.spec.loss.pe))


def order_arrivals(term: OutcomeTerm, state: MetricState) -> list[tuple[GF2Vector, int]]:
    """On-time packets of ``term`` sorted by reception time, earlier departure first on ties."""
    positions = _positions(state)
    arrivals = []
    for pos, b, z in zip(positions, term.b, term.z):
        if b:
            arrivals.append((pos.departure + z, pos.departure, pos.bits))
    arrivals.sort()
    c = state.chunk_size
    return [(GF2Vector(bits, c), rec) for rec, _, bits in arrivals]


def innovation_gain(arrivals: Sequence[tuple], basis: GF2Basis) -> int:
    """Number of arrivals that are innovative at their turn; ``basis`` is not modified."""
    snap = basis.copy()
    gain = 0
    for vec, _ in arrivals:
        if snap.insert(vec):
            gain += 1
    return gain


def enumerate_terms(state: MetricState) -> Iterator[OutcomeTerm]:
    """Every (b, z) pattern with its weight and innovation gain.

    Positions are the outstanding packets in departure order followed by the
    candidate. Degenerate positions only have the late option.
    """
    positions = _positions(state)
    late = [_late_weight(p, state) for p in positions]
    options = []
    for pos, lw in zip(positions, late):
        opts = [(0, None, lw)]
        opts.extend((1, z, p) for z, p in pos.window)
        options.append(opts)
    for combo in itertools.product(*options):
        w = 1.0
        for _, _, p in combo:
            w *= p
        term = OutcomeTerm(
            b=tuple(o[0] for o in combo), z=tuple(o[1] for o in combo), weight=w
        )
        term.innovative_gain = innovation_gain(order_arrivals(term, state), state.basis)
        yield term


def metric_by_enumeration(state: MetricState) -> tuple[float, float]:
    """``(metric, total_weight)`` by the literal (b, z) sum."""
    rho = state.rho
    total = 0.0
    value = 0.0
    for term in enumerate_terms(state):
        total += term.weight
        value += term.weight * (rho + term.innovative_gain)
    return value, total


def _fast_positions(state: MetricState) -> list[tuple[int, float, float]]:
    """``(bits, on_time_mass, late_weight)`` for positions that can matter."""
    table = on_time_table(state.spec, state.delta, state.posterior)
    literal = state.late_prob_formula == PAPER_LITERAL
    pe = state.spec.loss.pe
    out = []
    items = [(v, state.n - t) for v, t in state.outstanding]
    if state.candidate is not None:
        items.append((state.candidate, 0))
    for vec, age in items:
        s = table[age] if age < len(table) else 0.0
        if s <= 0.0:
            continue  # late with weight 1 under both formulas
        late = min(1.0, 1.0 - s + pe) if literal else 1.0 - s
        out.append((_bits(vec), s, late))
    return out


def _weighted_gain(pos, j, basis, suffix_w):
    if j == len(pos) or basis.is_full():
        return 0.0
    bits, s, late = pos[j]
    rest = _weighted_gain(pos, j + 1, basis, suffix_w)
    if not basis.is_innovative(bits):
        return (s + late) * rest
    grown = basis.copy()
    grown.insert(bits)
    return late * rest + s * (suffix_w[j + 1] + _weighted_gain(pos, j + 1, grown, suffix_w))


def expected_metric(state: MetricState) -> tuple[float, float]:
    """``(metric, total_weight)`` via the rank-gain recursion over on-time subsets."""
    pos = _fast_positions(state)
    suffix_w = [1.0] * (len(pos) + 1)
    for j in range(len(pos) - 1, -1, -1):
        suffix_w[j] = suffix_w[j + 1] * (pos[j][1] + pos[j][2])
    gain = _weighted_gain(pos, 0, state.basis, suffix_w)
    return state.rho * suffix_w[0] + gain, suffix_w[0]


def metric_x(state: MetricState) -> float:
    """Expected innovative count before the next slot, given the candidate is sent now."""
    if state.candidate is None:
        raise ValueError("metric_x needs a candidate packet")
    return expected_metric(state)[0]


def metric_y(state: MetricState) -> float:
    """Expected innovative count before the current slot."""
    if state.candidate is not None:
        raise ValueError("metric_y takes a state without candidate")
    return expected_metric(state)[0]


def term_count(state: MetricState) -> int:
    """Number of (b, z) terms :func:`enumerate_terms` yields."""
    n = 1
    for pos in _positions(state):
        n *= 1 + len(pos.window)
    return n


# --- Monte-Carlo oracle ------------------------------------------------------


def monte_carlo_metric(state: MetricState, samples: int, seed) -> tuple[float, float]:
    """Sample arrivals from the link model and replay them; returns ``(mean, stderr)``.

    Each outstanding packet is erased with probability p_e (or its posterior
    value when ``state.posterior``), otherwise its delay is drawn from the
    delay pmf conditioned on exceeding its age. The candidate draws an
    unconditioned delay. Packets arriving within the horizon are replayed in
    reception order. Only meaningful for the complement late formula.
    """
    if state.late_prob_formula != COMPLEMENT:
        raise ValueError("the sampling oracle models the complement formula only")
    rng = np.random.default_rng(seed)
    spec = state.spec
    surv = np.asarray(spec.delay.survival)
    neg_surv = -surv
    pe = spec.loss.pe
    entries = [(_bits(v), t) for v, t in state.outstanding]
    if state.candidate is not None:
        entries.append((_bits(state.candidate), state.n))
    P = len(entries)
    rho = state.rho
    if P == 0:
        return float(rho), 0.0

    recv = np.full((samples, P), np.inf)
    for j, (_, t) in enumerate(entries):
        age = state.n - t
        tail = surv[age] if age < len(surv) else 0.0
        if age > 0 and tail <= 0.0:
            continue
        if age > 0 and state.posterior:
            erase_p = pe / (pe + (1 - pe) * tail)
        else:
            erase_p = pe
        alive = rng.random(samples) >= erase_p
        v = 1.0 - rng.random(samples)  # (0, 1]
        # smallest z with P(Z > z) < P(Z > age) * v
        z = np.searchsorted(neg_surv, -tail * v, side="right")
        on_time = alive & (z <= age + state.delta)
        recv[on_time, j] = t + z[on_time]

    base = P + 1
    order = np.argsort(recv * base + np.arange(P), axis=1, kind="stable")
    on_sorted = np.isfinite(np.take_along_axis(recv, order, axis=1))
    digits = (order + 1) * on_sorted
    codes = (digits * (base ** np.arange(P))).sum(axis=1)
    patterns, counts = np.unique(codes, return_counts=True)

    gains = np.empty(len(patterns))
    for i, code in enumerate(patterns):
        code = int(code)
        sequence = []
        while code:
            code, d = divmod(code, base)
            if d:
                sequence.append(entries[d - 1][0])
        gains[i] = _replay_count(state.basis, sequence)
    per_pattern = rho + gains
    mean = float((per_pattern * counts).sum() / samples)
    var = float((counts * (per_pattern - mean) ** 2).sum() / max(samples - 1, 1))
    return mean, (var / samples) ** 0.5


def _replay_count(basis: GF2Basis, sequence: Sequence[int]) -> int:
    """Count arrivals whose vector raises the rank of everything received so far.

    Uses plain Gaussian elimination on a fresh row list rather than the
    incremental basis, to keep the oracle independent.
    """
    rows = basis.row_bits()
    base_rank = _rank(rows)
    count = 0
    held = list(rows)
    current = base_rank
    for bits in sequence:
        held.append(bits)
        r = _rank(held)
        if r > current:
            count += 1
            current = r
    return count


def _rank(rows: Sequence[int]) -> int:
    rows = [r for r in rows if r]
    rank = 0
    while rows:
        pivot = max(rows)
        rows.remove(pivot)
        top = pivot.bit_length() - 1
        rows = [r ^ pivot if r >> top & 1 else r for r in rows]
        rows = [r for r in rows if r]
        rank += 1
    return rank


# --- randomized cross-check ---------------------------------------------------

CHECK_DELAYS = ("unit", "I", "II", "III")
CHECK_LOSSES = (0.0, 1 / 3)


def random_state(rng, chunk_size: int = 8, max_tau: int = 6, max_delta: int = 4) -> MetricState:
    """A MetricState drawn from the ranges used by the oracle cross-check.

    rho is uniform on ``0..chunk_size``, the window holds up to ``max_tau``
    outstanding packets sent in the last 12 slots, and half the states carry
    a candidate.
    """
    from .linkmodel import DELAY_PARAMS, DelayModel, LossModel

    name = rng.choice(CHECK_DELAYS)
    delay = DelayModel.unit() if name == "unit" else DelayModel.lognormal(*DELAY_PARAMS[name])
    spec = LinkSpec(LossModel(rng.choice(CHECK_LOSSES)), delay)
    rho = rng.randint(0, chunk_size)
    basis = GF2Basis(chunk_size)
    while basis.rank < rho:
        basis.insert(rng.getrandbits(chunk_size))
    n = 20
    tau = rng.randint(0, max_tau)
    departures = sorted(rng.sample(range(n - 12, n), tau))
    outstanding = [(GF2Vector(rng.getrandbits(chunk_size), chunk_size), t) for t in departures]
    candidate = None
    if rng.random() < 0.5:
        candidate = GF2Vector(rng.getrandbits(chunk_size), chunk_size)
    return MetricState(
        basis=basis, outstanding=outstanding, n=n, spec=spec,
        delta=rng.randint(1, max_delta), candidate=candidate,
    )


@dataclass
class CheckReport:
    states: int
    samples: int
    seed: int
    max_deviation: float
    worst_index: int
    rows: list  # (index, exact, sampled, stderr, deviation)


def relative_deviation(exact: float, sampled: float) -> float:
    if exact == 0.0:
        return abs(sampled)
    return abs(sampled - exact) / abs(exact)


def metric_check(states: int, samples: int, seed: int) -> CheckReport:
    """Compare :func:`expected_metric` with :func:`monte_carlo_metric` on random states."""
    import random

    from .seeding import derive

    rng = random.Random(derive(seed, 0))
    rows = []
    for i in range(states):
        st = random_state(rng)
        exact = expected_metric(st)[0]
        mean, err = monte_carlo_metric(st, samples, derive(seed, 1, i))
        rows.append((i, exact, mean, err, relative_deviation(exact, mean)))
    worst = max(rows, key=lambda r: r[4]) if rows else (0, 0, 0, 0, 0.0)
    return CheckReport(states, samples, seed, worst[4], worst[0], rows)
