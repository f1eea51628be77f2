"""Discrete-time simulation loop.

Slots start at 1. Each slot first delivers the packets due that slot, then
checks whether the sink can decode (returning the slot number as delivery
time), then lets every link transmitter decide and, if it sends, draws the
packet's erasure and delay from the link's realization stream.

Link randomness comes from the realization seed; chunk choices, tie-breaks
and coding vectors come from the trial seed. Two trials of one realization
therefore see the same sequence of link draws, in transmission order.
"""

from __future__ import annotations

import heapq
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from . import seeding
from .coding import CodeConfig, Packet
from .errors import CellError, NonTerminationError
from .linkmodel import sample_outcome
from .netstate import NetworkState, Topology
from .policy import DecisionContext, Policy, PolicyConfig


@dataclass(frozen=True)
class TrialConfig:
    topology: Topology
    code: CodeConfig
    policy: Union[PolicyConfig, Mapping[int, PolicyConfig]] = field(default_factory=PolicyConfig)
    seeds: tuple = (0, 0)  # (realization seed, trial seed)
    max_slots: Optional[int] = None

    def policy_for(self, link: int) -> PolicyConfig:
        if isinstance(self.policy, PolicyConfig):
            return self.policy
        return self.policy[link]

    def slot_cap(self) -> int:
        if self.max_slots is not None:
            if self.max_slots < 1:
                raise ValueError(f"max_slots must be >= 1, got {self.max_slots}")
            return self.max_slots
        return 200 * (self.code.k + self.topology.L)


@dataclass
class TrialResult:
    delivery_time: int
    trace: Optional[list] = None
    decisions: Optional[list] = None  # (slot, link, chunk or None)


def run_trial(cfg: TrialConfig, trace: bool = False, record_decisions: bool = False) -> TrialResult:
    topo, code = cfg.topology, cfg.code
    real_seed, trial_seed = cfg.seeds
    state = NetworkState(topo, code)
    active = [lk for lk in topo.links if lk.tail != topo.sink]
    link_rng = {lk.index: seeding.stream(real_seed, seeding.LINK, lk.index) for lk in active}
    policies = {
        lk.index: Policy(
            cfg.policy_for(lk.index),
            seeding.stream(trial_seed, seeding.CHOICE, lk.index),
            seeding.stream(trial_seed, seeding.CODING, lk.index),
        )
        for lk in active
    }
    lines = [] if trace else None
    decisions = [] if record_decisions else None
    in_flight: list = []  # (arrival slot, link, seq, packet)
    seq = 0
    cap = cfg.slot_cap()

    for n in range(1, cap + 1):
        while in_flight and in_flight[0][0] == n:
            _, i, _, pkt = heapq.heappop(in_flight)
            state.record_arrival(i, pkt)
            if trace:
                lines.append(f"{n},{i},rx,{pkt.chunk},{pkt.vector.hex()}")
        if state.sink_decodable():
            return TrialResult(n, lines, decisions)
        for lk in active:
            i = lk.index
            ctx = DecisionContext(
                view=state.feedback_view(i, n),
                upstream=state.upstream_counts(i),
                own_bases=state.bases[lk.tail],
                receiver_bases=state.bases[lk.head],
                code=code,
                spec=lk.spec,
                is_source=lk.tail == topo.source,
            )
            dec = policies[i].decide(ctx)
            if decisions is not None:
                decisions.append((n, i, dec.chunk))
            if dec.idle:
                if trace:
                    lines.append(f"{n},{i},idle,,")
                continue
            pkt = Packet(dec.chunk, dec.vector, n)
            state.record_transmission(i, pkt)
            z = sample_outcome(lk.spec, link_rng[i])
            if z is None:
                if trace:
                    lines.append(f"{n},{i},drop,{pkt.chunk},{pkt.vector.hex()}")
                continue
            if trace:
                lines.append(f"{n},{i},tx,{pkt.chunk},{pkt.vector.hex()}")
            pkt.arrival_time = n + z
            heapq.heappush(in_flight, (n + z, i, seq, pkt))
            seq += 1

    raise NonTerminationError(
        f"sink not decodable after {cap} slots (counts {state.sink_counts()})",
        partial={"slot": cap, "sink_counts": state.sink_counts(), "trace": lines},
    )


# --- cells ------------------------------------------------------------------


@dataclass
class CellResult:
    mean: float
    stderr: float
    times: list  # realization-major order

    @property
    def runs(self) -> int:
        return len(self.times)


def run_seeds(seed: int, r: int, t: int) -> tuple:
    """(realization seed, trial seed) for run ``(r, t)`` of a cell seeded with ``seed``."""
    return seeding.derive(seed, r), seeding.derive(seed, r, t)


def _run_realization(args):
    base, seed, r, trials = args
    out = []
    for t in range(trials):
        cfg = TrialConfig(base.topology, base.code, base.policy, run_seeds(seed, r, t), base.max_slots)
        try:
            out.append(run_trial(cfg).delivery_time)
        except NonTerminationError as exc:
            out.append((r, t, str(exc)))
    return out


def run_cell(
    base: TrialConfig, realizations: int, trials: int, seed: int, jobs: int = 1
) -> CellResult:
    """Average delivery time over ``realizations x trials`` runs.

    ``base.seeds`` is ignored; run seeds come from ``seed``. The result does not
    depend on ``jobs``.
    """
    if realizations < 1 or trials < 1:
        raise ValueError("realizations and trials must be >= 1")
    tasks = [(base, seed, r, trials) for r in range(realizations)]
    if jobs > 1 and realizations > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_realization, tasks))
    else:
        chunks = [_run_realization(t) for t in tasks]
    times, failures = [], []
    for chunk in chunks:
        for item in chunk:
            (failures if isinstance(item, tuple) else times).append(item)
    if failures:
        raise CellError(failures)
    return summarize(times)


def summarize(times) -> CellResult:
    times = list(times)
    mean = math.fsum(times) / len(times)
    if len(times) > 1:
        stderr = statistics.stdev(times) / math.sqrt(len(times))
    else:
        stderr = 0.0
    return CellResult(mean, stderr, times)
