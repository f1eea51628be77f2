"""Topology, per-link transcripts and the feedback each transmitter sees.

Receiving state is kept per node: a node's basis for chunk ``c`` spans every
innovative packet it received on any incoming link, which is exactly the
union of R over the links sharing that head node. Links are labelled
``1..L``; nodes are integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .coding import CodeConfig, Packet
from .errors import SchedulingError, ValidationError
from .gf2 import GF2Basis
from .linkmodel import LinkSpec


@dataclass(frozen=True)
class Link:
    index: int
    tail: int
    head: int
    spec: LinkSpec = field(default_factory=LinkSpec)


class Topology:
    """Directed unicast network with one source and one sink."""

    def __init__(self, links: Sequence[Link]):
        if not links:
            raise ValidationError("network.links", "at least one link is required")
        self.links = list(links)
        labels = [lk.index for lk in self.links]
        if sorted(labels) != list(range(1, len(labels) + 1)):
            raise ValidationError("network.links", "link labels must be 1..L")
        self.links.sort(key=lambda lk: lk.index)
        nodes = sorted({lk.tail for lk in links} | {lk.head for lk in links})
        self.nodes = nodes
        heads = {lk.head for lk in links}
        tails = {lk.tail for lk in links}
        sources = [v for v in nodes if v not in heads]
        sinks = [v for v in nodes if v not in tails]
        if len(sources) != 1 or len(sinks) != 1:
            raise ValidationError(
                "network.links",
                f"need exactly one source and one sink, got sources={sources} sinks={sinks}",
            )
        self.source = sources[0]
        self.sink = sinks[0]
        self.incoming = {v: [lk.index for lk in self.links if lk.head == v] for v in nodes}
        self.outgoing = {v: [lk.index for lk in self.links if lk.tail == v] for v in nodes}
        self._I_R = {lk.index: tuple(self.incoming[lk.head]) for lk in self.links}
        self._I_T = {lk.index: tuple(self.outgoing[lk.tail]) for lk in self.links}

    @classmethod
    def line(cls, L: int, specs: Optional[Sequence[LinkSpec]] = None) -> "Topology":
        """Nodes ``0..L``; link ``i`` runs from node ``i-1`` to node ``i``."""
        if L < 1:
            raise ValidationError("network.length", f"must be >= 1, got {L}")
        if specs is None:
            specs = [LinkSpec()] * L
        if len(specs) != L:
            raise ValidationError("network", f"{len(specs)} link specs for {L} links")
        return cls([Link(i, i - 1, i, specs[i - 1]) for i in range(1, L + 1)])

    @property
    def L(self) -> int:
        return len(self.links)

    def link(self, i: int) -> Link:
        return self.links[i - 1]

    def I_R(self, i: int) -> tuple:
        """Links whose head is link ``i``'s head."""
        return self._I_R[i]

    def I_T(self, i: int) -> tuple:
        """Links whose tail is link ``i``'s tail."""
        return self._I_T[i]


class LinkTranscript:
    """Transmitted (T) and received-innovative (R) packets of one link, per chunk."""

    def __init__(self, q: int):
        self.T: list[list[Packet]] = [[] for _ in range(q)]
        self.R: list[list[Packet]] = [[] for _ in range(q)]
        # not yet arrived, in departure order; keyed by packet id
        self.outstanding: list[dict[int, Packet]] = [{} for _ in range(q)]
        self.last_departure = 0


@dataclass(frozen=True)
class FeedbackView:
    """What the transmitter of ``link`` knows at slot ``n``.

    ``counts[c]`` is the receiver's innovative count for chunk ``c``;
    ``outstanding[c]`` lists this link's packets of chunk ``c`` that have not
    arrived, in departure order.
    """

    link: int
    n: int
    counts: tuple
    outstanding: tuple

    @property
    def taus(self) -> tuple:
        return tuple(len(o) for o in self.outstanding)


class NetworkState:
    """Mutable per-trial state: node bases and link transcripts."""

    def __init__(self, topology: Topology, code: CodeConfig):
        self.topology = topology
        self.code = code
        c = code.chunk_size
        self.bases: dict[int, list[GF2Basis]] = {}
        for v in topology.nodes:
            if v == topology.source:
                self.bases[v] = [GF2Basis.full(c) for _ in range(code.q)]
            else:
                self.bases[v] = [GF2Basis(c) for _ in range(code.q)]
        self.transcripts = {lk.index: LinkTranscript(code.q) for lk in topology.links}
        self.arrival_log: dict[int, list[list[int]]] = {
            v: [[] for _ in range(code.q)] for v in topology.nodes
        }
        self._sink_done = 0

    def record_transmission(self, link: int, packet: Packet) -> None:
        tr = self.transcripts[link]
        if packet.departure_time <= tr.last_departure:
            raise SchedulingError(
                f"link {link}: departure {packet.departure_time} not after {tr.last_departure}"
            )
        tr.last_departure = packet.departure_time
        tr.T[packet.chunk].append(packet)
        tr.outstanding[packet.chunk][packet.id] = packet

    def record_arrival(self, link: int, packet: Packet) -> bool:
        """Deliver ``packet``; returns True if it was innovative and stored."""
        tr = self.transcripts[link]
        tr.outstanding[packet.chunk].pop(packet.id, None)
        head = self.topology.link(link).head
        basis = self.bases[head][packet.chunk]
        if not basis.insert(packet.vector.bits):
            return False
        tr.R[packet.chunk].append(packet)
        self.arrival_log[head][packet.chunk].append(packet.arrival_time)
        if head == self.topology.sink and basis.rank == self.code.chunk_size:
            self._sink_done += 1
        return True

    def counts(self, node: int) -> list[int]:
        return [b.rank for b in self.bases[node]]

    def upstream_counts(self, link: int) -> list[int]:
        """Counts held by the transmitter of ``link`` (chunk_size per chunk at the source).

        A node's basis already merges all its incoming links, so the maximum over
        incoming links and the node's own count coincide.
        """
        return self.counts(self.topology.link(link).tail)

    def feedback_view(self, link: int, n: int) -> FeedbackView:
        if n < 1:
            raise ValueError(f"slot must be >= 1, got {n}")
        head = self.topology.link(link).head
        tr = self.transcripts[link]
        return FeedbackView(
            link=link,
            n=n,
            counts=tuple(b.rank for b in self.bases[head]),
            outstanding=tuple(tuple(o.values()) for o in tr.outstanding),
        )

    def sink_decodable(self) -> bool:
        return self._sink_done == self.code.q

    def sink_counts(self) -> list[int]:
        return self.counts(self.topology.sink)
