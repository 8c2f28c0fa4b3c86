"""Two-tier resource synchronisation.

Tier 1: every EN broadcasts a full-state record (free slots + profile deltas)
to every other EN in its network each intra period. Tier 2: every EG
summarises its network (RTT to the closest free EN, 0 if the EG itself is
free, absent when nothing is) and exchanges the summary with every other EG
each inter period. Records arrive one topology RTT after the tick and stamp
the receiver's measured RTT for that peer.

Views never expire: stale records stay usable, staleness is observable, and
a fresher stamped_at always wins. A decision that places a task on a remote
peer optimistically decrements the cached free-slot count until the next
record from that peer arrives.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .compute import ProfileTable, SlotPool
from .topology import Topology
from .workload import ServiceSpec

HW_UNIFORM = "uniform"


@dataclass(slots=True, frozen=True)
class ProfileDelta:
    service: str
    hw_class: str
    mean_us: int
    sample_count: int
    version: int


@dataclass(slots=True, frozen=True)
class IntraRecord:
    src: str
    free_slots: int
    stamped_at_us: int
    deltas: tuple[ProfileDelta, ...] = ()


@dataclass(slots=True, frozen=True)
class InterRecord:
    network: int
    rtt_to_free_us: int | None  # None -> no node in the network has free slots
    utilization: float
    stamped_at_us: int


@dataclass(slots=True)
class PeerState:
    record: IntraRecord | None = None
    rtt_us: int | None = None  # measured over the last exchange
    optimistic: int = 0  # placements sent since the record arrived


class SyncView:
    """One node's picture of its network (and, for EGs, of other networks)."""

    __slots__ = ("owner", "network", "is_eg", "peers", "best_profiles",
                 "inter", "eg_rtt_us")

    def __init__(self, owner: str, network: int, is_eg: bool) -> None:
        self.owner = owner
        self.network = network
        self.is_eg = is_eg
        self.peers: dict[str, PeerState] = {}
        # service -> (sample_count, source node, mean_us); merged so the
        # record with the most samples wins, ties to the lexicographically
        # smaller node id.
        self.best_profiles: dict[str, tuple[int, str, int]] = {}
        self.inter: dict[int, InterRecord] = {}
        self.eg_rtt_us: dict[int, int] = {}

    def receive_intra(self, record: IntraRecord, measured_rtt_us: int) -> None:
        state = self.peers.get(record.src)
        if state is None:
            state = PeerState()
            self.peers[record.src] = state
        if state.record is None or record.stamped_at_us >= state.record.stamped_at_us:
            state.record = record
            state.optimistic = 0
        state.rtt_us = measured_rtt_us
        for d in record.deltas:
            self._merge_profile(record.src, d)

    def _merge_profile(self, src: str, d: ProfileDelta) -> None:
        cur = self.best_profiles.get(d.service)
        key = (d.sample_count, src)
        if cur is None or key[0] > cur[0] or (key[0] == cur[0] and src <= cur[1]):
            self.best_profiles[d.service] = (d.sample_count, src, d.mean_us)

    def receive_inter(self, record: InterRecord, measured_rtt_us: int) -> None:
        cur = self.inter.get(record.network)
        if cur is None or record.stamped_at_us >= cur.stamped_at_us:
            self.inter[record.network] = record
        self.eg_rtt_us[record.network] = measured_rtt_us

    def view_free(self, en: str) -> int:
        """Free slots for a peer per the view, after optimistic decrements."""
        state = self.peers.get(en)
        if state is None or state.record is None:
            return 0
        return max(0, state.record.free_slots - state.optimistic)

    def has_record(self, en: str) -> bool:
        state = self.peers.get(en)
        return state is not None and state.record is not None

    def staleness_us(self, en: str, now: int) -> int | None:
        state = self.peers.get(en)
        if state is None or state.record is None:
            return None
        return now - state.record.stamped_at_us

    def note_remote_placement(self, en: str) -> None:
        state = self.peers.get(en)
        if state is not None:
            state.optimistic += 1

    def estimate_exec_us(
        self, own_table: ProfileTable, service: str, spec: ServiceSpec,
        prior_fraction: float,
    ) -> int:
        """Best-known mean execution time, or the prior when unobserved."""
        own = own_table.profiles.get(service)
        best = self.best_profiles.get(service)
        cand: tuple[int, str, int] | None = None
        if own is not None and own.sample_count > 0:
            cand = (own.sample_count, self.owner, own.mean_us)
        if best is not None:
            if cand is None or best[0] > cand[0] or (
                best[0] == cand[0] and best[1] < cand[1]
            ):
                cand = best
        if cand is not None:
            return cand[2]
        return round(prior_fraction * spec.deadline_us)


def record_wire_bytes(n_deltas: int, cfg) -> int:
    """Bytes on the wire for one directed exchange (Interest + Data record)."""
    return (cfg.packet.header_bytes + cfg.sync.record_base_bytes
            + cfg.sync.per_profile_bytes * n_deltas)


class SyncManager:
    """Builds records, routes them to views, and decides notify triggers."""

    __slots__ = ("topology", "cfg", "views", "last_broadcast_util")

    def __init__(self, topology: Topology, cfg) -> None:
        self.topology = topology
        self.cfg = cfg
        self.views: dict[str, SyncView] = {}
        self.last_broadcast_util: dict[str, float] = {}
        for net in topology.networks.values():
            for member in net.members:
                self.views[member] = SyncView(member, net.index, member == net.eg)

    def build_intra_record(
        self, node: str, pool: SlotPool, table: ProfileTable, now: int
    ) -> IntraRecord:
        deltas = tuple(
            ProfileDelta(svc, HW_UNIFORM, mean, count, version)
            for svc, mean, count, version in table.deltas_since_last_broadcast()
        )
        self.last_broadcast_util[node] = pool.utilization
        return IntraRecord(node, pool.free, now, deltas)

    def intra_peers(self, node: str) -> list[str]:
        net = self.topology.nodes[node].network
        return [m for m in self.topology.members(net) if m != node]

    def build_inter_record(self, eg: str, pool: SlotPool, now: int) -> InterRecord:
        """The EG's tier-2 summary, computed from its live tier-1 view."""
        view = self.views[eg]
        if pool.free > 0:
            return InterRecord(view.network, 0, pool.utilization, now)
        best: tuple[int, float] | None = None
        for peer in self.intra_peers(eg):
            state = view.peers.get(peer)
            if state is None or state.record is None or state.rtt_us is None:
                continue
            if view.view_free(peer) <= 0:
                continue
            cap = (self.topology.nodes[peer].slots
                   or self.cfg.compute.slots_per_node)
            util = 1.0 - state.record.free_slots / cap
            if best is None or state.rtt_us < best[0]:
                best = (state.rtt_us, util)
        if best is None:
            return InterRecord(view.network, None, 1.0, now)
        return InterRecord(view.network, best[0], best[1], now)

    def should_notify(self, node: str, pool: SlotPool) -> bool:
        threshold = self.cfg.sync.notify_threshold
        if threshold is None:
            return False
        last = self.last_broadcast_util.get(node)
        if last is None:
            return True
        return abs(pool.utilization - last) >= threshold


def expected_tier1_bytes(topology: Topology, cfg, ticks: int) -> int:
    """Closed-form tier-1 ledger bytes for a run with no profile deltas.

    Per tick, each network contributes one directed exchange per ordered
    member pair; each exchange costs record_wire_bytes(0) times the hop
    count of the path between the pair.
    """
    per_exchange = record_wire_bytes(0, cfg)
    total = 0
    for net in topology.networks.values():
        for a in net.members:
            for b in net.members:
                if a != b:
                    total += per_exchange * topology.hop_count(a, b)
    return total * ticks


def expected_tier2_bytes(topology: Topology, cfg, ticks: int) -> int:
    per_exchange = cfg.packet.header_bytes + cfg.sync.record_base_bytes
    egs = sorted(net.eg for net in topology.networks.values())
    total = 0
    for a in egs:
        for b in egs:
            if a != b:
                total += per_exchange * topology.hop_count(a, b)
    return total * ticks
