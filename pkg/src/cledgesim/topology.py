"""Network model: nodes, pure-delay links, and all-pairs routing tables.

Links are bidirectional, symmetric, and carry an integer `hops` weight so a
single link may stand in for an aggregated multi-hop path (the gateway-cloud
trunk is one 5-hop/50 ms link). Shortest paths minimise one-way delay; among
equal-delay paths the lexicographically smallest node sequence wins, which
pins every routing table deterministically.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from heapq import heappop, heappush

from .engine import ms_to_us

ROLE_USER = "user"
ROLE_EN = "en"
ROLE_EG = "eg"
ROLE_CLOUD = "cloud"

Name = tuple[str, ...]


class TopologyError(Exception):
    pass


@dataclass(slots=True, frozen=True)
class NodeInfo:
    node_id: str
    role: str
    network: int | None
    prefix: Name
    slots: int | None = None  # None -> use the configured default for the role


@dataclass(slots=True, frozen=True)
class NetworkInfo:
    index: int
    members: tuple[str, ...]  # every compute node in the network, EG included
    eg: str
    gateway_prefix: Name


@dataclass(slots=True, frozen=True)
class UserInfo:
    user_id: str
    network: int
    # (one-way delay us, en id), sorted by (delay, id): first entry is the
    # deterministic offload target.
    links: tuple[tuple[int, str], ...]


@dataclass(slots=True)
class Topology:
    nodes: dict[str, NodeInfo]
    networks: dict[int, NetworkInfo]
    cloud: str
    adj: dict[str, dict[str, tuple[int, int]]]  # a -> b -> (delay_us, hops)
    users: dict[str, UserInfo]
    direct_link_peers: dict[str, frozenset[str]] = field(default_factory=dict)
    delay: dict[str, dict[str, int]] = field(default_factory=dict)
    hops: dict[str, dict[str, int]] = field(default_factory=dict)
    next_hop: dict[str, dict[str, str]] = field(default_factory=dict)

    # -- queries ---------------------------------------------------------

    def one_way_us(self, a: str, b: str) -> int:
        return self.delay[a][b]

    def rtt_us(self, a: str, b: str) -> int:
        return self.delay[a][b] * 2

    def hop_count(self, a: str, b: str) -> int:
        return self.hops[a][b]

    def members(self, network: int) -> tuple[str, ...]:
        return self.networks[network].members

    def gateway_of(self, network: int) -> str:
        return self.networks[network].eg

    def primary_en(self, user_id: str) -> tuple[int, str]:
        """(one-way delay us, en) of the user's deterministic offload target."""
        return self.users[user_id].links[0]

    # -- construction ----------------------------------------------------

    def build_tables(self) -> None:
        """All-pairs delay/hop/next-hop via per-source Dijkstra.

        Heap entries are (dist, path-tuple): tuple ordering hands us the
        lexicographically smallest node sequence among equal-delay paths
        for free.
        """
        node_ids = sorted(self.nodes)
        for src in node_ids:
            dist: dict[str, int] = {}
            hop_tab: dict[str, int] = {}
            nxt: dict[str, str] = {}
            heap: list[tuple[int, tuple[str, ...]]] = [(0, (src,))]
            while heap:
                d, path = heappop(heap)
                node = path[-1]
                if node in dist:
                    continue
                dist[node] = d
                hop_tab[node] = self._path_hops(path)
                if len(path) > 1:
                    nxt[node] = path[1]
                for nbr, (w, _h) in self.adj[node].items():
                    if nbr not in dist:
                        heappush(heap, (d + w, path + (nbr,)))
            missing = set(node_ids) - set(dist)
            if missing:
                raise TopologyError(
                    f"graph is not connected: {src} cannot reach {sorted(missing)[0]}"
                )
            self.delay[src] = dist
            self.hops[src] = hop_tab
            self.next_hop[src] = nxt

    def _path_hops(self, path: tuple[str, ...]) -> int:
        total = 0
        for i in range(len(path) - 1):
            total += self.adj[path[i]][path[i + 1]][1]
        return total

    def validate(self) -> None:
        egs = [n for n in self.nodes.values() if n.role == ROLE_EG]
        for net in self.networks.values():
            net_egs = [e for e in egs if e.network == net.index]
            if len(net_egs) != 1:
                raise TopologyError(
                    f"network {net.index} has {len(net_egs)} EGs; exactly one required"
                )
        clouds = [n for n in self.nodes.values() if n.role == ROLE_CLOUD]
        if len(clouds) != 1:
            raise TopologyError(f"{len(clouds)} cloud nodes; exactly one required")
        for a, peers in self.adj.items():
            for b, (w, h) in peers.items():
                back = self.adj[b].get(a)
                if back != (w, h):
                    raise TopologyError(f"asymmetric link {a}<->{b}")


def _add_link(adj: dict, a: str, b: str, delay_us: int, hops: int) -> None:
    if delay_us < 0 or hops < 1:
        raise TopologyError(f"bad link {a}<->{b}: delay {delay_us} us, hops {hops}")
    adj.setdefault(a, {})[b] = (delay_us, hops)
    adj.setdefault(b, {})[a] = (delay_us, hops)


def _direct_link_peers(users: dict[str, UserInfo], ens: set[str]) -> dict[str, frozenset[str]]:
    """ENs sharing at least one directly-linked user. Symmetric, irreflexive."""
    shared: dict[str, set[str]] = {en: set() for en in ens}
    for info in users.values():
        linked = [en for _, en in info.links]
        for en in linked:
            for other in linked:
                if other != en:
                    shared[en].add(other)
    return {en: frozenset(peers) for en, peers in shared.items()}


def build_topology(topo_cfg, n_users: int) -> Topology:
    """Build either the parameterised default layout or an explicit custom one."""
    if topo_cfg.custom is not None:
        return _build_custom(topo_cfg.custom)
    return _build_default(topo_cfg, n_users)


def _build_default(cfg, n_users: int) -> Topology:
    """Parameterised evaluation layout.

    Per network: `ens_per_network` compute nodes, one of which is the EG.
    Front ENs (all non-EG nodes, or the EG itself if it is alone) carry the
    user links and sit one 2-hop intra link from the EG, so a user is
    1 + 2 + 5 = 8 hops from the cloud while the EG is 5. EGs form a full
    mesh and each EG has its own aggregated trunk to the single cloud node.
    """
    if cfg.networks < 1:
        raise TopologyError("topology.networks must be >= 1")
    if cfg.ens_per_network < 1:
        raise TopologyError("topology.ens_per_network must be >= 1")

    nodes: dict[str, NodeInfo] = {}
    networks: dict[int, NetworkInfo] = {}
    adj: dict[str, dict[str, tuple[int, int]]] = {}
    users: dict[str, UserInfo] = {}

    intra_us = ms_to_us(cfg.intra_one_way_ms)
    user_us = ms_to_us(cfg.user_link_ms)
    eg_us = ms_to_us(cfg.eg_eg_one_way_ms)
    cloud_us = ms_to_us(cfg.eg_cloud_one_way_ms)

    cloud_id = "cloud"
    nodes[cloud_id] = NodeInfo(cloud_id, ROLE_CLOUD, None, ("cloud",))
    adj[cloud_id] = {}

    egs: list[str] = []
    fronts_by_net: dict[int, list[str]] = {}
    for i in range(1, cfg.networks + 1):
        net = f"net{i}"
        eg_id = f"{net}/eg"
        members = []
        fronts = []
        for j in range(1, cfg.ens_per_network):
            en_id = f"{net}/en{j}"
            nodes[en_id] = NodeInfo(en_id, ROLE_EN, i, (net, f"en{j}"))
            _add_link(adj, en_id, eg_id, intra_us, cfg.intra_hops)
            for other in members:  # full intra mesh: EN<->EN same delay
                _add_link(adj, en_id, other, intra_us, cfg.intra_hops)
            members.append(en_id)
            fronts.append(en_id)
        nodes[eg_id] = NodeInfo(eg_id, ROLE_EG, i, (net, "eg"))
        adj.setdefault(eg_id, {})
        members.append(eg_id)
        if not fronts:  # degenerate single-node network: users attach to the EG
            fronts = [eg_id]
        networks[i] = NetworkInfo(i, tuple(sorted(members)), eg_id, ("gateway", net))
        egs.append(eg_id)
        fronts_by_net[i] = fronts
        _add_link(adj, eg_id, cloud_id, cloud_us, cfg.eg_cloud_hops)

    for a in range(len(egs)):
        for b in range(a + 1, len(egs)):
            _add_link(adj, egs[a], egs[b], eg_us, cfg.eg_eg_hops)

    # Users round-robin over networks, then over that network's front ENs.
    # The first floor(dual_link_fraction * per-net users) users of each network
    # get a second direct link to the next front EN (deterministic, no RNG).
    per_net_count: dict[int, int] = {i: 0 for i in networks}
    for u in range(n_users):
        net_idx = (u % cfg.networks) + 1
        k = per_net_count[net_idx]
        per_net_count[net_idx] += 1
        fronts = fronts_by_net[net_idx]
        primary = fronts[k % len(fronts)]
        user_id = f"net{net_idx}/user{k:03d}"
        nodes[user_id] = NodeInfo(
            user_id, ROLE_USER, net_idx, (f"net{net_idx}", f"user{k:03d}")
        )
        _add_link(adj, user_id, primary, user_us, 1)
        links = [(user_us, primary)]
        if len(fronts) > 1:
            expected_per_net = (n_users + cfg.networks - 1) // cfg.networks
            if k < int(cfg.dual_link_fraction * expected_per_net):
                second = fronts[(k + 1) % len(fronts)]
                _add_link(adj, user_id, second, user_us, 1)
                links.append((user_us, second))
        users[user_id] = UserInfo(user_id, net_idx, tuple(sorted(links)))

    topo = Topology(nodes, networks, cloud_id, adj, users)
    en_ids = {n.node_id for n in nodes.values() if n.role in (ROLE_EN, ROLE_EG)}
    topo.direct_link_peers = _direct_link_peers(users, en_ids)
    topo.validate()
    topo.build_tables()
    return topo


def _build_custom(spec: dict) -> Topology:
    """Explicit node/link/user lists, mainly for unit tests.

    Shape::

        {"nodes": [{"id", "role", "network"?, "slots"?}],
         "links": [{"a", "b", "one_way_ms", "hops"?}],
         "users": [{"id", "network", "links": [{"en", "one_way_ms"}]}]}
    """
    nodes: dict[str, NodeInfo] = {}
    adj: dict[str, dict[str, tuple[int, int]]] = {}
    users: dict[str, UserInfo] = {}

    cloud_id = None
    by_network: dict[int, list[str]] = {}
    eg_by_network: dict[int, str] = {}
    for n in spec.get("nodes", []):
        role = n["role"]
        net = n.get("network")
        node_id = n["id"]
        prefix = tuple(p for p in node_id.split("/") if p)
        nodes[node_id] = NodeInfo(node_id, role, net, prefix, n.get("slots"))
        adj.setdefault(node_id, {})
        if role == ROLE_CLOUD:
            cloud_id = node_id
        if role in (ROLE_EN, ROLE_EG) and net is not None:
            by_network.setdefault(net, []).append(node_id)
            if role == ROLE_EG:
                eg_by_network[net] = node_id

    networks = {}
    for net, members in by_network.items():
        eg = eg_by_network.get(net)
        if eg is None:
            raise TopologyError(f"network {net} has no EG")
        networks[net] = NetworkInfo(net, tuple(sorted(members)), eg, ("gateway", f"net{net}"))

    for link in spec.get("links", []):
        _add_link(
            adj, link["a"], link["b"], ms_to_us(link["one_way_ms"]), link.get("hops", 1)
        )

    for u in spec.get("users", []):
        user_id = u["id"]
        net = u["network"]
        prefix = tuple(p for p in user_id.split("/") if p)
        nodes[user_id] = NodeInfo(user_id, ROLE_USER, net, prefix)
        adj.setdefault(user_id, {})
        links = []
        for ul in u["links"]:
            d = ms_to_us(ul["one_way_ms"])
            _add_link(adj, user_id, ul["en"], d, 1)
            links.append((d, ul["en"]))
        users[user_id] = UserInfo(user_id, net, tuple(sorted(links)))

    if cloud_id is None:
        raise TopologyError("custom topology needs a cloud node")
    topo = Topology(nodes, networks, cloud_id, adj, users)
    en_ids = {n.node_id for n in nodes.values() if n.role in (ROLE_EN, ROLE_EG)}
    topo.direct_link_peers = _direct_link_peers(users, en_ids)
    topo.validate()
    topo.build_tables()
    return topo
