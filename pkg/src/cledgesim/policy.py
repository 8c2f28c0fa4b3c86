"""Task-placement policies.

Each policy is a pure function of a DecisionContext: the deciding node's own
slot pool, its synchronised view of everyone else, the static topology, and
the task's timing budget. Decisions carry no side effects; the simulation
applies them (and the optimistic view decrements they imply) afterwards.

A candidate c is *feasible* when

    elapsed + rtt(node, c) + cost(c) + return_delay <= deadline

where cost(c) is the estimated execution time — for the cloud, which
answers the task Interest with the result in a single round trip — or
max(estimated_exec, fetch_rtt) for edge nodes, whose receipt/thunk
handshake means the user holds no result until its fetch round trip
(fetch_rtt = rtt(node, c) + 2 * return_delay, about the user-to-candidate
round trip) completes. Without the max() a short execution far away would
look cheaper than it can physically finish. The view must also show c with
a free slot. RTTs to in-network peers come from the view's measured
values; the RTT to the cloud and to the node's own gateway come from
static topology (fixed infrastructure), and rtt(node, node) = 0.
"""
from __future__ import annotations

from dataclasses import dataclass

from .compute import ProfileTable, SlotPool
from .sync import SyncView
from .topology import Topology
from .workload import ServiceSpec

POLICY_CLEDGE = "cledge"
POLICY_CLOUD_ONLY = "cloud-only"
POLICY_EDGE_ONLY = "edge-only"
POLICY_CLOUD_EDGE = "cloud-edge"
POLICY_ADAPTIVE = "adaptive-cloud-edge"
POLICIES = (
    POLICY_CLEDGE,
    POLICY_CLOUD_ONLY,
    POLICY_EDGE_ONLY,
    POLICY_CLOUD_EDGE,
    POLICY_ADAPTIVE,
)

ACT_EXECUTE = "execute"  # admit into the local pool
ACT_BUFFER = "buffer"  # join the local FIFO wait queue
ACT_FORWARD_EN = "forward-en"  # send to a named EN
ACT_FORWARD_CLOUD = "forward-cloud"  # send to the cloud
ACT_FORWARD_NET = "forward-net"  # send toward a network's gateway
ACT_BEST_EFFORT = "best-effort"  # admit-or-queue at the chosen node


@dataclass(slots=True, frozen=True)
class Decision:
    action: str
    target: str | None = None  # node id for forward-en / best-effort
    network: int | None = None  # network index for forward-net


# The three decisions with no parameters are shared instances: the
# baselines return them once per task and the allocation shows up in
# profiles.
_EXECUTE = Decision(ACT_EXECUTE)
_BUFFER = Decision(ACT_BUFFER)
_FORWARD_CLOUD = Decision(ACT_FORWARD_CLOUD)


@dataclass(slots=True)
class DecisionContext:
    node_id: str
    network: int
    is_eg: bool
    now_us: int
    elapsed_us: int
    deadline_us: int
    return_delay_us: int
    service: str
    spec: ServiceSpec
    pool: SlotPool
    table: ProfileTable
    view: SyncView
    topology: Topology
    cloud_id: str
    prior_fraction: float
    task_seq: int = 0  # stable per-task integer, used to spread ties


def _cloud_only(ctx: DecisionContext) -> Decision:
    return _FORWARD_CLOUD


def _edge_only(ctx: DecisionContext) -> Decision:
    if ctx.pool.free > 0:
        return _EXECUTE
    return _BUFFER


def _cloud_edge(ctx: DecisionContext) -> Decision:
    if ctx.pool.free > 0:
        return _EXECUTE
    return _FORWARD_CLOUD


def decider(kind: str):
    """The decision function for a policy name (callers may cache it)."""
    try:
        return _DECIDERS[kind]
    except KeyError:
        raise ValueError(f"unknown policy {kind!r}") from None


def decide(kind: str, ctx: DecisionContext) -> Decision:
    return decider(kind)(ctx)


def _estimate(ctx: DecisionContext) -> int:
    return ctx.view.estimate_exec_us(
        ctx.table, ctx.service, ctx.spec, ctx.prior_fraction
    )


def _budget_ok(ctx: DecisionContext, rtt_us: int, est_us: int) -> bool:
    """Feasibility at a handshake (edge) executor: the result costs the
    user a fetch round trip, so short executions still pay the distance."""
    fetch_rtt = rtt_us + 2 * ctx.return_delay_us
    return (
        ctx.elapsed_us + rtt_us + max(est_us, fetch_rtt) + ctx.return_delay_us
        <= ctx.deadline_us
    )


def _budget_ok_direct(ctx: DecisionContext, rtt_us: int, est_us: int) -> bool:
    """Feasibility at the cloud, whose answer rides the Interest's own
    reverse path: one round trip, no fetch leg."""
    return (
        ctx.elapsed_us + rtt_us + est_us + ctx.return_delay_us
        <= ctx.deadline_us
    )


def _free_members(ctx: DecisionContext) -> list[str]:
    """In-network nodes the view (or ground truth, for self) says are free."""
    out = []
    for m in ctx.topology.members(ctx.network):
        if m == ctx.node_id:
            if ctx.pool.free > 0:
                out.append(m)
        elif ctx.view.view_free(m) > 0:
            out.append(m)
    return out


def _peer_rtt(ctx: DecisionContext, node: str) -> int | None:
    if node == ctx.node_id:
        return 0
    state = ctx.view.peers.get(node)
    if state is None or state.rtt_us is None:
        return None
    return state.rtt_us


def _redirect_margin_us(ctx: DecisionContext, net_index: int) -> int:
    """Budget headroom for re-placement inside network net_index.

    The tier-2 freeness signal is a point estimate refreshed on a slow
    period, so a task steered across networks must afford re-placement at
    the destination: one hop when the advertised slot is gone on arrival,
    and one more when the fallback's own view has gone stale in the same
    way. Two in-network round trips cover that revalidation loop.
    """
    net = ctx.topology.networks[net_index]
    for member in net.members:
        if member != net.eg:
            return 2 * ctx.topology.rtt_us(net.eg, member)
    return 0


def _cross_padded(est: int) -> int:
    """Execution estimate padded for the gamble a cross-network bet is.

    The tier-2 record is a point sample on the slow sync period and counts
    slots, not queued work, so a steered task may land behind others that
    bet on the same sample. Requiring the budget to close with a quarter
    service time of waiting keeps tasks whose slack cannot absorb that from
    gambling; they stay nearer, where the view is fresher.
    """
    return est + est // 4


def _cross_options(ctx: DecisionContext, est: int) -> list[tuple[int, int]]:
    """Other networks reachable in time, per the gateway's tier-2 view.

    Each option is scored by the full detour: RTT to that gateway, the RTT
    it last reported from itself to a free node inside its network, and one
    in-network redirect of headroom there. Equal-cost options are rotated
    by this network's index so that gateways spread ties over destinations
    instead of all converging on the same recently-advertised network.
    """
    options: list[tuple[int, int, int]] = []
    n_nets = len(ctx.topology.networks)
    padded = _cross_padded(est)
    for net_index, record in ctx.view.inter.items():
        if net_index == ctx.network or record.rtt_to_free_us is None:
            continue
        eg_rtt = ctx.view.eg_rtt_us.get(net_index)
        if eg_rtt is None:
            continue
        total = (eg_rtt + record.rtt_to_free_us
                 + _redirect_margin_us(ctx, net_index))
        if _budget_ok(ctx, total, padded):
            spread = (net_index - ctx.network) % n_nets
            options.append((total, spread, net_index))
    options.sort()
    return [(total, net_index) for total, _, net_index in options]


def _nearest_foreign_eg_rtt(ctx: DecisionContext) -> int:
    """Static best-case RTT from this node to another network's gateway."""
    best = None
    for net in ctx.topology.networks.values():
        if net.index == ctx.network:
            continue
        rtt = ctx.topology.rtt_us(ctx.node_id, net.eg)
        if best is None or rtt < best:
            best = rtt
    return best if best is not None else 1 << 62


def _cledge(ctx: DecisionContext) -> Decision:
    """Lazy placement: as far from the user as the deadline allows.

    Placement tiers from furthest to nearest — cloud, another edge
    network, the task's own network. The furthest tier whose round trip
    still fits the deadline wins, keeping slots near users free for tasks
    that cannot leave. Within the home network the same principle picks
    the furthest feasible node the view shows free.
    """
    est = _estimate(ctx)

    # Cloud tier: unlimited slots, so feasibility alone decides.
    cloud_rtt = ctx.topology.rtt_us(ctx.node_id, ctx.cloud_id)
    if _budget_ok_direct(ctx, cloud_rtt, est):
        return _FORWARD_CLOUD

    # Cross-network tier. Only gateways hold the tier-2 view, so they pick
    # the concrete destination (closest total detour among networks still
    # showing reachable free capacity); other nodes test the best static
    # case and, when it fits, hand the task to their gateway to decide.
    if ctx.is_eg:
        options = _cross_options(ctx, est)
        if options:
            # Spread over all feasible destinations instead of herding on
            # the cheapest: the tier-2 view is refreshed on a slow period
            # and sees slots, not queues, so every gateway chasing the
            # same advertised winner would swamp one network per period.
            pick = options[ctx.task_seq % len(options)]
            return Decision(ACT_FORWARD_NET, network=pick[1])
    else:
        probe = (_nearest_foreign_eg_rtt(ctx)
                 + _redirect_margin_us(ctx, ctx.network))
        if _budget_ok(ctx, probe, _cross_padded(est)):
            return Decision(ACT_FORWARD_NET, network=ctx.network)

    return _home_tier(ctx, est)


def _home_tier(ctx: DecisionContext, est: int) -> Decision:
    """Place within this network: furthest feasible view-free member.

    Candidates avoid peers that share a directly-linked user with this
    node — their slots serve that user's own requests — unless they are
    all there is. With nothing feasible, a non-gateway node escalates to
    its gateway; the gateway falls back to best effort.
    """
    free = _free_members(ctx)
    dlp = ctx.topology.direct_link_peers.get(ctx.node_id, frozenset())
    non_shared = [m for m in free if m not in dlp]
    candidates = non_shared if non_shared else free

    feasible: list[tuple[int, str]] = []
    for c in candidates:
        rtt = _peer_rtt(ctx, c)
        if rtt is None:
            continue
        if _budget_ok(ctx, rtt, est):
            feasible.append((rtt, c))

    if feasible:
        # Furthest feasible candidate. Equal-distance peers are rotated per
        # task rather than broken by id: every decider holds its own stale
        # copy of the same view, and a fixed tiebreak would send them all
        # to one node for a whole refresh period while its twin idles.
        feasible.sort(key=lambda item: (-item[0], item[1]))
        top_rtt = feasible[0][0]
        tied = [c for rtt, c in feasible if rtt == top_rtt]
        chosen = tied[ctx.task_seq % len(tied)]
        if chosen == ctx.node_id:
            return _EXECUTE
        return Decision(ACT_FORWARD_EN, target=chosen)

    if not ctx.is_eg:
        return Decision(ACT_FORWARD_NET, network=ctx.network)

    return _best_effort(ctx, est)


def decide_within(kind: str, ctx: DecisionContext) -> Decision:
    """Place a task already steered into this network by its home gateway.

    The steering choice is not revisited: the task stays in this network
    unless nothing here can take it (best effort / the adaptive policy's
    cloud tail).
    """
    if kind == POLICY_CLEDGE:
        return _home_tier(ctx, _estimate(ctx))
    if kind == POLICY_ADAPTIVE:
        return _adaptive_local(ctx)
    # The other policies never steer tasks across networks; arriving here
    # means a plain forwarding target, handled by the normal rules.
    return decide(kind, ctx)


def _best_effort(ctx: DecisionContext, est: int) -> Decision:
    """Minimise expected completion over here, own gateway, cloud.

    The local queue outlook is ground truth, so a busy self is priced by
    waiting here rather than excluded. The gateway qualifies only while
    the view shows it free (its queue depth is not synchronised); the
    cloud, which always has slots, anchors the menu. Every option pays the
    caller's result-fetch round trip, so a near queue usually beats a far
    idle slot. Ties keep the nearest option: these tasks have already
    blown their budget, so extra distance buys nothing.
    """
    fetch = 2 * ctx.return_delay_us
    score = ctx.pool.outlook_us(ctx.now_us, est) + max(est, fetch)
    best = score
    choice = Decision(ACT_BEST_EFFORT, target=ctx.node_id)
    if not ctx.is_eg:
        eg = ctx.topology.networks[ctx.network].eg
        if ctx.view.view_free(eg) > 0:
            rtt = ctx.topology.rtt_us(ctx.node_id, eg)
            score = rtt + max(est, rtt + fetch)
            if score < best:
                best = score
                choice = Decision(ACT_BEST_EFFORT, target=eg)
    cloud_rtt = ctx.topology.rtt_us(ctx.node_id, ctx.cloud_id)
    score = cloud_rtt + est
    if score < best:
        choice = Decision(ACT_BEST_EFFORT, target=ctx.cloud_id)
    return choice


def _adaptive_local(ctx: DecisionContext) -> Decision:
    """The adaptive ladder confined to this network, cloud as the tail."""
    if ctx.pool.free > 0:
        return _EXECUTE
    nearest: tuple[int, str] | None = None
    for m in ctx.topology.members(ctx.network):
        if m == ctx.node_id or ctx.view.view_free(m) <= 0:
            continue
        rtt = _peer_rtt(ctx, m)
        if rtt is None:
            continue
        if nearest is None or (rtt, m) < nearest:
            nearest = (rtt, m)
    if nearest is not None:
        return Decision(ACT_FORWARD_EN, target=nearest[1])
    return _FORWARD_CLOUD


def _adaptive(ctx: DecisionContext) -> Decision:
    """Nearest-free-first ladder with no deadline-feasibility checks."""
    if ctx.pool.free > 0:
        return _EXECUTE
    nearest: tuple[int, str] | None = None
    for m in ctx.topology.members(ctx.network):
        if m == ctx.node_id or ctx.view.view_free(m) <= 0:
            continue
        rtt = _peer_rtt(ctx, m)
        if rtt is None:
            continue
        if nearest is None or (rtt, m) < nearest:
            nearest = (rtt, m)
    if nearest is not None:
        return Decision(ACT_FORWARD_EN, target=nearest[1])
    if not ctx.is_eg:
        return Decision(ACT_FORWARD_NET, network=ctx.network)
    options: list[tuple[int, int]] = []
    for net_index, record in ctx.view.inter.items():
        if net_index == ctx.network or record.rtt_to_free_us is None:
            continue
        eg_rtt = ctx.view.eg_rtt_us.get(net_index)
        if eg_rtt is None:
            continue
        options.append((eg_rtt + record.rtt_to_free_us, net_index))
    if options:
        options.sort()
        return Decision(ACT_FORWARD_NET, network=options[0][1])
    return _FORWARD_CLOUD


_DECIDERS = {
    POLICY_CLEDGE: _cledge,
    POLICY_CLOUD_ONLY: _cloud_only,
    POLICY_EDGE_ONLY: _edge_only,
    POLICY_CLOUD_EDGE: _cloud_edge,
    POLICY_ADAPTIVE: _adaptive,
}


def revalidate(
    kind: str, ctx: DecisionContext, redirects: int, max_redirects: int,
    best_effort: bool,
) -> Decision:
    """Re-check a forwarded task on arrival against live local state.

    Best-effort tasks and the cloud always admit (the cloud pool is, for all
    practical purposes, never full). Otherwise a live free slot admits the
    task; a full pool re-runs the policy here, falling back to best-effort
    once the redirect budget is spent.
    """
    if ctx.node_id == ctx.cloud_id:
        if ctx.pool.free > 0:
            return _EXECUTE
        return _BUFFER
    if ctx.pool.free > 0:
        return _EXECUTE
    if best_effort or redirects > max_redirects:
        return _best_effort(ctx, _estimate(ctx))
    return _DECIDERS[kind](ctx)
