"""End-to-end simulation: forwarding plane + compute + sync + placement.

Protocol per task: the user expresses a task Interest named
/<service>/<input-hash> (input inlined when small enough). The first EN's
app decides placement; forwarding hints re-route the Interest to the chosen
node, which revalidates against live state on arrival. The accepting node
answers with a receipt Data (time-to-completion + a thunk name), fetching
the input first when it was too large to inline. The user immediately
expresses an Interest for the thunk, which parks at the executor until the
result is ready and then carries it home along the PIT reverse path. PIT
entries everywhere expire at task creation + deadline + a fixed margin, so
a result that is late by more than the margin finds no way back and the
task counts as dropped.

Synchronisation records travel as direct timed deliveries (they are a
stand-in for a pull exchange that completes after one RTT) and are charged
to the traffic ledger but do not occupy PIT state.
"""
from __future__ import annotations

from .compute import ProfileTable, SlotPool, TaskReceipt
from .config import SimConfig
from .engine import RandomStreams, Scheduler, ms_to_us, s_to_us
from .metrics import (
    CAT_INPUT_FETCH,
    CAT_RESULT_RETURN,
    CAT_SYNC_TIER1,
    CAT_SYNC_TIER2,
    CAT_TASK_FORWARDING,
    CAT_THUNK_FETCH,
    LOC_CLOUD,
    LOC_CROSS,
    LOC_HOME,
    MetricsCollector,
    MetricsReport,
    OUTCOME_DROPPED,
    OUTCOME_LATE,
    OUTCOME_ON_TIME,
)
from .ndn import APP_FACE, Data, Forwarder, Interest
from .policy import (
    ACT_BEST_EFFORT,
    ACT_BUFFER,
    ACT_EXECUTE,
    ACT_FORWARD_CLOUD,
    ACT_FORWARD_EN,
    ACT_FORWARD_NET,
    Decision,
    DecisionContext,
    decide_within,
    decider,
    revalidate,
)
from .sync import SyncManager, SyncView, record_wire_bytes
from .topology import ROLE_EG, ROLE_EN, Topology, build_topology
from .workload import (
    TaskFactory,
    Task,
    arrival_times,
    build_catalog,
    build_users,
    exec_time_us,
)

PARAMS_WIRE_BYTES = 24  # deadline + input hash + input size on the wire
RECEIPT_WIRE_BYTES = 32  # time-to-completion + thunk name


class _ExecState:
    """Per-compute-node application state."""

    __slots__ = ("running", "fetching", "parked", "done", "seen")

    def __init__(self) -> None:
        self.running: dict[int, Task] = {}
        self.fetching: dict[int, Task] = {}
        self.parked: set[int] = set()
        self.done: dict[int, Data] = {}
        self.seen: set[int] = set()  # task ids this node's app already decided


class _NodeRt:
    """Everything the per-node hot paths need, behind one dict lookup."""

    __slots__ = ("fw", "pool", "table", "view", "estate", "network",
                 "net_index", "is_eg", "gw_prefix")

    def __init__(self, fw: Forwarder, pool: SlotPool, table: ProfileTable,
                 view: SyncView, estate: _ExecState,
                 network: int | None, is_eg: bool,
                 gw_prefix: tuple | None) -> None:
        self.fw = fw
        self.pool = pool
        self.table = table
        self.view = view
        self.estate = estate
        self.network = network
        self.net_index = network if network is not None else 0
        self.is_eg = is_eg
        self.gw_prefix = gw_prefix  # this node's own network's gateway prefix


class Simulation:
    def __init__(self, cfg: SimConfig) -> None:
        self.cfg = cfg
        self.streams = RandomStreams(cfg.run.seed)
        self.topology: Topology = build_topology(cfg.topology, cfg.workload.users)
        self.catalog = build_catalog(self.streams, cfg.workload)
        self.users = build_users(self.topology, self.catalog, self.streams,
                                 cfg.workload)
        self.factory = TaskFactory(self.streams, cfg.workload, cfg.task,
                                   self.catalog,
                                   self.topology)
        self.scheduler = Scheduler()
        self.manager = SyncManager(self.topology, cfg)
        self.metrics = MetricsCollector(
            cfg.run.probe_services, s_to_us(cfg.run.reliability_window_s)
        )

        self.duration_us = s_to_us(cfg.workload.duration_s)
        self.margin_us = ms_to_us(cfg.ndn.pit_margin_ms)
        self.max_deadline_us = max(s.deadline_us for s in self.catalog.values())
        self.cutoff_us = self.duration_us + self.max_deadline_us + self.margin_us
        self.intra_period_us = ms_to_us(cfg.sync.intra_period_ms)
        self.inter_period_us = ms_to_us(cfg.sync.inter_period_ms)

        self.tasks: dict[int, Task] = {}
        self.fw: dict[str, Forwarder] = {}
        self.pools: dict[str, SlotPool] = {}
        self.tables: dict[str, ProfileTable] = {}
        self.exec_state: dict[str, _ExecState] = {}
        self.views = self.manager.views
        self.prefix_to_node: dict[tuple, str] = {}
        # per-user app state: pending receipts / pending results
        self.user_pending: dict[str, dict[tuple, list[int]]] = {}
        self.user_thunk: dict[str, dict[tuple, list[int]]] = {}

        # hot-path caches (values never change during a run)
        self.cloud = self.topology.cloud
        self.kind = cfg.policy.kind
        self.freshness_us = ms_to_us(cfg.cs.freshness_ms)
        self.header_bytes = cfg.packet.header_bytes
        self.inline_threshold = cfg.task.inline_threshold_bytes
        self.prior_fraction = cfg.profile.prior_fraction
        self.max_redirects = cfg.policy.max_redirects
        self.notify_enabled = cfg.sync.notify_threshold is not None
        self._led = self.metrics.ledger.bytes_by_category
        self._push = self.scheduler.queue.push
        self._edge: dict[tuple[str, str], tuple[int, int, bool]] = {}
        self._is_user = frozenset(self.topology.users)
        self._ctx = DecisionContext(
            node_id="", network=0, is_eg=False, now_us=0, elapsed_us=0,
            deadline_us=0, return_delay_us=0, service="", spec=None,
            pool=None, table=None, view=None, topology=self.topology,
            cloud_id=self.cloud, prior_fraction=self.prior_fraction,
        )

        self._build_nodes()
        self._build_fibs()
        for user_id in self.topology.users:
            self.user_pending[user_id] = {}
            self.user_thunk[user_id] = {}

    # ------------------------------------------------------------- setup

    def _build_nodes(self) -> None:
        cfg = self.cfg
        cs_fresh = ms_to_us(cfg.cs.freshness_ms)
        for node in self.topology.nodes.values():
            if node.role not in (ROLE_EN, ROLE_EG) and node.node_id != self.topology.cloud:
                continue
            nid = node.node_id
            self.fw[nid] = Forwarder(nid, cfg.cs.capacity, cs_fresh)
            if nid == self.topology.cloud:
                capacity = cfg.compute.cloud_slots
            else:
                capacity = node.slots or cfg.compute.slots_per_node
            self.pools[nid] = SlotPool(nid, capacity)
            self.tables[nid] = ProfileTable(cfg.profile.ewma_alpha)
            self.exec_state[nid] = _ExecState()
            self.prefix_to_node[node.prefix] = nid
        cloud = self.topology.cloud
        if cloud not in self.views:
            self.views[cloud] = SyncView(cloud, 0, False)

    def _build_fibs(self) -> None:
        topo = self.topology
        cloud = topo.cloud
        service_prefixes = [(svc,) for svc in self.catalog]
        gateway_prefixes = {
            net.index: net.gateway_prefix for net in topo.networks.values()
        }
        net_prefixes = {net.index: (f"net{net.index}",)
                        for net in topo.networks.values()}

        for nid, fw in self.fw.items():
            fib = fw.fib
            info = topo.nodes[nid]
            fib.insert_route(info.prefix, APP_FACE)
            for prefix in service_prefixes:
                fib.insert_route(prefix, APP_FACE)

            if nid == cloud:
                for net in topo.networks.values():
                    fib.insert_route(net_prefixes[net.index], net.eg)
                    fib.insert_route(gateway_prefixes[net.index], net.eg)
                continue

            net = topo.networks[info.network]
            if info.role == ROLE_EG:
                fib.insert_route(net.gateway_prefix, APP_FACE)
                fib.insert_route(("cloud",), cloud)
                for member in net.members:
                    if member != nid:
                        fib.insert_route(topo.nodes[member].prefix, member)
                for other in topo.networks.values():
                    if other.index != info.network:
                        fib.insert_route(net_prefixes[other.index], other.eg)
                        fib.insert_route(gateway_prefixes[other.index], other.eg)
                for user_id, uinfo in topo.users.items():
                    if uinfo.network != info.network:
                        continue
                    primary = uinfo.links[0][1]
                    face = user_id if primary == nid else primary
                    fib.insert_route(topo.nodes[user_id].prefix, face)
            else:  # front EN: everything not local goes via the gateway
                for index in net_prefixes:
                    fib.insert_route(net_prefixes[index], net.eg)
                    fib.insert_route(gateway_prefixes[index], net.eg)
                fib.insert_route(("cloud",), net.eg)
                for user_id, uinfo in topo.users.items():
                    if any(en == nid for _, en in uinfo.links):
                        fib.insert_route(topo.nodes[user_id].prefix, user_id)

    # --------------------------------------------------------------- run

    def run(self) -> MetricsReport:
        sched = self.scheduler
        for user_id in sorted(self.users):
            spec = self.users[user_id]
            for t in arrival_times(spec, self.cfg.workload.load, self.duration_us,
                                   self.streams, self.cfg.workload):
                sched.schedule_at(t, ("spawn", user_id, spec.service))
        sched.schedule_at(0, ("tick1",))
        sched.schedule_at(0, ("tick2",))
        sched.run_until(self.cutoff_us)
        for task in self.tasks.values():
            if task.outcome is None:
                task.outcome = OUTCOME_DROPPED
        return self.metrics.finalize(self.duration_us)

    # ---------------------------------------------------------- dispatch

    def _dispatch(self, payload: tuple) -> None:
        self._handlers[payload[0]](self, payload, self.scheduler.now)

    def _ev_interest(self, p: tuple, now: int) -> None:
        self._on_interest(p[1], p[2], p[3], now)

    def _ev_data(self, p: tuple, now: int) -> None:
        self._on_data(p[1], p[2], now)

    def _ev_user_data(self, p: tuple, now: int) -> None:
        self._on_user_data(p[1], p[2], now)

    def _ev_spawn(self, p: tuple, now: int) -> None:
        self._on_spawn(p[1], p[2], now)

    def _ev_done(self, p: tuple, now: int) -> None:
        self._on_done(p[1], p[2], now)

    def _ev_user_interest(self, p: tuple, now: int) -> None:
        self._on_user_interest(p[1], p[2], p[3], now)

    def _ev_fetch(self, p: tuple, now: int) -> None:
        user_id = p[1]
        primary = self.topology.users[user_id].links[0][1]
        self._send_interest(user_id, primary, p[2], now)

    def _ev_sync1(self, p: tuple, now: int) -> None:
        self.views[p[1]].receive_intra(p[2], p[3])

    def _ev_sync2(self, p: tuple, now: int) -> None:
        self.views[p[1]].receive_inter(p[2], p[3])

    def _ev_tick1(self, p: tuple, now: int) -> None:
        self._on_tick1(now)

    def _ev_tick2(self, p: tuple, now: int) -> None:
        self._on_tick2(now)

    _handlers = {
        "ix": _ev_interest,
        "dx": _ev_data,
        "udx": _ev_user_data,
        "spawn": _ev_spawn,
        "done": _ev_done,
        "uix": _ev_user_interest,
        "fetch": _ev_fetch,
        "sync1": _ev_sync1,
        "sync2": _ev_sync2,
        "tick1": _ev_tick1,
        "tick2": _ev_tick2,
    }

    # --------------------------------------------------------- transport

    def _link(self, src: str, face: str) -> tuple[int, int, bool]:
        """(one-way delay, hop count, face-is-a-user) — memoised."""
        got = self._edge.get((src, face))
        if got is None:
            topo = self.topology
            got = (
                topo.one_way_us(src, face),
                topo.hop_count(src, face),
                face in self._is_user,
            )
            self._edge[(src, face)] = got
        return got

    def _send_interest(self, src: str, face: str, interest: Interest,
                       now: int) -> None:
        delay, hops, to_user = self._link(src, face)
        self._led[interest.category] += interest.wire * hops
        if to_user:
            self._push(now + delay, ("uix", face, interest, src))
        else:
            self._push(now + delay, ("ix", face, interest, src))

    def _send_data(self, src: str, face: str, data: Data, now: int) -> None:
        if face == APP_FACE:
            self._on_app_data(src, data, now)
            return
        delay, hops, to_user = self._link(src, face)
        self._led[data.category] += data.wire * hops
        if to_user:
            self._push(now + delay, ("udx", face, data))
        else:
            self._push(now + delay, ("dx", face, data))

    def _emit_data(self, node: str, data: Data, now: int) -> None:
        """Publish Data at its origin: satisfy the local PIT, send downstream."""
        action = self.fw[node].process_data(data, now)
        if action[0] == "satisfy":
            for face in action[1]:
                self._send_data(node, face, data, now)

    # ------------------------------------------------------- NDN events

    def _on_interest(self, node: str, interest: Interest, in_face: str,
                     now: int) -> None:
        # Interest lifetime = the task's deadline plus a grace margin,
        # counted from when the entry is created: a thunk fetch issued
        # late in a task's life still needs its whole return leg.
        lifetime = interest.lifetime_us
        expiry = now + lifetime if lifetime else self.cutoff_us
        action = self.fw[node].process_interest(interest, in_face, now, expiry)
        tag = action[0]
        if tag == "forward":
            self._send_interest(node, action[1], interest, now)
        elif tag == "app":
            self._on_app_interest(node, interest, now)
        elif tag == "cs":
            self._send_data(node, in_face, action[1], now)
        elif (tag == "aggregated" and interest.kind == "task"
                and interest.task_id in self.exec_state[node].seen):
            # A redirected task looped back to a node whose app already
            # decided it once: the PIT aggregates, but the app must still
            # revalidate or the task would stall silently.
            self._on_app_interest(node, interest, now)
        # other "aggregated" and "drop_no_route" need no action; an
        # unroutable task Interest never completes and is swept as dropped.

    def _on_data(self, node: str, data: Data, now: int) -> None:
        action = self.fw[node].process_data(data, now)
        if action[0] == "satisfy":
            for face in action[1]:
                self._send_data(node, face, data, now)

    # ------------------------------------------------------- app: tasks

    def _on_app_interest(self, node: str, interest: Interest, now: int) -> None:
        if interest.kind == "thunk":
            state = self.exec_state[node]
            tid = interest.task_id
            if tid in state.done:
                self._emit_data(node, state.done[tid], now)
            else:
                state.parked.add(tid)
            return
        # task interest at a decision point
        task = self.tasks[interest.task_id]
        if task.outcome is not None:
            return
        self.exec_state[node].seen.add(task.task_id)
        ctx = self._context(node, task, now)
        info = self.topology.nodes[node]
        kind = self.kind
        if interest.hint is None:
            decision = decide(kind, ctx)
        elif (info.role == ROLE_EG and info.network is not None
                and interest.hint
                == self.topology.networks[info.network].gateway_prefix
                and not interest.best_effort):
            if task.home_network == info.network:
                # Escalated by an EN of this network: the gateway decides
                # afresh (it holds the tier-2 view the EN lacks).
                decision = decide(kind, ctx)
            else:
                # Steered here from another network: place it within this
                # network. Greedily running it on the gateway itself would
                # pile all cross traffic onto the one node every member
                # routes through, so it is placed like any local task —
                # the gateway stays a candidate, not the default.
                decision = decide_within(kind, ctx)
        else:
            if ctx.pool.free <= 0 and not interest.best_effort \
                    and node != self.cloud:
                task.redirects += 1
            decision = revalidate(
                kind, ctx, task.redirects,
                self.max_redirects, interest.best_effort,
            )
        self._apply(node, task, interest, decision, now)

    def _context(self, node: str, task: Task, now: int) -> DecisionContext:
        info = self.topology.nodes[node]
        ctx = self._ctx
        ctx.node_id = node
        ctx.network = info.network if info.network is not None else 0
        ctx.is_eg = info.role == ROLE_EG
        ctx.now_us = now
        ctx.elapsed_us = now - task.created_at_us
        ctx.deadline_us = task.deadline_us
        ctx.return_delay_us = self._link(node, task.user_id)[0]
        ctx.service = task.service
        ctx.spec = self.catalog[task.service]
        ctx.pool = self.pools[node]
        ctx.table = self.tables[node]
        ctx.view = self.views[node]
        ctx.task_seq = task.task_id
        return ctx

    def _apply(self, node: str, task: Task, interest: Interest,
               decision: Decision, now: int) -> None:
        action = decision.action
        if action == ACT_EXECUTE or action == ACT_BUFFER:
            self._accept(node, task, interest, now)
            return
        if action == ACT_BEST_EFFORT:
            if decision.target == node:
                self._accept(node, task, interest, now)
                return
            interest.best_effort = True
            target = decision.target
            self.views[node].note_remote_placement(target)
            interest.hint = self.topology.nodes[target].prefix
            self._forward_from_app(node, interest, now)
            return
        if action == ACT_FORWARD_EN:
            target = decision.target
            self.views[node].note_remote_placement(target)
            interest.hint = self.topology.nodes[target].prefix
        elif action == ACT_FORWARD_CLOUD:
            interest.hint = ("cloud",)
        elif action == ACT_FORWARD_NET:
            interest.hint = self.topology.networks[decision.network].gateway_prefix
        else:  # pragma: no cover - defensive
            raise RuntimeError(f"unexpected decision {action!r}")
        self._forward_from_app(node, interest, now)

    def _forward_from_app(self, node: str, interest: Interest, now: int) -> None:
        """Forward a task Interest this node's app already owns.

        The local PIT entry from the inbound leg stays in place so the
        receipt can flow back; the FIB picks the next hop from the hint.
        """
        fib = self.fw[node].fib
        face = fib.lookup(interest.hint)
        if face is None:
            face = fib.lookup(interest.name)
        if face is None or face == APP_FACE:
            self.fw[node].counters["no_route"] += 1
            return
        self._send_interest(node, face, interest, now)

    # ---------------------------------------------------- app: executor

    def _accept(self, node: str, task: Task, interest: Interest,
                now: int) -> None:
        """Commit to executing here: answer with a receipt, then run/queue.

        The receipt/thunk handshake exists for edge nodes, whose bounded
        pools make completion time worth quoting and whose state the PIT
        should not hold open. The cloud admits instantly, so it skips the
        handshake and answers the task Interest with the result itself —
        one round trip instead of two.
        """
        if node == self.cloud:
            self._set_location(task, node)
            if task.input_size > self.inline_threshold:
                self._fetch_input(node, task, now)
            else:
                self._start_or_queue(node, task, now)
            return
        pool = self.pools[node]
        view = self.views[node]
        est = view.estimate_exec_us(
            self.tables[node], task.service, self.catalog[task.service],
            self.prior_fraction,
        )
        ttc = est + pool.outlook_us(now, est)
        needs_fetch = task.input_size > self.inline_threshold
        if needs_fetch:
            ttc += self.topology.rtt_us(node, task.user_id)
        thunk = self.topology.nodes[node].prefix + ("thunk", str(task.task_id))
        receipt = Data(
            name=task.name,
            wire=self.header_bytes + RECEIPT_WIRE_BYTES,
            freshness_us=self.freshness_us,
            category=CAT_TASK_FORWARDING,
            task_id=task.task_id,
            kind="receipt",
            info=TaskReceipt(ttc, thunk),
            params=interest.params,
        )
        self._set_location(task, node)
        self._emit_data(node, receipt, now)
        if needs_fetch:
            self._fetch_input(node, task, now)
        else:
            self._start_or_queue(node, task, now)

    def _fetch_input(self, node: str, task: Task, now: int) -> None:
        """Pull a too-large-to-inline input from its user, then run."""
        self.exec_state[node].fetching[task.task_id] = task
        user_prefix = self.topology.nodes[task.user_id].prefix
        fetch = Interest(
            name=user_prefix + ("input", task.input_hash),
            kind="input",
            category=CAT_INPUT_FETCH,
            wire=self.header_bytes,
            task_id=task.task_id,
            lifetime_us=task.deadline_us + self.margin_us,
        )
        action = self.fw[node].process_interest(
            fetch, APP_FACE, now,
            now + task.deadline_us + self.margin_us,
        )
        if action[0] == "forward":
            self._send_interest(node, action[1], fetch, now)

    def _set_location(self, task: Task, node: str) -> None:
        task.executed_at = node
        info = self.topology.nodes[node]
        task.exec_network = info.network
        if node == self.cloud:
            task.location = LOC_CLOUD
        elif info.network == task.home_network:
            task.location = LOC_HOME
        else:
            task.location = LOC_CROSS

    def _start_or_queue(self, node: str, task: Task, now: int) -> None:
        pool = self.pools[node]
        if pool.in_use < pool.capacity:
            self._start(node, task, now)
        else:
            est = self.views[node].estimate_exec_us(
                self.tables[node], task.service, self.catalog[task.service],
                self.prior_fraction,
            )
            pool.enqueue(task, est)
        self._maybe_notify(node, now)

    def _start(self, node: str, task: Task, now: int) -> None:
        if task.exec_us < 0:
            task.exec_us = exec_time_us(
                task, self.catalog[task.service], self.streams,
                self.cfg.workload,
            )
        completes = now + task.exec_us
        self.pools[node].try_admit(completes)
        self.exec_state[node].running[task.task_id] = task
        self.scheduler.schedule_at(completes, ("done", node, task.task_id))

    def _on_done(self, node: str, task_id: int, now: int) -> None:
        state = self.exec_state[node]
        task = state.running.pop(task_id)
        pool = self.pools[node]
        pool.release(now)
        self.tables[node].observe(task.service, task.exec_us)
        if node == self.cloud:
            # No handshake at the cloud: the result satisfies the task
            # Interest itself along the still-pending reverse path.
            result = Data(
                name=task.name,
                wire=self.header_bytes + task.result_size,
                freshness_us=self.freshness_us,
                category=CAT_RESULT_RETURN,
                task_id=task_id,
                kind="result",
                params=(task.deadline_us, task.input_hash, task.input_size),
            )
            self._emit_data(node, result, now)
        else:
            result = Data(
                name=self.topology.nodes[node].prefix
                + ("thunk", str(task_id)),
                wire=self.header_bytes + task.result_size,
                freshness_us=self.freshness_us,
                category=CAT_RESULT_RETURN,
                task_id=task_id,
                kind="result",
            )
            state.done[task_id] = result
            if task_id in state.parked:
                state.parked.discard(task_id)
                self._emit_data(node, result, now)
        while pool.in_use < pool.capacity:
            queued = pool.pop_waiting()
            if queued is None:
                break
            self._start(node, queued, now)
        self._maybe_notify(node, now)

    def _on_app_data(self, node: str, data: Data, now: int) -> None:
        """Data satisfying an Interest this node's app expressed (input fetch)."""
        if data.kind != "input":
            return
        task = self.exec_state[node].fetching.pop(data.task_id, None)
        if task is not None:
            self._start_or_queue(node, task, now)

    # -------------------------------------------------------- app: user

    def _on_spawn(self, user_id: str, service: str, now: int) -> None:
        task = self.factory.make(user_id, service, now)
        task.offloaded_at_us = now
        self.tasks[task.task_id] = task
        self.metrics.add_task(task)
        inline = task.input_size <= self.inline_threshold
        wire = self.header_bytes + PARAMS_WIRE_BYTES
        if inline:
            wire += task.input_size
        interest = Interest(
            name=task.name,
            params=(task.deadline_us, task.input_hash, task.input_size),
            wire=wire,
            task_id=task.task_id,
            lifetime_us=task.deadline_us + self.margin_us,
        )
        key = (interest.name, interest.params)
        self.user_pending[user_id].setdefault(key, []).append(task.task_id)
        primary = self.topology.users[user_id].links[0][1]
        self._send_interest(user_id, primary, interest, now)

    def _on_user_interest(self, user_id: str, interest: Interest,
                          from_node: str, now: int) -> None:
        """Input fetch reaching the user: answer with the input Data."""
        if interest.kind != "input":
            return
        data = Data(
            name=interest.name,
            wire=self.header_bytes + self.tasks[interest.task_id].input_size,
            freshness_us=self.freshness_us,
            category=CAT_INPUT_FETCH,
            task_id=interest.task_id,
            kind="input",
        )
        self._send_data(user_id, from_node, data, now)

    def _on_user_data(self, user_id: str, data: Data, now: int) -> None:
        if data.kind == "receipt":
            key = (data.name, data.params)
            tids = self.user_pending[user_id].pop(key, [])
            if not tids:
                return
            receipt: TaskReceipt = data.info
            thunk_key = (receipt.thunk, None)
            thunks = self.user_thunk[user_id]
            first = thunk_key not in thunks
            entry = thunks.setdefault(thunk_key, [])
            origin_tid = int(receipt.thunk[-1])
            origin_node = self.prefix_to_node.get(receipt.thunk[:-2])
            for tid in tids:
                task = self.tasks[tid]
                if task.executed_at is None and origin_node is not None:
                    self._set_location(task, origin_node)
                entry.append(tid)
            if first:
                origin_task = self.tasks[origin_tid]
                interest = Interest(
                    name=receipt.thunk,
                    kind="thunk",
                    category=CAT_THUNK_FETCH,
                    wire=self.header_bytes,
                    task_id=origin_tid,
                    lifetime_us=origin_task.deadline_us + self.margin_us,
                )
                # Come back when the result should be ready: the receipt
                # quotes a time-to-completion, so schedule the fetch to
                # arrive then rather than camp on the executor's doorstep.
                lead = 0
                if origin_node is not None:
                    lead = self.topology.rtt_us(user_id, origin_node)
                delay = max(0, receipt.ttc_us - lead)
                self.scheduler.schedule_at(
                    now + delay, ("fetch", user_id, interest)
                )
        elif data.kind == "result":
            key = (data.name, data.params)
            tids = self.user_thunk[user_id].pop(key, [])
            if not tids:
                # Direct cloud result: satisfies the task Interest itself.
                tids = self.user_pending[user_id].pop(key, [])
            for tid in tids:
                task = self.tasks[tid]
                if task.outcome is not None:
                    continue
                task.completed_at_us = now
                on_time = now - task.created_at_us <= task.deadline_us
                task.outcome = OUTCOME_ON_TIME if on_time else OUTCOME_LATE

    # ------------------------------------------------------------- sync

    def _broadcast_intra(self, node: str, now: int) -> None:
        record = self.manager.build_intra_record(
            node, self.pools[node], self.tables[node], now
        )
        wire = record_wire_bytes(len(record.deltas), self.cfg)
        topo = self.topology
        for peer in self.manager.intra_peers(node):
            rtt = topo.rtt_us(node, peer)
            self.metrics.ledger.charge(CAT_SYNC_TIER1, wire,
                                       topo.hop_count(node, peer))
            self.scheduler.schedule_at(now + rtt, ("sync1", peer, record, rtt))

    def _broadcast_inter(self, eg: str, now: int) -> None:
        record = self.manager.build_inter_record(eg, self.pools[eg], now)
        wire = record_wire_bytes(0, self.cfg)
        topo = self.topology
        for net in topo.networks.values():
            if net.eg == eg:
                continue
            rtt = topo.rtt_us(eg, net.eg)
            self.metrics.ledger.charge(CAT_SYNC_TIER2, wire,
                                       topo.hop_count(eg, net.eg))
            self.scheduler.schedule_at(now + rtt, ("sync2", net.eg, record, rtt))

    def _on_tick1(self, now: int) -> None:
        for net in self.topology.networks.values():
            for member in net.members:
                self._broadcast_intra(member, now)
        nxt = now + self.intra_period_us
        if nxt < self.duration_us:
            self.scheduler.schedule_at(nxt, ("tick1",))

    def _on_tick2(self, now: int) -> None:
        for net in self.topology.networks.values():
            self._broadcast_inter(net.eg, now)
        nxt = now + self.inter_period_us
        if nxt < self.duration_us:
            self.scheduler.schedule_at(nxt, ("tick2",))

    def _maybe_notify(self, node: str, now: int) -> None:
        if not self.notify_enabled:
            return
        # The cloud is not part of any edge network and never syncs.
        if self.topology.nodes[node].network is None:
            return
        if self.manager.should_notify(node, self.pools[node]):
            self._broadcast_intra(node, now)
            if self.topology.nodes[node].role == ROLE_EG:
                self._broadcast_inter(node, now)


def run_simulation(cfg: SimConfig) -> tuple[MetricsReport, list[Task]]:
    sim = Simulation(cfg)
    report = sim.run()
    return report, list(sim.tasks.values())
