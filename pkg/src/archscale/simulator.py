"""Deterministic discrete-time execution of the email pipeline.

Each tick: the generator emits emails, balancers accept or drop requests
against bounded queues, ready instances spend their per-tick compute budget
on queued requests (completions forward downstream in the same tick but
become processable the next one), monitors fire on their period, and
warming orchestrations come online when their startup elapses.

Requests are bit-packed ints (email id, part kind, virus flag) and the tick
loop is written flat on purpose: a two-hour reference run pushes ~30M
requests through the pipeline.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .capacity import (
    Configuration,
    ScaleLadder,
    build_capacity_table,
    is_infinite,
    request_cost,
    system_mcl,
)
from .model import PART_KINDS, SystemArchitecture, validate_architecture
from .planner import (
    DeploymentRegistry,
    TimedOrchestration,
    plan_placement,
    synthesize_orchestration,
    synthesize_removal,
    synthesize_undeployment,
)
from .scaler import (
    ScalerParams,
    Trigger,
    diff_reconfiguration,
    local_target_instances,
    scaling_trigger,
    select_global_configuration,
)
from .workload import WorkloadSpec, generate_arrivals, rate_curve, sample_email_batch


class SimulationError(RuntimeError):
    """The simulation cannot start or the inputs are inconsistent."""


# Part kind codes (indices into PART_KINDS).
P_EMAIL, P_HEADER, P_LINKS, P_TEXT, P_BLOCK, P_ATTACHMENT, P_REPORT = range(7)

ENQUEUED = "enqueued"
DROPPED = "dropped"

# Emission modes for compiled routes.
_M_ONE = 0
_M_PASS = 1
_M_BLOCKS = 2
_M_ATT_FANOUT = 3
# Conditions.
_C_ALWAYS = 0
_C_CLEAN = 1
_C_INFECTED = 2


class Policy:
    GLOBAL = "global"
    LOCAL = "local"


@dataclass(frozen=True)
class SimConfig:
    duration: int  # ticks
    workload: WorkloadSpec
    seed: int = 0
    ticks_per_second: int = 30
    queue_capacity: int = 500
    policy: str = Policy.GLOBAL
    params: ScalerParams = field(default_factory=ScalerParams)
    exact_arrivals: bool = False
    report_interval_s: int = 1

    def __post_init__(self):
        if self.ticks_per_second < 1 or self.queue_capacity < 1:
            raise ValueError("ticks_per_second >= 1 and queue_capacity >= 1 required")
        if self.policy not in (Policy.GLOBAL, Policy.LOCAL):
            raise ValueError(f"unknown policy {self.policy!r}")


@dataclass(frozen=True)
class RequestInstance:
    """One in-flight message; the engine packs these into ints internally."""

    email_id: int
    part: str
    payload_mb: float
    born_at: int
    cost_remaining: float


@dataclass
class Balancer:
    """Bounded FIFO in front of a service's instances.

    Requests enqueued during a tick become available the next tick; the
    capacity check covers both segments.
    """

    capacity: int
    ready: deque = field(default_factory=deque)
    pending: list = field(default_factory=list)

    def dispatch(self, request: int) -> str:
        if len(self.ready) + len(self.pending) >= self.capacity:
            return DROPPED
        self.pending.append(request)
        return ENQUEUED

    def promote(self) -> None:
        if self.pending:
            self.ready.extend(self.pending)
            self.pending.clear()

    def __len__(self) -> int:
        return len(self.ready) + len(self.pending)


class InstanceRuntime:
    """One deployed instance: current work item plus per-tick budget."""

    __slots__ = ("iid", "service_idx", "vm_id", "ready_at", "draining",
                 "cur_req", "cur_cost", "budget", "unit_cost")

    def __init__(self, iid: str, service_idx: int, vm_id: str,
                 ready_at: int, budget: float, unit_cost: float):
        self.iid = iid
        self.service_idx = service_idx
        self.vm_id = vm_id
        self.ready_at = ready_at
        self.draining = False
        self.cur_req = -1
        self.cur_cost = 0.0
        self.budget = budget
        self.unit_cost = unit_cost


def process_tick(inst: InstanceRuntime, ready: deque) -> list[int]:
    """Spend this tick's budget; returns requests completed this tick.

    Idle budget is not banked: when the queue runs dry the leftover is lost.
    A request whose cost exceeds one budget carries its remainder over.
    """
    completed: list[int] = []
    budget = inst.budget
    req = inst.cur_req
    cost = inst.cur_cost
    while True:
        if req < 0:
            if inst.draining or not ready:
                break
            req = ready.popleft()
            cost = inst.unit_cost
        if cost <= budget:
            budget -= cost
            completed.append(req)
            req = -1
            cost = 0.0
            if budget <= 0.0:
                break
        else:
            cost -= budget
            break
    inst.cur_req = req
    inst.cur_cost = cost
    return completed


@dataclass
class ScalingEvent:
    tick: int
    policy: str
    scope: str  # "system" or a service name
    trigger: str  # "up" | "down"
    action: str  # "deploy" | "undeploy" | "defer"
    detail: str


@dataclass
class IntervalRow:
    t_s: int  # interval start, seconds
    inbound_eps: float
    generated: int
    completed: int
    lost_emails: int
    dropped_requests: int
    mean_latency_s: Optional[float]
    capacity_eps: float
    total_instances: int
    vm_cost_total: float
    deployed_deltas: str
    service_counts: tuple[int, ...]


@dataclass
class MetricsTimeline:
    """Per-interval metrics plus run-level totals, events and orchestrations."""

    policy: str
    seed: int
    ticks_per_second: int
    service_names: tuple[str, ...]
    rows: list[IntervalRow] = field(default_factory=list)
    events: list[ScalingEvent] = field(default_factory=list)
    orchestrations: list[TimedOrchestration] = field(default_factory=list)
    generated: int = 0
    completed: int = 0
    lost: int = 0
    dropped_requests: int = 0
    in_flight_end: int = 0
    latency_sum_ticks: int = 0
    ticks_to_target: Optional[int] = None
    peak_total_instances: int = 0
    total_vm_cost: Fraction = Fraction(0)

    @property
    def mean_latency_s(self) -> Optional[float]:
        if not self.completed:
            return None
        return self.latency_sum_ticks / self.completed / self.ticks_per_second

    def to_csv(self) -> str:
        head = ["t_s", "inbound_eps", "generated", "completed", "lost_emails",
                "dropped_requests", "mean_latency_s", "capacity_eps",
                "total_instances", "vm_cost_total", "deployed_deltas"]
        head += [f"n_{name}" for name in self.service_names]
        lines = [",".join(head)]
        for r in self.rows:
            cells = [
                str(r.t_s),
                f"{r.inbound_eps:.6f}",
                str(r.generated),
                str(r.completed),
                str(r.lost_emails),
                str(r.dropped_requests),
                "" if r.mean_latency_s is None else f"{r.mean_latency_s:.6f}",
                f"{r.capacity_eps:.6f}",
                str(r.total_instances),
                f"{r.vm_cost_total:.6f}",
                r.deployed_deltas,
            ]
            cells += [str(c) for c in r.service_counts]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def events_to_csv(self) -> str:
        lines = ["tick,t_s,policy,scope,trigger,action,detail"]
        for e in self.events:
            t_s = e.tick / self.ticks_per_second
            lines.append(f"{e.tick},{t_s:.3f},{e.policy},{e.scope},{e.trigger},{e.action},{e.detail}")
        return "\n".join(lines) + "\n"


class _ServiceState:
    __slots__ = ("idx", "name", "cores", "balancer", "insts", "draining_count",
                 "window_arrivals", "mcl", "mf", "base_n", "committed", "active_order")

    def __init__(self, idx: int, name: str, cores: int, capacity: int):
        self.idx = idx
        self.name = name
        self.cores = cores
        self.balancer = Balancer(capacity)
        self.insts: list[InstanceRuntime] = []
        self.draining_count = 0
        self.window_arrivals = 0
        self.mcl = None  # Rational, set at build
        self.mf = None
        self.base_n = 0
        self.committed = 0
        self.active_order: list[InstanceRuntime] = []


def _compile_routes(arch: SystemArchitecture) -> tuple[list[list[list[tuple]]], int]:
    """Per (service, inbound part): emission specs (cond, target, part, mode)."""
    index = {s.name: i for i, s in enumerate(arch.services)}
    entry = arch.entry_service()
    if entry is None and arch.services:
        raise SimulationError("pipeline has no unique entry service")
    inbound: dict[str, set[int]] = {s.name: set() for s in arch.services}
    if entry is not None:
        inbound[entry].add(P_EMAIL)
    for e in arch.pipeline:
        inbound[e.dst].add(PART_KINDS.index(e.part))

    routes: list[list[list[tuple]]] = [
        [[] for _ in PART_KINDS] for _ in arch.services
    ]
    for e in arch.pipeline:
        src_idx = index[e.src]
        q = PART_KINDS.index(e.part)
        cond = _C_CLEAN if e.when == "clean" else _C_INFECTED if e.when == "infected" else _C_ALWAYS
        fired = False
        for p in sorted(inbound[e.src]):
            if q == P_REPORT:
                mode = _M_ONE
            elif q == p:
                mode = _M_PASS
            elif p == P_EMAIL and q in (P_HEADER, P_LINKS, P_TEXT):
                mode = _M_ONE
            elif p == P_EMAIL and q == P_ATTACHMENT:
                mode = _M_ATT_FANOUT
            elif p == P_TEXT and q == P_BLOCK:
                mode = _M_BLOCKS
            else:
                continue
            routes[src_idx][p].append((cond, index[e.dst], q, mode))
            fired = True
        if not fired:
            raise SimulationError(
                f"pipeline edge {e.src} -> {e.dst} ({e.part}) matches no part "
                f"arriving at {e.src}")
    return routes, (index[entry] if entry is not None else -1)


def run_simulation(arch: SystemArchitecture, ladder: ScaleLadder, config: SimConfig) -> MetricsTimeline:
    """Execute the pipeline under the configured workload and policy."""
    report = validate_architecture(arch)
    if not report.ok:
        raise SimulationError(
            "architecture fails validation: " + "; ".join(str(v) for v in report))
    if len(ladder.base.counts) != len(arch.services):
        raise SimulationError("scale ladder does not match the architecture")

    table = build_capacity_table(arch)
    tps = config.ticks_per_second
    duration = config.duration
    interval_ticks = config.report_interval_s * tps
    period = config.params.monitoring_period
    names = tuple(s.name for s in arch.services)

    routes, entry_idx = _compile_routes(arch)
    if entry_idx < 0:
        raise SimulationError("cannot simulate an architecture without services")

    # Traffic, pre-generated for determinism and speed.
    ss = np.random.SeedSequence(config.seed)
    arr_seed, email_seed = ss.spawn(2)
    arrivals = generate_arrivals(config.workload, arr_seed, duration, tps, config.exact_arrivals)
    rates = rate_curve(config.workload, duration, tps)
    peak_rate = Fraction(str(float(np.max(rates)))) if duration else Fraction(0)
    total_emails = int(arrivals.sum())
    email_rng = np.random.Generator(np.random.PCG64(email_seed))
    batch = sample_email_batch(arch.profile, email_rng, total_emails)
    arrivals_l = arrivals.tolist()
    blocks_l = batch.blocks.tolist()
    atts_l = batch.attachments.tolist()
    masks_l = batch.virus_masks.tolist()

    # Deployment state.
    registry = DeploymentRegistry(arch)
    svc_states = [
        _ServiceState(i, s.name, s.cores_required, config.queue_capacity)
        for i, s in enumerate(arch.services)
    ]
    for st, entry, base_n in zip(svc_states, table.entries, ladder.base.counts):
        st.mcl = entry.mcl
        st.mf = entry.mf
        st.base_n = base_n

    timeline = MetricsTimeline(
        policy=config.policy, seed=config.seed, ticks_per_second=tps, service_names=names)

    unit_costs: dict[tuple[str, Fraction], float] = {}

    def make_instances(orch: TimedOrchestration, ready_at: int) -> list[InstanceRuntime]:
        out = []
        for iid in orch.created_instance_ids():
            rec = registry.instances[iid]
            st = svc_states[arch.service_index(rec.service)]
            vm = registry.vms[rec.vm_id]
            spc = vm.vm_type.speed_per_core
            key = (rec.service, spc)
            if key not in unit_costs:
                unit_costs[key] = float(request_cost(arch.service(rec.service), spc, tps, st.mcl))
            inst = InstanceRuntime(
                iid, st.idx, rec.vm_id, ready_at,
                budget=float(spc * st.cores), unit_cost=unit_costs[key])
            st.insts.append(inst)
            st.active_order.append(inst)
            out.append(inst)
        return out

    # Ready-capacity tracking (for time-to-target and the capacity column).
    ready_counts = [0] * len(svc_states)
    ready_events: dict[int, list[tuple[int, int]]] = {}  # tick -> [(svc_idx, delta)]
    capacity_now = Fraction(0)

    def recompute_capacity() -> None:
        nonlocal capacity_now, ticks_to_target
        cap = system_mcl(Configuration(tuple(ready_counts)), table)
        capacity_now = Fraction(10 ** 9) if is_infinite(cap) else Fraction(cap)
        if ticks_to_target is None and capacity_now >= peak_rate:
            ticks_to_target = tick

    def schedule_ready(insts: list[InstanceRuntime], at: int) -> None:
        if at <= tick:  # zero startup: the event queue for this tick already ran
            for inst in insts:
                ready_counts[inst.service_idx] += 1
            recompute_capacity()
            return
        for inst in insts:
            ready_events.setdefault(at, []).append((inst.service_idx, 1))

    # Base deployment: must be placeable, live from tick 0.
    base_delta = {s.name: n for s, n in zip(arch.services, ladder.base.counts) if n > 0}
    try:
        base_placement = plan_placement(base_delta, arch, arch.vm_catalog)
        base_orch = synthesize_orchestration(base_placement, arch, registry)
        registry.apply(base_orch)
    except Exception as exc:
        raise SimulationError(f"infeasible initial base deployment: {exc}") from exc
    timeline.orchestrations.append(base_orch)
    timeline.total_vm_cost += base_placement.total_cost
    base_insts = make_instances(base_orch, ready_at=0)
    for st in svc_states:
        st.committed = sum(1 for i in base_insts if i.service_idx == st.idx)
    tick = 0
    ticks_to_target: Optional[int] = None
    for inst in base_insts:
        ready_counts[inst.service_idx] += 1
    recompute_capacity()

    # Policy state.
    num_scales = ladder.num_scales
    deployed_deltas = [0] * num_scales
    committed_mcl = system_mcl(ladder.base, table)
    delta_units: list[list[dict]] = [[] for _ in range(num_scales)]  # stacks per index
    delta_placements: dict[int, object] = {}
    local_placements: dict[tuple[str, int], object] = {}
    local_units: dict[str, list[dict]] = {name: [] for name in names}
    window_generated = 0
    finite_services = [st for st in svc_states if not is_infinite(st.mcl)]

    def fmt_deltas(vec) -> str:
        return "|".join(str(v) for v in vec)

    def enact_deploy_delta(index: int, now: int) -> None:
        nonlocal capacity_now
        if index not in delta_placements:
            delta = {s.name: c for s, c in zip(arch.services, ladder.deltas[index].counts) if c > 0}
            delta_placements[index] = plan_placement(delta, arch, arch.vm_catalog)
        placement = delta_placements[index]
        orch = synthesize_orchestration(placement, arch, registry)
        registry.apply(orch)
        timeline.orchestrations.append(orch)
        timeline.total_vm_cost += placement.total_cost
        ready_at = now + orch.startup_ticks
        insts = make_instances(orch, ready_at)
        for inst in insts:
            svc_states[inst.service_idx].committed += 1
        delta_units[index].append({"ready_tick": ready_at, "orch": orch, "insts": insts})
        schedule_ready(insts, ready_at)

    def enact_undeploy_delta(index: int, now: int) -> None:
        unit = delta_units[index].pop()
        undeploy = synthesize_undeployment(unit["orch"])
        registry.apply(undeploy)
        timeline.orchestrations.append(undeploy)
        for inst in unit["insts"]:
            st = svc_states[inst.service_idx]
            if not inst.draining:
                inst.draining = True
                st.draining_count += 1
                st.committed -= 1
                if now >= inst.ready_at:
                    ready_counts[st.idx] -= 1
            if inst in st.active_order:
                st.active_order.remove(inst)
        recompute_capacity()

    def global_monitor(now: int) -> None:
        nonlocal committed_mcl, window_generated
        window_s = Fraction(period, tps)
        inbound = Fraction(window_generated) / window_s
        window_generated = 0
        trig = scaling_trigger(inbound, committed_mcl, config.params)
        if trig is Trigger.NONE:
            return
        _, target, _ = select_global_configuration(inbound, config.params, ladder, table)
        plan = diff_reconfiguration(tuple(deployed_deltas), target)
        if not len(plan):
            return
        old = fmt_deltas(deployed_deltas)
        enacted = 0
        deferred = 0
        for step in plan:
            if step.deploy:
                enact_deploy_delta(step.delta_index, now)
                deployed_deltas[step.delta_index] += 1
                enacted += 1
            else:
                warming = any(u["ready_tick"] > now for u in delta_units[step.delta_index])
                if warming:
                    deferred += 1
                    continue
                enact_undeploy_delta(step.delta_index, now)
                deployed_deltas[step.delta_index] -= 1
                enacted += 1
        committed_mcl = system_mcl(ladder.configuration_for(tuple(deployed_deltas)), table)
        if enacted:
            timeline.events.append(ScalingEvent(
                now, Policy.GLOBAL, "system", trig.value, "deploy" if trig is Trigger.UP else "undeploy",
                f"{old}->{fmt_deltas(deployed_deltas)}"))
        if deferred:
            timeline.events.append(ScalingEvent(
                now, Policy.GLOBAL, "system", trig.value, "defer",
                f"{deferred} undeploys while warming"))

    def enact_local_deploy(st: _ServiceState, count: int, now: int) -> None:
        key = (st.name, count)
        if key not in local_placements:
            local_placements[key] = plan_placement({st.name: count}, arch, arch.vm_catalog)
        placement = local_placements[key]
        orch = synthesize_orchestration(placement, arch, registry)
        registry.apply(orch)
        timeline.orchestrations.append(orch)
        timeline.total_vm_cost += placement.total_cost
        ready_at = now + orch.startup_ticks
        insts = make_instances(orch, ready_at)
        st.committed += count
        local_units[st.name].append({"ready_tick": ready_at, "insts": insts})
        schedule_ready(insts, ready_at)

    def enact_local_undeploy(st: _ServiceState, count: int, now: int) -> None:
        victims: list[InstanceRuntime] = []
        for inst in reversed(st.active_order):
            if len(victims) == count:
                break
            victims.append(inst)
        removal = synthesize_removal([v.iid for v in victims], arch, registry)
        registry.apply(removal)
        timeline.orchestrations.append(removal)
        for inst in victims:
            inst.draining = True
            st.draining_count += 1
            st.committed -= 1
            st.active_order.remove(inst)
            if now >= inst.ready_at:
                ready_counts[st.idx] -= 1
        recompute_capacity()

    def local_monitor(now: int) -> None:
        window_s = Fraction(period, tps)
        for st in finite_services:
            inbound = Fraction(st.window_arrivals) / window_s
            st.window_arrivals = 0
            total = Fraction(st.mcl) * st.committed
            trig = scaling_trigger(inbound, total, config.params)
            if trig is Trigger.NONE:
                continue
            target = local_target_instances(inbound, config.params, st.mcl, st.base_n, st.committed)
            if target > st.committed:
                add = target - st.committed
                enact_local_deploy(st, add, now)
                timeline.events.append(ScalingEvent(
                    now, Policy.LOCAL, st.name, trig.value, "deploy",
                    f"{st.committed - add}->{st.committed}"))
            elif target < st.committed:
                if any(u["ready_tick"] > now for u in local_units[st.name]):
                    timeline.events.append(ScalingEvent(
                        now, Policy.LOCAL, st.name, trig.value, "defer",
                        f"hold {st.committed} while warming"))
                    continue
                drop_n = st.committed - target
                enact_local_undeploy(st, drop_n, now)
                timeline.events.append(ScalingEvent(
                    now, Policy.LOCAL, st.name, trig.value, "undeploy",
                    f"{target + drop_n}->{st.committed}"))

    # Email bookkeeping: id -> [outstanding, born_tick, lost_flag]
    emails: dict[int, list] = {}
    active_emails = 0
    next_email = 0

    # Interval accumulators.
    iv_generated = 0
    iv_completed = 0
    iv_lost = 0
    iv_dropped = 0
    iv_latency_ticks = 0
    interval_start_tick = 0

    entry_state = svc_states[entry_idx]
    is_global = config.policy == Policy.GLOBAL

    for tick in range(duration):
        # Ready events from finished startups.
        due = ready_events.pop(tick, None)
        if due:
            for svc_idx, delta in due:
                ready_counts[svc_idx] += delta
            recompute_capacity()

        # 1. Workload arrivals.
        n_arr = arrivals_l[tick]
        if n_arr:
            bal = entry_state.balancer
            qroom = bal.capacity
            ready_q = bal.ready
            pend = bal.pending
            for _ in range(n_arr):
                eid = next_email
                next_email += 1
                emails[eid] = [1, tick, False]
                active_emails += 1
                entry_state.window_arrivals += 1
                if len(ready_q) + len(pend) >= qroom:
                    iv_dropped += 1
                    timeline.dropped_requests += 1
                    rec = emails[eid]
                    rec[0] -= 1
                    rec[2] = True
                    iv_lost += 1
                    timeline.lost += 1
                    active_emails -= 1
                    if rec[0] <= 0:
                        del emails[eid]
                else:
                    pend.append(eid << 4)  # part EMAIL, flag 0
            iv_generated += n_arr
            timeline.generated += n_arr
            window_generated += n_arr

        # 2. Processing, in declaration order.
        for st in svc_states:
            insts = st.insts
            if not insts:
                continue
            ready_q = st.balancer.ready
            my_routes = routes[st.idx]
            for inst in insts:
                if tick < inst.ready_at:
                    continue
                budget = inst.budget
                req = inst.cur_req
                cost = inst.cur_cost
                drn = inst.draining
                while True:
                    if req < 0:
                        if drn or not ready_q:
                            break
                        req = ready_q.popleft()
                        cost = inst.unit_cost
                    if cost <= budget:
                        budget -= cost
                        # -- completion: route downstream, settle the email --
                        eid = req >> 4
                        part = (req >> 1) & 7
                        flag = req & 1
                        rec = emails[eid]
                        emissions = my_routes[part]
                        if emissions:
                            for cond, dst, q, mode in emissions:
                                if cond and ((cond == _C_CLEAN) == bool(flag)):
                                    continue
                                dst_state = svc_states[dst]
                                bal = dst_state.balancer
                                if mode == _M_ONE:
                                    reqs = ((eid << 4) | (q << 1),)
                                elif mode == _M_PASS:
                                    reqs = ((eid << 4) | (q << 1) | flag,)
                                elif mode == _M_BLOCKS:
                                    reqs = ((eid << 4) | (q << 1),) * blocks_l[eid]
                                else:  # _M_ATT_FANOUT
                                    mask = masks_l[eid]
                                    base_req = (eid << 4) | (q << 1)
                                    reqs = tuple(base_req | ((mask >> j) & 1)
                                                 for j in range(atts_l[eid]))
                                room = bal.capacity - len(bal.ready) - len(bal.pending)
                                dst_state.window_arrivals += len(reqs)
                                if room >= len(reqs):
                                    bal.pending.extend(reqs)
                                    rec[0] += len(reqs)
                                else:
                                    accepted = max(0, room)
                                    if accepted:
                                        bal.pending.extend(reqs[:accepted])
                                        rec[0] += accepted
                                    n_drop = len(reqs) - accepted
                                    iv_dropped += n_drop
                                    timeline.dropped_requests += n_drop
                                    if not rec[2]:
                                        rec[2] = True
                                        iv_lost += 1
                                        timeline.lost += 1
                                        active_emails -= 1
                        rec[0] -= 1
                        if rec[0] <= 0:
                            if not rec[2]:
                                lat = tick - rec[1]
                                iv_latency_ticks += lat
                                timeline.latency_sum_ticks += lat
                                iv_completed += 1
                                timeline.completed += 1
                                active_emails -= 1
                            del emails[eid]
                        # -- end completion --
                        req = -1
                        cost = 0.0
                        if budget <= 0.0:
                            break
                    else:
                        cost -= budget
                        break
                inst.cur_req = req
                inst.cur_cost = cost

        # 3. Monitors.
        if (tick + 1) % period == 0:
            if is_global:
                global_monitor(tick)
            else:
                local_monitor(tick)

        # 4. Retire drained instances.
        for st in svc_states:
            if st.draining_count:
                keep = []
                for inst in st.insts:
                    if inst.draining and inst.cur_req < 0:
                        st.draining_count -= 1
                    else:
                        keep.append(inst)
                st.insts = keep

        # 5. Promote queues.
        for st in svc_states:
            st.balancer.promote()

        # 6. Interval rollup.
        if (tick + 1) % interval_ticks == 0 or tick + 1 == duration:
            start_s = interval_start_tick // tps
            span_s = (tick + 1 - interval_start_tick) / tps
            interval_start_tick = tick + 1
            counts = tuple(st.committed for st in svc_states)
            total_inst = sum(counts)
            timeline.peak_total_instances = max(timeline.peak_total_instances, total_inst)
            timeline.rows.append(IntervalRow(
                t_s=start_s,
                inbound_eps=iv_generated / span_s,
                generated=iv_generated,
                completed=iv_completed,
                lost_emails=iv_lost,
                dropped_requests=iv_dropped,
                mean_latency_s=(iv_latency_ticks / iv_completed / tps) if iv_completed else None,
                capacity_eps=float(capacity_now),
                total_instances=total_inst,
                vm_cost_total=float(timeline.total_vm_cost),
                deployed_deltas=fmt_deltas(deployed_deltas) if is_global else "",
                service_counts=counts,
            ))
            iv_generated = iv_completed = iv_lost = iv_dropped = iv_latency_ticks = 0

    timeline.in_flight_end = active_emails
    timeline.ticks_to_target = ticks_to_target
    return timeline


def dispatch(balancer: Balancer, request: int) -> str:
    """Admit ``request`` to the balancer queue or drop it when full."""
    return balancer.dispatch(request)
