"""Discrete-event batch scheduling core.

One event loop drives everything: job arrivals run the submission filter,
scheduler passes start whatever fits, job ends free nodes and feed the
fair-share ledger, optional purge scans age out scratch files.  Events at
the same timestamp are ordered end < arrival < pass < purge and then by
insertion, so a run is a pure function of its inputs.

Scheduling follows the multifactor-priority queue with EASY backfill: the
pending queue is sorted by priority, the highest-priority job that does
not fit gets a reservation (a shadow time and a pinned set of node ids),
and lower-priority jobs may start early only if they finish before the
shadow time or stay off the reserved nodes.  Archive staging partitions
run on a small shared mover pool and are limited by per-user job caps
rather than node exclusivity.
"""

from __future__ import annotations

import heapq
import itertools
from collections import Counter
from dataclasses import dataclass, field
from enum import IntEnum

from .fspolicy import BurstBuffer, FileRecord, purge_scan
from .partitions import (
    ARCHIVE_POOL,
    Partition,
    QosPolicy,
    default_partition_specs,
    default_qos_map,
    resolve_partitions,
    resolve_qos,
)
from .priority import FairShareLedger, PriorityWeights, compute_priority
from .submitfilter import validate_submission
from .topology import PlacementPolicy, Topology, build_topology
from .workload import Job, JobPhase


class EventKind(IntEnum):
    # numeric order is pop order within one timestamp
    JOB_END = 0
    JOB_ARRIVAL = 1
    SCHEDULER_PASS = 2
    PURGE_SCAN = 3


@dataclass(frozen=True)
class SimEvent:
    time: int
    kind: EventKind
    payload: int | None
    sequence: int


class EventQueue:
    """Min-heap of events ordered by (time, kind, insertion sequence)."""

    def __init__(self):
        self._heap: list[tuple[int, int, int, int | None]] = []
        self._seq = itertools.count()

    def push(self, time: int, kind: EventKind, payload: int | None = None) -> None:
        if time < 0:
            raise ValueError("event time must be nonnegative")
        heapq.heappush(self._heap, (time, int(kind), next(self._seq), payload))

    def pop(self) -> SimEvent:
        time, kind, seq, payload = heapq.heappop(self._heap)
        return SimEvent(time, EventKind(kind), payload, seq)

    def __len__(self) -> int:
        return len(self._heap)

    def peek_time(self) -> int | None:
        return self._heap[0][0] if self._heap else None


@dataclass
class SchedulerOptions:
    backfill: str = "easy"                # "easy" or "fcfs"
    placement: PlacementPolicy = PlacementPolicy.PACK_BY_WING
    purge_interval: int | None = 86400    # between purge scans, when files exist
    use_burst_buffer: bool = True

    def validate(self) -> list[str]:
        problems = []
        if self.backfill not in ("easy", "fcfs"):
            problems.append(f"backfill must be 'easy' or 'fcfs', not {self.backfill!r}")
        if self.purge_interval is not None and self.purge_interval < 1:
            problems.append("purge_interval must be positive")
        return problems


@dataclass
class JobRecord:
    """Lifecycle bookkeeping for one job inside a simulation."""

    job: Job
    phase: JobPhase = JobPhase.SUBMITTED
    priority: float = 0.0
    start_time: int | None = None
    end_time: int | None = None
    nodes: frozenset[int] = frozenset()
    reject_reasons: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()
    # placement summary, filled at start for fabric jobs; archive movers
    # sit outside the fabric and keep None here
    wing_span: int | None = None
    blocking: float | None = None
    max_hops: int | None = None

    @property
    def wait_time(self) -> int | None:
        if self.start_time is None:
            return None
        return self.start_time - self.job.submit_time


@dataclass
class SimulationResult:
    records: dict[int, JobRecord]
    events: list[str]
    total_nodes: int
    horizon: int
    allocated_groups: frozenset[str]
    purged: list[FileRecord] = field(default_factory=list)

    def jobs_in_phase(self, phase: JobPhase) -> list[JobRecord]:
        return [r for r in self.records.values() if r.phase is phase]


@dataclass(frozen=True)
class _Reservation:
    job_id: int
    shadow: int
    nodes: frozenset[int]


class Simulation:
    """Event-driven cluster model; build once, submit jobs, run."""

    def __init__(
        self,
        topo: Topology,
        partitions: dict[str, Partition],
        archive_ids: list[int],
        weights: PriorityWeights | None = None,
        ledger: FairShareLedger | None = None,
        qos_map: dict[str, QosPolicy] | None = None,
        options: SchedulerOptions | None = None,
    ):
        self.topo = topo
        self.partitions = partitions
        self.archive_ids = list(archive_ids)
        self.weights = weights if weights is not None else PriorityWeights()
        self.ledger = ledger if ledger is not None else FairShareLedger({})
        self.qos_map = qos_map if qos_map is not None else default_qos_map()
        self.options = options if options is not None else SchedulerOptions()
        problems = self.options.validate()
        if problems:
            raise ValueError("; ".join(problems))

        self.records: dict[int, JobRecord] = {}
        self.events: list[str] = []
        self.bb = BurstBuffer() if self.options.use_burst_buffer else None
        self.files: list[FileRecord] = []
        self.purged: list[FileRecord] = []

        self._queue = EventQueue()
        self._pending: list[int] = []
        self._running: set[int] = set()
        self._archive_load = Counter({nid: 0 for nid in self.archive_ids})
        self._running_by_user_part: Counter = Counter()
        self._submitted_by_user: Counter = Counter()
        self._pass_times: set[int] = set()
        self.now = 0
        # nodes a partition may never use, precomputed for allocation
        all_nodes = frozenset(topo.all_nodes())
        self._ineligible = {
            name: all_nodes - part.eligible_nodes
            for name, part in partitions.items()
            if part.pool != ARCHIVE_POOL
        }

    # -- event plumbing ---------------------------------------------------

    def _log(self, time: int, text: str) -> None:
        self.events.append(f"{time:>10d} {text}")

    def _request_pass(self, time: int) -> None:
        if time not in self._pass_times:
            self._pass_times.add(time)
            self._queue.push(time, EventKind.SCHEDULER_PASS)

    def submit(self, jobs) -> None:
        for job in jobs:
            if job.id in self.records:
                raise ValueError(f"duplicate job id {job.id}")
            self.records[job.id] = JobRecord(job=job)
            self._queue.push(job.submit_time, EventKind.JOB_ARRIVAL, job.id)

    def add_files(self, files) -> None:
        """Register file records for purge scans during the run."""
        self.files.extend(files)

    # -- arrival ----------------------------------------------------------

    def _handle_arrival(self, job_id: int, now: int) -> None:
        rec = self.records[job_id]
        job = rec.job
        verdict = validate_submission(
            job,
            self.partitions,
            self.qos_map,
            allocated=self.ledger.is_allocated(job.group),
            user_jobs_submitted=self._submitted_by_user[job.user],
        )
        self._log(now, f"arrival job={job.id} user={job.user} group={job.group} "
                       f"partition={job.partition} nodes={job.nodes_requested} "
                       f"walltime={job.walltime_requested}")
        rec.warnings = verdict.warnings
        for warning in verdict.warnings:
            self._log(now, f"warn job={job.id} {warning}")
        if not verdict.accepted:
            rec.phase = JobPhase.REJECTED
            rec.reject_reasons = verdict.reasons
            self._log(now, f"reject job={job.id} reason={'; '.join(verdict.reasons)!r}")
            return
        rec.phase = JobPhase.PENDING
        self._pending.append(job.id)
        self._submitted_by_user[job.user] += 1
        self._request_pass(now)

    # -- start/end --------------------------------------------------------

    def _guaranteed_end(self, job_id: int) -> int:
        rec = self.records[job_id]
        return rec.start_time + rec.job.walltime_requested

    def _start_job(self, rec: JobRecord, nodes: frozenset[int], now: int) -> None:
        job = rec.job
        part = self.partitions[job.partition]
        rec.phase = JobPhase.RUNNING
        rec.start_time = now
        rec.nodes = nodes
        if part.pool == ARCHIVE_POOL:
            for nid in nodes:
                self._archive_load[nid] += 1
            detail = f"start job={job.id} nodes={len(nodes)} pool=archive"
        else:
            self.topo.mark_busy(nodes)
            span, blocking, hops = self.topo.locality(nodes)
            rec.wing_span, rec.blocking, rec.max_hops = span, blocking, hops
            detail = (f"start job={job.id} nodes={len(nodes)} "
                      f"span={span} blocking={blocking:.1f}")
        self._running.add(job.id)
        self._running_by_user_part[(job.user, job.partition)] += 1
        if self.bb is not None and job.submit_cwd_fs == "bb":
            self.bb.job_start(job.id)
        end = now + min(job.actual_runtime, job.walltime_requested)
        self._queue.push(end, EventKind.JOB_END, job.id)
        self._log(now, detail)

    def _handle_end(self, job_id: int, now: int) -> None:
        rec = self.records[job_id]
        job = rec.job
        part = self.partitions[job.partition]
        rec.phase = JobPhase.COMPLETED
        rec.end_time = now
        if part.pool == ARCHIVE_POOL:
            for nid in rec.nodes:
                self._archive_load[nid] -= 1
        else:
            self.topo.mark_free(rec.nodes)
            elapsed = now - rec.start_time
            if elapsed > 0:
                self.ledger.record(job.group, len(rec.nodes), elapsed, now)
        self._running.discard(job_id)
        self._running_by_user_part[(job.user, job.partition)] -= 1
        self._submitted_by_user[job.user] -= 1
        if self.bb is not None and job.submit_cwd_fs == "bb":
            self.bb.job_end(job.id)
        self._log(now, f"end job={job.id}")
        self._request_pass(now)

    # -- scheduling -------------------------------------------------------

    def _try_allocate(
        self,
        part: Partition,
        n: int,
        avoid: frozenset[int],
    ) -> frozenset[int] | None:
        """Pick nodes for a job without touching allocation state."""
        if part.pool == ARCHIVE_POOL:
            # shared movers: no exclusivity, spread by load then id
            order = sorted(self.archive_ids,
                           key=lambda nid: (self._archive_load[nid], nid))
            return frozenset(order[:n]) if len(order) >= n else None
        picked: list[int] = []
        if part.dedicated_nodes:
            ded_free = [nid for nid in sorted(part.dedicated_nodes)
                        if self.topo.is_free(nid) and nid not in avoid]
            picked = ded_free[:n]
        remaining = n - len(picked)
        if remaining == 0:
            return frozenset(picked)
        exclude = self._ineligible[part.name] | avoid | frozenset(picked)
        rest = self.topo.select_nodes(
            remaining, self.options.placement, part.wing_restriction,
            exclude=exclude,
        )
        if rest is None:
            return None
        return frozenset(picked) | rest

    def _reservation_for(self, rec: JobRecord, now: int) -> _Reservation | None:
        """Earliest-start promise for a blocked fabric job: walk running
        jobs by guaranteed end until enough eligible nodes come free."""
        part = self.partitions[rec.job.partition]
        need = rec.job.nodes_requested
        future_free = set(self.topo.free_in(part.eligible_nodes))
        if part.dedicated_nodes:
            future_free |= {nid for nid in part.dedicated_nodes
                            if self.topo.is_free(nid)}
        running = sorted(self._running,
                         key=lambda jid: (self._guaranteed_end(jid), jid))
        for jid in running:
            other = self.records[jid]
            if self.partitions[other.job.partition].pool == ARCHIVE_POOL:
                continue
            usable = other.nodes & part.eligible_nodes
            future_free |= usable
            if len(future_free) >= need:
                return _Reservation(
                    rec.job.id,
                    self._guaranteed_end(jid),
                    frozenset(sorted(future_free)[:need]),
                )
        return None

    def scheduler_pass(self, now: int) -> list[tuple[Job, frozenset[int]]]:
        """Start every job the policy allows at `now`; returns the starts."""
        self.ledger.evict(now)
        for jid in self._pending:
            rec = self.records[jid]
            qos = resolve_qos(rec.job, self.qos_map,
                              self.ledger.is_allocated(rec.job.group))
            rec.priority = compute_priority(
                rec.job, now, self.ledger, self.weights, self.partitions, qos,
            )
        order = sorted(
            self._pending,
            key=lambda jid: (-self.records[jid].priority,
                             self.records[jid].job.submit_time, jid),
        )

        started: list[tuple[Job, frozenset[int]]] = []
        reservation: _Reservation | None = None
        for jid in order:
            rec = self.records[jid]
            job = rec.job
            part = self.partitions[job.partition]

            if part.pool != ARCHIVE_POOL and job.nodes_requested > len(part.eligible_nodes):
                # defensive: the submit filter should have caught this
                rec.phase = JobPhase.REJECTED
                rec.reject_reasons = (
                    f"{part.name}: {job.nodes_requested} nodes can never be "
                    f"satisfied ({len(part.eligible_nodes)} eligible)",
                )
                self._pending.remove(jid)
                self._submitted_by_user[job.user] -= 1
                self._log(now, f"reject job={jid} reason={rec.reject_reasons[0]!r}")
                continue

            if part.max_jobs_per_user is not None:
                if (self._running_by_user_part[(job.user, job.partition)]
                        >= part.max_jobs_per_user):
                    # waiting on the user's own jobs, not on nodes; no
                    # reservation, the freeing end event will trigger a pass
                    if self.options.backfill == "fcfs":
                        break
                    continue

            if reservation is None:
                nodes = self._try_allocate(part, job.nodes_requested, frozenset())
            else:
                nodes = self._try_allocate(part, job.nodes_requested,
                                           reservation.nodes)
                if nodes is None:
                    candidate = self._try_allocate(part, job.nodes_requested,
                                                   frozenset())
                    if (candidate is not None
                            and now + job.walltime_requested <= reservation.shadow):
                        nodes = candidate

            if nodes is not None:
                self._pending.remove(jid)
                self._start_job(rec, nodes, now)
                started.append((job, nodes))
                continue

            if self.options.backfill == "fcfs":
                break
            if reservation is None and part.pool != ARCHIVE_POOL:
                reservation = self._reservation_for(rec, now)
                if reservation is not None:
                    self._log(now, f"reserve job={jid} shadow={reservation.shadow} "
                                   f"nodes={job.nodes_requested}")
        return started

    # -- purge ------------------------------------------------------------

    def _handle_purge(self, now: int) -> None:
        victims = purge_scan(self.files, now)
        if victims:
            victim_set = {id(v) for v in victims}
            self.files = [f for f in self.files if id(f) not in victim_set]
            self.purged.extend(victims)
        self._log(now, f"purge files={len(victims)}")
        if self.options.purge_interval is not None and len(self._queue) > 0:
            self._queue.push(now + self.options.purge_interval,
                             EventKind.PURGE_SCAN)

    # -- main loop --------------------------------------------------------

    def run(self, until: int | None = None) -> SimulationResult:
        if self.options.purge_interval is not None and self.files:
            self._queue.push(self.options.purge_interval, EventKind.PURGE_SCAN)
        last = 0
        while len(self._queue) > 0:
            nxt = self._queue.peek_time()
            if until is not None and nxt > until:
                break
            event = self._queue.pop()
            self.now = event.time
            last = max(last, event.time)
            if event.kind is EventKind.JOB_END:
                self._handle_end(event.payload, event.time)
            elif event.kind is EventKind.JOB_ARRIVAL:
                self._handle_arrival(event.payload, event.time)
            elif event.kind is EventKind.SCHEDULER_PASS:
                self._pass_times.discard(event.time)
                self.scheduler_pass(event.time)
            else:
                self._handle_purge(event.time)
        horizon = until if until is not None else last
        return SimulationResult(
            records=self.records,
            events=self.events,
            total_nodes=self.topo.cfg.nodes,
            horizon=horizon,
            allocated_groups=frozenset(
                g for g in self.ledger.shares if self.ledger.is_allocated(g)
            ),
            purged=self.purged,
        )


def default_simulation(
    options: SchedulerOptions | None = None,
    *,
    shares: dict[str, float] | None = None,
    archive_nodes: int = 2,
    weights: PriorityWeights | None = None,
    qos_map: dict[str, QosPolicy] | None = None,
) -> Simulation:
    """A simulation of the stock machine: full topology, default
    partitions, default weights, and the given group allocations."""
    topo = build_topology()
    partitions, archive_ids = resolve_partitions(
        topo, default_partition_specs(), archive_nodes=archive_nodes,
    )
    ledger = FairShareLedger(shares if shares is not None else {})
    return Simulation(topo, partitions, archive_ids,
                      weights=weights, ledger=ledger, qos_map=qos_map,
                      options=options)


def run_simulation(
    jobs,
    sim: Simulation | None = None,
    *,
    files=None,
    until: int | None = None,
) -> SimulationResult:
    """Submit jobs into a simulation (the stock one by default) and drain
    the event queue."""
    if sim is None:
        sim = default_simulation()
    if files:
        sim.files.extend(files)
    sim.submit(jobs)
    return sim.run(until=until)
