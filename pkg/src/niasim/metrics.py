"""Read-only reports over simulation results.

Everything here is a pure view: utilization over a window, per-user
queue summaries (the qsum report), wait-time statistics, and per-job
placement locality.  Writers emit CSV with a header row so the outputs
diff cleanly between runs.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass

from .scheduler import SimulationResult
from .workload import JobPhase


def _active_interval(rec, horizon: int) -> tuple[int, int] | None:
    if rec.start_time is None:
        return None
    end = rec.end_time if rec.end_time is not None else horizon
    return rec.start_time, end


def _is_fabric(rec) -> bool:
    # archive movers sit outside the switch fabric and carry no placement
    return rec.wing_span is not None


def utilization(result: SimulationResult, t0: int, t1: int) -> float:
    """Delivered node-seconds on the fabric over [t0, t1], as a fraction
    of total capacity.  Dedicated nodes count toward capacity."""
    if t0 >= t1:
        raise ValueError("t0 must be before t1")
    delivered = 0
    for rec in result.records.values():
        if not _is_fabric(rec):
            continue
        interval = _active_interval(rec, result.horizon)
        if interval is None:
            continue
        start, end = interval
        overlap = min(end, t1) - max(start, t0)
        if overlap > 0:
            delivered += len(rec.nodes) * overlap
    return delivered / (result.total_nodes * (t1 - t0))


def busy_series(result: SimulationResult) -> list[tuple[int, int]]:
    """(time, busy fabric nodes) after each change, ascending in time."""
    deltas: dict[int, int] = {}
    for rec in result.records.values():
        if not _is_fabric(rec):
            continue
        interval = _active_interval(rec, result.horizon)
        if interval is None:
            continue
        start, end = interval
        deltas[start] = deltas.get(start, 0) + len(rec.nodes)
        deltas[end] = deltas.get(end, 0) - len(rec.nodes)
    series = []
    busy = 0
    for t in sorted(deltas):
        busy += deltas[t]
        series.append((t, busy))
    return series


@dataclass
class QsumRow:
    user: str
    running_jobs: int = 0
    running_cores: int = 0
    pending_jobs: int = 0
    pending_cores: int = 0
    mean_walltime: float = 0.0
    default_user: bool = False


@dataclass
class QsumReport:
    rows: list[QsumRow]
    totals: QsumRow
    default_fraction: float   # fabric nodes held by default users / capacity


def qsum(result: SimulationResult, now: int) -> QsumReport:
    """Queue summary by user at one instant.

    Cores follow the job's task layout (40 per node, 80 with
    hyperthreading); the default-user fraction is the share of fabric
    nodes held by users whose group has no awarded allocation.
    """
    rows: dict[str, QsumRow] = {}
    walltimes: dict[str, list[int]] = {}
    default_nodes = 0
    for rec in result.records.values():
        job = rec.job
        if rec.phase is JobPhase.REJECTED or job.submit_time > now:
            continue
        running = (rec.start_time is not None and rec.start_time <= now
                   and (rec.end_time is None or rec.end_time > now))
        pending = (rec.start_time is None or rec.start_time > now)
        if not running and not pending:
            continue
        row = rows.setdefault(job.user, QsumRow(
            user=job.user,
            default_user=job.group not in result.allocated_groups,
        ))
        walltimes.setdefault(job.user, []).append(job.walltime_requested)
        if running:
            row.running_jobs += 1
            row.running_cores += len(rec.nodes) * job.tasks_per_node
            if _is_fabric(rec) and row.default_user:
                default_nodes += len(rec.nodes)
        else:
            row.pending_jobs += 1
            row.pending_cores += job.nodes_requested * job.tasks_per_node
    ordered = [rows[u] for u in sorted(rows)]
    for row in ordered:
        row.mean_walltime = statistics.fmean(walltimes[row.user])
    totals = QsumRow(user="TOTAL")
    all_walltimes = [w for ws in walltimes.values() for w in ws]
    for row in ordered:
        totals.running_jobs += row.running_jobs
        totals.running_cores += row.running_cores
        totals.pending_jobs += row.pending_jobs
        totals.pending_cores += row.pending_cores
    if all_walltimes:
        totals.mean_walltime = statistics.fmean(all_walltimes)
    return QsumReport(
        rows=ordered,
        totals=totals,
        default_fraction=default_nodes / result.total_nodes,
    )


@dataclass
class WaitStats:
    mean: float
    median: float
    p95: float
    count: int


def wait_time_stats(result: SimulationResult, partition: str | None = None) -> WaitStats:
    """Start-minus-submit statistics over started jobs; p95 uses the
    nearest-rank method."""
    waits = sorted(
        rec.wait_time
        for rec in result.records.values()
        if rec.start_time is not None
        and (partition is None or rec.job.partition == partition)
    )
    if not waits:
        return WaitStats(0.0, 0.0, 0.0, 0)
    rank = max(0, -(-95 * len(waits) // 100) - 1)
    return WaitStats(
        mean=statistics.fmean(waits),
        median=float(statistics.median(waits)),
        p95=float(waits[rank]),
        count=len(waits),
    )


@dataclass
class LocalityRow:
    job_id: int
    partition: str
    nodes: int
    wing_span: int
    blocking: float
    max_hops: int


def locality_report(result: SimulationResult) -> list[LocalityRow]:
    """Placement quality per started fabric job, ascending by job id."""
    rows = []
    for jid in sorted(result.records):
        rec = result.records[jid]
        if rec.start_time is None or not _is_fabric(rec):
            continue
        rows.append(LocalityRow(
            job_id=jid,
            partition=rec.job.partition,
            nodes=len(rec.nodes),
            wing_span=rec.wing_span,
            blocking=rec.blocking,
            max_hops=rec.max_hops,
        ))
    return rows


# -- CSV writers ----------------------------------------------------------

def _open_writer(path):
    handle = open(path, "w", newline="")
    return handle, csv.writer(handle)


def write_job_table(result: SimulationResult, path) -> None:
    """One line per job: identity, timing, allocation and placement."""
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow([
            "job", "user", "group", "partition", "submit", "start", "end",
            "nodes_requested", "nodes_allocated", "walltime", "runtime",
            "wait", "phase", "wing_span", "blocking", "max_hops",
            "tasks_per_node",
        ])
        for jid in sorted(result.records):
            rec = result.records[jid]
            job = rec.job
            blank = ""
            runtime = (rec.end_time - rec.start_time
                       if rec.start_time is not None and rec.end_time is not None
                       else blank)
            writer.writerow([
                jid, job.user, job.group, job.partition, job.submit_time,
                rec.start_time if rec.start_time is not None else blank,
                rec.end_time if rec.end_time is not None else blank,
                job.nodes_requested, len(rec.nodes), job.walltime_requested,
                runtime,
                rec.wait_time if rec.wait_time is not None else blank,
                rec.phase.value,
                rec.wing_span if rec.wing_span is not None else blank,
                f"{rec.blocking:.1f}" if rec.blocking is not None else blank,
                rec.max_hops if rec.max_hops is not None else blank,
                job.tasks_per_node,
            ])


def write_event_log(result: SimulationResult, path) -> None:
    with open(path, "w") as handle:
        for line in result.events:
            handle.write(line + "\n")


def write_utilization(result: SimulationResult, path) -> None:
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["time", "busy_nodes", "utilization"])
        for t, busy in busy_series(result):
            writer.writerow([t, busy, f"{busy / result.total_nodes:.6f}"])


def write_qsum(report: QsumReport, path) -> None:
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow([
            "user", "running_jobs", "running_cores", "pending_jobs",
            "pending_cores", "mean_walltime", "default_user",
        ])
        for row in report.rows + [report.totals]:
            writer.writerow([
                row.user, row.running_jobs, row.running_cores,
                row.pending_jobs, row.pending_cores,
                f"{row.mean_walltime:.1f}",
                int(row.default_user),
            ])
        writer.writerow(["default_fraction", f"{report.default_fraction:.6f}",
                         "", "", "", "", ""])


def write_waits(result: SimulationResult, path, partitions=None) -> None:
    """Overall wait statistics plus one row per requested partition."""
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["partition", "count", "mean", "median", "p95"])
        scopes = [None] + sorted(partitions or [])
        for scope in scopes:
            stats = wait_time_stats(result, scope)
            writer.writerow([
                scope if scope is not None else "all",
                stats.count, f"{stats.mean:.1f}",
                f"{stats.median:.1f}", f"{stats.p95:.1f}",
            ])


def write_locality(result: SimulationResult, path) -> None:
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow([
            "job", "partition", "nodes", "wing_span", "blocking", "max_hops",
        ])
        for row in locality_report(result):
            writer.writerow([
                row.job_id, row.partition, row.nodes, row.wing_span,
                f"{row.blocking:.1f}", row.max_hops,
            ])
