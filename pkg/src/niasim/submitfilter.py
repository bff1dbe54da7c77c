"""Submission-time validation, the batch system's front door.

Every request passes through here before it reaches the queue.  Hard
limit violations abort the submission with a message naming the limit;
likely foot-guns (submitting from the read-only home file system, odd
task counts, jobs that expect internet access) only warn.  Rules run in
a fixed order and produce stable strings, so verdicts can be golden
tested.
"""

from __future__ import annotations

from dataclasses import dataclass

from .partitions import Partition, QosPolicy, resolve_qos
from .workload import Job

ACCEPT = "accept"
WARN = "accept_with_warnings"
REJECT = "reject"

_EXIT_CODES = {ACCEPT: 0, WARN: 1, REJECT: 2}

STANDARD_TASK_COUNTS = (40, 80)


@dataclass(frozen=True)
class Verdict:
    status: str
    reasons: tuple[str, ...] = ()    # why the job was rejected
    warnings: tuple[str, ...] = ()

    @property
    def accepted(self) -> bool:
        return self.status != REJECT

    @property
    def exit_code(self) -> int:
        return _EXIT_CODES[self.status]

    def __str__(self) -> str:
        lines = [self.status]
        lines += [f"error: {r}" for r in self.reasons]
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines)


def validate_submission(
    job: Job,
    partitions: dict[str, Partition],
    qos_map: dict[str, QosPolicy] | None = None,
    *,
    allocated: bool = False,
    user_jobs_in_partition: int = 0,
    user_jobs_submitted: int = 0,
) -> Verdict:
    """Check one job request against partition and QoS limits.

    `user_jobs_in_partition` and `user_jobs_submitted` are the user's
    current job counts, supplied by the caller; the check itself touches
    no shared state and never raises on bad input.
    """
    reasons: list[str] = []
    warnings: list[str] = []

    reasons.extend(job.validate())

    part = partitions.get(job.partition)
    if part is None:
        reasons.append(f"unknown partition {job.partition!r}")

    if part is not None and not job.validate():
        if job.nodes_requested > part.max_nodes:
            reasons.append(
                f"{part.name}: {job.nodes_requested} nodes requested, "
                f"limit is {part.max_nodes}"
            )
        if job.nodes_requested < part.min_nodes:
            reasons.append(
                f"{part.name}: {job.nodes_requested} nodes requested, "
                f"minimum is {part.min_nodes}"
            )
        if job.walltime_requested > part.max_walltime:
            reasons.append(
                f"{part.name}: walltime {job.walltime_requested}s requested, "
                f"limit is {part.max_walltime}s"
            )
        if job.walltime_requested < part.min_walltime:
            reasons.append(
                f"{part.name}: walltime {job.walltime_requested}s requested, "
                f"minimum is {part.min_walltime}s"
            )
        if (part.max_jobs_per_user is not None
                and user_jobs_in_partition >= part.max_jobs_per_user):
            reasons.append(
                f"{part.name}: user already has {user_jobs_in_partition} "
                f"job(s), limit is {part.max_jobs_per_user} per user"
            )

    if qos_map is not None:
        try:
            qos = resolve_qos(job, qos_map, allocated)
        except ValueError:
            reasons.append(f"unknown qos {job.qos!r}")
        else:
            if (qos.max_nodes_per_job is not None
                    and job.nodes_requested > qos.max_nodes_per_job):
                reasons.append(
                    f"qos {qos.name}: {job.nodes_requested} nodes requested, "
                    f"limit is {qos.max_nodes_per_job}"
                )
            if (qos.max_submitted_jobs is not None
                    and user_jobs_submitted >= qos.max_submitted_jobs):
                reasons.append(
                    f"qos {qos.name}: user already has {user_jobs_submitted} "
                    f"submitted job(s), limit is {qos.max_submitted_jobs}"
                )

    if job.submit_cwd_fs == "home":
        warnings.append(
            "submitted from the home file system, which is read-only on "
            "the compute nodes; jobs writing to it will fail"
        )
    if 1 <= job.tasks_per_node <= 80 and job.tasks_per_node not in STANDARD_TASK_COUNTS:
        warnings.append(
            f"tasks_per_node is {job.tasks_per_node}; nodes run 40 cores "
            "(80 hyperthreads), so some capacity may sit idle"
        )
    if job.needs_network:
        warnings.append(
            "compute nodes have no internet access; steps needing the "
            "network must run elsewhere"
        )

    if reasons:
        return Verdict(REJECT, reasons=tuple(reasons), warnings=tuple(warnings))
    if warnings:
        return Verdict(WARN, warnings=tuple(warnings))
    return Verdict(ACCEPT)


def _fmt_duration(seconds: int) -> str:
    # a single day reads as "24h", the familiar walltime cap
    if seconds >= 2 * 86400 and seconds % 86400 == 0:
        return f"{seconds // 86400}d"
    if seconds >= 3600 and seconds % 3600 == 0:
        return f"{seconds // 3600}h"
    if seconds >= 60 and seconds % 60 == 0:
        return f"{seconds // 60}m"
    return f"{seconds}s"


def explain_rules(
    partition: str,
    partitions: dict[str, Partition],
    qos_map: dict[str, QosPolicy] | None = None,
) -> str:
    """Render the live limits for one partition as human-readable text."""
    part = partitions.get(partition)
    if part is None:
        raise ValueError(f"unknown partition {partition!r}")
    lines = [f"Partition {part.name}:"]
    lines.append(f"  nodes per job: {part.min_nodes} to {part.max_nodes}")
    if part.min_walltime > 0:
        lines.append(
            f"  walltime: {_fmt_duration(part.min_walltime)} to "
            f"{_fmt_duration(part.max_walltime)}"
        )
    else:
        lines.append(f"  walltime: up to {_fmt_duration(part.max_walltime)}")
    if part.max_jobs_per_user is not None:
        plural = "" if part.max_jobs_per_user == 1 else "s"
        lines.append(
            f"  at most {part.max_jobs_per_user} job{plural} per user"
        )
    if part.dedicated_nodes:
        lines.append(f"  {len(part.dedicated_nodes)} dedicated node(s)")
    if part.wing_restriction is not None:
        lines.append(f"  restricted to wing {part.wing_restriction}")
    if not part.node_exclusive:
        lines.append("  nodes are shared between jobs")
    if qos_map:
        for name in sorted(qos_map):
            qos = qos_map[name]
            caps = []
            if qos.max_nodes_per_job is not None:
                caps.append(f"{qos.max_nodes_per_job} nodes per job")
            if qos.max_submitted_jobs is not None:
                caps.append(f"{qos.max_submitted_jobs} submitted jobs")
            if caps:
                lines.append(f"  qos {name}: at most " + ", ".join(caps))
    return "\n".join(lines)
