"""Job model, trace ingestion, and synthetic workload generation.

Traces use an SWF-style whitespace-separated columnar format (18 standard
columns) with three extension columns: tasks per node, the file system the
job was submitted from, and a needs-network flag.  Header comments of the
form ``; Partition 3: dragonfly1`` map the numeric id columns back to
names so that emit and parse round-trip exactly.
"""

from __future__ import annotations

import math
import random
import re
import sys
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

FILE_SYSTEMS = ("home", "scratch", "project", "bb")

# fs code used in the trace's extension column
_FS_CODE = {name: i for i, name in enumerate(FILE_SYSTEMS)}
_CODE_FS = {i: name for name, i in _FS_CODE.items()}

# default numeric ids for the standard partitions; traces may override or
# extend these via "; Partition N: name" header comments
DEFAULT_PARTITION_IDS = {
    "compute": 1,
    "debug": 2,
    "dragonfly1": 3,
    "dragonfly2": 4,
    "dragonfly3": 5,
    "dragonfly4": 6,
    "archive-short": 7,
    "archive-long": 8,
    "archive-interactive": 9,
}


@dataclass
class Job:
    """One batch request as submitted."""

    id: int
    user: str
    group: str
    partition: str
    nodes_requested: int
    walltime_requested: int       # seconds
    actual_runtime: int           # seconds; truncated at walltime on admission
    submit_time: int = 0          # seconds since simulation epoch
    tasks_per_node: int = 40      # 80 requests the hyperthreaded layout
    qos: str | None = None
    submit_cwd_fs: str = "scratch"
    needs_network: bool = False

    def validate(self) -> list[str]:
        problems = []
        if self.nodes_requested < 1:
            problems.append("must request at least one node")
        if self.walltime_requested < 1:
            problems.append("walltime must be positive")
        if self.actual_runtime < 0:
            problems.append("runtime must be nonnegative")
        if not 1 <= self.tasks_per_node <= 80:
            problems.append("tasks_per_node must be within 1..80")
        if self.submit_cwd_fs not in FILE_SYSTEMS:
            problems.append(f"unknown submit file system {self.submit_cwd_fs!r}")
        if not self.user or not self.group:
            problems.append("user and group must be nonempty")
        return problems


class JobPhase(Enum):
    SUBMITTED = "submitted"
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    REJECTED = "rejected"
    CANCELLED = "cancelled"


@dataclass
class JobState:
    """Mutable scheduling state attached to a job inside the simulator."""

    phase: JobPhase = JobPhase.SUBMITTED
    start_time: int | None = None
    end_time: int | None = None
    allocated_nodes: frozenset[int] = frozenset()


# ---------------------------------------------------------------------------
# trace parsing / emission


def _name_maps(overrides: dict[str, dict[int, str]]):
    partitions = dict((v, k) for k, v in DEFAULT_PARTITION_IDS.items())
    partitions.update(overrides.get("Partition", {}))
    users = overrides.get("User", {})
    groups = overrides.get("Group", {})
    qos = overrides.get("Queue", {})
    return partitions, users, groups, qos


_LEGEND_RE = re.compile(r";\s*(Partition|User|Group|Queue)\s+(\d+)\s*:\s*(\S+)")


def parse_trace(path, errors: list[str] | None = None) -> list[Job]:
    """Read a trace file into a job list sorted by submit time.

    Malformed lines and jobs violating the admission invariants are
    skipped; one diagnostic per skip goes to `errors` if given, otherwise
    to stderr.
    """
    path = Path(path)
    report = errors.append if errors is not None else (
        lambda msg: print(msg, file=sys.stderr)
    )
    legends: dict[str, dict[int, str]] = {}
    jobs: list[Job] = []
    seen_ids: set[int] = set()

    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith(";"):
                m = _LEGEND_RE.match(line)
                if m:
                    kind, num, name = m.group(1), int(m.group(2)), m.group(3)
                    legends.setdefault(kind, {})[num] = name
                continue
            cols = line.split()
            if len(cols) < 18:
                report(f"{path.name}:{lineno}: expected >= 18 columns, got {len(cols)}")
                continue
            try:
                job = _job_from_columns(cols, legends)
            except (ValueError, KeyError) as exc:
                report(f"{path.name}:{lineno}: {exc}")
                continue
            problems = job.validate()
            if problems:
                report(f"{path.name}:{lineno}: job {job.id} skipped: {'; '.join(problems)}")
                continue
            if job.id in seen_ids:
                report(f"{path.name}:{lineno}: duplicate job id {job.id} skipped")
                continue
            seen_ids.add(job.id)
            jobs.append(job)

    jobs.sort(key=lambda j: (j.submit_time, j.id))
    return jobs


def _job_from_columns(cols: list[str], legends) -> Job:
    partitions, users, groups, qos_names = _name_maps(legends)
    nums = [int(float(c)) if "." in c else int(c) for c in cols[:18]]
    ext = cols[18:]

    requested = nums[7] if nums[7] > 0 else nums[4]
    uid, gid = nums[11], nums[12]
    queue_no, part_no = nums[14], nums[15]

    tasks = int(ext[0]) if len(ext) >= 1 else 40
    fs_code = int(ext[1]) if len(ext) >= 2 else _FS_CODE["scratch"]
    needs_net = bool(int(ext[2])) if len(ext) >= 3 else False
    if fs_code not in _CODE_FS:
        raise ValueError(f"unknown file system code {fs_code}")

    return Job(
        id=nums[0],
        submit_time=nums[1],
        actual_runtime=max(nums[3], 0),
        nodes_requested=requested,
        walltime_requested=nums[8],
        user=users.get(uid, f"u{uid}"),
        group=groups.get(gid, f"g{gid}"),
        qos=qos_names.get(queue_no) if queue_no > 0 else None,
        partition=partitions.get(part_no, f"part{part_no}"),
        tasks_per_node=tasks,
        submit_cwd_fs=_CODE_FS[fs_code],
        needs_network=needs_net,
    )


def _numbering(names, defaults: dict[str, int] | None = None) -> dict[str, int]:
    """Stable name->number assignment: defaults first, then first-seen order."""
    table = dict(defaults or {})
    next_id = max(table.values(), default=0) + 1
    for name in names:
        if name not in table:
            table[name] = next_id
            next_id += 1
    return table


def emit_trace(jobs: list[Job], path) -> None:
    """Write jobs in the trace dialect, with legend headers for all names."""
    path = Path(path)
    part_ids = _numbering((j.partition for j in jobs), DEFAULT_PARTITION_IDS)
    user_ids = _numbering(j.user for j in jobs)
    group_ids = _numbering(j.group for j in jobs)
    qos_ids = _numbering(j.qos for j in jobs if j.qos is not None)

    used_parts = {j.partition for j in jobs}
    lines = ["; columns: swf 1-18 + tasks_per_node cwd_fs needs_network"]
    for name in sorted(used_parts, key=lambda n: part_ids[n]):
        lines.append(f"; Partition {part_ids[name]}: {name}")
    for name, num in user_ids.items():
        lines.append(f"; User {num}: {name}")
    for name, num in group_ids.items():
        lines.append(f"; Group {num}: {name}")
    for name, num in qos_ids.items():
        lines.append(f"; Queue {num}: {name}")

    for j in jobs:
        fields = [
            j.id, j.submit_time, -1, j.actual_runtime, j.nodes_requested,
            -1, -1, j.nodes_requested, j.walltime_requested, -1, -1,
            user_ids[j.user], group_ids[j.group], -1,
            qos_ids[j.qos] if j.qos is not None else 0,
            part_ids[j.partition], -1, -1,
            j.tasks_per_node, _FS_CODE[j.submit_cwd_fs], int(j.needs_network),
        ]
        lines.append(" ".join(str(f) for f in fields))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# synthetic generation


@dataclass(frozen=True)
class WorkloadSpec:
    """Parameters for the synthetic job stream.

    A fixed seed yields a byte-identical job list.  The distributions are
    tuning defaults, not measured properties of any production system.
    """

    rate_per_hour: float = 20.0
    # (min_nodes, max_nodes, weight) size classes
    size_classes: tuple[tuple[int, int, float], ...] = (
        (1, 1, 0.35), (2, 10, 0.30), (11, 40, 0.20), (41, 200, 0.12),
        (201, 1000, 0.03),
    )
    runtime_mu: float = 8.5       # log-space mean, seconds
    runtime_sigma: float = 1.2
    walltime_padding: float = 1.4
    min_walltime: int = 900
    max_walltime: int = 86400
    n_users: int = 24
    n_groups: int = 10
    partition: str = "compute"
    tasks80_fraction: float = 0.15
    seed: int = 12345


def generate_workload(spec: WorkloadSpec, horizon: int) -> list[Job]:
    """Poisson arrivals over [0, horizon) with log-normal runtimes.

    Runtimes are truncated at the requested walltime, so every generated
    job already satisfies the admission invariants.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if spec.rate_per_hour < 0:
        raise ValueError("arrival rate must be nonnegative")
    if spec.walltime_padding < 1.0:
        raise ValueError("walltime_padding must be >= 1")
    if spec.rate_per_hour == 0:
        return []

    rng = random.Random(spec.seed)
    weights = [w for _, _, w in spec.size_classes]
    total_w = sum(weights)
    if total_w <= 0:
        raise ValueError("size class weights must sum to a positive value")

    jobs: list[Job] = []
    t = 0.0
    rate = spec.rate_per_hour / 3600.0
    jid = 1
    while True:
        t += rng.expovariate(rate)
        if t >= horizon:
            break
        pick = rng.random() * total_w
        for lo, hi, w in spec.size_classes:
            pick -= w
            if pick <= 0:
                break
        nodes = rng.randint(lo, hi)
        runtime = max(1, int(rng.lognormvariate(spec.runtime_mu, spec.runtime_sigma)))
        walltime = math.ceil(runtime * spec.walltime_padding / 60) * 60
        walltime = min(max(walltime, spec.min_walltime), spec.max_walltime)
        runtime = min(runtime, walltime)
        uid = rng.randrange(spec.n_users)
        jobs.append(Job(
            id=jid,
            user=f"u{uid}",
            group=f"g{uid % spec.n_groups}",
            partition=spec.partition,
            nodes_requested=nodes,
            walltime_requested=walltime,
            actual_runtime=runtime,
            submit_time=int(t),
            tasks_per_node=80 if rng.random() < spec.tasks80_fraction else 40,
        ))
        jid += 1
    return jobs
