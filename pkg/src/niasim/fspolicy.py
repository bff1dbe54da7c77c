"""Storage policy layer: quotas, scratch purging, path layout, burst buffer.

Quotas are enforced in whole blocks (a 1-byte file on a 16 MiB-block file
system is charged 16 MiB).  Scratch files untouched for more than 60 days
become purge candidates; the burst buffer gives every job an empty
per-job directory that vanishes when the job ends, while persistent burst
buffer space survives between jobs.  Capacities use binary units.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

KiB = 1024
MiB = 1024 * KiB
GiB = 1024 * MiB
TiB = 1024 * GiB

DAY = 86400


@dataclass(frozen=True)
class FileSystemSpec:
    """Policy row for one file system."""

    name: str
    quota: int | None            # bytes per principal; None = by allocation
    quota_scope: str             # "user" or "group"
    block_size: int
    purge_age: int | None = None  # seconds since last access; None = no purging
    backed_up: bool = False
    on_login: bool = True
    on_compute: str = "rw"       # rw | ro | absent

    def validate(self) -> list[str]:
        problems = []
        if self.quota is not None and self.quota < 0:
            problems.append(f"fs {self.name}: quota must be nonnegative")
        if self.block_size < 1:
            problems.append(f"fs {self.name}: block_size must be positive")
        if self.quota_scope not in ("user", "group"):
            problems.append(f"fs {self.name}: quota_scope must be user or group")
        if self.on_compute not in ("rw", "ro", "absent"):
            problems.append(f"fs {self.name}: on_compute must be rw, ro or absent")
        if self.purge_age is not None and self.purge_age <= 0:
            problems.append(f"fs {self.name}: purge_age must be positive")
        return problems


def default_filesystems() -> dict[str, FileSystemSpec]:
    """The stock policy table: home 100 GiB/user (read-only on compute),
    scratch 25 TiB/user with the 60-day purge, project by group
    allocation, burst buffer 10 TiB/user, and the tape archive reachable
    only through the archive partitions."""
    return {
        "home": FileSystemSpec("home", quota=100 * GiB, quota_scope="user",
                               block_size=MiB, backed_up=True, on_compute="ro"),
        "scratch": FileSystemSpec("scratch", quota=25 * TiB, quota_scope="user",
                                  block_size=16 * MiB, purge_age=60 * DAY),
        "project": FileSystemSpec("project", quota=None, quota_scope="group",
                                  block_size=16 * MiB, backed_up=True),
        "bb": FileSystemSpec("bb", quota=10 * TiB, quota_scope="user",
                             block_size=MiB, purge_age=48 * 3600),
        "hpss": FileSystemSpec("hpss", quota=None, quota_scope="group",
                               block_size=MiB, backed_up=True,
                               on_login=False, on_compute="absent"),
    }


@dataclass
class FileRecord:
    path: str
    user: str
    group: str
    size: int
    atime: int
    fs: str


def layout_path(fs: str, group: str, user: str) -> str:
    """Hierarchical per-user path: /<fs>/<g>/<group>/<user>, where <g> is
    the group's first letter, lowercased."""
    for label, value in (("fs", fs), ("group", group), ("user", user)):
        if not value:
            raise ValueError(f"{label} must be nonempty")
        if "/" in value:
            raise ValueError(f"{label} must not contain '/'")
    return f"/{fs}/{group[0].lower()}/{group}/{user}"


def charged_bytes(size: int, block_size: int) -> int:
    """Round a file size up to whole blocks."""
    if size < 0:
        raise ValueError("size must be nonnegative")
    if size == 0:
        return 0
    blocks = -(-size // block_size)
    return blocks * block_size


@dataclass(frozen=True)
class QuotaDecision:
    allowed: bool
    charged: int       # block-rounded delta actually accounted
    usage_after: int
    reason: str = ""


def check_quota(
    spec: FileSystemSpec,
    principal: str,
    current_usage: int,
    delta: int,
    quota: int | None = None,
) -> QuotaDecision:
    """Accept or reject a usage change against the principal's quota.

    `principal` is the user or group being charged, depending on the file
    system's quota scope.  `current_usage` is assumed block-accounted
    already; `delta` is rounded to whole blocks (negative deltas free
    whole blocks).  Landing exactly on the quota is allowed.  A quota of
    None (allocation-managed file systems) admits everything.
    """
    limit = quota if quota is not None else spec.quota
    if delta >= 0:
        charged = charged_bytes(delta, spec.block_size)
    else:
        charged = -charged_bytes(-delta, spec.block_size)
    after = current_usage + charged
    if limit is not None and after > limit:
        return QuotaDecision(
            False, charged, current_usage,
            f"{spec.name}: {principal} at {after} bytes would exceed "
            f"quota {limit}",
        )
    return QuotaDecision(True, charged, max(after, 0))


def purge_scan(
    files,
    now: int,
    specs: dict[str, FileSystemSpec] | None = None,
) -> list[FileRecord]:
    """Purge candidates: records on a purging file system whose last
    access is strictly older than the purge age.  Read-only; deleting is
    the caller's (or a later simulation event's) business."""
    specs = specs if specs is not None else default_filesystems()
    out = []
    for rec in files:
        spec = specs.get(rec.fs)
        if spec is None or spec.purge_age is None:
            continue
        if now - rec.atime > spec.purge_age:
            out.append(rec)
    return out


def access(spec: FileSystemSpec, context: str, mode: str) -> bool:
    """Is `mode` ("read"/"write") allowed from `context` ("login"/"compute")?"""
    if context not in ("login", "compute"):
        raise ValueError(f"unknown context {context!r}")
    if mode not in ("read", "write"):
        raise ValueError(f"unknown mode {mode!r}")
    if context == "login":
        return spec.on_login
    if spec.on_compute == "absent":
        return False
    if spec.on_compute == "ro":
        return mode == "read"
    return True


class BurstBuffer:
    """Shared SSD pool: per-job scratch directories plus persistent space.

    A job's directory is created empty at start and deleted with its
    contents at end; persistent space belongs to users and survives job
    boundaries.  Total footprint never exceeds the pool capacity.
    """

    def __init__(self, capacity: int = 256 * TiB, per_user_quota: int = 10 * TiB):
        self.capacity = capacity
        self.per_user_quota = per_user_quota
        self.job_dirs: dict[int, int] = {}
        self.persistent: dict[str, int] = {}

    @property
    def usage(self) -> int:
        return sum(self.job_dirs.values()) + sum(self.persistent.values())

    def job_start(self, job_id: int) -> None:
        if job_id in self.job_dirs:
            raise ValueError(f"job {job_id} already has a burst buffer directory")
        self.job_dirs[job_id] = 0

    def job_end(self, job_id: int) -> int:
        """Delete the job directory; returns the bytes reclaimed."""
        if job_id not in self.job_dirs:
            return 0
        return self.job_dirs.pop(job_id)

    def job_write(self, job_id: int, nbytes: int) -> bool:
        """Grow a job directory; refused if the pool would overflow."""
        if job_id not in self.job_dirs:
            raise ValueError(f"job {job_id} has no burst buffer directory")
        if nbytes < 0 and self.job_dirs[job_id] + nbytes < 0:
            raise ValueError("cannot shrink below empty")
        if nbytes > 0 and self.usage + nbytes > self.capacity:
            return False
        self.job_dirs[job_id] += nbytes
        return True

    def persistent_write(self, user: str, nbytes: int) -> bool:
        """Grow a user's persistent space; checked against the per-user
        quota and the pool capacity."""
        current = self.persistent.get(user, 0)
        if nbytes < 0 and current + nbytes < 0:
            raise ValueError("cannot shrink below empty")
        if nbytes > 0:
            if current + nbytes > self.per_user_quota:
                return False
            if self.usage + nbytes > self.capacity:
                return False
        self.persistent[user] = current + nbytes
        return True


def bb_job_lifecycle(event: str, job_id: int, bb: BurstBuffer) -> None:
    """Apply a job start/end transition to the burst buffer."""
    if event == "job_start":
        bb.job_start(job_id)
    elif event == "job_end":
        bb.job_end(job_id)
    else:
        raise ValueError(f"unknown burst buffer event {event!r}")


def parse_file_records(path) -> list[FileRecord]:
    """Read file records from CSV: path,user,group,fs,size,atime.

    A header row and blank or '#' lines are skipped.
    """
    out = []
    with open(path, newline="") as handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            cells = [cell.strip() for cell in row]
            if cells[0].lower() == "path":
                continue
            if len(cells) < 6:
                raise ValueError(f"{path}:{lineno}: expected 6 columns")
            try:
                size = int(cells[4])
                atime = int(cells[5])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            out.append(FileRecord(path=cells[0], user=cells[1], group=cells[2],
                                  size=size, atime=atime, fs=cells[3]))
    return out


@dataclass
class UsageRow:
    fs: str
    principal: str       # user or group, per the file system's quota scope
    files: int
    nbytes: int
    charged: int         # block-rounded footprint
    quota: int | None
    purge_candidates: int


def usage_report(
    files,
    now: int,
    specs: dict[str, FileSystemSpec] | None = None,
) -> list[UsageRow]:
    """Per-principal usage on each file system, ordered by (fs, principal)."""
    specs = specs if specs is not None else default_filesystems()
    acc: dict[tuple[str, str], UsageRow] = {}
    for rec in files:
        spec = specs.get(rec.fs)
        if spec is None:
            continue
        principal = rec.group if spec.quota_scope == "group" else rec.user
        key = (rec.fs, principal)
        row = acc.get(key)
        if row is None:
            row = acc[key] = UsageRow(rec.fs, principal, 0, 0, 0, spec.quota, 0)
        row.files += 1
        row.nbytes += rec.size
        row.charged += charged_bytes(rec.size, spec.block_size)
        if spec.purge_age is not None and now - rec.atime > spec.purge_age:
            row.purge_candidates += 1
    return [acc[key] for key in sorted(acc)]
