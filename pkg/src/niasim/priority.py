"""Multifactor job priority and trailing-window fair-share accounting.

Priority is a weighted sum of five factors, each in [0, 1]: queue age
(saturating at 14 days), the group's fair-share, job size relative to the
partition's per-job cap, the partition's own factor, and the QoS boost.
The shipped weights keep the relations the machine was tuned with: the
partition weight is twice the fair-share weight, the QoS weight equals
the fair-share weight, and the size weight is kept small so large jobs
from unallocated users cannot trump allocated groups.

Fair-share uses the classic exponential curve F = 2^(-U/S), where U is
the group's fraction of all node-seconds delivered in the trailing 7-day
window and S its target share of the system.  Groups without an awarded
allocation split the unallocated pool (6% by default).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .partitions import Partition, QosPolicy
from .workload import Job

DAY = 86400


@dataclass(frozen=True)
class PriorityWeights:
    age: float = 500.0
    fairshare: float = 1000.0
    size: float = 100.0
    partition: float = 2000.0
    qos: float = 1000.0
    age_saturation: int = 14 * DAY
    fairshare_window: int = 7 * DAY
    strict_ratios: bool = True

    def validate(self) -> list[str]:
        problems = []
        for name in ("age", "fairshare", "size", "partition", "qos"):
            if getattr(self, name) < 0:
                problems.append(f"weights: {name} must be nonnegative")
        if self.age_saturation <= 0:
            problems.append("weights: age_saturation must be positive")
        if self.fairshare_window <= 0:
            problems.append("weights: fairshare_window must be positive")
        return problems

    def ratio_warnings(self) -> list[str]:
        """Deviations from the tuned weight relations (informational)."""
        out = []
        if self.partition != 2 * self.fairshare:
            out.append(
                f"weights: partition weight {self.partition:g} is not twice "
                f"the fair-share weight {self.fairshare:g}"
            )
        if self.qos != self.fairshare:
            out.append(
                f"weights: qos weight {self.qos:g} differs from the "
                f"fair-share weight {self.fairshare:g}"
            )
        if self.size >= self.fairshare > 0:
            out.append(
                f"weights: size weight {self.size:g} is not below the "
                f"fair-share weight {self.fairshare:g}"
            )
        return out


class FairShareLedger:
    """Per-group target shares plus a sliding window of delivered usage.

    Records are (timestamp, group, node-seconds) tuples; eviction is lazy
    and happens on read.  A record is inside the window at time `now` iff
    its timestamp t satisfies now - window < t <= now.
    """

    def __init__(
        self,
        shares: dict[str, float] | None = None,
        default_pool: float = 0.06,
        window: int = 7 * DAY,
    ):
        shares = dict(shares or {})
        if not 0.0 <= default_pool <= 1.0:
            raise ValueError("default_pool must be within [0, 1]")
        allocated = sum(shares.values())
        if any(s < 0 for s in shares.values()):
            raise ValueError("target shares must be nonnegative")
        if allocated > 1.0 - default_pool + 1e-9:
            raise ValueError(
                f"allocated shares sum to {allocated:.4f}, exceeding the "
                f"{1.0 - default_pool:.2f} available outside the default pool"
            )
        self.shares = shares
        self.default_pool = default_pool
        self.window = window
        self._records: deque[tuple[int, str, float]] = deque()
        self._group_total: dict[str, float] = {}
        self._total = 0.0

    def record(self, group: str, nodes: int, seconds: int, now: int) -> None:
        if seconds <= 0:
            raise ValueError("usage seconds must be positive")
        if nodes < 1:
            raise ValueError("usage nodes must be >= 1")
        ns = float(nodes) * float(seconds)
        self._records.append((now, group, ns))
        self._group_total[group] = self._group_total.get(group, 0.0) + ns
        self._total += ns

    def evict(self, now: int) -> None:
        cutoff = now - self.window
        while self._records and self._records[0][0] <= cutoff:
            t, group, ns = self._records.popleft()
            self._group_total[group] -= ns
            self._total -= ns
            if self._group_total[group] <= 0.0:
                del self._group_total[group]
        if not self._records:
            self._group_total.clear()
            self._total = 0.0

    def window_usage(self, group: str, now: int) -> float:
        """Node-seconds delivered to the group inside the window."""
        self.evict(now)
        return self._group_total.get(group, 0.0)

    def usage_fraction(self, group: str, now: int) -> float:
        """The group's share of all node-seconds delivered in the window."""
        self.evict(now)
        if self._total <= 0.0:
            return 0.0
        return self._group_total.get(group, 0.0) / self._total

    def target_share(self, group: str) -> float:
        return self.shares.get(group, 0.0)

    def is_allocated(self, group: str) -> bool:
        return self.target_share(group) > 0.0

    def effective_share(self, group: str, now: int) -> float:
        """Target share, with the default pool split evenly among the
        unallocated groups active in the current window."""
        share = self.target_share(group)
        if share > 0.0:
            return share
        self.evict(now)
        active_default = sum(
            1 for g in self._group_total if not self.is_allocated(g)
        )
        if not self.is_allocated(group) and group not in self._group_total:
            active_default += 1
        return self.default_pool / max(active_default, 1)


def compute_fairshare_factor(group: str, ledger: FairShareLedger, now: int) -> float:
    """F = 2^(-U/S): 1.0 for an idle group, 0.5 at exactly its target."""
    usage = ledger.usage_fraction(group, now)
    if usage == 0.0:
        return 1.0
    share = ledger.effective_share(group, now)
    if share <= 0.0:
        return 0.0
    return 2.0 ** (-usage / share)


def record_usage(
    ledger: FairShareLedger, group: str, nodes: int, seconds: int, now: int
) -> FairShareLedger:
    """Append a delivered-usage record; eviction stays lazy at read time."""
    ledger.record(group, nodes, seconds, now)
    return ledger


def compute_priority(
    job: Job,
    now: int,
    ledger: FairShareLedger,
    weights: PriorityWeights,
    partitions: dict[str, Partition],
    qos: QosPolicy,
) -> float:
    """Weighted-sum priority of a pending job at time `now`."""
    if job.partition not in partitions:
        raise ValueError(f"job {job.id}: unknown partition {job.partition!r}")
    part = partitions[job.partition]
    age = max(now - job.submit_time, 0)
    f_age = min(age / weights.age_saturation, 1.0)
    f_fairshare = compute_fairshare_factor(job.group, ledger, now)
    f_size = job.nodes_requested / part.max_nodes
    f_partition = part.priority_factor
    f_qos = qos.priority_boost
    return (
        weights.age * f_age
        + weights.fairshare * f_fairshare
        + weights.size * f_size
        + weights.partition * f_partition
        + weights.qos * f_qos
    )
