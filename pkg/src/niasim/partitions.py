"""Partitions (scheduling queues) and quality-of-service policies.

The default partition family: `compute` (1-1000 nodes, 15 min - 24 h, 1495
eligible nodes, node-exclusive), `debug` (1 h cap, 1 running job per user,
5 dedicated nodes but eligible everywhere), `dragonfly1..4` pinned to one
wing each to guarantee 1:1 blocking, and three shared `archive-*`
partitions on a small mover pool with per-user simultaneous-job caps
(75 x 1 h, 5 x 3 d, 48 x 1 h).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .topology import Topology
from .workload import Job

TOPOLOGY_POOL = "topology"
ARCHIVE_POOL = "archive"


@dataclass
class Partition:
    name: str
    max_nodes: int
    max_walltime: int
    min_nodes: int = 1
    min_walltime: int = 0
    dedicated_nodes: frozenset[int] = frozenset()
    eligible_nodes: frozenset[int] = frozenset()
    max_jobs_per_user: int | None = None
    priority_factor: float = 0.0
    node_exclusive: bool = True
    wing_restriction: int | None = None
    pool: str = TOPOLOGY_POOL

    def validate(self) -> list[str]:
        problems = []
        if self.min_nodes < 1:
            problems.append(f"partition {self.name}: min_nodes must be >= 1")
        if self.min_nodes > self.max_nodes:
            problems.append(f"partition {self.name}: min_nodes > max_nodes")
        if self.min_walltime > self.max_walltime:
            problems.append(f"partition {self.name}: min_walltime > max_walltime")
        if self.max_walltime < 1:
            problems.append(f"partition {self.name}: max_walltime must be positive")
        if not self.dedicated_nodes <= self.eligible_nodes:
            problems.append(f"partition {self.name}: dedicated nodes not eligible")
        if not 0.0 <= self.priority_factor <= 1.0:
            problems.append(f"partition {self.name}: priority_factor outside [0, 1]")
        if self.max_jobs_per_user is not None and self.max_jobs_per_user < 1:
            problems.append(f"partition {self.name}: max_jobs_per_user must be >= 1")
        return problems


@dataclass(frozen=True)
class QosPolicy:
    """Priority boost plus per-user caps for a named quality of service."""

    name: str
    priority_boost: float = 0.0
    max_nodes_per_job: int | None = None
    max_submitted_jobs: int | None = None

    def validate(self) -> list[str]:
        problems = []
        if not 0.0 <= self.priority_boost <= 1.0:
            problems.append(f"qos {self.name}: priority_boost outside [0, 1]")
        if self.max_nodes_per_job is not None and self.max_nodes_per_job < 1:
            problems.append(f"qos {self.name}: max_nodes_per_job must be >= 1")
        if self.max_submitted_jobs is not None and self.max_submitted_jobs < 1:
            problems.append(f"qos {self.name}: max_submitted_jobs must be >= 1")
        return problems


@dataclass(frozen=True)
class PartitionSpec:
    """Raw, config-level description; node sets are resolved against a
    built topology by resolve_partitions."""

    name: str
    max_nodes: int
    max_walltime: int
    min_nodes: int = 1
    min_walltime: int = 0
    max_jobs_per_user: int | None = None
    priority_factor: float = 0.0
    node_exclusive: bool = True
    wing: int | None = None        # 1-based wing number, as in the partition names
    dedicated: int = 0             # node count carved out for this partition alone
    pool: str = TOPOLOGY_POOL


def resolve_partitions(
    topo: Topology,
    specs: list[PartitionSpec],
    archive_nodes: int = 2,
) -> tuple[dict[str, Partition], list[int]]:
    """Turn config-level partition specs into concrete node sets.

    Dedicated nodes are carved from the top of the id range and removed
    from every other topology partition's eligible set.  Per-job node caps
    are clamped to the eligible-set size so that an accepted job is always
    startable on an empty cluster.
    """
    archive_ids = [topo.cfg.nodes + i for i in range(archive_nodes)]

    dedicated: dict[str, frozenset[int]] = {}
    next_top = topo.cfg.nodes
    for spec in specs:
        if spec.pool == TOPOLOGY_POOL and spec.dedicated > 0:
            carve = frozenset(range(next_top - spec.dedicated, next_top))
            next_top -= spec.dedicated
            dedicated[spec.name] = carve
    reserved = frozenset().union(*dedicated.values()) if dedicated else frozenset()

    partitions: dict[str, Partition] = {}
    for spec in specs:
        if spec.pool == ARCHIVE_POOL:
            eligible = frozenset(archive_ids)
            part = Partition(
                name=spec.name,
                min_nodes=spec.min_nodes,
                max_nodes=min(spec.max_nodes, len(eligible)),
                min_walltime=spec.min_walltime,
                max_walltime=spec.max_walltime,
                eligible_nodes=eligible,
                max_jobs_per_user=spec.max_jobs_per_user,
                priority_factor=spec.priority_factor,
                node_exclusive=spec.node_exclusive,
                pool=ARCHIVE_POOL,
            )
        else:
            if spec.wing is not None:
                wing_index = spec.wing - 1
                members = frozenset(topo.wing_nodes(wing_index))
            else:
                wing_index = None
                members = frozenset(topo.all_nodes())
            own_dedicated = dedicated.get(spec.name, frozenset())
            # a partition with its own dedicated nodes may still roam the
            # whole machine; everyone else must stay off reserved nodes
            if own_dedicated:
                eligible = members
            else:
                eligible = members - reserved
            part = Partition(
                name=spec.name,
                min_nodes=spec.min_nodes,
                max_nodes=min(spec.max_nodes, len(eligible)),
                min_walltime=spec.min_walltime,
                max_walltime=spec.max_walltime,
                dedicated_nodes=own_dedicated,
                eligible_nodes=eligible,
                max_jobs_per_user=spec.max_jobs_per_user,
                priority_factor=spec.priority_factor,
                node_exclusive=spec.node_exclusive,
                wing_restriction=wing_index,
            )
        problems = part.validate()
        if problems:
            raise ValueError("; ".join(problems))
        partitions[part.name] = part
    return partitions, archive_ids


def default_partition_specs() -> list[PartitionSpec]:
    """The stock partition table used by the default profile."""
    day = 86400
    specs = [
        PartitionSpec("compute", max_nodes=1000, max_walltime=day,
                      min_walltime=900),
        PartitionSpec("debug", max_nodes=1000, max_walltime=3600,
                      max_jobs_per_user=1, dedicated=5, priority_factor=1.0),
    ]
    for k in range(1, 5):
        specs.append(PartitionSpec(
            f"dragonfly{k}", max_nodes=1000, max_walltime=day,
            min_walltime=900, wing=k,
        ))
    specs += [
        PartitionSpec("archive-short", max_nodes=1, max_walltime=3600,
                      max_jobs_per_user=75, node_exclusive=False,
                      pool=ARCHIVE_POOL),
        PartitionSpec("archive-long", max_nodes=1, max_walltime=3 * day,
                      max_jobs_per_user=5, node_exclusive=False,
                      pool=ARCHIVE_POOL),
        PartitionSpec("archive-interactive", max_nodes=1, max_walltime=3600,
                      max_jobs_per_user=48, node_exclusive=False,
                      pool=ARCHIVE_POOL),
    ]
    return specs


def resolve_qos(job: Job, qos_map: dict[str, QosPolicy], allocated: bool) -> QosPolicy:
    """QoS for a job: explicit name, else `normal` for allocated groups and
    `default` for everyone served out of the unallocated pool."""
    if job.qos is not None:
        if job.qos not in qos_map:
            raise ValueError(f"job {job.id}: unknown qos {job.qos!r}")
        return qos_map[job.qos]
    return qos_map["normal"] if allocated else qos_map["default"]


def default_qos_map() -> dict[str, QosPolicy]:
    return {
        "normal": QosPolicy("normal"),
        "default": QosPolicy("default", max_nodes_per_job=20,
                             max_submitted_jobs=50),
    }
