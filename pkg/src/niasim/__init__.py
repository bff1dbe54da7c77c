"""Deterministic simulator of a large batch-scheduled cluster.

Models the switch fabric, partitioned scheduler with multifactor
priority and EASY backfill, storage policies, and procurement
benchmark scoring, with reproducible event-level output.
"""

from .config import ConfigError, SimConfig, build_simulation, load_config
from .fspolicy import (
    BurstBuffer,
    FileRecord,
    FileSystemSpec,
    check_quota,
    default_filesystems,
    layout_path,
    purge_scan,
)
from .lpbm import BenchmarkResult, ProposalScoreCard, lpbm_score, rank_proposals
from .metrics import locality_report, qsum, utilization, wait_time_stats
from .partitions import Partition, PartitionSpec, QosPolicy, resolve_partitions
from .priority import FairShareLedger, PriorityWeights, compute_fairshare_factor, compute_priority
from .scheduler import (
    EventKind,
    EventQueue,
    JobRecord,
    SchedulerOptions,
    Simulation,
    SimulationResult,
    default_simulation,
    run_simulation,
)
from .submitfilter import Verdict, explain_rules, validate_submission
from .topology import PlacementPolicy, Topology, TopologyConfig, build_topology
from .workload import Job, JobPhase, WorkloadSpec, emit_trace, generate_workload, parse_trace

__version__ = "0.1.0"

__all__ = [
    "BenchmarkResult",
    "BurstBuffer",
    "ConfigError",
    "EventKind",
    "EventQueue",
    "FairShareLedger",
    "FileRecord",
    "FileSystemSpec",
    "Job",
    "JobPhase",
    "JobRecord",
    "Partition",
    "PartitionSpec",
    "PlacementPolicy",
    "PriorityWeights",
    "ProposalScoreCard",
    "QosPolicy",
    "SchedulerOptions",
    "SimConfig",
    "Simulation",
    "SimulationResult",
    "Topology",
    "TopologyConfig",
    "Verdict",
    "WorkloadSpec",
    "build_simulation",
    "build_topology",
    "check_quota",
    "compute_fairshare_factor",
    "compute_priority",
    "default_filesystems",
    "default_simulation",
    "emit_trace",
    "explain_rules",
    "generate_workload",
    "layout_path",
    "load_config",
    "locality_report",
    "lpbm_score",
    "parse_trace",
    "purge_scan",
    "qsum",
    "rank_proposals",
    "resolve_partitions",
    "run_simulation",
    "utilization",
    "validate_submission",
    "wait_time_stats",
]
