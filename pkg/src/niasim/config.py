"""TOML configuration: parsing, validation, and assembly.

A profile describes the whole machine in one file: topology, partitions,
priority weights, group allocations, QoS, storage policy, and workload
generation.  Validation walks everything and reports every violation at
once rather than stopping at the first.  The packaged `niagara-default`
profile encodes the stock system.
"""

from __future__ import annotations

import importlib.resources
import re
from dataclasses import dataclass, field

try:
    import tomllib
except ImportError:                      # Python 3.10
    import tomli as tomllib

from .fspolicy import FileSystemSpec, TiB, default_filesystems
from .lpbm import CATEGORIES, default_maxima, default_weights
from .partitions import (
    PartitionSpec,
    QosPolicy,
    default_partition_specs,
    default_qos_map,
    resolve_partitions,
)
from .priority import FairShareLedger, PriorityWeights
from .scheduler import SchedulerOptions, Simulation
from .topology import PlacementPolicy, TopologyConfig, build_topology
from .workload import WorkloadSpec


class ConfigError(ValueError):
    """Raised with the full list of configuration problems."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


_DURATION_RE = re.compile(r"^(\d+)\s*(s|m|h|d)?$")
_BYTES_RE = re.compile(r"^(\d+)\s*(B|KiB|MiB|GiB|TiB)?$")

_DURATION_UNITS = {"s": 1, "m": 60, "h": 3600, "d": 86400, None: 1}
_BYTE_UNITS = {"B": 1, "KiB": 1024, "MiB": 1024 ** 2,
               "GiB": 1024 ** 3, "TiB": 1024 ** 4, None: 1}


def parse_duration(value) -> int:
    """Seconds from an int or a '900'/'15m'/'24h'/'14d' string."""
    if isinstance(value, bool):
        raise ValueError(f"not a duration: {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        m = _DURATION_RE.match(value.strip())
        if m:
            return int(m.group(1)) * _DURATION_UNITS[m.group(2)]
    raise ValueError(f"not a duration: {value!r} (use seconds or s/m/h/d)")


def parse_bytes(value) -> int:
    """Bytes from an int or a binary-unit string like '100GiB'."""
    if isinstance(value, bool):
        raise ValueError(f"not a size: {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        m = _BYTES_RE.match(value.strip())
        if m:
            return int(m.group(1)) * _BYTE_UNITS[m.group(2)]
    raise ValueError(f"not a size: {value!r} (use bytes or KiB/MiB/GiB/TiB)")


@dataclass
class SimConfig:
    label: str = "niagara-default"
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    partitions: list[PartitionSpec] = field(default_factory=default_partition_specs)
    weights: PriorityWeights = field(default_factory=PriorityWeights)
    allocations: dict[str, float] = field(default_factory=dict)
    default_pool: float = 0.06
    qos: dict[str, QosPolicy] = field(default_factory=default_qos_map)
    options: SchedulerOptions = field(default_factory=SchedulerOptions)
    archive_nodes: int = 2
    workload: WorkloadSpec = field(default_factory=WorkloadSpec)
    filesystems: dict[str, FileSystemSpec] = field(default_factory=default_filesystems)
    bb_capacity: int = 256 * TiB
    lpbm_weights: dict[str, float] = field(default_factory=default_weights)
    lpbm_maxima: dict[str, float] = field(default_factory=default_maxima)
    shortlist: int = 5


class _Section:
    """One TOML table with typo detection and typed getters."""

    def __init__(self, name: str, data: dict, problems: list[str]):
        self.name = name
        self.data = dict(data)
        self.problems = problems

    def take(self, key, default=None):
        return self.data.pop(key, default)

    def take_duration(self, key, default):
        raw = self.data.pop(key, None)
        if raw is None:
            return default
        try:
            return parse_duration(raw)
        except ValueError as exc:
            self.problems.append(f"{self.name}.{key}: {exc}")
            return default

    def take_bytes(self, key, default):
        raw = self.data.pop(key, None)
        if raw is None:
            return default
        try:
            return parse_bytes(raw)
        except ValueError as exc:
            self.problems.append(f"{self.name}.{key}: {exc}")
            return default

    def finish(self) -> None:
        for key in sorted(self.data):
            self.problems.append(f"{self.name}: unknown key {key!r}")


def _parse_topology(table: dict, problems: list[str]) -> TopologyConfig:
    sec = _Section("topology", table, problems)
    cfg = TopologyConfig(
        wings=sec.take("wings", 4),
        leaf_switches=sec.take("leaf_switches", 84),
        core_switches=sec.take("core_switches", 72),
        switch_ports=sec.take("switch_ports", 36),
        nodes=sec.take("nodes", 1500),
        max_nodes_per_wing=sec.take("max_nodes_per_wing", 432),
        intra_wing_blocking=sec.take("intra_wing_blocking", 1.0),
        inter_wing_blocking=sec.take("inter_wing_blocking", 2.0),
    )
    sec.finish()
    return cfg


def _parse_partition(name: str, table: dict, problems: list[str]) -> PartitionSpec:
    sec = _Section(f"partitions.{name}", table, problems)
    spec = PartitionSpec(
        name=name,
        max_nodes=sec.take("max_nodes", 1),
        max_walltime=sec.take_duration("max_walltime", 86400),
        min_nodes=sec.take("min_nodes", 1),
        min_walltime=sec.take_duration("min_walltime", 0),
        max_jobs_per_user=sec.take("max_jobs_per_user"),
        priority_factor=float(sec.take("priority_factor", 0.0)),
        node_exclusive=sec.take("node_exclusive", True),
        wing=sec.take("wing"),
        dedicated=sec.take("dedicated", 0),
        pool=sec.take("pool", "topology"),
    )
    sec.finish()
    return spec


def _parse_weights(table: dict, problems: list[str]) -> PriorityWeights:
    sec = _Section("weights", table, problems)
    weights = PriorityWeights(
        age=float(sec.take("age", 500.0)),
        fairshare=float(sec.take("fairshare", 1000.0)),
        size=float(sec.take("size", 100.0)),
        partition=float(sec.take("partition", 2000.0)),
        qos=float(sec.take("qos", 1000.0)),
        age_saturation=sec.take_duration("age_saturation", 14 * 86400),
        fairshare_window=sec.take_duration("fairshare_window", 7 * 86400),
        strict_ratios=sec.take("strict_ratios", True),
    )
    sec.finish()
    return weights


def _parse_qos(name: str, table: dict, problems: list[str]) -> QosPolicy:
    sec = _Section(f"qos.{name}", table, problems)
    qos = QosPolicy(
        name=name,
        priority_boost=float(sec.take("priority_boost", 0.0)),
        max_nodes_per_job=sec.take("max_nodes_per_job"),
        max_submitted_jobs=sec.take("max_submitted_jobs"),
    )
    sec.finish()
    return qos


def _parse_scheduler(table: dict, problems: list[str]) -> tuple[SchedulerOptions, int]:
    sec = _Section("scheduler", table, problems)
    placement_name = sec.take("placement", "pack")
    placement = {"pack": PlacementPolicy.PACK_BY_WING,
                 "any": PlacementPolicy.ANY}.get(placement_name)
    if placement is None:
        problems.append(f"scheduler.placement: unknown policy {placement_name!r}")
        placement = PlacementPolicy.PACK_BY_WING
    purge = sec.take("purge_interval", 86400)
    if purge is not None:
        try:
            purge = parse_duration(purge)
        except ValueError as exc:
            problems.append(f"scheduler.purge_interval: {exc}")
            purge = None
        else:
            if purge == 0:      # 0 disables scanning
                purge = None
    options = SchedulerOptions(
        backfill=sec.take("backfill", "easy"),
        placement=placement,
        purge_interval=purge,
        use_burst_buffer=sec.take("use_burst_buffer", True),
    )
    archive_nodes = sec.take("archive_nodes", 2)
    sec.finish()
    return options, archive_nodes


def _parse_filesystem(name: str, table: dict, problems: list[str]) -> FileSystemSpec:
    defaults = default_filesystems().get(name)
    sec = _Section(f"filesystems.{name}", table, problems)
    purge = sec.take("purge_age", defaults.purge_age if defaults else None)
    if purge is not None:
        try:
            purge = parse_duration(purge)
        except ValueError as exc:
            problems.append(f"filesystems.{name}.purge_age: {exc}")
            purge = None
    spec = FileSystemSpec(
        name=name,
        quota=sec.take_bytes("quota", defaults.quota if defaults else None),
        quota_scope=sec.take("quota_scope",
                             defaults.quota_scope if defaults else "user"),
        block_size=sec.take_bytes("block_size",
                                  defaults.block_size if defaults else 1024 ** 2),
        purge_age=purge,
        backed_up=sec.take("backed_up", defaults.backed_up if defaults else False),
        on_login=sec.take("on_login", defaults.on_login if defaults else True),
        on_compute=sec.take("on_compute",
                            defaults.on_compute if defaults else "rw"),
    )
    sec.finish()
    return spec


def _parse_workload(table: dict, problems: list[str]) -> WorkloadSpec:
    sec = _Section("workload", table, problems)
    classes = sec.take("size_classes")
    if classes is not None:
        try:
            classes = tuple((int(lo), int(hi), float(w)) for lo, hi, w in classes)
        except (TypeError, ValueError):
            problems.append("workload.size_classes: expected [lo, hi, weight] rows")
            classes = None
    base = WorkloadSpec()
    spec = WorkloadSpec(
        rate_per_hour=float(sec.take("rate_per_hour", base.rate_per_hour)),
        size_classes=classes if classes is not None else base.size_classes,
        runtime_mu=float(sec.take("runtime_mu", base.runtime_mu)),
        runtime_sigma=float(sec.take("runtime_sigma", base.runtime_sigma)),
        walltime_padding=float(sec.take("walltime_padding", base.walltime_padding)),
        min_walltime=sec.take_duration("min_walltime", base.min_walltime),
        max_walltime=sec.take_duration("max_walltime", base.max_walltime),
        n_users=sec.take("n_users", base.n_users),
        n_groups=sec.take("n_groups", base.n_groups),
        partition=sec.take("partition", base.partition),
        tasks80_fraction=float(sec.take("tasks80_fraction", base.tasks80_fraction)),
        seed=sec.take("seed", base.seed),
    )
    sec.finish()
    return spec


def parse_config(text: str, label: str = "config") -> SimConfig:
    """Parse and validate a TOML profile; raises ConfigError listing
    every problem found."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{label}: invalid TOML: {exc}"]) from None

    problems: list[str] = []
    cfg = SimConfig(label=raw.pop("label", label))

    if "topology" in raw:
        cfg.topology = _parse_topology(raw.pop("topology"), problems)
    if "partitions" in raw:
        tables = raw.pop("partitions")
        cfg.partitions = [
            _parse_partition(name, tables[name], problems)
            for name in tables
        ]
    if "weights" in raw:
        cfg.weights = _parse_weights(raw.pop("weights"), problems)
    if "allocations" in raw:
        shares = raw.pop("allocations")
        for group, share in sorted(shares.items()):
            if not isinstance(share, (int, float)) or isinstance(share, bool):
                problems.append(f"allocations.{group}: share must be a number")
            else:
                cfg.allocations[group] = float(share)
    if "fairshare" in raw:
        sec = _Section("fairshare", raw.pop("fairshare"), problems)
        cfg.default_pool = float(sec.take("default_pool", 0.06))
        sec.finish()
    if "qos" in raw:
        tables = raw.pop("qos")
        cfg.qos = {name: _parse_qos(name, tables[name], problems)
                   for name in tables}
    if "scheduler" in raw:
        cfg.options, cfg.archive_nodes = _parse_scheduler(
            raw.pop("scheduler"), problems)
    if "filesystems" in raw:
        tables = raw.pop("filesystems")
        cfg.filesystems = dict(default_filesystems())
        for name in tables:
            cfg.filesystems[name] = _parse_filesystem(
                name, tables[name], problems)
    if "burst_buffer" in raw:
        sec = _Section("burst_buffer", raw.pop("burst_buffer"), problems)
        cfg.bb_capacity = sec.take_bytes("capacity", 256 * TiB)
        sec.finish()
    if "workload" in raw:
        cfg.workload = _parse_workload(raw.pop("workload"), problems)
    if "lpbm" in raw:
        sec = _Section("lpbm", raw.pop("lpbm"), problems)
        cfg.shortlist = sec.take("shortlist", 5)
        weights = sec.take("weights")
        maxima = sec.take("maxima")
        if weights is not None:
            cfg.lpbm_weights = {k: float(v) for k, v in weights.items()}
        if maxima is not None:
            cfg.lpbm_maxima = {k: float(v) for k, v in maxima.items()}
        sec.finish()
    for key in sorted(raw):
        problems.append(f"unknown section {key!r}")

    problems.extend(validate_config(cfg))
    if problems:
        raise ConfigError(problems)
    return cfg


def validate_config(cfg: SimConfig) -> list[str]:
    """Every constraint violation in the assembled config, in one list."""
    problems = []
    problems.extend(cfg.topology.validate())
    problems.extend(cfg.weights.validate())
    seen = set()
    for spec in cfg.partitions:
        if spec.name in seen:
            problems.append(f"partition {spec.name} defined twice")
        seen.add(spec.name)
        if spec.pool not in ("topology", "archive"):
            problems.append(
                f"partition {spec.name}: pool must be topology or archive")
        if spec.wing is not None and not 1 <= spec.wing <= cfg.topology.wings:
            problems.append(
                f"partition {spec.name}: wing {spec.wing} outside "
                f"1..{cfg.topology.wings}")
    for name, qos in cfg.qos.items():
        problems.extend(qos.validate())
    for name in ("normal", "default"):
        if name not in cfg.qos:
            problems.append(f"qos {name!r} must be defined")
    if not 0.0 <= cfg.default_pool <= 1.0:
        problems.append("fairshare.default_pool must be within [0, 1]")
    total = 0.0
    for group, share in cfg.allocations.items():
        if share < 0:
            problems.append(f"allocations.{group}: share must be nonnegative")
        total += share
    if total > 1.0 - cfg.default_pool + 1e-9:
        problems.append(
            f"allocations sum to {total:.4f}, exceeding the "
            f"{1.0 - cfg.default_pool:.2f} available outside the default pool")
    for spec in cfg.filesystems.values():
        problems.extend(spec.validate())
    problems.extend(cfg.options.validate())
    if cfg.archive_nodes < 1:
        problems.append("scheduler.archive_nodes must be >= 1")
    if cfg.bb_capacity < 0:
        problems.append("burst_buffer.capacity must be nonnegative")
    if cfg.shortlist < 1:
        problems.append("lpbm.shortlist must be >= 1")
    for name, weight in cfg.lpbm_weights.items():
        if name != "lpbm" and name not in CATEGORIES:
            problems.append(f"lpbm.weights: unknown category {name!r}")
        elif weight < 0:
            problems.append(f"lpbm.weights.{name}: must be nonnegative")
    for name, cap in cfg.lpbm_maxima.items():
        if name not in CATEGORIES:
            problems.append(f"lpbm.maxima: unknown category {name!r}")
        elif cap <= 0:
            problems.append(f"lpbm.maxima.{name}: must be positive")
    return problems


def config_warnings(cfg: SimConfig) -> list[str]:
    """Non-fatal advisories, mainly the tuned weight-ratio checks."""
    out = []
    if cfg.weights.strict_ratios:
        out.extend(cfg.weights.ratio_warnings())
    return out


def load_config(path=None) -> SimConfig:
    """Load a profile from `path`, or the packaged default when None."""
    if path is None:
        text = (importlib.resources.files("niasim") / "profiles"
                / "niagara-default.toml").read_text()
        return parse_config(text, label="niagara-default")
    try:
        with open(path) as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from None
    return parse_config(text, label=str(path))


def build_simulation(cfg: SimConfig) -> Simulation:
    """Assemble a ready-to-run simulation from a validated config."""
    topo = build_topology(cfg.topology)
    partitions, archive_ids = resolve_partitions(
        topo, cfg.partitions, archive_nodes=cfg.archive_nodes)
    ledger = FairShareLedger(
        cfg.allocations,
        default_pool=cfg.default_pool,
        window=cfg.weights.fairshare_window,
    )
    return Simulation(
        topo, partitions, archive_ids,
        weights=cfg.weights,
        ledger=ledger,
        qos_map=cfg.qos,
        options=cfg.options,
    )
