"""Command-line entry point.

One binary, several subcommands: simulate a workload, describe the
fabric, generate traces, pre-check a submission, report storage usage,
score procurement benchmarks, and render reports with figures.  Exit
codes: 0 success, 1 runtime failure, 2 usage or config error
(submit-check uses 0/1/2 for accept/warn/reject).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

try:
    import tomllib
except ImportError:
    import tomli as tomllib

from . import config as configmod
from . import figures, fspolicy, lpbm, metrics
from .config import ConfigError, build_simulation, load_config, parse_duration
from .scheduler import run_simulation
from .submitfilter import explain_rules, validate_submission
from .topology import build_topology
from .workload import Job, emit_trace, generate_workload, parse_trace


def _global_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", metavar="PATH",
                        help="profile to load (default: built-in)")
    parent.add_argument("--seed", type=int, metavar="N",
                        help="override the workload generator seed")
    parent.add_argument("--out", metavar="DIR", default="out",
                        help="output directory (default: out)")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _global_flags()
    parser = argparse.ArgumentParser(
        prog="niasim",
        description="Deterministic cluster scheduling and storage simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[parent],
                       help="run a workload and write job/event records")
    p.add_argument("--workload", metavar="TRACE",
                   help="job trace to run (default: generate synthetically)")
    p.add_argument("--hours", type=float, default=24.0,
                   help="generated arrival horizon in hours (default 24)")

    p = sub.add_parser("topo", parents=[parent],
                       help="inspect the network fabric")
    p.add_argument("action", choices=["describe"])

    p = sub.add_parser("workload", parents=[parent],
                       help="generate a synthetic job trace")
    p.add_argument("action", choices=["gen"])
    p.add_argument("--hours", type=float, default=24.0,
                   help="arrival horizon in hours (default 24)")
    p.add_argument("--output", metavar="FILE",
                   help="trace file to write (default: <out>/workload.swf)")

    p = sub.add_parser("submit-check", parents=[parent],
                       help="validate a job request without running it")
    p.add_argument("job", nargs="?", metavar="JOBFILE",
                   help="TOML job description")
    p.add_argument("--rules", metavar="PARTITION",
                   help="print the live limits for a partition and exit")
    p.add_argument("--allocated", action="store_true",
                   help="treat the job's group as having an allocation")

    p = sub.add_parser("fs", parents=[parent],
                       help="storage policy and usage reports")
    p.add_argument("action", choices=["report"])
    p.add_argument("--files", metavar="CSV",
                   help="file records (path,user,group,fs,size,atime)")
    p.add_argument("--at", metavar="TIME",
                   help="report instant (default: newest atime)")

    p = sub.add_parser("lpbm", parents=[parent],
                       help="score benchmark results and rank proposals")
    p.add_argument("action", choices=["score"])
    p.add_argument("--results", required=True, metavar="CSV",
                   help="benchmark results (benchmark,system,nodes,metric,direction)")
    p.add_argument("--reference", required=True, metavar="SYSTEM",
                   help="system the others are normalized against")
    p.add_argument("--proposals", metavar="TOML",
                   help="category points per proposal, for ranking")
    p.add_argument("--top", type=int, metavar="K",
                   help="shortlist size (default from config)")

    p = sub.add_parser("report", parents=[parent],
                       help="run a workload and emit CSV tables plus figures")
    p.add_argument("--workload", metavar="TRACE")
    p.add_argument("--hours", type=float, default=24.0)
    p.add_argument("--util", action="store_true",
                   help="utilization time series")
    p.add_argument("--qsum", metavar="AT",
                   help="per-user queue summary at the given time")
    p.add_argument("--waits", action="store_true",
                   help="wait-time statistics")
    p.add_argument("--locality", action="store_true",
                   help="per-job placement locality")
    return parser


def _load_profile(args):
    cfg = load_config(args.config)
    for warning in configmod.config_warnings(cfg):
        print(f"warning: {warning}", file=sys.stderr)
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scenario_jobs(cfg, args):
    if args.workload:
        diagnostics: list[str] = []
        jobs = parse_trace(args.workload, errors=diagnostics)
        for line in diagnostics:
            print(f"warning: {line}", file=sys.stderr)
        return jobs
    spec = cfg.workload
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    return generate_workload(spec, horizon=int(args.hours * 3600))


def _run_scenario(cfg, args):
    jobs = _scenario_jobs(cfg, args)
    sim = build_simulation(cfg)
    result = run_simulation(jobs, sim)
    return jobs, result


def _summarize(result) -> str:
    phases = {}
    for rec in result.records.values():
        phases[rec.phase.value] = phases.get(rec.phase.value, 0) + 1
    parts = [f"{phases[k]} {k}" for k in sorted(phases)]
    line = f"jobs: {len(result.records)} ({', '.join(parts)})"
    if result.horizon > 0:
        util = metrics.utilization(result, 0, result.horizon)
        line += f"\nhorizon: {result.horizon} s, utilization {util:.3f}"
    return line


def cmd_simulate(args) -> int:
    cfg = _load_profile(args)
    out = _outdir(args)
    _, result = _run_scenario(cfg, args)
    metrics.write_job_table(result, out / "jobs.csv")
    metrics.write_event_log(result, out / "events.log")
    print(_summarize(result))
    print(f"wrote {out / 'jobs.csv'} and {out / 'events.log'}")
    return 0


def cmd_topo(args) -> int:
    cfg = _load_profile(args)
    topo = build_topology(cfg.topology)
    t = topo.cfg
    pops = " ".join(str(p) for p in topo.wing_populations())
    print(f"{t.wings} wings, {t.nodes} nodes, {t.leaf_switches} leaf and "
          f"{t.core_switches} core switches ({t.switch_ports} ports each)")
    print(f"wing populations: {pops} (cap {t.max_nodes_per_wing} per wing)")
    print(f"blocking: {t.intra_wing_blocking:.1f} within a wing, "
          f"{t.inter_wing_blocking:.1f} across wings")
    print("hops: 0 same node, 2 same leaf, 4 same wing, 6 across wings")
    return 0


def cmd_workload(args) -> int:
    cfg = _load_profile(args)
    spec = cfg.workload
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    jobs = generate_workload(spec, horizon=int(args.hours * 3600))
    target = Path(args.output) if args.output else _outdir(args) / "workload.swf"
    target.parent.mkdir(parents=True, exist_ok=True)
    emit_trace(jobs, target)
    print(f"wrote {len(jobs)} jobs to {target}")
    return 0


def _job_from_toml(path) -> Job:
    with open(path, "rb") as handle:
        raw = tomllib.load(handle)
    known = {
        "user", "group", "partition", "nodes", "walltime", "tasks_per_node",
        "cwd_fs", "needs_network", "qos",
    }
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValueError(f"{path}: unknown job keys: {', '.join(unknown)}")
    return Job(
        id=0,
        user=raw.get("user", "nobody"),
        group=raw.get("group", "nogroup"),
        partition=raw.get("partition", "compute"),
        nodes_requested=int(raw.get("nodes", 1)),
        walltime_requested=parse_duration(raw.get("walltime", 3600)),
        actual_runtime=0,
        tasks_per_node=int(raw.get("tasks_per_node", 40)),
        qos=raw.get("qos"),
        submit_cwd_fs=raw.get("cwd_fs", "scratch"),
        needs_network=bool(raw.get("needs_network", False)),
    )


def cmd_submit_check(args) -> int:
    cfg = _load_profile(args)
    sim = build_simulation(cfg)
    if args.rules:
        print(explain_rules(args.rules, sim.partitions, sim.qos_map))
        return 0
    if not args.job:
        print("error: a JOBFILE (or --rules PARTITION) is required",
              file=sys.stderr)
        return 2
    job = _job_from_toml(args.job)
    verdict = validate_submission(
        job, sim.partitions, sim.qos_map, allocated=args.allocated,
    )
    print(verdict)
    return verdict.exit_code


def cmd_fs(args) -> int:
    cfg = _load_profile(args)
    specs = cfg.filesystems
    if not args.files:
        print(f"{'fs':<10}{'quota':>14}{'scope':>8}{'block':>10}"
              f"{'purge':>8}{'backup':>8}{'login':>7}{'compute':>9}")
        for name in sorted(specs):
            spec = specs[name]
            quota = "allocation" if spec.quota is None else str(spec.quota)
            purge = "-" if spec.purge_age is None else f"{spec.purge_age // 86400}d"
            print(f"{name:<10}{quota:>14}{spec.quota_scope:>8}"
                  f"{spec.block_size:>10}{purge:>8}"
                  f"{'yes' if spec.backed_up else 'no':>8}"
                  f"{'yes' if spec.on_login else 'no':>7}"
                  f"{spec.on_compute:>9}")
        return 0
    records = fspolicy.parse_file_records(args.files)
    now = (parse_duration(args.at) if args.at is not None
           else max((r.atime for r in records), default=0))
    rows = fspolicy.usage_report(records, now, specs)
    print(f"{'fs':<10}{'principal':<12}{'files':>7}{'bytes':>16}"
          f"{'charged':>16}{'quota':>16}{'purgeable':>10}")
    for row in rows:
        quota = "allocation" if row.quota is None else str(row.quota)
        print(f"{row.fs:<10}{row.principal:<12}{row.files:>7}"
              f"{row.nbytes:>16}{row.charged:>16}{quota:>16}"
              f"{row.purge_candidates:>10}")
    return 0


def cmd_lpbm(args) -> int:
    cfg = _load_profile(args)
    results = lpbm.parse_results(args.results)
    by_system: dict[str, list] = {}
    for res in results:
        by_system.setdefault(res.system, []).append(res)
    if args.reference not in by_system:
        raise ValueError(f"reference system {args.reference!r} not in results")
    reference = by_system.pop(args.reference)

    scores = {}
    print(f"{'system':<16}{'score':>8}")
    for system in sorted(by_system):
        scores[system] = lpbm.lpbm_score(by_system[system], reference)
        print(f"{system:<16}{scores[system]:>8.3f}")

    if not args.proposals:
        return 0
    with open(args.proposals, "rb") as handle:
        raw = tomllib.load(handle)
    cards = []
    for name, table in raw.get("proposals", {}).items():
        table = dict(table)
        benchmark = table.pop("lpbm", None)
        if benchmark is None:
            if name not in scores:
                raise ValueError(
                    f"proposal {name!r} has no benchmark results and no "
                    f"explicit lpbm value")
            benchmark = scores[name]
        cards.append(lpbm.ProposalScoreCard(
            proposal=name,
            lpbm=float(benchmark),
            points={k: float(v) for k, v in table.items()},
            maxima=cfg.lpbm_maxima,
            weights=cfg.lpbm_weights,
        ))
    k = args.top if args.top is not None else cfg.shortlist
    ranked, shortlist = lpbm.rank_proposals(cards, k=k)
    chosen = {id(card) for card, _ in shortlist}
    print(f"\n{'rank':<6}{'proposal':<16}{'score':>8}  shortlist")
    for i, (card, score) in enumerate(ranked, start=1):
        mark = "yes" if id(card) in chosen else ""
        print(f"{i:<6}{card.proposal:<16}{score:>8.3f}  {mark}")
    return 0


def cmd_report(args) -> int:
    cfg = _load_profile(args)
    out = _outdir(args)
    _, result = _run_scenario(cfg, args)
    wanted_all = not (args.util or args.waits or args.locality or args.qsum)
    written = []
    partitions = sorted({rec.job.partition for rec in result.records.values()})
    if args.util or wanted_all:
        metrics.write_utilization(result, out / "util.csv")
        figures.plot_utilization(result, out / "util.png")
        written += ["util.csv", "util.png"]
    if args.qsum is not None:
        report = metrics.qsum(result, parse_duration(args.qsum))
        metrics.write_qsum(report, out / "qsum.csv")
        written.append("qsum.csv")
    if args.waits or wanted_all:
        metrics.write_waits(result, out / "waits.csv", partitions)
        figures.plot_waits(result, out / "waits.png", partitions)
        written += ["waits.csv", "waits.png"]
    if args.locality or wanted_all:
        metrics.write_locality(result, out / "locality.csv")
        figures.plot_locality(result, out / "locality.png")
        written += ["locality.csv", "locality.png"]
    metrics.write_event_log(result, out / "events.log")
    written.append("events.log")
    print(_summarize(result))
    print("wrote " + ", ".join(str(out / name) for name in written))
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "topo": cmd_topo,
    "workload": cmd_workload,
    "submit-check": cmd_submit_check,
    "fs": cmd_fs,
    "lpbm": cmd_lpbm,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
