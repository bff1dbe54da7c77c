"""Large Parallel Benchmark scoring for procurement.

A proposed system's benchmark results are normalized against a reference
system: throughput-like metrics score proposed/reference, time-like
metrics reference/proposed, and the per-benchmark speedups are combined
with a geometric mean so no single benchmark dominates.  The resulting
number is folded together with scored proposal categories (technical
merit, energy efficiency, and so on) into one comparable figure per
proposal.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

BENCHMARKS = ("HPCG", "Nek5000", "WRF", "NAMD", "miniDFT", "SPEC-MPI-2007", "IOR")

CATEGORIES = (
    "technical_merit",
    "energy_efficiency",
    "implementation_plan",
    "service_warranty",
    "vendor_experience",
)

MIN_BENCHMARK_NODES = 100


class SmallRunWarning(UserWarning):
    """Benchmark run used fewer nodes than the required minimum."""


@dataclass(frozen=True)
class BenchmarkResult:
    benchmark: str
    system: str
    nodes: int
    value: float
    higher_is_better: bool

    def validate(self) -> list[str]:
        problems = []
        if self.benchmark not in BENCHMARKS:
            problems.append(f"unknown benchmark {self.benchmark!r}")
        if self.nodes < 1:
            problems.append(f"{self.benchmark}: nodes must be positive")
        if not self.value > 0:
            problems.append(f"{self.benchmark}: metric must be positive")
        return problems


def _by_benchmark(results, label: str) -> dict[str, BenchmarkResult]:
    out: dict[str, BenchmarkResult] = {}
    for res in results:
        problems = res.validate()
        if problems:
            raise ValueError(f"{label}: " + "; ".join(problems))
        if res.benchmark in out:
            raise ValueError(f"{label}: duplicate result for {res.benchmark}")
        out[res.benchmark] = res
    if not out:
        raise ValueError(f"{label}: no results")
    return out


def lpbm_score(proposed, reference) -> float:
    """Geometric mean of per-benchmark speedups against the reference.

    Both result sets must cover the same benchmarks.  Proposed runs on
    fewer than MIN_BENCHMARK_NODES nodes are accepted but trigger a
    SmallRunWarning, mirroring the procurement requirement that vendors
    benchmark at scale.
    """
    prop = _by_benchmark(proposed, "proposed")
    ref = _by_benchmark(reference, "reference")
    missing = sorted(set(ref) - set(prop))
    extra = sorted(set(prop) - set(ref))
    if missing:
        raise ValueError(f"proposed is missing benchmarks: {', '.join(missing)}")
    if extra:
        raise ValueError(f"reference is missing benchmarks: {', '.join(extra)}")

    logs = []
    for name in sorted(prop):
        p, r = prop[name], ref[name]
        if p.higher_is_better != r.higher_is_better:
            raise ValueError(f"{name}: direction flag differs between systems")
        if p.nodes < MIN_BENCHMARK_NODES:
            warnings.warn(
                f"{name} on {p.system}: run used {p.nodes} nodes, "
                f"minimum is {MIN_BENCHMARK_NODES}",
                SmallRunWarning,
                stacklevel=2,
            )
        speedup = p.value / r.value if p.higher_is_better else r.value / p.value
        logs.append(math.log(speedup))
    return math.exp(math.fsum(logs) / len(logs))


def default_weights() -> dict[str, float]:
    """Half the weight on the benchmark score, the rest split evenly
    across the five proposal categories."""
    weights = {"lpbm": 0.5}
    for cat in CATEGORIES:
        weights[cat] = 0.1
    return weights


def default_maxima() -> dict[str, float]:
    return {cat: 100.0 for cat in CATEGORIES}


@dataclass
class ProposalScoreCard:
    proposal: str
    lpbm: float
    points: dict[str, float]
    maxima: dict[str, float] = field(default_factory=default_maxima)
    weights: dict[str, float] = field(default_factory=default_weights)

    def validate(self) -> list[str]:
        problems = []
        if self.lpbm < 0:
            problems.append(f"{self.proposal}: lpbm score must be nonnegative")
        for cat in CATEGORIES:
            if cat not in self.points:
                problems.append(f"{self.proposal}: missing points for {cat}")
                continue
            cap = self.maxima.get(cat)
            if cap is None or cap <= 0:
                problems.append(f"{self.proposal}: {cat} needs a positive maximum")
                continue
            if not 0 <= self.points[cat] <= cap:
                problems.append(
                    f"{self.proposal}: {cat} points {self.points[cat]} "
                    f"outside 0..{cap}"
                )
        for name in ("lpbm", *CATEGORIES):
            if self.weights.get(name, 0.0) < 0:
                problems.append(f"{self.proposal}: weight for {name} is negative")
        return problems


def proposal_score(card: ProposalScoreCard) -> float:
    """Weighted sum of the benchmark score and the normalized category
    points (each category scaled to 0..1 by its maximum)."""
    problems = card.validate()
    if problems:
        raise ValueError("; ".join(problems))
    score = card.weights.get("lpbm", 0.0) * card.lpbm
    for cat in CATEGORIES:
        score += card.weights.get(cat, 0.0) * (card.points[cat] / card.maxima[cat])
    return score


def rank_proposals(cards, k: int = 5):
    """Order proposals by descending score; ties keep submission order.

    Returns (ranked, shortlist) where each entry is (card, score) and the
    shortlist holds the top k.
    """
    cards = list(cards)
    if not cards:
        raise ValueError("no proposals to rank")
    if k < 1:
        raise ValueError("shortlist size must be positive")
    scored = [(card, proposal_score(card)) for card in cards]
    order = sorted(range(len(scored)), key=lambda i: (-scored[i][1], i))
    ranked = [scored[i] for i in order]
    return ranked, ranked[:k]


def parse_results(path) -> list[BenchmarkResult]:
    """Read a delimited benchmark results file.

    Columns: benchmark, system, nodes, metric, direction (higher|lower).
    A leading header row and blank or '#' lines are skipped.
    """
    out = []
    with open(path, newline="") as handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            cells = [cell.strip() for cell in row]
            if cells[0].lower() == "benchmark":
                continue
            if len(cells) < 5:
                raise ValueError(f"{path}:{lineno}: expected 5 columns, got {len(cells)}")
            direction = cells[4].lower()
            if direction not in ("higher", "lower"):
                raise ValueError(
                    f"{path}:{lineno}: direction must be 'higher' or 'lower'"
                )
            try:
                nodes = int(cells[2])
                value = float(cells[3])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            out.append(BenchmarkResult(
                benchmark=cells[0],
                system=cells[1],
                nodes=nodes,
                value=value,
                higher_is_better=direction == "higher",
            ))
    return out
