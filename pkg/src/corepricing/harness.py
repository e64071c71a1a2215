"""Synthetic rich-ad auctions and mechanism comparison reports."""
from __future__ import annotations

import csv
import io
import logging
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Mapping, Sequence

from corepricing.baselines import gsp_greedy, gsp_optimal, vcg
from corepricing.model import AuctionOutcome
from corepricing.money import Money
from corepricing.oracles import Ad, SlateInstance, oracle_for, zero_truncation
from corepricing.pricing import reconstruct_outcome, vcg_pursuit, water_fill

log = logging.getLogger(__name__)

MECHANISMS = ("core", "vcg-pursuit", "vcg", "gsp-opt", "gsp-greedy")

CSV_COLUMNS = (
    "instance_id",
    "mechanism",
    "welfare_micro",
    "revenue_expected_micro",
    "revenue_literal_micro",
    "revenue_vs_vcg",
    "runtime_us",
    "oracle_calls",
    "fairness_ratio",
)


# ---------------------------------------------------------------------------
# Instance generation


@dataclass(frozen=True)
class GeneratorConfig:
    """Ranges are inclusive ``(low, high)`` pairs.

    Click probabilities are drawn in thousandths and bids in whole
    thousandths of a currency unit, so every ad score is an exact number of
    micro-units. Longer decorations get a higher click probability through
    a per-advertiser lift per extra line.
    """

    advertisers: tuple[int, int] = (3, 10)
    decorations: tuple[int, int] = (8, 22)
    lines: tuple[int, int] = (3, 14)
    bid_milli: tuple[int, int] = (100, 5000)
    pclick_base_milli: tuple[int, int] = (10, 150)
    pclick_lift_milli: tuple[int, int] = (0, 20)
    max_ads: int = 4
    line_limits: tuple[int, ...] = (10, 15, 20, 25, 30, 35)
    count: int = 10
    seed: int = 0

    def __post_init__(self):
        for name in (
            "advertisers",
            "decorations",
            "lines",
            "bid_milli",
            "pclick_base_milli",
            "pclick_lift_milli",
        ):
            low, high = getattr(self, name)
            if not 0 <= low <= high:
                raise ValueError(f"{name}: need 0 <= low <= high, got ({low}, {high})")
        if self.lines[0] < 1:
            raise ValueError("decorations need at least one line")
        if self.pclick_base_milli[0] < 1 or self.pclick_base_milli[1] > 1000:
            raise ValueError("pclick_base_milli must lie within 1..1000")
        if self.max_ads < 0 or self.count < 0 or any(m < 0 for m in self.line_limits):
            raise ValueError("max_ads, count and line_limits must be non-negative")

    @classmethod
    def from_dict(cls, data: Mapping) -> GeneratorConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown generator settings: {sorted(unknown)}")
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**kwargs)


def _advertiser_ads(rng: random.Random, config: GeneratorConfig, advertiser: int):
    bid = rng.randint(*config.bid_milli) * 1000
    base = rng.randint(*config.pclick_base_milli)
    lift = rng.randint(*config.pclick_lift_milli)
    ads = []
    for decoration in range(rng.randint(*config.decorations)):
        lines = rng.randint(*config.lines)
        permille = min(1000, base + lift * (lines - config.lines[0]))
        ads.append(Ad(advertiser, decoration, lines, bid, Fraction(permille, 1000)))
    return ads


def generate(config: GeneratorConfig) -> list[SlateInstance]:
    """``config.count`` instances for each line limit, in limit order."""
    rng = random.Random(config.seed)
    instances = []
    for limit in config.line_limits:
        for _ in range(config.count):
            ads = []
            for advertiser in range(rng.randint(*config.advertisers)):
                ads.extend(_advertiser_ads(rng, config, advertiser))
            instances.append(SlateInstance(tuple(ads), config.max_ads, limit))
    return instances


def name_instances(instances: Sequence[SlateInstance]) -> dict[str, SlateInstance]:
    named, seen = {}, {}
    for instance in instances:
        k = seen.get(instance.max_lines, 0)
        seen[instance.max_lines] = k + 1
        named[f"m{instance.max_lines:02d}-{k:04d}"] = instance
    return named


# ---------------------------------------------------------------------------
# Metrics


def fairness_ratio(outcome: AuctionOutcome) -> Fraction | None:
    """Largest winner utility over smallest; ``None`` if undefined.

    For ad slates a winner's utility ``pclick * (bid - CPC)`` is its score
    minus its expected payment.
    """
    utilities = list(outcome.utilities.values())
    if not utilities or min(utilities) <= 0:
        return None
    return Fraction(max(utilities), min(utilities))


@dataclass(frozen=True)
class Epsilon:
    """Absolute micro-units, or a fraction of the instance's optimal welfare."""

    absolute: Money | None = None
    relative: Fraction | None = None

    @classmethod
    def parse(cls, text: str | int) -> Epsilon:
        if isinstance(text, int):
            return cls(absolute=text)
        text = text.strip()
        if text.startswith("rel:"):
            frac = Fraction(text[4:])
            if not 0 < frac < 1:
                raise ValueError("relative epsilon must lie in (0, 1)")
            return cls(relative=frac)
        return cls(absolute=int(text))

    def resolve(self, oracle) -> Money:
        if self.absolute is not None:
            return self.absolute
        total = oracle.solve(zero_truncation(oracle)).max_welfare
        return max(int(self.relative * total), len(oracle.bidders), 1)


def run_mechanism(name: str, instance, epsilon: Money) -> AuctionOutcome:
    """Run one mechanism, recording wall-clock time and oracle queries."""
    oracle = oracle_for(instance)
    started = time.perf_counter()
    if name == "core":
        point, trace = water_fill(oracle, epsilon)
        outcome = reconstruct_outcome(oracle, point, trace.base, check=False)
        outcome.oracle_calls = trace.oracle_calls
    elif name == "vcg-pursuit":
        point, trace = vcg_pursuit(oracle, epsilon)
        outcome = reconstruct_outcome(
            oracle, point, trace.base, check=False, mechanism="vcg-pursuit"
        )
        outcome.oracle_calls = trace.oracle_calls + trace.target_calls
    elif name == "vcg":
        outcome = vcg(oracle)
    elif name in ("gsp-opt", "gsp-greedy"):
        if not isinstance(instance, SlateInstance):
            raise TypeError(f"{name} needs a slate instance")
        outcome = gsp_optimal(instance, oracle) if name == "gsp-opt" else gsp_greedy(instance)
    else:
        raise ValueError(f"unknown mechanism {name!r}")
    outcome.duration_s = time.perf_counter() - started
    return outcome


# ---------------------------------------------------------------------------
# Comparison


@dataclass(frozen=True)
class ReportRow:
    instance_id: str
    mechanism: str
    welfare_micro: int
    revenue_expected_micro: int
    revenue_literal_micro: float
    revenue_vs_vcg: float | None
    runtime_us: int
    oracle_calls: int
    fairness_ratio: float | None

    def without_timing(self) -> ReportRow:
        return ReportRow(**{**asdict(self), "runtime_us": 0})


@dataclass
class ComparisonReport:
    rows: list[ReportRow] = field(default_factory=list)
    failures: list[tuple[str, str, str]] = field(default_factory=list)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(_format(getattr(row, c)) for c in CSV_COLUMNS)
        return buffer.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> ComparisonReport:
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        rows = []
        for rec in reader:
            rows.append(
                ReportRow(
                    instance_id=rec["instance_id"],
                    mechanism=rec["mechanism"],
                    welfare_micro=int(rec["welfare_micro"]),
                    revenue_expected_micro=int(rec["revenue_expected_micro"]),
                    revenue_literal_micro=float(rec["revenue_literal_micro"]),
                    revenue_vs_vcg=_optional_float(rec["revenue_vs_vcg"]),
                    runtime_us=int(rec["runtime_us"]),
                    oracle_calls=int(rec["oracle_calls"]),
                    fairness_ratio=_optional_float(rec["fairness_ratio"]),
                )
            )
        return cls(rows)

    def by_mechanism(self, mechanism: str) -> dict[str, ReportRow]:
        return {r.instance_id: r for r in self.rows if r.mechanism == mechanism}


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _optional_float(text: str) -> float | None:
    return float(text) if text else None


def _run_instance(job):
    instance_id, instance, mechanisms, epsilon = job
    outcomes, failures = {}, []
    try:
        eps = epsilon.resolve(oracle_for(instance))
    except Exception as exc:  # recorded, the run carries on
        return instance_id, {}, [(instance_id, "*", repr(exc))]
    for name in mechanisms:
        try:
            outcomes[name] = run_mechanism(name, instance, eps)
        except Exception as exc:
            failures.append((instance_id, name, repr(exc)))
    return instance_id, outcomes, failures


def _rows(instance_id: str, outcomes: Mapping[str, AuctionOutcome], mechanisms):
    vcg_revenue = outcomes["vcg"].revenue if "vcg" in outcomes else None
    rows = []
    for name in mechanisms:
        if name not in outcomes:
            continue
        outcome = outcomes[name]
        ratio = None
        if vcg_revenue:
            ratio = float(Fraction(outcome.revenue, vcg_revenue))
        fairness = fairness_ratio(outcome)
        rows.append(
            ReportRow(
                instance_id=instance_id,
                mechanism=name,
                welfare_micro=outcome.welfare,
                revenue_expected_micro=outcome.revenue,
                revenue_literal_micro=float(outcome.revenue_literal()),
                revenue_vs_vcg=ratio,
                runtime_us=round(outcome.duration_s * 1e6),
                oracle_calls=outcome.oracle_calls,
                fairness_ratio=None if fairness is None else float(fairness),
            )
        )
    return rows


def compare(
    instances: Mapping[str, object] | Sequence,
    mechanisms: Sequence[str] = MECHANISMS,
    epsilon: Epsilon | Money | str = Epsilon(relative=Fraction(1, 10**4)),
    workers: int = 1,
) -> ComparisonReport:
    """Run every mechanism on every instance.

    Failures are recorded in ``report.failures`` and the run continues.
    Rows are sorted by instance id, then in the order of ``mechanisms``.
    """
    for name in mechanisms:
        if name not in MECHANISMS:
            raise ValueError(f"unknown mechanism {name!r}")
    if not isinstance(epsilon, Epsilon):
        epsilon = Epsilon.parse(epsilon)
    if not isinstance(instances, Mapping):
        instances = {f"{k:04d}": inst for k, inst in enumerate(instances)}
    jobs = [(i, inst, tuple(mechanisms), epsilon) for i, inst in instances.items()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_instance, jobs))
    else:
        results = [_run_instance(job) for job in jobs]

    report = ComparisonReport()
    for instance_id, outcomes, failures in sorted(results, key=lambda r: r[0]):
        report.rows.extend(_rows(instance_id, outcomes, mechanisms))
        for failure in failures:
            log.warning("instance %s, mechanism %s failed: %s", *failure)
        report.failures.extend(failures)
    return report


# ---------------------------------------------------------------------------
# Ensemble summaries


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return sum(xs) / len(xs) if xs else None


def revenue_table(report: ComparisonReport, instances: Mapping[str, SlateInstance]):
    """Mean revenue and runtime per line limit and mechanism.

    Revenues are normalised by the mean VCG revenue at the smallest line
    limit; runtimes are in milliseconds.
    """
    limits = sorted({inst.max_lines for inst in instances.values()})
    if not limits:
        return []
    groups: dict[tuple[int, str], list[ReportRow]] = {}
    for row in report.rows:
        key = (instances[row.instance_id].max_lines, row.mechanism)
        groups.setdefault(key, []).append(row)
    base_rows = groups.get((limits[0], "vcg"), [])
    base = _mean([r.revenue_expected_micro for r in base_rows]) or None
    table = []
    mechanisms = list(dict.fromkeys(r.mechanism for r in report.rows))
    for limit in limits:
        for name in mechanisms:
            rows = groups.get((limit, name), [])
            if not rows:
                continue
            revenue = _mean([r.revenue_expected_micro for r in rows])
            table.append(
                {
                    "line_limit": limit,
                    "mechanism": name,
                    "auctions": len(rows),
                    "revenue_normalized": revenue / base if base else None,
                    "runtime_ms": _mean([r.runtime_us for r in rows]) / 1000,
                    "fairness_ratio": _mean([r.fairness_ratio for r in rows]),
                }
            )
    return table


def fairness_by_ads(
    report: ComparisonReport, instances: Mapping[str, SlateInstance], bucket: int = 1
):
    """Mean fairness ratio per mechanism against the number of ads bidding.

    Ad counts are grouped into bins of width ``bucket``, each labelled by its
    lower end.
    """
    if bucket < 1:
        raise ValueError("bucket width must be positive")
    groups: dict[tuple[int, str], list] = {}
    for row in report.rows:
        ads = len(instances[row.instance_id].ads) // bucket * bucket
        groups.setdefault((ads, row.mechanism), []).append(row.fairness_ratio)
    return [
        {"ads": ads, "mechanism": name, "auctions": len(values),
         "fairness_ratio": _mean(values)}
        for (ads, name), values in sorted(groups.items())
    ]


def write_table(table: list[dict]) -> str:
    if not table:
        return ""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(table[0]), lineterminator="\n")
    writer.writeheader()
    for rec in table:
        writer.writerow({k: _format(v) for k, v in rec.items()})
    return buffer.getvalue()
