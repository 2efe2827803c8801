"""Descriptive reports over the component repository.

All percentages round half-up to one decimal (Decimal, not the builtin
banker's round), because the published tables these reports reproduce were
rounded that way and a midpoint that flips down breaks comparisons.

Reports are pure functions of a repository snapshot: same data in, byte
identical output, no timestamps. Rejected components are excluded everywhere
unless a report is explicitly asked to include them.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from datetime import datetime
from decimal import ROUND_HALF_UP, Decimal

from .parser import NONE_FOUND_SENTINEL
from .repository import CurationState, KnowledgeComponent, Repository
from .taxonomy import ComponentType, ResolutionKind

UNSPECIFIED_BUCKET = "Unspecified"
UNKNOWN_SUBJECT = "Other / Unknown"
OTHER_BUCKET = "Other"


class AnalyticsError(Exception):
    pass


def round_half_up(numerator: int, denominator: int) -> float:
    """100 * numerator / denominator, half-up to one decimal, exactly."""
    value = Decimal(100 * numerator) / Decimal(denominator)
    return float(value.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def parse_denominator(text: str) -> tuple[str, int | None]:
    """Parse a denominator choice: "labelled" or "fixed:<n>"."""
    if text == "labelled":
        return "labelled", None
    if text.startswith("fixed:"):
        try:
            value = int(text.split(":", 1)[1])
        except ValueError:
            raise AnalyticsError(f"bad fixed denominator: {text!r}") from None
        if value < 1:
            raise AnalyticsError(f"fixed denominator must be positive: {value}")
        return "fixed", value
    raise AnalyticsError(f"unknown denominator mode: {text!r}")


@dataclass(frozen=True)
class FrequencyRow:
    bucket: str
    count: int
    percent: float | None
    note: str = ""


@dataclass(frozen=True)
class TypeFrequencyReport:
    rows: tuple[FrequencyRow, ...]  # named buckets by count desc, Other last
    unlabelled: FrequencyRow
    not_applicable: FrequencyRow
    labelled_total: int
    denominator_mode: str
    denominator: int
    other_members: tuple[tuple[str, int], ...]

    def to_dict(self) -> dict:
        def row(r: FrequencyRow) -> dict:
            return {"bucket": r.bucket, "count": r.count, "percent": r.percent, "note": r.note}

        return {
            "report": "type_frequency",
            "rows": [row(r) for r in self.rows],
            "unlabelled": row(self.unlabelled),
            "not_applicable": row(self.not_applicable),
            "labelled_total": self.labelled_total,
            "denominator_mode": self.denominator_mode,
            "denominator": self.denominator,
            "other_members": [list(pair) for pair in self.other_members],
        }

    def render_text(self) -> str:
        table = [("Component type", "Count", "Percentage", "Notes")]
        for r in (*self.rows, self.unlabelled, self.not_applicable):
            percent = f"{r.percent:.1f}%" if r.percent is not None else "-"
            table.append((r.bucket, str(r.count), percent, r.note))
        widths = [max(len(row[i]) for row in table) for i in range(3)]
        lines = []
        for bucket, count, percent, note in table:
            line = f"{bucket:<{widths[0]}}  {count:>{widths[1]}}  {percent:>{widths[2]}}"
            lines.append(f"{line}  {note}".rstrip())
        lines.append("")
        lines.append(
            f"Labelled components: {self.labelled_total}"
            f" (denominator {self.denominator}, {self.denominator_mode})"
        )
        return "\n".join(lines)


def _bucket_of(component: KnowledgeComponent) -> str | None:
    """Display bucket for one component; None when it carries no label at all.

    Curation overrides win: a retyped component counts under its corrected
    canonical type no matter what the raw label said.
    """
    effective = component.effective_type
    if effective is not None:
        return effective.value
    if component.resolution.kind is ResolutionKind.OFF_TAXONOMY:
        return component.raw_type_label.strip()
    return None


def type_frequency(
    repo: Repository,
    denominator: str = "labelled",
    include_rejected: bool = False,
) -> TypeFrequencyReport:
    mode, fixed = parse_denominator(denominator)
    counts: Counter[str] = Counter()
    unlabelled_raw: Counter[str] = Counter()
    unlabelled_total = 0
    for c in repo.analytics_components(include_rejected):
        if c.effective_type is None and c.resolution.kind is ResolutionKind.UNLABELLED:
            unlabelled_total += 1
            unlabelled_raw[c.raw_type_label.strip() or "(empty)"] += 1
            continue
        if c.effective_type is None and c.resolution.kind is ResolutionKind.NOT_APPLICABLE:
            continue  # typed "N/A" but carrying content: curation queue, not stats
        bucket = _bucket_of(c)
        if bucket is not None:
            counts[bucket] += 1

    labelled_total = sum(counts.values())
    den = fixed if mode == "fixed" else labelled_total

    named: list[tuple[str, int]] = []
    others: list[tuple[str, int]] = []
    for bucket, count in counts.items():
        # A bucket keeps its own row at >= 1% of the denominator (exact
        # integer comparison; no float thresholds).
        if den > 0 and 100 * count >= den:
            named.append((bucket, count))
        else:
            others.append((bucket, count))
    named.sort(key=lambda pair: (-pair[1], pair[0]))
    others.sort(key=lambda pair: (-pair[1], pair[0]))

    rows = [
        FrequencyRow(bucket, count, round_half_up(count, den) if den else None)
        for bucket, count in named
    ]
    if others:
        other_count = sum(count for _, count in others)
        note = ", ".join(f"{bucket} x{count}" for bucket, count in others)
        rows.append(
            FrequencyRow(
                OTHER_BUCKET,
                other_count,
                round_half_up(other_count, den) if den else None,
                note,
            )
        )

    unlabelled_note = ", ".join(f"{label} x{count}" for label, count in sorted(unlabelled_raw.items()))
    na_count = len(repo.na_doc_ids())
    return TypeFrequencyReport(
        rows=tuple(rows),
        unlabelled=FrequencyRow("Unlabelled", unlabelled_total, None, unlabelled_note),
        not_applicable=FrequencyRow("N/A", na_count, None, f'"{NONE_FOUND_SENTINEL}"'),
        labelled_total=labelled_total,
        denominator_mode=mode,
        denominator=den,
        other_members=tuple(others),
    )


@dataclass(frozen=True)
class PerPaperStats:
    document_count: int
    component_count: int
    mean: float
    max_count: int
    histogram: tuple[tuple[int, int], ...]  # (components per paper, papers)

    def to_dict(self) -> dict:
        return {
            "report": "per_paper",
            "document_count": self.document_count,
            "component_count": self.component_count,
            "mean": self.mean,
            "max_count": self.max_count,
            "histogram": [list(pair) for pair in self.histogram],
        }

    def render_text(self) -> str:
        lines = [
            f"Documents with an extraction: {self.document_count}",
            f"Components stored: {self.component_count}",
            f"Mean components per document: {self.mean:.2f}",
            f"Most productive document: {self.max_count}",
            "Components per document:",
        ]
        for count, papers in self.histogram:
            lines.append(f"  {count:>3}: {papers}")
        return "\n".join(lines)


def per_paper_stats(repo: Repository, include_rejected: bool = False) -> PerPaperStats:
    docs = repo.extracted_documents()
    if not docs:
        raise AnalyticsError("no extracted documents to report on")
    per_doc = Counter(c.doc_id for c in repo.analytics_components(include_rejected))
    counts = [per_doc.get(d.doc_id, 0) for d in docs]
    histogram = Counter(counts)
    return PerPaperStats(
        document_count=len(docs),
        component_count=sum(counts),
        mean=sum(counts) / len(counts),
        max_count=max(counts),
        histogram=tuple(sorted(histogram.items())),
    )


@dataclass(frozen=True)
class CrosstabCell:
    year: int | None
    subject: str
    bucket: str
    count: int
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "year": self.year,
            "subject": self.subject,
            "type": self.bucket,
            "count": self.count,
            "note": self.note,
        }


@dataclass(frozen=True)
class CrosstabReport:
    cells: tuple[CrosstabCell, ...]

    def to_dict(self) -> dict:
        return {"report": "crosstab", "cells": [c.to_dict() for c in self.cells]}

    def render_text(self) -> str:
        lines = ["Year  Subject                                   Dominant type         N"]
        for c in self.cells:
            year = str(c.year) if c.year is not None else "?"
            note = f"   ({c.note})" if c.note else ""
            lines.append(f"{year:<4}  {c.subject:<40}  {c.bucket:<20}  {c.count}{note}")
        return "\n".join(lines)


def _bucket_sort_key(bucket: str) -> tuple[int, str]:
    # Canonical buckets win ties by specificity; anything off the vocabulary
    # (including Unspecified) sorts after every canonical type.
    for member in ComponentType:
        if member.value == bucket:
            return (member.specificity_rank, bucket)
    return (99, bucket)


def crosstab(repo: Repository) -> CrosstabReport:
    """Dominant component type per (publication year, subject) cell.

    Documents tagged with several subjects count once per subject; documents
    with no tags land in the Other / Unknown subject. Unlabelled components
    aggregate as Unspecified. Ties go to the most specific type and the cell
    says so.
    """
    docs = repo.document_map()
    cells: dict[tuple[int | None, str], Counter[str]] = {}
    for c in repo.analytics_components():
        if c.effective_type is None and c.resolution.kind is ResolutionKind.NOT_APPLICABLE:
            continue
        bucket = _bucket_of(c)
        if bucket is None:
            bucket = UNSPECIFIED_BUCKET
        doc = docs[c.doc_id]
        for subject in doc.subjects or (UNKNOWN_SUBJECT,):
            cells.setdefault((doc.year, subject), Counter())[bucket] += 1

    out = []
    for (year, subject), counter in cells.items():
        top = max(counter.values())
        tied = sorted((b for b, n in counter.items() if n == top), key=_bucket_sort_key)
        winner = tied[0]
        note = ""
        if len(tied) > 1:
            note = "tie with " + ", ".join(tied[1:]) + "; most specific kept"
        out.append(CrosstabCell(year, subject, winner, top, note))
    out.sort(key=lambda c: (c.year is None, c.year if c.year is not None else 0, c.subject))
    return CrosstabReport(tuple(out))


@dataclass(frozen=True)
class SustainabilityTarget:
    objective: str
    outcome_measures: tuple[str, ...]


# Operational mapping for the four component types a sustainability programme
# can act on directly. Objective wording is kept exactly as adopted,
# idiosyncratic commas included; measures are reported verbatim.
SUSTAINABILITY_TARGETS: dict[ComponentType, SustainabilityTarget] = {
    ComponentType.SCORECARD: SustainabilityTarget(
        "Measure emissions, waste and resource intensity",
        ("kg waste avoided per project", "% data coverage", "audit pass rate"),
    ),
    ComponentType.FRAMEWORK: SustainabilityTarget(
        "Prioritise circular interventions & governance alignment",
        (
            "Share of portfolio with circular pathways",
            "% supplier tiers with targets",
            "policy adoption latency (days)",
        ),
    ),
    ComponentType.TOOLKIT: SustainabilityTarget(
        "Implement low, waste processes and practices",
        (
            "Scrap rate delta%",
            "water/energy per unit delta%",
            "defects per 1k units delta%",
        ),
    ),
    ComponentType.PATTERN: SustainabilityTarget(
        "Standardise low, waste routines & operational tactics",
        (
            "Time-to-pivot (days)",
            "% processes adopting pattern",
            "rework hours delta%",
        ),
    ),
}


@dataclass(frozen=True)
class SustainabilityRow:
    component_id: str
    title: str
    bucket: str
    objective: str
    outcome_measures: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "component_id": self.component_id,
            "title": self.title,
            "type": self.bucket,
            "objective": self.objective,
            "outcome_measures": list(self.outcome_measures),
        }


@dataclass(frozen=True)
class SustainabilityReport:
    rows: tuple[SustainabilityRow, ...]

    def to_dict(self) -> dict:
        return {"report": "sustainability", "rows": [r.to_dict() for r in self.rows]}

    def render_text(self) -> str:
        if not self.rows:
            return "No approved components map to sustainability objectives."
        lines = []
        for r in self.rows:
            lines.append(f"{r.bucket}: {r.title} [{r.component_id}]")
            lines.append(f"  Objective: {r.objective}")
            lines.append(f"  Measures:  {'; '.join(r.outcome_measures)}")
        return "\n".join(lines)


def sustainability_view(repo: Repository) -> SustainabilityReport:
    """Approved components joined to the sustainability objective mapping.

    Only curated (Approved) components appear: this view feeds action
    planning, and unreviewed extractions have no business driving it.
    """
    rows = []
    for c in repo.analytics_components():
        if c.curation_state is not CurationState.APPROVED:
            continue
        effective = c.effective_type
        target = SUSTAINABILITY_TARGETS.get(effective) if effective else None
        if target is None:
            continue
        rows.append(
            SustainabilityRow(
                component_id=c.component_id,
                title=c.title,
                bucket=effective.value,
                objective=target.objective,
                outcome_measures=target.outcome_measures,
            )
        )
    rows.sort(key=lambda r: (_bucket_sort_key(r.bucket), r.component_id))
    return SustainabilityReport(tuple(rows))


@dataclass(frozen=True)
class ReuseMetrics:
    universe_size: int
    projects_with_reuse: int
    reuse_rate: float | None
    completed_sprints: int
    adopted_sprints: int
    hit_rate: float | None
    mean_days_to_solution: float | None

    def to_dict(self) -> dict:
        return {
            "report": "reuse_metrics",
            "universe_size": self.universe_size,
            "projects_with_reuse": self.projects_with_reuse,
            "reuse_rate": self.reuse_rate,
            "completed_sprints": self.completed_sprints,
            "adopted_sprints": self.adopted_sprints,
            "hit_rate": self.hit_rate,
            "mean_days_to_solution": self.mean_days_to_solution,
        }

    def render_text(self) -> str:
        rate = f"{self.reuse_rate:.2f}" if self.reuse_rate is not None else "n/a (empty universe)"
        hit = f"{self.hit_rate:.2f}" if self.hit_rate is not None else "n/a (no completed sprints)"
        days = (
            f"{self.mean_days_to_solution:.1f}"
            if self.mean_days_to_solution is not None
            else "n/a"
        )
        return "\n".join(
            [
                f"Reuse rate:             {rate} "
                f"({self.projects_with_reuse} of {self.universe_size} projects)",
                f"Sprint hit rate:        {hit} "
                f"({self.adopted_sprints} of {self.completed_sprints} completed)",
                f"Mean days to solution:  {days}",
            ]
        )


def reuse_metrics(repo: Repository, projects: list[str] | tuple[str, ...] | None) -> ReuseMetrics:
    """Adoption metrics over an explicit project universe.

    The universe must be supplied by the operator; with no universe the reuse
    rate is absent, never zero, because 0 would claim evidence of non-reuse
    that the data cannot support.
    """
    universe = list(dict.fromkeys(projects or []))
    events = repo.reuse_events()
    used = {e.project for e in events}
    with_reuse = sum(1 for p in universe if p in used)
    reuse_rate = with_reuse / len(universe) if universe else None

    completed = [s for s in repo.sprints() if s.solution_at is not None]
    adopted = sum(1 for s in completed if s.adopted)
    hit_rate = adopted / len(completed) if completed else None
    if completed:
        total_days = 0.0
        for s in completed:
            start = datetime.fromisoformat(s.triggered_at)
            end = datetime.fromisoformat(s.solution_at)
            total_days += (end - start).total_seconds() / 86400.0
        mean_days = total_days / len(completed)
    else:
        mean_days = None
    return ReuseMetrics(
        universe_size=len(universe),
        projects_with_reuse=with_reuse,
        reuse_rate=reuse_rate,
        completed_sprints=len(completed),
        adopted_sprints=adopted,
        hit_rate=hit_rate,
        mean_days_to_solution=mean_days,
    )
