from __future__ import annotations

import json
import random

import pytest

from kcpipe import analytics
from kcpipe.analytics import (
    AnalyticsError,
    SUSTAINABILITY_TARGETS,
    crosstab,
    parse_denominator,
    per_paper_stats,
    reuse_metrics,
    round_half_up,
    sustainability_view,
    type_frequency,
)
from kcpipe.extraction import ExtractionConfig, ExtractionOutcome, FinishState, RawResponse
from kcpipe.ingest import DocumentRecord, DocumentStatus
from kcpipe.parser import NONE_FOUND_SENTINEL, RawComponent, serialize_components
from kcpipe.repository import Repository
from kcpipe.taxonomy import ComponentType

CFG = ExtractionConfig()


def _doc(doc_id: str, year: int | None, subjects: tuple[str, ...]) -> DocumentRecord:
    return DocumentRecord(
        doc_id=doc_id,
        filename=f"{doc_id}.txt",
        title=f"Paper {doc_id}",
        citation=f"Author ({year}). {doc_id}.",
        year=year,
        subjects=subjects,
        body_text=f"Body of {doc_id}.",
        status=DocumentStatus.PENDING,
    )


def _insert(repo: Repository, doc_id: str, labels: list[str], none_found: bool = False) -> None:
    components = tuple(
        RawComponent(f"{doc_id} item {span}", label, f"Description {doc_id}/{span}.", span)
        for span, label in enumerate(labels)
    )
    try:
        text = serialize_components(list(components)) if components else ""
    except ValueError:
        text = "(hand-built fixture)"
    raw = RawResponse(doc_id, f"req-{doc_id}", text, FinishState.COMPLETE, "test",
                      "2026-01-01T00:00:00+00:00")
    repo.insert_extraction(
        ExtractionOutcome(doc_id, CFG.config_hash, raw, components, none_found, 0)
    )


def _repo(spec: list[tuple[str, int | None, tuple[str, ...], list[str]]],
          na_docs: list[tuple[str, int | None, tuple[str, ...]]] = ()) -> Repository:
    repo = Repository()
    for doc_id, year, subjects, labels in spec:
        repo.add_document(_doc(doc_id, year, subjects))
        _insert(repo, doc_id, labels)
    for doc_id, year, subjects in na_docs:
        repo.add_document(_doc(doc_id, year, subjects))
        _insert(repo, doc_id, [], none_found=True)
    return repo


ENERGY = ("Energy & Power Systems",)
MARKETING = ("Marketing & Consumer Research",)


# --- rounding ---------------------------------------------------------------


def test_rounding_is_half_up_not_bankers() -> None:
    table = [
        ((1, 16), 6.3),     # 6.25 rounds up; bankers would give 6.2
        ((3, 16), 18.8),    # 18.75 rounds up
        ((1, 8), 12.5),
        ((141, 1000), 14.1),
        ((5, 1000), 0.5),
        ((1, 3), 33.3),
        ((2, 3), 66.7),
        ((703, 711), 98.9),
        ((711, 711), 100.0),
        ((0, 7), 0.0),
    ]
    for (n, d), expected in table:
        assert round_half_up(n, d) == expected, (n, d)


def test_rounding_matches_integer_oracle() -> None:
    # half-up at one decimal == floor(1000n/d + 1/2) / 10, in exact integers
    rng = random.Random(7)
    for _ in range(2000):
        d = rng.randrange(1, 2000)
        n = rng.randrange(0, 2 * d)
        expected = ((2000 * n + d) // (2 * d)) / 10
        assert round_half_up(n, d) == expected, (n, d)


def test_denominator_parsing() -> None:
    assert parse_denominator("labelled") == ("labelled", None)
    assert parse_denominator("fixed:711") == ("fixed", 711)
    for bad in ("fixed:x", "fixed:0", "fixed:-3", "total", ""):
        with pytest.raises(AnalyticsError):
            parse_denominator(bad)


# --- type frequency ----------------------------------------------------------


def _frequency_fixture() -> Repository:
    # 250 labelled: Model 150, Pattern 60, Toolkit 30, Algorithm 5,
    # Checklist 2, Format 2, Metric 1 (the last three under 1%); plus two
    # unlabelled records and one N/A-typed record carrying content.
    spec: list[tuple[str, int | None, tuple[str, ...], list[str]]] = []
    pool = (["Model"] * 150 + ["Pattern"] * 60 + ["Toolkit"] * 30 + ["Algorithm"] * 5
            + ["Checklist"] * 2 + ["Format"] * 2 + ["Metric"] * 1)
    for i in range(0, len(pool), 5):
        spec.append((f"doc-{i // 5:03d}", 2021, ENERGY, pool[i : i + 5]))
    spec.append(("doc-unl", 2022, ENERGY, ["concept", ""]))
    spec.append(("doc-mix", 2022, ENERGY, ["N/A"]))
    return _repo(spec, na_docs=[("doc-na1", 2023, ENERGY), ("doc-na2", 2023, ENERGY)])


def test_type_frequency_rows_with_labelled_denominator() -> None:
    report = type_frequency(_frequency_fixture())
    assert report.labelled_total == 250
    assert report.denominator == 250
    assert report.denominator_mode == "labelled"
    assert [(r.bucket, r.count, r.percent) for r in report.rows] == [
        ("Model", 150, 60.0),
        ("Pattern", 60, 24.0),
        ("Toolkit", 30, 12.0),
        ("Algorithm", 5, 2.0),
        ("Other", 5, 2.0),
    ]
    other = report.rows[-1]
    assert other.note == "Checklist x2, Format x2, Metric x1"
    assert report.other_members == (("Checklist", 2), ("Format", 2), ("Metric", 1))

    assert report.unlabelled.count == 2
    assert report.unlabelled.percent is None
    assert report.unlabelled.note == "(empty) x1, concept x1"
    # the N/A row counts documents that reported nothing, not components
    assert report.not_applicable.count == 2
    assert report.not_applicable.note == f'"{NONE_FOUND_SENTINEL}"'


def test_type_frequency_against_brute_force_oracle() -> None:
    repo = _frequency_fixture()
    report = type_frequency(repo, denominator="fixed:253")
    # independent tally straight off the stored components
    tally: dict[str, int] = {}
    for c in repo.analytics_components():
        if c.resolution.kind.value in ("unlabelled", "n-a") and c.effective_type is None:
            continue
        bucket = c.effective_type.value if c.effective_type else c.raw_type_label.strip()
        tally[bucket] = tally.get(bucket, 0) + 1
    reported = {r.bucket: r for r in report.rows if r.bucket != "Other"}
    reported_other = {name: count for name, count in report.other_members}
    for bucket, count in tally.items():
        if 100 * count >= 253:
            row = reported[bucket]
            assert row.count == count
            assert row.percent == ((2000 * count + 253) // (2 * 253)) / 10
        else:
            assert reported_other[bucket] == count
    assert sum(r.count for r in report.rows) == sum(tally.values()) == 250


def test_own_row_threshold_is_exact_integer_percent() -> None:
    # den 200: count 2 is exactly 1% (own row), count 1 is below (Other)
    repo = _repo(
        [
            ("doc-a", 2021, ENERGY, ["Model"] * 197 + ["Toolkit"] * 2 + ["Metric"]),
        ]
    )
    report = type_frequency(repo, denominator="fixed:200")
    assert [(r.bucket, r.count) for r in report.rows] == [
        ("Model", 197), ("Toolkit", 2), ("Other", 1),
    ]
    assert report.other_members == (("Metric", 1),)


def test_na_typed_content_components_stay_out_of_every_bucket() -> None:
    repo = _repo([("doc-a", 2021, ENERGY, ["Model", "N/A"])])
    report = type_frequency(repo)
    assert sum(r.count for r in report.rows) == 1
    assert report.unlabelled.count == 0
    assert report.labelled_total == 1
    # but they do count as stored output of the paper
    assert per_paper_stats(repo).component_count == 2


def test_retyped_components_count_under_their_corrected_bucket() -> None:
    repo = _repo([("doc-a", 2021, ENERGY, ["Algorithm", "Model"])])
    row = repo.components(type_label="Algorithm")[0]
    repo.set_curation(row.component_id, "retyped", retype_to="Heuristic")
    report = type_frequency(repo)
    assert {(r.bucket, r.count) for r in report.rows} >= {("Heuristic", 1), ("Model", 1)}
    assert all(r.bucket != "Algorithm" for r in report.rows)
    assert report.other_members == ()


def test_rejected_components_are_excluded_unless_asked() -> None:
    repo = _repo([("doc-a", 2021, ENERGY, ["Model", "Model", "Pattern"])])
    target = repo.components(type_label="Pattern")[0]
    repo.set_curation(target.component_id, "rejected")
    assert [(r.bucket, r.count) for r in type_frequency(repo).rows] == [("Model", 2)]
    with_rejected = type_frequency(repo, include_rejected=True)
    assert [(r.bucket, r.count) for r in with_rejected.rows] == [("Model", 2), ("Pattern", 1)]


def test_type_frequency_render_is_deterministic() -> None:
    one = type_frequency(_frequency_fixture())
    two = type_frequency(_frequency_fixture())
    assert one.render_text() == two.render_text()
    assert json.dumps(one.to_dict(), sort_keys=True) == json.dumps(two.to_dict(), sort_keys=True)
    text = one.render_text()
    assert text.splitlines()[0].startswith("Component type")
    assert "Labelled components: 250 (denominator 250, labelled)" in text
    assert "  -  " in text or text.count(" -") >= 2  # dash for absent percentages


# --- per-paper stats ----------------------------------------------------------


def test_per_paper_stats_with_zero_component_documents() -> None:
    repo = _repo(
        [
            ("doc-a", 2021, ENERGY, ["Model", "Pattern", "Toolkit"]),
            ("doc-b", 2021, ENERGY, ["Model"]),
        ],
        na_docs=[("doc-c", 2022, ENERGY)],
    )
    stats = per_paper_stats(repo)
    assert stats.document_count == 3
    assert stats.component_count == 4
    assert stats.mean == pytest.approx(4 / 3)
    assert stats.max_count == 3
    assert stats.histogram == ((0, 1), (1, 1), (3, 1))


def test_per_paper_stats_ignores_unextracted_documents() -> None:
    repo = _repo([("doc-a", 2021, ENERGY, ["Model"])])
    repo.add_document(_doc("doc-pending", 2021, ENERGY))
    stats = per_paper_stats(repo)
    assert stats.document_count == 1

    empty = Repository()
    empty.add_document(_doc("doc-x", 2021, ENERGY))
    with pytest.raises(AnalyticsError, match="no extracted documents"):
        per_paper_stats(empty)


def test_per_paper_stats_respects_rejection() -> None:
    repo = _repo([("doc-a", 2021, ENERGY, ["Model", "Pattern"])])
    target = repo.components(type_label="Pattern")[0]
    repo.set_curation(target.component_id, "rejected")
    assert per_paper_stats(repo).component_count == 1
    assert per_paper_stats(repo, include_rejected=True).component_count == 2


# --- crosstab -------------------------------------------------------------------


def test_crosstab_cells_and_tie_breaking() -> None:
    repo = _repo(
        [
            ("doc-a", 2021, ENERGY, ["Model", "Model", "Pattern"]),
            ("doc-b", 2021, ENERGY, ["Model"]),
            # tie 2x Theory vs 2x Framework: Theory is the more specific type
            ("doc-c", 2022, MARKETING, ["Theory", "Theory", "Framework", "Framework"]),
            # unlabelled records aggregate as Unspecified
            ("doc-d", 2023, MARKETING, ["concept", "concept", "Heuristic"]),
            # untagged documents land in the Other / Unknown subject
            ("doc-e", 2023, (), ["Toolkit"]),
            # a document with two subjects counts once per subject
            ("doc-f", 2024, ENERGY + MARKETING, ["Scorecard", "Scorecard"]),
            ("doc-g", None, ENERGY, ["Paradigm"]),
        ]
    )
    report = crosstab(repo)
    cells = {(c.year, c.subject): c for c in report.cells}

    assert cells[(2021, ENERGY[0])].bucket == "Model"
    assert cells[(2021, ENERGY[0])].count == 3
    assert cells[(2021, ENERGY[0])].note == ""

    tied = cells[(2022, MARKETING[0])]
    assert tied.bucket == "Theory"
    assert tied.count == 2
    assert tied.note == "tie with Framework; most specific kept"

    assert cells[(2023, MARKETING[0])].bucket == "Unspecified"
    assert cells[(2023, MARKETING[0])].count == 2
    assert cells[(2023, "Other / Unknown")].bucket == "Toolkit"
    assert cells[(2024, ENERGY[0])].bucket == "Scorecard"
    assert cells[(2024, MARKETING[0])].bucket == "Scorecard"
    assert cells[(None, ENERGY[0])].bucket == "Paradigm"

    # cells sort by year then subject, unknown years last
    assert report.cells[-1].year is None
    years = [c.year for c in report.cells if c.year is not None]
    assert years == sorted(years)


def test_crosstab_tie_between_canonical_and_off_vocabulary() -> None:
    repo = _repo([("doc-a", 2021, ENERGY, ["Paradigm", "Algorithm"])])
    cell = crosstab(repo).cells[0]
    # any canonical type is more specific than an off-vocabulary label
    assert cell.bucket == "Paradigm"
    assert cell.note == "tie with Algorithm; most specific kept"

    repo2 = _repo([("doc-b", 2021, ENERGY, ["Metric", "Algorithm"])])
    cell2 = crosstab(repo2).cells[0]
    assert cell2.bucket == "Algorithm"  # same rank: alphabetical
    assert cell2.note == "tie with Metric; most specific kept"


def test_crosstab_skips_na_typed_records_and_sentinel_documents() -> None:
    repo = _repo(
        [("doc-a", 2021, ENERGY, ["Model", "N/A"])],
        na_docs=[("doc-b", 2021, ENERGY)],
    )
    report = crosstab(repo)
    assert len(report.cells) == 1
    assert report.cells[0].count == 1  # only the Model record


# --- sustainability view ---------------------------------------------------------


def test_sustainability_mapping_strings_are_pinned() -> None:
    assert set(SUSTAINABILITY_TARGETS) == {
        ComponentType.SCORECARD,
        ComponentType.FRAMEWORK,
        ComponentType.TOOLKIT,
        ComponentType.PATTERN,
    }
    assert SUSTAINABILITY_TARGETS[ComponentType.SCORECARD].objective == (
        "Measure emissions, waste and resource intensity"
    )
    assert SUSTAINABILITY_TARGETS[ComponentType.FRAMEWORK].objective == (
        "Prioritise circular interventions & governance alignment"
    )
    assert SUSTAINABILITY_TARGETS[ComponentType.TOOLKIT].objective == (
        "Implement low, waste processes and practices"
    )
    assert SUSTAINABILITY_TARGETS[ComponentType.PATTERN].objective == (
        "Standardise low, waste routines & operational tactics"
    )
    assert SUSTAINABILITY_TARGETS[ComponentType.SCORECARD].outcome_measures == (
        "kg waste avoided per project", "% data coverage", "audit pass rate",
    )
    assert SUSTAINABILITY_TARGETS[ComponentType.TOOLKIT].outcome_measures == (
        "Scrap rate delta%", "water/energy per unit delta%", "defects per 1k units delta%",
    )
    assert SUSTAINABILITY_TARGETS[ComponentType.PATTERN].outcome_measures == (
        "Time-to-pivot (days)", "% processes adopting pattern", "rework hours delta%",
    )
    assert SUSTAINABILITY_TARGETS[ComponentType.FRAMEWORK].outcome_measures == (
        "Share of portfolio with circular pathways",
        "% supplier tiers with targets",
        "policy adoption latency (days)",
    )


def test_sustainability_view_lists_approved_actionable_components() -> None:
    repo = _repo(
        [("doc-a", 2021, ENERGY,
          ["Scorecard", "Framework", "Toolkit", "Pattern", "Model", "Algorithm"])]
    )
    rows = repo.components()
    by_label = {c.raw_type_label: c for c in rows}
    for label in ("Framework", "Toolkit", "Pattern", "Model"):
        repo.set_curation(by_label[label].component_id, "approved")
    # Scorecard left unreviewed: must not appear
    # an approved off-vocabulary record retyped to Toolkit must appear
    repo.set_curation(by_label["Algorithm"].component_id, "retyped", retype_to="Toolkit")

    report = sustainability_view(repo)
    assert [r.bucket for r in report.rows] == ["Pattern", "Toolkit", "Framework"]
    assert all(r.objective == SUSTAINABILITY_TARGETS[ComponentType(
        {"Pattern": "Pattern", "Toolkit": "Toolkit", "Framework": "Framework"}[r.bucket]
    )].objective for r in report.rows)
    # Model is approved but has no sustainability objective; retyped Algorithm
    # is not approved, so it stays out too
    assert all(r.bucket != "Model" for r in report.rows)

    repo.set_curation(by_label["Scorecard"].component_id, "approved")
    report = sustainability_view(repo)
    assert report.rows[0].bucket == "Scorecard"  # most specific first


def test_sustainability_view_empty_render() -> None:
    repo = _repo([("doc-a", 2021, ENERGY, ["Model"])])
    report = sustainability_view(repo)
    assert report.rows == ()
    assert "No approved components" in report.render_text()


# --- reuse metrics ----------------------------------------------------------------


def _reuse_fixture() -> tuple[Repository, list[str]]:
    repo = _repo([("doc-a", 2021, ENERGY, ["Model", "Pattern", "Toolkit", "Scorecard"])])
    ids = [c.component_id for c in repo.components()]
    repo.record_reuse(ids[0], "alpha", "picked up")
    repo.record_reuse(ids[1], "beta", "adapted", adopted=True)
    repo.record_reuse(ids[1], "gamma", "again")
    repo.record_reuse(ids[2], "outsider", "not in the universe")
    return repo, ids


def test_reuse_rate_against_counting_oracle() -> None:
    repo, _ = _reuse_fixture()
    metrics = reuse_metrics(repo, ["alpha", "beta", "gamma", "delta"])
    assert metrics.universe_size == 4
    assert metrics.projects_with_reuse == 3
    assert metrics.reuse_rate == 3 / 4
    # events from projects outside the universe change nothing
    assert reuse_metrics(repo, ["alpha", "delta"]).reuse_rate == 1 / 2


def test_reuse_rate_is_absent_without_a_universe() -> None:
    repo, _ = _reuse_fixture()
    for universe in (None, [], ()):
        metrics = reuse_metrics(repo, universe)
        assert metrics.universe_size == 0
        assert metrics.reuse_rate is None  # never 0: absence of evidence
    assert "n/a (empty universe)" in reuse_metrics(repo, None).render_text()


def test_duplicate_universe_entries_count_once() -> None:
    repo, _ = _reuse_fixture()
    metrics = reuse_metrics(repo, ["alpha", "alpha", "beta", "beta"])
    assert metrics.universe_size == 2
    assert metrics.reuse_rate == 1.0


def test_sprint_metrics_against_counting_oracle() -> None:
    repo, ids = _reuse_fixture()
    t0 = "2026-03-01T00:00:00+00:00"
    repo.record_sprint("alpha", ids[:3], t0, solution_at="2026-03-04T00:00:00+00:00", adopted=True)
    repo.record_sprint("beta", ids[:3], t0, solution_at="2026-03-05T00:00:00+00:00", adopted=True)
    repo.record_sprint("gamma", ids[:3], t0, solution_at="2026-03-03T12:00:00+00:00")
    repo.record_sprint("delta", ids[:3], t0, solution_at="2026-03-02T00:00:00+00:00")
    repo.record_sprint("epsilon", ids[:3], t0, solution_at="2026-03-06T12:00:00+00:00")
    repo.record_sprint("zeta", ids[:3], t0)  # still open: not completed

    metrics = reuse_metrics(repo, None)
    assert metrics.completed_sprints == 5
    assert metrics.adopted_sprints == 2
    assert metrics.hit_rate == 2 / 5
    # durations: 3 + 4 + 2.5 + 1 + 5.5 days over 5 sprints
    assert metrics.mean_days_to_solution == pytest.approx((3 + 4 + 2.5 + 1 + 5.5) / 5)


def test_sprint_metrics_absent_without_completed_sprints() -> None:
    repo, ids = _reuse_fixture()
    metrics = reuse_metrics(repo, ["alpha"])
    assert metrics.completed_sprints == 0
    assert metrics.hit_rate is None
    assert metrics.mean_days_to_solution is None
    repo.record_sprint("alpha", ids[:3], "2026-03-01T00:00:00+00:00")
    assert reuse_metrics(repo, ["alpha"]).hit_rate is None


# --- cross-report determinism ------------------------------------------------------


def test_reports_are_pure_functions_of_the_corpus() -> None:
    import sys
    sys.path.insert(0, "tests")
    from fixture_corpus import build_repository

    first = build_repository()
    second = build_repository()
    for build in (
        lambda r: type_frequency(r, denominator="fixed:711").render_text(),
        lambda r: type_frequency(r).render_text(),
        lambda r: per_paper_stats(r).render_text(),
        lambda r: crosstab(r).render_text(),
        lambda r: json.dumps(crosstab(r).to_dict(), sort_keys=True),
    ):
        assert build(first) == build(second)


def test_fixture_corpus_percentages_match_integer_oracle() -> None:
    import sys
    sys.path.insert(0, "tests")
    from fixture_corpus import build_repository

    repo = build_repository()
    for denominator in ("labelled", "fixed:711"):
        report = type_frequency(repo, denominator=denominator)
        den = report.denominator
        for row in report.rows:
            assert row.percent == ((2000 * row.count + den) // (2 * den)) / 10, row.bucket
        assert sum(r.count for r in report.rows) == report.labelled_total == 703
