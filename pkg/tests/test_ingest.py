from __future__ import annotations

import json

import pytest

from kcpipe.ingest import (
    NO_TEXT_REASON,
    DocumentMetadata,
    DocumentRecord,
    DocumentStatus,
    DuplicateDocumentError,
    IngestError,
    build_manifest,
    compute_doc_id,
    ingest_directory,
    load_document,
    manifest_row,
    normalize_text,
    read_metadata,
    write_manifest,
)

# (raw, normalised) pairs worked out by hand
NORMALIZE_TABLE = [
    ("plain text", "plain text"),
    ("  leading and trailing  ", "leading and trailing"),
    ("runs   of\tmixed\t whitespace", "runs of mixed whitespace"),
    ("one\ntwo", "one two"),  # bare newline is a soft wrap
    ("para one\n\npara two", "para one\n\npara two"),
    ("para one\n\n\n\npara two", "para one\n\npara two"),
    ("para one\n  \t\npara two", "para one\n\npara two"),
    ("\n\nfirst\n\n", "first"),
    ("crlf line\r\n\r\nnext", "crlf line\n\nnext"),
    ("", ""),
    ("   \n\n   ", ""),
]


def _meta(filename: str, **overrides) -> DocumentMetadata:
    values = {
        "filename": filename,
        "title": "A Title",
        "citation": "Someone (2021). Somewhere.",
        "year": 2021,
        "subjects": ("Marketing & Consumer Research",),
    }
    values.update(overrides)
    return DocumentMetadata(**values)


def test_normalize_text_table() -> None:
    for raw, expected in NORMALIZE_TABLE:
        assert normalize_text(raw) == expected, repr(raw)


def test_doc_id_is_a_content_hash() -> None:
    first = compute_doc_id("a.txt", "body")
    assert len(first) == 16
    assert int(first, 16) >= 0  # hex
    assert compute_doc_id("a.txt", "body") == first
    assert compute_doc_id("b.txt", "body") != first
    assert compute_doc_id("a.txt", "other body") != first


def test_load_document_pending_with_normalised_body(tmp_path) -> None:
    path = tmp_path / "a.txt"
    path.write_text("Some   title line\n\n\nBody  paragraph.", encoding="utf-8")
    record = load_document(path, _meta("a.txt"))
    assert record.status is DocumentStatus.PENDING
    assert record.exclusion_reason is None
    assert record.body_text == "Some title line\n\nBody paragraph."
    assert record.doc_id == compute_doc_id("a.txt", record.body_text)
    assert record.subjects == ("Marketing & Consumer Research",)


def test_operator_exclusion_wins_even_with_text(tmp_path) -> None:
    path = tmp_path / "retracted.txt"
    path.write_text("Plenty of text here.", encoding="utf-8")
    record = load_document(path, _meta("retracted.txt", exclude_reason="retracted"))
    assert record.status is DocumentStatus.EXCLUDED
    assert record.exclusion_reason == "retracted"
    assert record.body_text == "Plenty of text here."


def test_empty_file_is_excluded_for_no_text(tmp_path) -> None:
    path = tmp_path / "empty.txt"
    path.write_text("   \n\n  ", encoding="utf-8")
    record = load_document(path, _meta("empty.txt"))
    assert record.status is DocumentStatus.EXCLUDED
    assert record.exclusion_reason == NO_TEXT_REASON
    assert record.body_text == ""


def test_missing_file_is_an_ingest_error(tmp_path) -> None:
    with pytest.raises(IngestError):
        load_document(tmp_path / "nope.txt", _meta("nope.txt"))


def test_exclusion_status_and_reason_travel_together() -> None:
    with pytest.raises(ValueError):
        DocumentRecord("d1", "a.txt", "T", "C", None, (), "", DocumentStatus.EXCLUDED, None)
    with pytest.raises(ValueError):
        DocumentRecord("d1", "a.txt", "T", "C", None, (), "", DocumentStatus.PENDING, "why")


def test_pdf_text_layer_is_recovered(tmp_path) -> None:
    reportlab = pytest.importorskip("reportlab")
    del reportlab
    from reportlab.lib.pagesizes import letter
    from reportlab.pdfgen import canvas

    # compressed (library default) and uncompressed variants must both work
    for compress in (0, 1):
        path = tmp_path / f"paper_{compress}.pdf"
        c = canvas.Canvas(str(path), pagesize=letter, pageCompression=compress)
        c.drawString(72, 720, "Resilience toolkits improve supply continuity.")
        c.drawString(72, 700, "Adoption spreads through practitioner networks.")
        c.showPage()
        c.drawString(72, 720, "The closing section restates the contribution.")
        c.save()

        record = load_document(path, _meta(path.name))
        assert record.status is DocumentStatus.PENDING
        assert "Resilience toolkits improve supply continuity." in record.body_text
        assert "Adoption spreads through practitioner networks." in record.body_text
        assert "closing section restates" in record.body_text
        # page one text precedes page two text
        assert record.body_text.index("Resilience") < record.body_text.index("closing")


def test_image_only_pdf_is_excluded(tmp_path) -> None:
    pytest.importorskip("reportlab")
    from reportlab.lib.pagesizes import letter
    from reportlab.pdfgen import canvas

    path = tmp_path / "scan.pdf"
    c = canvas.Canvas(str(path), pagesize=letter)
    c.rect(100, 100, 300, 300, fill=1)
    c.save()

    record = load_document(path, _meta("scan.pdf"))
    assert record.status is DocumentStatus.EXCLUDED
    assert record.exclusion_reason == NO_TEXT_REASON


def test_not_a_pdf_is_an_ingest_error(tmp_path) -> None:
    path = tmp_path / "fake.pdf"
    path.write_bytes(b"this is not a pdf at all")
    with pytest.raises(IngestError):
        load_document(path, _meta("fake.pdf"))


def test_metadata_rows_parse_and_validate(tmp_path) -> None:
    path = tmp_path / "meta.ndjson"
    path.write_text(
        json.dumps({"filename": "a.txt", "title": "A", "citation": "X (2020).", "year": 2020})
        + "\n"
        + json.dumps({"filename": "b.txt", "title": "B", "citation": "Y (2021).",
                      "subjects": ["Energy & Power Systems"], "exclude_reason": "editorial"})
        + "\n\n",
        encoding="utf-8",
    )
    rows = read_metadata(path)
    assert [r.filename for r in rows] == ["a.txt", "b.txt"]
    assert rows[0].year == 2020 and rows[0].subjects == ()
    assert rows[1].year is None
    assert rows[1].subjects == ("Energy & Power Systems",)
    assert rows[1].exclude_reason == "editorial"


def test_metadata_errors_name_the_line(tmp_path) -> None:
    path = tmp_path / "meta.ndjson"
    path.write_text('{"filename": "a.txt"}\n', encoding="utf-8")
    with pytest.raises(IngestError, match="title"):
        read_metadata(path)

    path.write_text('{"filename": "a.txt", "title": "A", "citation": "C", "year": "2020"}\n')
    with pytest.raises(IngestError, match="year"):
        read_metadata(path)

    path.write_text("not json\n", encoding="utf-8")
    with pytest.raises(IngestError, match=":1:"):
        read_metadata(path)


def test_manifest_aggregates_subjects_and_years(tmp_path) -> None:
    records = [
        DocumentRecord("d1", "a.txt", "A", "C", 2023, ("Marketing & Consumer Research",), "x"),
        DocumentRecord("d2", "b.txt", "B", "C", 2021, ("Energy & Power Systems",
                                                       "Marketing & Consumer Research"), "y"),
        DocumentRecord("d3", "c.txt", "C", "C", None, (), "", DocumentStatus.EXCLUDED, "empty"),
    ]
    manifest = build_manifest(records)
    assert manifest.subject_vocabulary == ("Energy & Power Systems", "Marketing & Consumer Research")
    assert manifest.year_range == (2021, 2023)
    assert manifest.pending == 2
    assert manifest.excluded == 1

    assert build_manifest([]).year_range is None


def test_duplicate_content_is_rejected() -> None:
    a = DocumentRecord("same", "a.txt", "A", "C", None, (), "body")
    b = DocumentRecord("same", "b.txt", "B", "C", None, (), "body")
    with pytest.raises(DuplicateDocumentError):
        build_manifest([a, b])


def test_directory_ingest_round_trip(tmp_path) -> None:
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    (corpus / "one.txt").write_text("First paper body.", encoding="utf-8")
    (corpus / "two.txt").write_text("Second paper body.", encoding="utf-8")
    (corpus / "blank.txt").write_text("", encoding="utf-8")
    meta_path = tmp_path / "meta.ndjson"
    meta_path.write_text(
        "\n".join(
            json.dumps(m)
            for m in [
                {"filename": "one.txt", "title": "One", "citation": "A (2020).", "year": 2020},
                {"filename": "two.txt", "title": "Two", "citation": "B (2021).", "year": 2021,
                 "subjects": ["Computer Science & Algorithms"]},
                {"filename": "blank.txt", "title": "Blank", "citation": "C (2022)."},
            ]
        )
        + "\n",
        encoding="utf-8",
    )

    manifest = ingest_directory(corpus, meta_path)
    assert manifest.pending == 2
    assert manifest.excluded == 1
    assert manifest.year_range == (2020, 2021)

    # same inputs, same identities: ingest is idempotent
    again = ingest_directory(corpus, meta_path)
    assert [r.doc_id for r in again.records] == [r.doc_id for r in manifest.records]

    out = tmp_path / "manifest.ndjson"
    write_manifest(manifest.records, out)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert [json.loads(line) for line in lines] == [manifest_row(r) for r in manifest.records]
    assert set(json.loads(lines[0])) == {
        "doc_id", "filename", "title", "citation", "year", "subjects", "status"
    }
