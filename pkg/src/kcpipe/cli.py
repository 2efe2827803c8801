"""Command-line interface.

Every subcommand works against a data directory (--data-dir, default
./kcpipe_data) holding the repository state file, the corpus manifest and
the replay cache. Exit code 0 means everything asked for happened; partial
batch failures report per document and exit 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import analytics
from .extraction import ConfigError, ExtractionConfig, extract_corpus
from .ingest import IngestError, ingest_directory, write_manifest
from .providers import LiveProvider, RecordingProvider, ReplayCache, ReplayProvider
from .repository import Repository, RepositoryError
from .taxonomy import vocabulary_records, write_vocabulary

logger = logging.getLogger(__name__)


def _data_dir(args: argparse.Namespace) -> Path:
    path = Path(args.data_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _repository(args: argparse.Namespace) -> Repository:
    return Repository(_data_dir(args) / "repository.json")


def _replay_cache(args: argparse.Namespace) -> ReplayCache:
    return ReplayCache(_data_dir(args) / "replay_cache")


def cmd_ingest(args: argparse.Namespace) -> int:
    manifest = ingest_directory(Path(args.directory), Path(args.metadata))
    repo = _repository(args)
    repo.add_documents(manifest.records)
    manifest_path = _data_dir(args) / "manifest.ndjson"
    write_manifest(manifest.records, manifest_path)
    print(f"ingested {len(manifest.records)} documents ({manifest.excluded} excluded)")
    if manifest.year_range:
        print(f"years {manifest.year_range[0]}-{manifest.year_range[1]}")
    print(f"manifest written to {manifest_path}")
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    overrides = {}
    if args.model is not None:
        overrides["model_id"] = args.model
    if args.temperature is not None:
        overrides["temperature"] = args.temperature
    if args.max_tokens is not None:
        overrides["max_output_tokens"] = args.max_tokens
    cfg = ExtractionConfig(**overrides)

    cache = _replay_cache(args)
    if args.provider == "replay":
        provider = ReplayProvider(cache)
    else:
        provider = RecordingProvider(LiveProvider(), cache)

    repo = _repository(args)
    docs = [d.strip() for d in args.docs.split(",")] if args.docs else None
    report = extract_corpus(
        repo,
        provider,
        cfg,
        doc_ids=docs,
        parallel=args.parallel,
        force=args.force,
        allow_truncated=args.allow_truncated,
    )
    for r in report.reports:
        if r.outcome == "ok":
            extra = f", {r.malformed_count} malformed" if r.malformed_count else ""
            print(f"{r.doc_id}  ok  {r.component_count} components{extra}")
        elif r.outcome == "none-found":
            print(f"{r.doc_id}  none found")
        elif r.outcome == "skipped":
            print(f"{r.doc_id}  skipped ({r.detail})")
        else:
            print(f"{r.doc_id}  FAILED: {r.detail}")
    if report.missing_cache_keys:
        print("replay cache is missing these requests:", file=sys.stderr)
        for key in report.missing_cache_keys:
            print(f"  {key}", file=sys.stderr)
    print(f"{len(report.succeeded)} extracted, {len(report.failed)} failed")
    return 1 if report.failed else 0


def _build_report(args: argparse.Namespace, repo: Repository):
    if args.report == "type-frequency":
        return analytics.type_frequency(
            repo, denominator=args.denominator, include_rejected=args.include_rejected
        )
    if args.report == "per-paper":
        return analytics.per_paper_stats(repo, include_rejected=args.include_rejected)
    if args.report == "crosstab":
        return analytics.crosstab(repo)
    if args.report == "sustainability":
        return analytics.sustainability_view(repo)
    projects = [p.strip() for p in args.projects.split(",") if p.strip()] if args.projects else None
    return analytics.reuse_metrics(repo, projects)


def cmd_stats(args: argparse.Namespace) -> int:
    report = _build_report(args, _repository(args))
    if args.format == "structured":
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False))
    else:
        print(report.render_text())
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    count = _repository(args).export_components(Path(args.path))
    print(f"exported {count} components to {args.path}")
    return 0


def cmd_import(args: argparse.Namespace) -> int:
    count = _repository(args).import_components(Path(args.path))
    print(f"imported {count} components from {args.path}")
    return 0


def cmd_reuse_add(args: argparse.Namespace) -> int:
    repo = _repository(args)
    event = repo.record_reuse(args.component, args.project, args.note, adopted=args.adopted)
    print(f"recorded {event.event_id} for {event.component_id} in {event.project!r}")
    return 0


def cmd_vocab(args: argparse.Namespace) -> int:
    if args.path:
        write_vocabulary(Path(args.path))
        print(f"vocabulary written to {args.path}")
    else:
        for record in vocabulary_records():
            print(json.dumps(record, ensure_ascii=False))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .webapi import ApiSettings, create_app

    data_dir = _data_dir(args)
    repo = Repository(data_dir / "repository.json")
    settings = ApiSettings(token=args.token, replay_cache_dir=data_dir / "replay_cache")
    app = create_app(repo, settings)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kcpipe",
        description="Extract, curate and analyse reusable knowledge components.",
    )
    parser.add_argument(
        "--data-dir",
        default=os.environ.get("KCPIPE_DATA_DIR", "kcpipe_data"),
        help="working directory for repository state, manifest and replay cache",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load a corpus directory into the repository")
    p.add_argument("directory", help="directory holding the document files")
    p.add_argument("--metadata", required=True, help="NDJSON metadata file, one row per document")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract", help="run component extraction over pending documents")
    p.add_argument("--provider", choices=("live", "replay"), default="replay")
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.add_argument("--model", default=None, metavar="ID")
    p.add_argument("--temperature", type=float, default=None, metavar="T")
    p.add_argument("--max-tokens", type=int, default=None, metavar="N")
    p.add_argument("--docs", default=None, help="comma-separated document ids (default: all pending)")
    p.add_argument("--force", action="store_true", help="re-extract documents already processed")
    p.add_argument(
        "--allow-truncated",
        action="store_true",
        help="store responses cut off at the token cap (normally refused)",
    )
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("stats", help="print a report over the stored components")
    p.add_argument(
        "--report",
        choices=("type-frequency", "per-paper", "crosstab", "sustainability", "reuse-metrics"),
        default="type-frequency",
    )
    p.add_argument("--denominator", default="labelled", help='"labelled" or "fixed:<n>"')
    p.add_argument("--include-rejected", action="store_true")
    p.add_argument("--projects", default=None, help="comma-separated project universe for reuse metrics")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("export", help="write all components as NDJSON")
    p.add_argument("path")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("import", help="load a component export into an empty repository")
    p.add_argument("path")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("reuse", help="record reuse activity")
    reuse_sub = p.add_subparsers(dest="reuse_command", required=True)
    p = reuse_sub.add_parser("add", help="record one reuse event against a component")
    p.add_argument("component", help="component id")
    p.add_argument("--project", required=True)
    p.add_argument("--note", required=True)
    p.add_argument("--adopted", action="store_true")
    p.set_defaults(func=cmd_reuse_add)

    p = sub.add_parser("vocab", help="print or write the type vocabulary")
    p.add_argument("path", nargs="?", default=None)
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--token", default=os.environ.get("KCPIPE_TOKEN"))
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (IngestError, RepositoryError, ConfigError, analytics.AnalyticsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
