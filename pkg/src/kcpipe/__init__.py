"""Knowledge-component pipeline: extract, store, curate, analyse.

The package splits along the data flow: `ingest` turns files into document
records, `extraction` produces raw components from a chat-completion
provider (live or replayed), `taxonomy` resolves type labels against the
controlled vocabulary, `repository` persists everything with curation and
reuse history, `analytics` derives the reports, and `cli`/`webapi` are the
two operator surfaces.
"""

__version__ = "0.1.0"
