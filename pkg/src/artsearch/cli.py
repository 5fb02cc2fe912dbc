"""Operator CLI: index, search, serve, bench.

All commands except ``serve`` run against the data directory in embedded
mode (no server). Exit codes: 1 validation, 2 I/O, 3 internal; error text
goes to stderr.
"""

from __future__ import annotations

import functools
import sys
import time
from pathlib import Path

import click
import numpy as np

from .catalog import load_facet_config
from .catalog.types import FacetFilter
from .errors import (
    ArtSearchError,
    FormatError,
    IntegrityError,
    StorageError,
    ValidationError,
)
from .query.spec import QuerySpec, QueryTerm
from .workspace import Workspace

EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_INTERNAL = 3

DEFAULT_PLUGINS = "colorgram,hashproj,red-threshold"


def cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            click.echo(f"error: {exc.message}", err=True)
            sys.exit(EXIT_VALIDATION)
        except (StorageError, FormatError, IntegrityError, OSError) as exc:
            message = getattr(exc, "message", None) or str(exc)
            click.echo(f"i/o error: {message}", err=True)
            sys.exit(EXIT_IO)
        except ArtSearchError as exc:
            click.echo(f"internal error: {exc.message}", err=True)
            sys.exit(EXIT_INTERNAL)

    return wrapper


def _open_workspace(data_dir: str, facets_config: str | None,
                    plugins: str | None = None, **kwargs) -> Workspace:
    facets = load_facet_config(facets_config) if facets_config else ()
    ws = Workspace(data_dir, facets=facets, **kwargs)
    if plugins:
        for name in [p.strip() for p in plugins.split(",") if p.strip()]:
            ws.register_plugin(f"builtin:{name}" if "://" not in name else name)
    return ws


@click.group()
def main():
    """Multimodal search engine for image collections."""


@main.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=False), help="JSON-Lines manifest file.")
@click.option("--plugins", default=DEFAULT_PLUGINS, show_default=True,
              help="Comma-separated plugin names to run.")
@click.option("--data-dir", default="./artsearch-data", show_default=True)
@click.option("--collection", default="default", show_default=True)
@click.option("--parallelism", default=1, show_default=True, type=int)
@click.option("--facets-config", default=None, type=click.Path(),
              help="JSON facet definitions (stored in the data dir for reuse).")
@cli_errors
def index(manifest_path, plugins, data_dir, collection, parallelism, facets_config):
    """Ingest a collection manifest into the data directory."""
    if not Path(manifest_path).exists():
        click.echo(f"i/o error: manifest not found: {manifest_path}", err=True)
        sys.exit(EXIT_IO)
    names = [p.strip() for p in plugins.split(",") if p.strip()]
    with _open_workspace(data_dir, facets_config, plugins) as ws:
        job = ws.ingest(manifest_path, collection, names, parallelism=parallelism)
        click.echo(f"job {job.job_id}: {job.state} "
                   f"(processed={job.processed} failed={job.failed} total={job.total})")
        for err in job.errors[:20]:
            click.echo(f"  entry {err['entry_id']}: {err['message']}", err=True)
        if job.state == "failed":
            sys.exit(EXIT_IO)


def _parse_plugin_weights(weights: str) -> dict[str, float] | None:
    if not weights:
        return None
    out = {}
    for part in weights.split(","):
        if not part.strip():
            continue
        name, _, value = part.partition("=")
        if not value:
            raise ValidationError(f"bad --weights entry {part!r}; expected plugin=weight")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise ValidationError(f"bad weight {value!r} for plugin {name!r}") from None
    return out or None


def _parse_filters(values: tuple[str, ...], years: tuple[str, ...]) -> list[FacetFilter]:
    filters = []
    for spec in values:
        field, _, vals = spec.partition("=")
        if not vals:
            raise ValidationError(f"bad --filter {spec!r}; expected field=v1|v2")
        filters.append(FacetFilter(field, values=tuple(vals.split("|"))))
    for spec in years:
        field, _, rng = spec.partition("=")
        lo, sep, hi = rng.partition("..")
        if not sep:
            raise ValidationError(f"bad --year-range {spec!r}; expected field=lo..hi")
        try:
            filters.append(FacetFilter(field, year_range=(int(lo), int(hi))))
        except ValueError:
            raise ValidationError(f"bad --year-range bounds in {spec!r}") from None
    return filters


@main.command()
@click.option("--text", "texts", multiple=True, help="Text reference term (repeatable).")
@click.option("--image", "images", multiple=True, type=click.Path(exists=True),
              help="Image file reference term (repeatable).")
@click.option("--doc", "docs", multiple=True, help="Existing doc_id reference term.")
@click.option("--term-weight", "term_weights", multiple=True, type=float,
              help="Weights matching the term order (default 1.0 each).")
@click.option("--weights", default="", help="Plugin weights, e.g. hashproj=2,colorgram=0.5")
@click.option("--filter", "filters", multiple=True, help="Facet filter field=v1|v2.")
@click.option("--year-range", "years", multiple=True, help="Numeric facet filter field=lo..hi.")
@click.option("--keyword", default=None, help="Keyword constraint.")
@click.option("--limit", default=10, show_default=True, type=int)
@click.option("--offset", default=0, show_default=True, type=int)
@click.option("--data-dir", default="./artsearch-data", show_default=True)
@click.option("--plugins", default=DEFAULT_PLUGINS, show_default=True)
@cli_errors
def search(texts, images, docs, term_weights, weights, filters, years,
           keyword, limit, offset, data_dir, plugins):
    """Query the indexed collection; prints rank, doc, score, per-plugin."""
    terms: list[QueryTerm] = []
    for t in texts:
        terms.append(QueryTerm(text=t))
    for path in images:
        terms.append(QueryTerm(image=Path(path).read_bytes()))
    for d in docs:
        terms.append(QueryTerm(doc_id=d))
    if not terms:
        click.echo("error: no query terms; pass --text, --image, or --doc", err=True)
        click.echo(search.get_help(click.Context(search)), err=True)
        sys.exit(EXIT_VALIDATION)
    for i, w in enumerate(term_weights[: len(terms)]):
        terms[i].weight = w
    spec = QuerySpec(
        terms=terms,
        plugin_weights=_parse_plugin_weights(weights),
        filters=_parse_filters(filters, years),
        keyword_query=keyword,
        offset=offset,
        limit=limit,
    )
    with _open_workspace(data_dir, None, plugins) as ws:
        page = ws.search(spec)
        plugin_cols = sorted({p for r in page.results for p in r.per_plugin})
        header = f"{'rank':>4}  {'doc_id':<24} {'score':>8}"
        for p in plugin_cols:
            header += f" {p:>12}"
        click.echo(header)
        for r in page.results:
            line = f"{r.rank:>4}  {r.doc_id:<24} {r.final_score:8.4f}"
            for p in plugin_cols:
                line += f" {r.per_plugin.get(p, 0.0):12.4f}"
            click.echo(line)
        if page.diagnostics["warnings"]:
            for w in page.diagnostics["warnings"]:
                click.echo(f"warning: {w}", err=True)
        click.echo(f"total: {page.total}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--ui-dir", default=None, type=click.Path(),
              help="Directory with the built browser UI to serve at /.")
@cli_errors
def serve(config_path, ui_dir):
    """Run the HTTP service from a JSON config file."""
    from .service.config import ServerConfig

    config = ServerConfig.from_file(config_path)
    from .service.app import serve as run_server

    run_server(config, ui_dir=ui_dir)


@main.command()
@click.option("--n", default=10000, show_default=True, type=int)
@click.option("--dim", default=128, show_default=True, type=int)
@click.option("--queries", default=100, show_default=True, type=int)
@click.option("--k", default=10, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--ef", "ef_values", multiple=True, type=int,
              help="ef_search values to report (default: index default).")
@cli_errors
def bench(n, dim, queries, k, seed, ef_values):
    """Recall and latency of the graph index against the flat oracle."""
    from .index import FlatIndex, HnswIndex

    rng = np.random.default_rng(seed)

    def unit(count):
        v = rng.standard_normal((count, dim)).astype(np.float32)
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    X = unit(n)
    Q = unit(queries)
    ids = [f"doc{i:08d}" for i in range(n)]
    graph = HnswIndex(dim, seed=seed)
    flat = FlatIndex(dim)
    t0 = time.perf_counter()
    for i in range(n):
        graph.insert(ids[i], X[i])
    build_s = time.perf_counter() - t0
    for i in range(n):
        flat.insert(ids[i], X[i])
    click.echo(f"built graph index: n={n} dim={dim} in {build_s:.1f}s")

    flat_ms = []
    truth = []
    for qi in range(queries):
        t0 = time.perf_counter()
        truth.append({nb.doc_id for nb in flat.search(Q[qi], k)})
        flat_ms.append((time.perf_counter() - t0) * 1000)

    def pct(xs, p):
        return float(np.percentile(np.asarray(xs), p))

    click.echo(f"flat scan: p50={pct(flat_ms, 50):.2f}ms p90={pct(flat_ms, 90):.2f}ms "
               f"p99={pct(flat_ms, 99):.2f}ms")
    for ef in ef_values or (graph.ef_search,):
        graph_ms = []
        recall = 0.0
        for qi in range(queries):
            t0 = time.perf_counter()
            got = {nb.doc_id for nb in graph.search(Q[qi], k, ef_search=ef)}
            graph_ms.append((time.perf_counter() - t0) * 1000)
            recall += len(got & truth[qi]) / k
        click.echo(f"graph ef={ef}: recall@{k}={recall / queries:.4f} "
                   f"p50={pct(graph_ms, 50):.2f}ms p90={pct(graph_ms, 90):.2f}ms "
                   f"p99={pct(graph_ms, 99):.2f}ms")


if __name__ == "__main__":  # pragma: no cover
    main()
