"""Command-line frontend: load, query, answer, repl and eval runs.

Exit codes: 0 success (a query with zero results still succeeds), 2 parse
error, 3 runtime query error, 4 gateway unavailable for ``answer``, 5
loader or gateway failure during ``eval``.
"""

import csv as _csv
import json
import sys
from pathlib import Path

import click

from .config import EngineConfig, load_config
from .engine import Engine, QueryResult, RuleStore
from .errors import (ConfigError, GatewayUnavailable, NeuroQueryError, ParseError,
                     TranslationUnparsable)
from .gateway import make_gateway, translate_and_parse
from .harness import (load_dataset, run_query_task, run_translation_task,
                      write_reports)
from .kb import KnowledgeBase
from .nodes import RuleStmt
from .parser import balanced, parse_program, render, render_record
from .terms import term_to_json


def _build_kb(config: EngineConfig) -> KnowledgeBase:
    kb = KnowledgeBase()
    for path, kind in ((config.kb_properties, "properties"),
                       (config.kb_reviews, "reviews"),
                       (config.kb_questions, "questions")):
        if path:
            kb.load_csv(path, kind)
    return kb


def _emit_result(result: QueryResult, config: EngineConfig) -> None:
    records = result.records()
    if config.output_format == "records":
        for record in records:
            click.echo(render_record(record))
        return
    columns: list = []
    for record in records:
        for key in record:
            if key not in columns:
                columns.append(key)
    writer = _csv.writer(sys.stdout)
    writer.writerow(columns)
    for record in records:
        row = []
        for key in columns:
            if key not in record:
                row.append("")
                continue
            value = term_to_json(record[key])
            if isinstance(value, list):  # nested tuples, answer records
                value = json.dumps(value, ensure_ascii=False)
            row.append(value)
        writer.writerow(row)


@click.group(invoke_without_command=True)
@click.option("--config", "config_path", default=None,
              help="Key-value config file (default: $NEUROQUERY_CONFIG).")
@click.option("--properties", default=None, help="Properties CSV path.")
@click.option("--reviews", default=None, help="Reviews CSV path.")
@click.option("--questions", default=None, help="Questions CSV path.")
@click.option("--backend", default=None, type=click.Choice(["fallback", "remote"]))
@click.option("--endpoint", default=None, help="Remote gateway base URL.")
@click.option("--format", "output_format", default=None,
              type=click.Choice(["records", "csv"]))
@click.option("--keep-unanswered", is_flag=True, default=None,
              help="Pass frames through neural_extract even without a span.")
@click.option("--max-rule-depth", default=None, type=int)
@click.option("--bm25-k1", default=None, type=float)
@click.option("--bm25-b", default=None, type=float)
@click.option("--bm25-delta", default=None, type=float)
@click.option("--print-config", is_flag=True, help="Print the effective config.")
@click.pass_context
def main(ctx, config_path, properties, reviews, questions, backend, endpoint,
         output_format, keep_unanswered, max_rule_depth, bm25_k1, bm25_b,
         bm25_delta, print_config):
    """Neuro-symbolic query engine over an n-tuple knowledge base."""
    overrides = {
        "kb.properties": properties,
        "kb.reviews": reviews,
        "kb.questions": questions,
        "gateway.backend": backend,
        "gateway.endpoint": endpoint,
        "output.format": output_format,
        "engine.keep_unanswered": keep_unanswered,
        "engine.max_rule_depth": max_rule_depth,
        "bm25.k1": bm25_k1,
        "bm25.b": bm25_b,
        "bm25.delta": bm25_delta,
    }
    try:
        config = load_config(config_path, overrides)
    except (ConfigError, OSError) as exc:
        click.echo(f"config error: {exc}", err=True)
        ctx.exit(2)
    ctx.obj = config
    if print_config:
        for line in config.print_lines():
            click.echo(line)
    if ctx.invoked_subcommand is None:
        if not print_config:
            click.echo(ctx.get_help())
        ctx.exit(0)


@main.command()
@click.argument("dataset_dir", required=False)
@click.pass_obj
def load(config: EngineConfig, dataset_dir):
    """Load data and report counts (a dataset directory or configured files)."""
    try:
        if dataset_dir:
            bundle = load_dataset(dataset_dir)
            for name, count in bundle.stats.counts.items():
                click.echo(f"{name}: {count}")
            for mismatch in bundle.stats.mismatches:
                click.echo(f"count mismatch: {mismatch}", err=True)
            for qid in bundle.stats.unparsable_queries:
                click.echo(f"reference query does not parse: {qid}", err=True)
        else:
            kb = _build_kb(config)
            click.echo(f"facts: {len(kb)}")
    except (NeuroQueryError, OSError) as exc:
        click.echo(f"load error: {exc}", err=True)
        sys.exit(5)


@main.command()
@click.argument("query_file", required=False)
@click.pass_obj
def query(config: EngineConfig, query_file):
    """Run a query program from a file or stdin ("-" also means stdin)."""
    if query_file and query_file != "-":
        text = Path(query_file).read_text(encoding="utf-8")
    else:
        text = sys.stdin.read()
    try:
        program = parse_program(text)
    except ParseError as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(2)
    try:
        engine = Engine(_build_kb(config), gateway=make_gateway(config.gateway),
                        rules=RuleStore(), config=config)
        results = engine.run_program(program)
    except (NeuroQueryError, OSError) as exc:
        click.echo(f"query error: {exc}", err=True)
        sys.exit(3)
    for result in results:
        _emit_result(result, config)


@main.command()
@click.argument("question")
@click.option("--show-query", is_flag=True, help="Print the translated query.")
@click.pass_obj
def answer(config: EngineConfig, question, show_query):
    """Translate a natural-language question and execute the result."""
    if config.gateway.backend != "remote":
        click.echo("answer needs a remote gateway (--endpoint or config)", err=True)
        sys.exit(4)
    gateway = make_gateway(config.gateway)
    try:
        query_text, program = translate_and_parse(gateway, question)
    except GatewayUnavailable as exc:
        click.echo(f"gateway unavailable: {exc}", err=True)
        sys.exit(4)
    except TranslationUnparsable as exc:
        click.echo(f"translation error: {exc.cause}", err=True)
        click.echo(exc.raw, err=True)
        sys.exit(2)
    except NeuroQueryError as exc:
        click.echo(f"gateway error: {exc}", err=True)
        sys.exit(3)
    if show_query:
        click.echo(render(program))
    try:
        engine = Engine(_build_kb(config), gateway=gateway, rules=RuleStore(),
                        config=config)
        results = engine.run_program(program)
    except GatewayUnavailable as exc:
        click.echo(f"gateway unavailable: {exc}", err=True)
        sys.exit(4)
    except (NeuroQueryError, OSError) as exc:
        click.echo(f"query error: {exc}", err=True)
        sys.exit(3)
    for result in results:
        _emit_result(result, config)


@main.command()
@click.pass_obj
def repl(config: EngineConfig):
    """Interactive session; statements may span lines until parens balance.

    Meta commands: :load <kind> <path>, :rules, :quit.
    """
    engine = Engine(_build_kb(config), gateway=make_gateway(config.gateway),
                    rules=RuleStore(), config=config)
    interactive = sys.stdin.isatty()
    buffer = ""
    while True:
        prompt = ("... " if buffer else "nql> ") if interactive else ""
        try:
            line = input(prompt)
        except EOFError:
            break
        if not buffer and line.strip().startswith(":"):
            if _repl_meta(engine, line.strip()):
                return
            continue
        buffer += line + "\n"
        if not buffer.strip():
            buffer = ""
            continue
        if not balanced(buffer):
            continue
        text, buffer = buffer, ""
        try:
            program = parse_program(text)
            for result in engine.run_program(program):
                _emit_result(result, config)
        except NeuroQueryError as exc:
            click.echo(f"error: {exc}", err=True)


def _repl_meta(engine: Engine, line: str) -> bool:
    parts = line.split()
    command = parts[0]
    if command == ":quit":
        return True
    if command == ":rules":
        for rule in engine.rules.rules:
            click.echo(render(RuleStmt(rule)))
        return False
    if command == ":load":
        if len(parts) != 3:
            click.echo("usage: :load <properties|reviews|questions> <path>", err=True)
            return False
        kind, path = parts[1], parts[2]
        try:
            added = engine.kb.load_csv(path, kind)
            click.echo(f"added {added} facts")
        except (NeuroQueryError, OSError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
        return False
    click.echo(f"unknown meta command {command}", err=True)
    return False


@main.group(name="eval")
def eval_group():
    """Evaluation runs over a dataset directory."""


def _parse_k_grid(text: str) -> list:
    try:
        grid = sorted({int(part) for part in text.split(",") if part.strip()})
    except ValueError:
        raise click.BadParameter(f"bad k grid {text!r}") from None
    if not grid or grid[0] < 1:
        raise click.BadParameter(f"bad k grid {text!r}")
    return grid


def _eval_bundle(config: EngineConfig, dataset_dir):
    if dataset_dir:
        return load_dataset(dataset_dir)
    if not (config.kb_properties and config.kb_reviews):
        raise NeuroQueryError("eval needs a dataset directory or configured kb paths")
    directory = Path(config.kb_properties).parent
    return load_dataset(directory)


@eval_group.command()
@click.argument("dataset_dir", required=False)
@click.option("--k", "k_grid", default="2,13,20", help="Comma-separated k values.")
@click.option("--split", default="all", type=click.Choice(["all", "train", "val", "test"]))
@click.option("--out", "out_dir", default=None, help="Report output directory.")
@click.pass_obj
def retriever(config: EngineConfig, dataset_dir, k_grid, split, out_dir):
    """Recall@k of the gold review under the configured retriever."""
    _run_eval(config, dataset_dir, k_grid, split, out_dir, metrics=("recall",))


@eval_group.command()
@click.argument("dataset_dir", required=False)
@click.option("--k", "k_grid", default="8", help="Comma-separated k values.")
@click.option("--split", default="all", type=click.Choice(["all", "train", "val", "test"]))
@click.option("--out", "out_dir", default=None, help="Report output directory.")
@click.pass_obj
def reader(config: EngineConfig, dataset_dir, k_grid, split, out_dir):
    """EM and F1 of the best extracted span over the top-k pipeline."""
    _run_eval(config, dataset_dir, k_grid, split, out_dir, metrics=("em", "f1"))


def _run_eval(config: EngineConfig, dataset_dir, k_grid, split, out_dir, metrics):
    try:
        bundle = _eval_bundle(config, dataset_dir)
        reports = run_query_task(bundle, make_gateway(config.gateway),
                                 _parse_k_grid(k_grid), split=split,
                                 out_dir=out_dir)
    except (NeuroQueryError, OSError) as exc:
        click.echo(f"eval error: {exc}", err=True)
        sys.exit(5)
    click.echo("metric,k,value")
    for report in reports:
        if report.metric in metrics:
            click.echo(f"{report.metric},{report.k},{report.value:.6f}")


@eval_group.command()
@click.argument("dataset_dir", required=False)
@click.option("--candidates", "candidates_path", required=True,
              help="File with one candidate query per dataset pair, in order.")
@click.option("--smooth", is_flag=True, help="Apply +1 clipped-count smoothing.")
@click.option("--out", "out_dir", default=None, help="Report output directory.")
@click.pass_obj
def translation(config: EngineConfig, dataset_dir, candidates_path, smooth, out_dir):
    """Corpus BLEU of candidate queries against the reference queries."""
    try:
        bundle = _eval_bundle(config, dataset_dir)
        with open(candidates_path, encoding="utf-8") as handle:
            candidates = [line.rstrip("\n") for line in handle if line.strip()]
        report = run_translation_task(candidates, bundle.pairs)
        if smooth:
            from .metrics import bleu_corpus

            report = bleu_corpus(candidates,
                                 [p.reference_query for p in bundle.pairs],
                                 smooth=True)
        if out_dir:
            write_reports(out_dir, [report], bundle)
    except (NeuroQueryError, OSError) as exc:
        click.echo(f"eval error: {exc}", err=True)
        sys.exit(5)
    click.echo("metric,k,value")
    for metric, k, value in report.rows():
        click.echo(f"{metric},{'' if k is None else k},{value:.6f}")


if __name__ == "__main__":
    main()
