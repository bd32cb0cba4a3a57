"""Command line entry points: repl, serve, eval."""

from __future__ import annotations

import os
import sys

import click

from .evalharness import run_corpus
from .kb import KbFormatError, default_kb_path
from .parse_frontend import (
    API_KEY_ENV,
    HttpCompletionClient,
    LlmParser,
    RuleParser,
)
from .service import ConciergeService, ServiceNotReady


def _build_parser(parser_name: str, llm_url: str, llm_model: str):
    if parser_name == "rule":
        return RuleParser()
    api_key = os.environ.get(API_KEY_ENV)
    if not api_key:
        raise click.UsageError(
            f"--parser llm requires the {API_KEY_ENV} environment variable"
        )
    client = HttpCompletionClient(base_url=llm_url, model=llm_model, api_key=api_key)
    return LlmParser(client)


def _build_service(kb, style, parser_name, llm_url, llm_model) -> ConciergeService:
    try:
        return ConciergeService(
            kb=kb,
            style_table=style,
            parser=_build_parser(parser_name, llm_url, llm_model),
        )
    except (ServiceNotReady, KbFormatError, OSError, ValueError) as exc:
        raise click.UsageError(str(exc))


@click.group()
def main():
    """Restaurant concierge: deterministic dialog engine and chat service."""


_common = [
    click.option("--kb", default=str(default_kb_path()), show_default=True, help="knowledgebase file (JSON or CSV)"),
    click.option("--style", default=None, help="style table JSON (defaults to the bundled table)"),
    click.option("--parser", "parser_name", type=click.Choice(["rule", "llm"]), default="rule", show_default=True),
    click.option("--llm-url", default="https://api.openai.com/v1", show_default=True),
    click.option("--llm-model", default="gpt-3.5-turbo-instruct", show_default=True),
]


def common_options(fn):
    for option in reversed(_common):
        fn = option(fn)
    return fn


@main.command()
@common_options
def repl(kb, style, parser_name, llm_url, llm_model):
    """Chat with the concierge on stdin/stdout."""
    service = _build_service(kb, style, parser_name, llm_url, llm_model)
    session_id = service.create_session()
    click.echo(f"Bot: {service.greeting(session_id)}")
    while True:
        try:
            line = click.prompt("You", prompt_suffix=": ", default="", show_default=False)
        except (EOFError, KeyboardInterrupt, click.Abort):
            break
        if not line.strip():
            continue
        if line.strip().lower() in ("quit", "exit"):
            break
        reply = service.post_message(session_id, line)
        click.echo(f"Bot: {reply.text}")


@main.command()
@common_options
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui", default=None, help="directory of built web UI assets to serve at /")
def serve(kb, style, parser_name, llm_url, llm_model, port, host, ui):
    """Run the HTTP JSON API (and optionally the web UI)."""
    import uvicorn

    from .service import create_app

    service = _build_service(kb, style, parser_name, llm_url, llm_model)
    app = create_app(service)
    if ui:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui, html=True), name="ui")
    uvicorn.run(app, host=host, port=port)


@main.command(name="eval")
@click.option("--corpus", required=True, help="JSONL corpus of sentence/gold pairs")
@click.option("--parser", "parser_name", type=click.Choice(["rule", "llm"]), default="rule", show_default=True)
@click.option("--llm-url", default="https://api.openai.com/v1", show_default=True)
@click.option("--llm-model", default="gpt-3.5-turbo-instruct", show_default=True)
def eval_command(corpus, parser_name, llm_url, llm_model):
    """Score a parser backend on a meaning-representation corpus."""
    from .evalharness import CorpusFormatError

    backend = _build_parser(parser_name, llm_url, llm_model)
    try:
        report = run_corpus(corpus, backend)
    except CorpusFormatError as exc:
        raise click.UsageError(str(exc))
    click.echo(report.to_json())


if __name__ == "__main__":
    sys.exit(main())
