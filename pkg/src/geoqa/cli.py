"""Command-line entry points: serve the HTTP API, replay the corpus, or ask
one-off questions against a dataset config."""

from __future__ import annotations

import argparse
import sys

from .engine import build_engine
from .lm import HttpLanguageModel
from .pipeline import UserInput, run_pipeline
from .replay import format_report, load_corpus, run_replay
from .service import TraceLog, create_app
from .session import SessionState


def _make_lm(name: str):
    if name == "none":
        return None
    if name == "provider":
        return HttpLanguageModel()
    raise SystemExit(f"unknown --lm choice {name!r}")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="dataset config file")
    parser.add_argument("--seed", type=int, default=0, help="statistics RNG seed")
    parser.add_argument(
        "--lm",
        choices=["none", "provider"],
        default="none",
        help="language-model client (provider reads GEOQA_LM_API_KEY)",
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="geoqa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    _add_common(serve)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--log", help="append-only JSONL trace log path")
    serve.add_argument("--ui", help="serve a built web client from this directory at /ui")

    replay = sub.add_parser("replay", help="run the classification replay corpus")
    _add_common(replay)
    replay.add_argument("--corpus", help="corpus CSV (defaults to the bundled one)")

    ask = sub.add_parser("ask", help="answer one question and exit")
    _add_common(ask)
    ask.add_argument("text", nargs="+", help="the question")

    args = parser.parse_args(argv)
    engine = build_engine(args.config, lm=_make_lm(args.lm), seed=args.seed)

    if args.command == "serve":
        import uvicorn

        app = create_app(engine, TraceLog(args.log), ui_dist=args.ui)
        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    if args.command == "replay":
        rows = load_corpus(args.corpus) if args.corpus else load_corpus()
        report = run_replay(engine, rows)
        print(format_report(report))
        return 0 if report.accuracy >= 0.9 else 1

    if args.command == "ask":
        session = SessionState(session_id="cli")
        answer, trace = run_pipeline(
            UserInput(text=" ".join(args.text), session_id="cli"), session, engine
        )
        print(answer.text)
        if answer.map_directive:
            print(f"[map] {answer.map_directive.to_json()}")
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
