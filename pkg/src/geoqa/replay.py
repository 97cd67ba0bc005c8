"""Replay corpus: canonical questions with expected query kinds.

Runs the deterministic stage rules over each row (with its stated focus/topic
context), reports accuracy, and attributes every miss to a pipeline-component
error label so regressions are localizable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .geodata import Level
from .navigation import FocusState
from .pipeline import (
    ErrorLabel,
    InputKind,
    QueryClass,
    UserInput,
    _CAPABILITY_RE,
    _normalize,
    classify_input_rules,
    classify_query_rules,
    refine_query,
)
from .session import SessionState, Turn


@dataclass(frozen=True)
class ReplayRow:
    query: str
    context_focus: str  # region name, or ""
    context_topic: str  # metric key, or ""
    expected_kind: QueryClass


@dataclass(frozen=True)
class ReplayOutcome:
    row: ReplayRow
    actual_kind: QueryClass
    correct: bool
    error_label: Optional[ErrorLabel]


@dataclass(frozen=True)
class ReplayReport:
    outcomes: tuple[ReplayOutcome, ...]

    @property
    def accuracy(self) -> float:
        if not self.outcomes:
            return 0.0
        return sum(1 for o in self.outcomes if o.correct) / len(self.outcomes)

    def misses(self) -> list[ReplayOutcome]:
        return [o for o in self.outcomes if not o.correct]


def load_corpus(path: Optional[str | Path] = None) -> list[ReplayRow]:
    if path is None:
        text = resources.files("geoqa").joinpath("assets", "replay_corpus.csv").read_text(
            encoding="utf-8"
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    rows = []
    for record in csv.DictReader(text.splitlines()):
        rows.append(
            ReplayRow(
                query=record["query"],
                context_focus=record.get("context_focus", "") or "",
                context_topic=record.get("context_topic", "") or "",
                expected_kind=QueryClass(record["expected_kind"]),
            )
        )
    return rows


def _session_for(row: ReplayRow, engine) -> SessionState:
    session = SessionState(session_id="replay")
    if row.context_focus:
        matches = engine.dataset.find_regions_by_name(row.context_focus)
        states = [r for r in matches if r.level is Level.STATE]
        region = states[0] if states else matches[0]
        if region.level is Level.STATE:
            session.focus = FocusState(Level.STATE, region.id, region.id)
        else:
            session.focus = FocusState(Level.COUNTY, region.id, region.parent_id)
    if row.context_topic:
        session.append_turn(Turn("user", "(context)", metric_key=row.context_topic))
    return session


def classify_row(row: ReplayRow, engine) -> QueryClass:
    """Kind the deterministic pipeline assigns, mirroring run_pipeline's order."""
    user_input = UserInput(text=row.query, session_id="replay")
    if classify_input_rules(user_input.text) is InputKind.ACTION_COMMAND:
        return QueryClass.ACTION
    session = _session_for(row, engine)
    refined = refine_query(user_input, session, engine.index)
    if _CAPABILITY_RE.search(_normalize(refined.text)):
        return QueryClass.VISUALIZATION_KNOWLEDGE
    mentions = engine.index.mentions(refined.text, session.focus.focused_state_id if session.focus else None)
    return classify_query_rules(refined, mentions, session.focus is not None)


def _attribute_miss(row: ReplayRow, actual: QueryClass) -> ErrorLabel:
    if (row.expected_kind is QueryClass.ACTION) != (actual is QueryClass.ACTION):
        return ErrorLabel.INPUT_CLASSIFIER
    if row.context_focus or row.context_topic:
        return ErrorLabel.QUERY_REFINER
    return ErrorLabel.QUERY_PROCESSOR


def run_replay(engine, rows: Optional[list[ReplayRow]] = None) -> ReplayReport:
    rows = rows if rows is not None else load_corpus()
    outcomes = []
    for row in rows:
        actual = classify_row(row, engine)
        correct = actual is row.expected_kind
        outcomes.append(
            ReplayOutcome(
                row=row,
                actual_kind=actual,
                correct=correct,
                error_label=None if correct else _attribute_miss(row, actual),
            )
        )
    return ReplayReport(tuple(outcomes))


def format_report(report: ReplayReport) -> str:
    lines = [
        f"replay corpus: {len(report.outcomes)} queries, "
        f"accuracy {report.accuracy:.1%}"
    ]
    for miss in report.misses():
        lines.append(
            f"  MISS [{miss.error_label.value}] {miss.row.query!r}: "
            f"expected {miss.row.expected_kind.value}, got {miss.actual_kind.value}"
        )
    return "\n".join(lines)
