"""Knowledge-path answering for visual/contextual/out-of-scope queries.

With a language model configured, queries ride a geovisualization-expert
persona prompt (legend queries attach the current legend payload). Offline,
answers come from a fixture table keyed by normalized query so tests stay
deterministic. Either way the engine adds no numbers of its own, and any
adjacency assertions about loaded regions are checked against the Queen
weights and flagged on the trace, never shown to the user.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .answers import Answer, AnswerSource, MapDirective
from .geodata import GeoDataset, Level
from .lm import LanguageModelClient, LmError, load_prompt
from .spatial_stats import SpatialWeights

PERSONA = (
    "You are a geovisualization expert. Answer concisely and connect the "
    "answer to the map the user is exploring."
)

_ADJACENCY_PHRASES = (
    "adjacent",
    "border",
    "borders",
    "bordering",
    "neighbor",
    "neighbors",
    "neighboring",
    "neighbour",
    "neighbours",
    "neighbouring",
    "contiguous",
    "connected",
    "next to",
    "touches",
)
_GROUP_PHRASES = ("contiguous", "connected")


@dataclass(frozen=True)
class KnowledgePrompt:
    role_text: str
    query: str
    legend_payload: Optional[dict] = None
    focus_context: Optional[str] = None

    def parts(self) -> list[str]:
        parts = [self.role_text]
        if self.legend_payload is not None:
            parts.append(f"Current legend: {self.legend_payload}")
        if self.focus_context:
            parts.append(f"The user is currently focused on {self.focus_context}.")
        parts.append(self.query)
        return parts


def build_prompt(
    query_text: str,
    kind: str,
    legend_payload: Optional[dict],
    focus_context: Optional[str],
) -> KnowledgePrompt:
    if kind == "legend":
        if legend_payload is None:
            raise ValueError("legend queries require a legend payload")
    else:
        legend_payload = None
    return KnowledgePrompt(
        role_text=load_prompt("knowledge") if _prompt_available() else PERSONA,
        query=query_text,
        legend_payload=legend_payload,
        focus_context=focus_context,
    )


def _prompt_available() -> bool:
    try:
        return resources.files("geoqa").joinpath("assets", "prompts", "knowledge.txt").is_file()
    except Exception:
        return False


def normalize_query(text: str) -> str:
    text = text.lower()
    text = re.sub(r"[^a-z0-9%\s]", " ", text)
    return " ".join(text.split())


def load_fixtures(path: Optional[str | Path] = None) -> dict[str, str]:
    """Fixture table {normalized query -> canned answer} for offline mode."""
    if path is None:
        source = resources.files("geoqa").joinpath("assets", "knowledge_fixtures.csv")
        text = source.read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    fixtures: dict[str, str] = {}
    for row in csv.DictReader(text.splitlines()):
        fixtures[normalize_query(row["query"])] = row["answer"]
    return fixtures


def answer_knowledge(
    query_text: str,
    kind: str,
    lm: Optional[LanguageModelClient],
    fixtures: dict[str, str],
    legend_payload: Optional[dict] = None,
    focus_context: Optional[str] = None,
    focus_region_id: Optional[str] = None,
) -> tuple[Answer, bool]:
    """Answer via the model or the fixture table.

    Returns (answer, answered): ``answered`` is False when neither the model
    nor a fixture could help and we fell back to a limitation notice.
    """
    directive = MapDirective(focus=focus_region_id) if focus_region_id else None
    announce = ""
    if focus_region_id:
        announce = "Focus updated."

    if lm is not None:
        prompt = build_prompt(query_text, kind, legend_payload, focus_context)
        try:
            text = lm.submit(prompt.parts())
            return (
                Answer(text, announce=announce, source=AnswerSource.LANGUAGE_MODEL, map_directive=directive),
                True,
            )
        except LmError:
            pass

    canned = fixtures.get(normalize_query(query_text))
    if canned is not None:
        return (
            Answer(canned, announce=announce, source=AnswerSource.LANGUAGE_MODEL, map_directive=directive),
            True,
        )

    text = (
        "I can't answer that without a language model connection. I can still "
        "answer data questions about the loaded dataset, describe spatial "
        "patterns, and navigate the map."
    )
    return Answer(text, source=AnswerSource.LOCAL_DATA), False


def verify_adjacency_claims(
    answer_text: str, w: SpatialWeights, dataset: GeoDataset
) -> list[tuple[str, str]]:
    """Flag explicit adjacency claims between loaded states that the Queen
    weights refute. Conservative: only sentences containing an adjacency
    phrase are inspected, and flags ride the trace, not the user answer.
    """
    states = dataset.regions_at(Level.STATE)
    name_to_id = {r.name.lower(): r.id for r in states}
    names_sorted = sorted(name_to_id, key=len, reverse=True)

    flags: list[tuple[str, str]] = []
    for sentence in re.split(r"[.!?;\n]+", answer_text):
        lowered = sentence.lower()
        if not any(phrase in lowered for phrase in _ADJACENCY_PHRASES):
            continue
        mentioned: list[str] = []
        consumed: list[tuple[int, int]] = []
        for name in names_sorted:
            for match in re.finditer(rf"\b{re.escape(name)}\b", lowered):
                span = match.span()
                if any(s < span[1] and span[0] < e for s, e in consumed):
                    continue
                consumed.append(span)
                mentioned.append((match.start(), name_to_id[name]))
        ordered = [rid for _, rid in sorted(mentioned)]
        deduped: list[str] = []
        for rid in ordered:
            if rid not in deduped:
                deduped.append(rid)
        if len(deduped) < 2:
            continue
        if any(phrase in lowered for phrase in _GROUP_PHRASES):
            flags.extend(_group_claim_flags(deduped, w))
        else:
            subject = deduped[0]
            for other in deduped[1:]:
                if other not in w.neighbors.get(subject, ()):
                    flags.append(tuple(sorted((subject, other))))
    unique: list[tuple[str, str]] = []
    for pair in flags:
        if pair not in unique:
            unique.append(pair)
    return unique


def _group_claim_flags(ids: list[str], w: SpatialWeights) -> list[tuple[str, str]]:
    """A set claimed contiguous must induce a connected adjacency subgraph;
    when it does not, every cross-component pair is flagged."""
    components: list[set[str]] = []
    remaining = set(ids)
    while remaining:
        start = remaining.pop()
        component = {start}
        stack = [start]
        while stack:
            current = stack.pop()
            for nbr in w.neighbors.get(current, ()):
                if nbr in remaining:
                    remaining.remove(nbr)
                    component.add(nbr)
                    stack.append(nbr)
        components.append(component)
    if len(components) <= 1:
        return []
    flags = []
    for i, comp_a in enumerate(components):
        for comp_b in components[i + 1 :]:
            for a in sorted(comp_a):
                for b in sorted(comp_b):
                    flags.append(tuple(sorted((a, b))))
    return flags
