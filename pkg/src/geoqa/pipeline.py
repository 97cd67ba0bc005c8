"""Staged query pipeline: input classification, deictic refinement, scope
assessment, and query-type classification with dispatch.

Every stage can consult the configured language-model client, but each one
also has a deterministic rule path used as the fallback (and as the default
when no model is configured), so the whole pipeline is reproducible offline.
Stage order is strict and non-reentrant; a turn flows one way through
input -> refine -> scope -> classify -> dispatch.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .analytics import AnalyticsError, FilterCondition, Scope, SortSpec
from .answers import (
    Answer,
    AnswerSource,
    capability_list,
    focus_announce,
    render_analytic,
    render_focus_change,
    render_pattern,
)
from .geodata import GeoDataset, Level, Region
from .lm import LanguageModelClient, LmError, load_prompt
from .navigation import FocusState
from .session import SessionState, Turn


class QueryClass(str, Enum):
    ACTION = "action"
    RETRIEVE = "retrieve"
    COMPARE = "compare"
    FIND_EXTREMUM = "find_extremum"
    AGGREGATE = "aggregate"
    FILTER = "filter"
    SORT = "sort"
    CLUSTER = "cluster"
    PATTERN = "pattern"
    OUTLIER = "outlier"
    LEGEND = "legend"
    SHAPE = "shape"
    SPATIAL_RELATIONSHIPS = "spatial_relationships"
    VISUALIZATION_KNOWLEDGE = "visualization_knowledge"
    GENERAL_KNOWLEDGE = "general_knowledge"
    UNSUPPORTED = "unsupported"


ANALYTICAL_KINDS = {
    QueryClass.RETRIEVE,
    QueryClass.COMPARE,
    QueryClass.FIND_EXTREMUM,
    QueryClass.AGGREGATE,
    QueryClass.FILTER,
    QueryClass.SORT,
    QueryClass.CLUSTER,
}
GEOSPATIAL_KINDS = {QueryClass.PATTERN, QueryClass.OUTLIER}
KNOWLEDGE_KINDS = {
    QueryClass.LEGEND,
    QueryClass.SHAPE,
    QueryClass.SPATIAL_RELATIONSHIPS,
    QueryClass.VISUALIZATION_KNOWLEDGE,
    QueryClass.GENERAL_KNOWLEDGE,
}


class InputKind(str, Enum):
    ACTION_COMMAND = "action_command"
    INFORMATION_QUERY = "information_query"


class ErrorLabel(str, Enum):
    INPUT_CLASSIFIER = "InputClassifier"
    QUERY_REFINER = "QueryRefiner"
    SCOPE_ASSESSOR = "ScopeAssessor"
    QUERY_PROCESSOR = "QueryProcessor"
    OTHER = "Other"


@dataclass(frozen=True)
class UserInput:
    text: str
    session_id: str
    timestamp: float = field(default_factory=time.time)

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("input text must be non-empty")


@dataclass(frozen=True)
class RefinedQuery:
    text: str
    raw_text: str
    resolved_location: Optional[str] = None  # region id
    resolved_topic: Optional[str] = None  # metric key
    refinement_applied: bool = False
    unresolved_deixis: bool = False
    note: str = ""


@dataclass(frozen=True)
class ScopeDecision:
    within_scope: bool
    rationale: str


DEICTIC_TOKENS = ("here", "this state", "this county", "it", "that", "its")

_ACTION_RE = re.compile(
    r"^\s*(please\s+)?(go|take (me|us)( back)?|navigate|focus|move|jump|switch|zoom)\b",
    re.IGNORECASE,
)

_NUMBER_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6,
    "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11, "twelve": 12,
}


def _normalize(text: str) -> str:
    text = text.lower().replace("'", "'")
    text = re.sub(r"[?!.]+\s*$", "", text.strip())
    return re.sub(r"\s+", " ", text)


def contains_deixis(text: str) -> bool:
    lowered = _normalize(text)
    return any(re.search(rf"\b{re.escape(tok)}\b", lowered) for tok in DEICTIC_TOKENS)


# ---------------------------------------------------------------------------
# mention extraction


@dataclass(frozen=True)
class Mentions:
    metric_keys: tuple[str, ...]
    region_ids: tuple[str, ...]  # in order of appearance


class MentionIndex:
    """Finds dataset metric and region mentions in free text.

    State names are matched longest-first with span consumption so that
    'Virginia' inside 'West Virginia' cannot double-match; counties match via
    an explicit 'X County' pattern or by name within a state context.
    """

    def __init__(self, dataset: GeoDataset):
        self.dataset = dataset
        self._metric_synonyms: list[tuple[str, str]] = []  # (synonym, key), longest first
        for metric in dataset.metrics:
            names = {metric.label.lower(), metric.key.lower()}
            names.update(s.lower() for s in getattr(metric, "synonyms", ()) or ())
            for name in names:
                if name:
                    self._metric_synonyms.append((name, metric.key))
        self._metric_synonyms.sort(key=lambda p: -len(p[0]))

        self._state_names: list[tuple[str, str]] = []  # (lowercased name, id)
        for region in dataset.regions_at(Level.STATE):
            self._state_names.append((region.name.lower(), region.id))
        self._state_names.sort(key=lambda p: -len(p[0]))
        self._postal = {
            alias: rid for alias, rid in dataset.aliases.items() if alias.isupper()
        }
        self._counties_by_state: dict[str, list[tuple[str, str]]] = {}
        for region in dataset.regions_at(Level.COUNTY):
            self._counties_by_state.setdefault(region.parent_id or "", []).append(
                (region.name.lower(), region.id)
            )
        for names in self._counties_by_state.values():
            names.sort(key=lambda p: -len(p[0]))

    def find_metrics(self, text: str) -> tuple[str, ...]:
        lowered = _normalize(text)
        found: list[tuple[int, str]] = []
        consumed: list[tuple[int, int]] = []
        for synonym, key in self._metric_synonyms:
            for match in re.finditer(rf"\b{re.escape(synonym)}s?\b", lowered):
                span = match.span()
                if any(s < span[1] and span[0] < e for s, e in consumed):
                    continue
                consumed.append(span)
                found.append((span[0], key))
        seen: list[str] = []
        for _, key in sorted(found):
            if key not in seen:
                seen.append(key)
        return tuple(seen)

    def find_regions(self, text: str, context_state: Optional[str] = None) -> tuple[str, ...]:
        lowered = _normalize(text)
        found: list[tuple[int, str]] = []
        consumed: list[tuple[int, int]] = []

        def claim(span: tuple[int, int]) -> bool:
            if any(s < span[1] and span[0] < e for s, e in consumed):
                return False
            consumed.append(span)
            return True

        # explicit "<name> county/parish" mentions first (letters incl. accents)
        county_pattern = re.compile(r"\b([a-zÀ-ɏ][a-zÀ-ɏ .'-]*?) (county|parish)\b")
        county_hits: list[tuple[int, str]] = []
        for match in county_pattern.finditer(lowered):
            county_hits.append((match.start(), match.group(1)))

        # states (and postal codes from the raw text)
        state_ids: list[tuple[int, str]] = []
        for name, rid in self._state_names:
            for match in re.finditer(rf"\b{re.escape(name)}\b", lowered):
                if claim(match.span()):
                    state_ids.append((match.start(), rid))
        for match in re.finditer(r"\b[A-Z]{2}\b", text):
            rid = self._postal.get(match.group(0))
            if rid is not None and claim(match.span()):
                state_ids.append((match.start(), rid))
        found.extend(state_ids)

        # resolve county names against mentioned states, then the context state
        context_states = [rid for _, rid in sorted(state_ids)]
        if context_state:
            context_states.append(context_state)
        for pos, raw_name in county_hits:
            target = raw_name.strip()
            resolved = self._resolve_county(target, context_states)
            if resolved:
                found.append((pos, resolved))

        # bare county names are matched only inside a known state context
        for sid in context_states:
            for name, rid in self._counties_by_state.get(sid, []):
                for match in re.finditer(rf"\b{re.escape(name)}\b", lowered):
                    if claim(match.span()):
                        found.append((match.start(), rid))

        ordered: list[str] = []
        for _, rid in sorted(found):
            if rid not in ordered:
                ordered.append(rid)
        return tuple(ordered)

    def _resolve_county(self, name: str, context_states: list[str]) -> Optional[str]:
        # prefer the narrowest match: longest-suffix of the captured phrase
        words = name.split()
        for start in range(len(words)):
            candidate = " ".join(words[start:])
            for sid in context_states:
                for cname, cid in self._counties_by_state.get(sid, []):
                    if cname == candidate:
                        return cid
            hits = [
                cid
                for names in self._counties_by_state.values()
                for cname, cid in names
                if cname == candidate
            ]
            if len(hits) == 1:
                return hits[0]
        return None

    def mentions(self, text: str, context_state: Optional[str] = None) -> Mentions:
        return Mentions(
            metric_keys=self.find_metrics(text),
            region_ids=self.find_regions(text, context_state),
        )


# ---------------------------------------------------------------------------
# stage 1: input classification


def classify_input_rules(text: str) -> InputKind:
    if _ACTION_RE.search(text):
        return InputKind.ACTION_COMMAND
    return InputKind.INFORMATION_QUERY


def classify_input(
    user_input: UserInput, lm: Optional[LanguageModelClient]
) -> tuple[InputKind, bool]:
    """Returns (kind, degraded) where degraded marks an LM failure fallback."""
    if lm is not None:
        try:
            reply = lm.submit([load_prompt("input_classifier"), user_input.text]).lower()
            if "action" in reply:
                return InputKind.ACTION_COMMAND, False
            if "information" in reply:
                return InputKind.INFORMATION_QUERY, False
        except LmError:
            return classify_input_rules(user_input.text), True
    return classify_input_rules(user_input.text), False


# ---------------------------------------------------------------------------
# stage 2: deictic refinement (rule-based by contract)


def refine_query(
    user_input: UserInput,
    session: SessionState,
    index: MentionIndex,
) -> RefinedQuery:
    """Resolve 'here'/'this state' style location deixis from the map focus and
    'it'/'that' topic deixis from recent history.

    A query with no deictic tokens always passes through byte-identical.
    """
    raw = user_input.text
    if not contains_deixis(raw):
        return RefinedQuery(text=raw, raw_text=raw)

    text = raw
    applied = False
    unresolved = False
    notes: list[str] = []
    resolved_location: Optional[str] = None
    resolved_topic: Optional[str] = None

    focus_region: Optional[Region] = None
    if session.focus is not None:
        focus_region = index.dataset.regions.get(session.focus.focused_id)
    if focus_region is None:
        recent = session.recent_region()
        if recent:
            focus_region = index.dataset.regions.get(recent)

    location_tokens = [
        ("this state", "{name}"),
        ("this county", "{name}"),
        ("here", "in {name}"),
        ("its", "{name}'s"),
    ]
    for token, template in location_tokens:
        pattern = re.compile(rf"\b{token}\b", re.IGNORECASE)
        if not pattern.search(text):
            continue
        if focus_region is None:
            unresolved = True
            notes.append(f"unresolved location reference {token!r}")
            continue
        text = pattern.sub(template.format(name=focus_region.name), text)
        resolved_location = focus_region.id
        applied = True

    # topic pronouns resolve only when the query names no metric itself
    if not index.find_metrics(text):
        topic_pattern = re.compile(r"\b(it|that)\b", re.IGNORECASE)
        if topic_pattern.search(text):
            recent_metric = session.recent_metric()
            if recent_metric and index.dataset.has_metric(recent_metric):
                label = index.dataset.metric(recent_metric).label
                text = topic_pattern.sub(label, text)
                resolved_topic = recent_metric
                applied = True
            else:
                unresolved = True
                notes.append("unresolved topic reference")

    return RefinedQuery(
        text=text,
        raw_text=raw,
        resolved_location=resolved_location,
        resolved_topic=resolved_topic,
        refinement_applied=applied,
        unresolved_deixis=unresolved,
        note="; ".join(notes),
    )


# ---------------------------------------------------------------------------
# stage 4 rules (needed by stage 3's fallback heuristic, defined first)

_RULES: list[tuple[QueryClass, re.Pattern]] = [
    (QueryClass.LEGEND, re.compile(r"\blegend\b|\bcolou?rs?\b.*\b(mean|represent|indicate)\b")),
    (
        QueryClass.UNSUPPORTED,
        re.compile(
            r"\b(highlight|recolou?r|colou?r|create|draw|plot|make)\b"
            r".*\b(map|maps|layer|chart|graph|visuali[sz]ation|dots?|states?|counties|bigger|smaller)\b"
        ),
    ),
    (QueryClass.PATTERN, re.compile(r"\bpatterns?\b|\btrends?\b|\bclustered\b|\bclusters?\b")),
    (QueryClass.OUTLIER, re.compile(r"\boutliers?\b|\banomal\w*\b")),
    (QueryClass.GENERAL_KNOWLEDGE, re.compile(r"^why\b")),
    (
        QueryClass.COMPARE,
        re.compile(
            r"\bcompare\b|\bcomparison\b|\bversus\b|\bvs\.?\b|\bdifference between\b"
            r"|\b(higher|lower|more|less|bigger|smaller|larger|denser)\b.*\bor\b"
        ),
    ),
    (QueryClass.SHAPE, re.compile(r"\bshapes?\b")),
    (
        QueryClass.SPATIAL_RELATIONSHIPS,
        re.compile(r"\b(neighbou?r\w*|adjacent|border\w*|next to|surround\w*|contiguous|touch\w*)\b"),
    ),
    (
        QueryClass.VISUALIZATION_KNOWLEDGE,
        re.compile(
            r"^(what('| i)?s?|what is|what are|define|explain)\b"
            r".*\b(choropleth|dot density|heat ?map|visuali[sz]ation|chart|graph|map)\b"
        ),
    ),
    (
        QueryClass.GENERAL_KNOWLEDGE,
        re.compile(r"^why\b|\brelationship between\b|\bcorrelat\w*\b|\bwhat causes\b"),
    ),
    (QueryClass.CLUSTER, re.compile(r"\bsimilar\b|\bcomparable\b|\bclose to\b")),
    (
        QueryClass.SORT,
        re.compile(
            r"\b(top|bottom|first|last)\s+(\d+|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve)\b"
            r"|\brank(ed|ing)?\b|\bsort(ed)?\b|\border (them|by)\b"
        ),
    ),
    (
        QueryClass.FILTER,
        re.compile(
            r"\b(higher|lower|greater|less|more|fewer|larger|smaller) than\b"
            r"|\b(over|above|under|below|at least|at most|between|exceed\w*)\b.*?\d"
            r"|\b(with|having|have|has) (higher|lower|greater|less|more|fewer)\b"
        ),
    ),
    (
        QueryClass.FIND_EXTREMUM,
        re.compile(
            r"\b(highest|lowest|most|least|largest|smallest|biggest|densest|max(imum)?|min(imum)?)\b"
        ),
    ),
    (
        QueryClass.AGGREGATE,
        re.compile(
            r"\b(average|mean|median|total|sum|standard deviation|std(ev|dev)?|variance)\b"
        ),
    ),
]

_RETRIEVE_HINT = re.compile(
    r"^(what('| i)?s?|what is|what are|how (many|much)|tell me|give me|show me)\b"
)
_CAPABILITY_RE = re.compile(r"\bwhat (else )?can you do\b|\bwhat do you (do|support)\b")


def classify_query_rules(
    refined: RefinedQuery, mentions: Mentions, has_region_context: bool
) -> QueryClass:
    """Ordered keyword/regex rules mirroring the supported query families."""
    lowered = _normalize(refined.text)
    if _ACTION_RE.search(lowered):
        return QueryClass.ACTION
    if _CAPABILITY_RE.search(lowered):
        return QueryClass.VISUALIZATION_KNOWLEDGE
    for kind, pattern in _RULES:
        if pattern.search(lowered):
            return kind
    has_region = bool(mentions.region_ids) or has_region_context
    if has_region and (mentions.metric_keys or refined.resolved_topic or _RETRIEVE_HINT.search(lowered)):
        return QueryClass.RETRIEVE
    if mentions.metric_keys and _RETRIEVE_HINT.search(lowered):
        return QueryClass.RETRIEVE
    return QueryClass.GENERAL_KNOWLEDGE


_LM_KIND_MAP = {
    "action": QueryClass.ACTION,
    "retrieve": QueryClass.RETRIEVE,
    "compare": QueryClass.COMPARE,
    "find extremum": QueryClass.FIND_EXTREMUM,
    "find_extremum": QueryClass.FIND_EXTREMUM,
    "extremum": QueryClass.FIND_EXTREMUM,
    "aggregate": QueryClass.AGGREGATE,
    "filter": QueryClass.FILTER,
    "sort": QueryClass.SORT,
    "cluster": QueryClass.CLUSTER,
    "pattern": QueryClass.PATTERN,
    "outlier": QueryClass.OUTLIER,
    "legend": QueryClass.LEGEND,
    "shape": QueryClass.SHAPE,
    "spatial relationships": QueryClass.SPATIAL_RELATIONSHIPS,
    "spatial_relationships": QueryClass.SPATIAL_RELATIONSHIPS,
    "visualization knowledge": QueryClass.VISUALIZATION_KNOWLEDGE,
    "visualization_knowledge": QueryClass.VISUALIZATION_KNOWLEDGE,
    "general knowledge": QueryClass.GENERAL_KNOWLEDGE,
    "general_knowledge": QueryClass.GENERAL_KNOWLEDGE,
    "unsupported": QueryClass.UNSUPPORTED,
    "others": QueryClass.UNSUPPORTED,
}


def classify_query(
    refined: RefinedQuery,
    lm: Optional[LanguageModelClient],
    mentions: Mentions,
    has_region_context: bool = False,
) -> tuple[QueryClass, bool]:
    if lm is not None:
        try:
            reply = lm.submit([load_prompt("query_processor"), refined.text]).strip().lower()
            for token, kind in _LM_KIND_MAP.items():
                if token in reply:
                    return kind, False
            return QueryClass.UNSUPPORTED, False
        except LmError:
            return classify_query_rules(refined, mentions, has_region_context), True
    return classify_query_rules(refined, mentions, has_region_context), False


# ---------------------------------------------------------------------------
# stage 3: scope assessment


def assess_scope_rules(
    refined: RefinedQuery, mentions: Mentions, has_region_context: bool
) -> ScopeDecision:
    kind = classify_query_rules(refined, mentions, has_region_context)
    if kind in GEOSPATIAL_KINDS:
        return ScopeDecision(True, f"{kind.value} queries run on local spatial statistics")
    if kind in ANALYTICAL_KINDS:
        if mentions.metric_keys or refined.resolved_topic:
            return ScopeDecision(True, "analytical query over a declared metric")
        return ScopeDecision(False, "analytical form but no declared metric mentioned")
    if kind is QueryClass.ACTION:
        return ScopeDecision(True, "map action")
    return ScopeDecision(False, f"{kind.value} routes to the knowledge path")


def assess_scope(
    refined: RefinedQuery,
    schema_text: str,
    lm: Optional[LanguageModelClient],
    mentions: Mentions,
    has_region_context: bool = False,
) -> tuple[ScopeDecision, bool]:
    if lm is not None:
        try:
            reply = lm.submit(
                [load_prompt("scope_assessor"), schema_text, refined.text]
            ).lower()
            if "out" in reply and "scope" in reply:
                return ScopeDecision(False, "language model: out of scope"), False
            if "scope" in reply or "yes" in reply:
                return ScopeDecision(True, "language model: within scope"), False
        except LmError:
            return assess_scope_rules(refined, mentions, has_region_context), True
    return assess_scope_rules(refined, mentions, has_region_context), False


# ---------------------------------------------------------------------------
# condition extraction for filter/sort


class ClarificationNeeded(Exception):
    """The query lacks a usable threshold or count."""


_COMPARATOR_PATTERNS: list[tuple[re.Pattern, str]] = [
    (re.compile(r"\bbetween\b"), "between"),
    (re.compile(r"\b(at least|no less than|or more|greater than or equal to)\b"), ">="),
    (re.compile(r"\b(at most|no more than|or fewer|or less|less than or equal to)\b"), "<="),
    (re.compile(r"\b(greater than|more than|over|above|higher than|larger than|exceed\w*)\b"), ">"),
    (re.compile(r"\b(less than|under|below|fewer than|lower than|smaller than)\b"), "<"),
    (re.compile(r"\b(exactly|equal to)\b"), "="),
]

_NUMBER_RE = re.compile(r"(\d[\d,]*\.?\d*)\s*%?")


def _numbers(text: str) -> list[float]:
    values = [float(m.group(1).replace(",", "")) for m in _NUMBER_RE.finditer(text)]
    for word, value in _NUMBER_WORDS.items():
        for _ in re.finditer(rf"\b{word}\b", text):
            values.append(float(value))
    return values


def extract_filter_condition(text: str) -> FilterCondition:
    lowered = _normalize(text)
    for pattern, comparator in _COMPARATOR_PATTERNS:
        match = pattern.search(lowered)
        if match is None:
            continue
        tail_numbers = _numbers(lowered[match.end():])
        if comparator == "between":
            if len(tail_numbers) >= 2:
                low, high = sorted(tail_numbers[:2])
                return FilterCondition("between", low, high)
            raise ClarificationNeeded("a range needs two numbers")
        if tail_numbers:
            return FilterCondition(comparator, tail_numbers[0])
    raise ClarificationNeeded("no numeric threshold found")


def extract_sort_spec(text: str, metric_key: str) -> SortSpec:
    lowered = _normalize(text)
    ascending = bool(re.search(r"\b(bottom|lowest|fewest|least|smallest|ascending)\b", lowered))
    match = re.search(
        r"\b(?:top|bottom|first|last)\s+(\d+|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve)\b",
        lowered,
    )
    limit: Optional[int] = None
    if match:
        token = match.group(1)
        limit = int(token) if token.isdigit() else _NUMBER_WORDS[token]
    elif re.search(r"\b(all|every)\b", lowered):
        limit = 10**9  # effectively unbounded; analytics clamps to the scope size
    if limit is None:
        raise ClarificationNeeded("no result count found")
    return SortSpec(metric_key=metric_key, order="asc" if ascending else "desc", limit=limit)


def extract_condition(
    refined: RefinedQuery,
    kind: QueryClass,
    metric_key: str,
    lm: Optional[LanguageModelClient],
) -> FilterCondition | SortSpec:
    """Structured condition for filter/sort queries (LM first, rules fallback)."""
    if lm is not None:
        try:
            reply = lm.submit([load_prompt("condition_extractor"), refined.text])
            parsed = _parse_lm_condition(reply, kind, metric_key)
            if parsed is not None:
                return parsed
        except LmError:
            pass
    if kind is QueryClass.FILTER:
        return extract_filter_condition(refined.text)
    return extract_sort_spec(refined.text, metric_key)


def _parse_lm_condition(reply: str, kind: QueryClass, metric_key: str):
    import json

    try:
        data = json.loads(reply.strip())
    except ValueError:
        return None
    if kind is QueryClass.FILTER and "comparator" in data:
        return FilterCondition(
            data["comparator"], float(data["threshold"]), data.get("threshold_high")
        )
    if kind is QueryClass.SORT and "limit" in data:
        return SortSpec(metric_key, data.get("order", "desc"), int(data["limit"]))
    return None


# ---------------------------------------------------------------------------
# end-to-end turn


@dataclass
class TraceRecord:
    """One per completed turn, labeled for error attribution."""

    session_id: str
    input_text: str
    input_kind: InputKind
    refined_text: str
    refinement_applied: bool
    within_scope: Optional[bool]
    scope_rationale: str
    kind: Optional[QueryClass]
    answered: bool
    error_label: Optional[ErrorLabel]
    degraded: bool
    adjacency_flags: tuple[tuple[str, str], ...]
    answer_source: str
    timestamp: float

    def to_json(self) -> dict:
        return {
            "session": self.session_id,
            "input": self.input_text,
            "stages": {
                "input_kind": self.input_kind.value,
                "refined_text": self.refined_text,
                "refinement_applied": self.refinement_applied,
                "within_scope": self.within_scope,
                "scope_rationale": self.scope_rationale,
            },
            "kind": self.kind.value if self.kind else None,
            "answered": self.answered,
            "error_label": self.error_label.value if self.error_label else None,
            "degraded": self.degraded,
            "adjacency_flags": [list(p) for p in self.adjacency_flags],
            "answer_source": self.answer_source,
            "timestamp": self.timestamp,
        }


_COUNTY_HINT = re.compile(r"\bcount(y|ies)\b")
_MIN_HINT = re.compile(r"\b(lowest|least|smallest|fewest|min(imum)?|sparsest)\b")
_STAT_HINTS: list[tuple[re.Pattern, str]] = [
    (re.compile(r"\b(standard deviation|std(ev|dev)?)\b"), "stddev"),
    (re.compile(r"\bmedian\b"), "median"),
    (re.compile(r"\b(total|sum)\b"), "sum"),
    (re.compile(r"\b(average|mean)\b"), "mean"),
    (re.compile(r"\bvariance\b"), "stddev"),
]


def _focus_state_id(session: SessionState) -> Optional[str]:
    if session.focus is None:
        return None
    return session.focus.focused_state_id


def _scope_for(text: str, mentions: Mentions, session: SessionState, dataset: GeoDataset) -> Scope:
    lowered = _normalize(text)
    if _COUNTY_HINT.search(lowered):
        parent = None
        for rid in mentions.region_ids:
            if dataset.regions[rid].level is Level.STATE:
                parent = rid
                break
        if parent is None:
            parent = _focus_state_id(session)
        return Scope(Level.COUNTY, parent)
    return Scope(Level.STATE)


def _pick_region(
    mentions: Mentions, refined: RefinedQuery, session: SessionState
) -> Optional[str]:
    if mentions.region_ids:
        return mentions.region_ids[0]
    if refined.resolved_location:
        return refined.resolved_location
    if session.focus is not None:
        return session.focus.focused_id
    return None


def _clarification(reason: str) -> Answer:
    return Answer(
        f"Could you be more specific? {reason}",
        announce="Clarification needed.",
    )


def _answer_analytical(
    kind: QueryClass,
    refined: RefinedQuery,
    mentions: Mentions,
    session: SessionState,
    engine,
) -> tuple[Answer, bool]:
    """Dispatch one analytical kind; returns (answer, answered)."""
    dataset: GeoDataset = engine.dataset
    metric_key = (
        mentions.metric_keys[0] if mentions.metric_keys else refined.resolved_topic
    )
    if metric_key is None:
        return _clarification("Which metric are you asking about?"), False
    lowered = _normalize(refined.text)
    scope = _scope_for(refined.text, mentions, session, dataset)

    if kind is QueryClass.RETRIEVE:
        region_id = _pick_region(mentions, refined, session)
        if region_id is None:
            return _clarification("Which state or county do you mean?"), False
        return render_analytic(engine.analytics.retrieve(region_id, metric_key), dataset), True

    if kind is QueryClass.COMPARE:
        region_ids = list(mentions.region_ids)
        context = refined.resolved_location or (
            session.focus.focused_id if session.focus else None
        )
        if len(region_ids) < 2 and context and context not in region_ids:
            region_ids.insert(0, context)
        if len(region_ids) < 2:
            return _clarification("Which regions should I compare?"), False
        return render_analytic(engine.analytics.compare(region_ids, metric_key), dataset), True

    if kind is QueryClass.FIND_EXTREMUM:
        direction = "min" if _MIN_HINT.search(lowered) else "max"
        result = engine.analytics.extremum(metric_key, direction, scope)
        return render_analytic(result, dataset), True

    if kind is QueryClass.AGGREGATE:
        statistic = "mean"
        for pattern, stat in _STAT_HINTS:
            if pattern.search(lowered):
                statistic = stat
                break
        result = engine.analytics.aggregate(metric_key, statistic, scope)
        return render_analytic(result, dataset), True

    if kind is QueryClass.FILTER:
        condition = extract_condition(refined, kind, metric_key, engine.lm)
        result = engine.analytics.filter(metric_key, condition, scope)
        return render_analytic(result, dataset), True

    if kind is QueryClass.SORT:
        spec = extract_condition(refined, kind, metric_key, engine.lm)
        result = engine.analytics.sort(spec, scope)
        return render_analytic(result, dataset), True

    if kind is QueryClass.CLUSTER:
        reference = _pick_region(mentions, refined, session)
        if reference is None:
            return _clarification("Similar to which region?"), False
        ref_region = dataset.regions[reference]
        ref_scope = (
            Scope(Level.COUNTY, ref_region.parent_id)
            if ref_region.level is Level.COUNTY
            else Scope(Level.STATE)
        )
        result = engine.analytics.similar(reference, metric_key, ref_scope)
        return render_analytic(result, dataset), True

    raise AnalyticsError(f"not an analytical kind: {kind}")


def _answer_geospatial(
    kind: QueryClass,
    refined: RefinedQuery,
    mentions: Mentions,
    session: SessionState,
    engine,
) -> tuple[Answer, bool]:
    dataset: GeoDataset = engine.dataset
    metric_key = (
        mentions.metric_keys[0]
        if mentions.metric_keys
        else refined.resolved_topic or engine.default_metric_key
    )
    scope = _scope_for(refined.text, mentions, session, dataset)
    if scope.level is Level.COUNTY and scope.parent_state_id is None:
        if session.focus is not None:
            scope = Scope(Level.COUNTY, session.focus.focused_state_id)
    summary = engine.pattern(metric_key, scope)
    return render_pattern(summary, dataset), True


def _handle_action(
    user_input: UserInput, session: SessionState, engine
) -> tuple[Answer, bool, Optional[str]]:
    """Map actions: go-to targets and zoom changes. Returns
    (answer, answered, focused region id)."""
    from .navigation import ZoomError, ZoomNotice, zoom_in, zoom_out

    dataset: GeoDataset = engine.dataset
    lowered = _normalize(user_input.text)

    if re.search(r"\bzoom (in|to count\w*)\b", lowered) or lowered.strip() == "zoom":
        focus = session.focus or engine.initial_focus()
        try:
            new_focus = zoom_in(focus, dataset)
        except ZoomError as exc:
            return Answer(str(exc), announce=str(exc)), False, None
        session.focus = new_focus
        return render_focus_change(new_focus, dataset), True, new_focus.focused_id
    if re.search(r"\bzoom (out|to state\w*)\b", lowered):
        focus = session.focus or engine.initial_focus()
        result = zoom_out(focus)
        if isinstance(result, ZoomNotice):
            return Answer(result.text, announce=result.text), True, None
        session.focus = result
        return render_focus_change(result, dataset), True, result.focused_id

    region_ids = engine.index.find_regions(user_input.text, _focus_state_id(session))
    county_ids = [rid for rid in region_ids if dataset.regions[rid].level is Level.COUNTY]
    target_id = county_ids[0] if county_ids else (region_ids[0] if region_ids else None)
    if target_id is None:
        return (
            Answer(
                "I couldn't find that place in this dataset; I know the loaded "
                "states and their counties.",
                announce="Place not found.",
            ),
            False,
            None,
        )
    target = dataset.regions[target_id]
    if target.level is Level.COUNTY:
        new_focus = FocusState(Level.COUNTY, target.id, target.parent_id)
    else:
        new_focus = FocusState(Level.STATE, target.id, target.id)
    session.focus = new_focus
    return render_focus_change(new_focus, dataset), True, target_id


def run_pipeline(user_input: UserInput, session: SessionState, engine) -> tuple[Answer, TraceRecord]:
    """One full turn: classify input, refine, assess scope, classify kind,
    dispatch, and log. Every non-empty input yields exactly one answer and
    one trace; stage failures degrade to apologetic capability messages."""
    from .knowledge import answer_knowledge, verify_adjacency_claims

    dataset: GeoDataset = engine.dataset
    degraded = False
    adjacency_flags: tuple[tuple[str, str], ...] = ()

    input_kind, lm_fell_back = classify_input(user_input, engine.lm)
    degraded = degraded or lm_fell_back

    if input_kind is InputKind.ACTION_COMMAND:
        answer, answered, focused = _handle_action(user_input, session, engine)
        session.append_turn(Turn("user", user_input.text, None, focused))
        session.append_turn(Turn("assistant", answer.text, None, focused))
        trace = TraceRecord(
            session_id=session.session_id,
            input_text=user_input.text,
            input_kind=input_kind,
            refined_text=user_input.text,
            refinement_applied=False,
            within_scope=True,
            scope_rationale="map action",
            kind=QueryClass.ACTION,
            answered=answered,
            error_label=None if answered else ErrorLabel.OTHER,
            degraded=degraded,
            adjacency_flags=(),
            answer_source=answer.source.value,
            timestamp=user_input.timestamp,
        )
        return answer, trace

    refined = refine_query(user_input, session, engine.index)
    mentions = engine.index.mentions(refined.text, _focus_state_id(session))
    has_region_context = session.focus is not None or bool(refined.resolved_location)

    if _CAPABILITY_RE.search(_normalize(refined.text)):
        answer = capability_list()
        kind: Optional[QueryClass] = QueryClass.VISUALIZATION_KNOWLEDGE
        scope = ScopeDecision(True, "capability question")
        answered = True
        error_label = None
    else:
        scope, scope_fell_back = assess_scope(
            refined, engine.schema_text, engine.lm, mentions, has_region_context
        )
        degraded = degraded or scope_fell_back
        kind, kind_fell_back = classify_query(refined, engine.lm, mentions, has_region_context)
        degraded = degraded or kind_fell_back

        answered = True
        error_label = None
        try:
            if kind is QueryClass.ACTION:
                answer, answered, _ = _handle_action(user_input, session, engine)
            elif kind is QueryClass.UNSUPPORTED:
                answer = Answer(
                    "That's beyond what I can do right now. " + capability_list().text,
                    announce="Request not supported.",
                )
                answered = False
                error_label = ErrorLabel.OTHER
            elif scope.within_scope and kind in ANALYTICAL_KINDS:
                answer, answered = _answer_analytical(kind, refined, mentions, session, engine)
                if not answered:
                    error_label = ErrorLabel.OTHER
            elif scope.within_scope and kind in GEOSPATIAL_KINDS:
                answer, answered = _answer_geospatial(kind, refined, mentions, session, engine)
            else:
                legend_payload = None
                if kind is QueryClass.LEGEND:
                    metric_key = (
                        mentions.metric_keys[0]
                        if mentions.metric_keys
                        else engine.default_metric_key
                    )
                    legend_payload = {
                        "metric": metric_key,
                        **engine.legend_payload().get(metric_key, {}),
                    }
                focus_region_id = None
                if kind in (QueryClass.SHAPE, QueryClass.SPATIAL_RELATIONSHIPS):
                    focus_region_id = _pick_region(mentions, refined, session)
                focus_context = None
                if session.focus is not None:
                    focus_context = dataset.regions[session.focus.focused_id].name
                answer, answered = answer_knowledge(
                    refined.text,
                    kind.value,
                    engine.lm,
                    engine.fixtures,
                    legend_payload=legend_payload,
                    focus_context=focus_context,
                    focus_region_id=focus_region_id,
                )
                if answered and engine.state_weights is not None:
                    adjacency_flags = tuple(
                        verify_adjacency_claims(answer.text, engine.state_weights, dataset)
                    )
                if not answered:
                    error_label = ErrorLabel.OTHER
        except ClarificationNeeded as exc:
            answer = _clarification(str(exc).capitalize() + ".")
            answered = False
            error_label = ErrorLabel.OTHER
        except AnalyticsError as exc:
            answer = Answer(f"I couldn't answer that from the data: {exc}.")
            answered = False
            error_label = ErrorLabel.QUERY_PROCESSOR
        except Exception:  # degrade loudly, never silently
            answer = Answer(
                "Sorry, something went wrong while answering that. "
                + capability_list().text
            )
            answered = False
            error_label = ErrorLabel.OTHER

    # focus follows single-region answers so "here" keeps meaning the map focus
    if answer.map_directive and answer.map_directive.focus:
        focused_region = dataset.regions[answer.map_directive.focus]
        if focused_region.level is Level.COUNTY:
            session.focus = FocusState(Level.COUNTY, focused_region.id, focused_region.parent_id)
        else:
            session.focus = FocusState(Level.STATE, focused_region.id, focused_region.id)

    metric_used = mentions.metric_keys[0] if mentions.metric_keys else refined.resolved_topic
    region_used = answer.map_directive.focus if answer.map_directive else (
        mentions.region_ids[0] if mentions.region_ids else None
    )
    session.append_turn(Turn("user", user_input.text, metric_used, region_used))
    session.append_turn(Turn("assistant", answer.text, metric_used, region_used))

    trace = TraceRecord(
        session_id=session.session_id,
        input_text=user_input.text,
        input_kind=input_kind,
        refined_text=refined.text,
        refinement_applied=refined.refinement_applied,
        within_scope=scope.within_scope,
        scope_rationale=scope.rationale,
        kind=kind,
        answered=answered,
        error_label=error_label,
        degraded=degraded,
        adjacency_flags=adjacency_flags,
        answer_source=answer.source.value,
        timestamp=user_input.timestamp,
    )
    return answer, trace
