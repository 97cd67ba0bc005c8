"""Knowledge path: fixtures, prompts, and adjacency-claim verification."""

import pytest

from geoqa.answers import AnswerSource
from geoqa.knowledge import (
    answer_knowledge,
    build_prompt,
    load_fixtures,
    normalize_query,
    verify_adjacency_claims,
)
from geoqa.lm import StaticLanguageModel
from geoqa.pipeline import QueryClass, UserInput, run_pipeline
from geoqa.session import SessionState

from conftest import state_id


@pytest.fixture(scope="module")
def fixtures():
    return load_fixtures()


def test_florida_neighbors_fixture(us_engine, us_dataset):
    session = SessionState(session_id="k")
    answer, trace = run_pipeline(
        UserInput(text="What are Florida's neighboring states?", session_id="k"),
        session,
        us_engine,
    )
    assert trace.kind is QueryClass.SPATIAL_RELATIONSHIPS
    assert "Georgia" in answer.text and "Alabama" in answer.text
    assert answer.source is AnswerSource.LANGUAGE_MODEL
    assert answer.map_directive.focus == state_id(us_dataset, "Florida")
    assert trace.adjacency_flags == ()  # fixture states only true neighbors


def test_choropleth_definition_fixture(us_engine):
    session = SessionState(session_id="k2")
    answer, trace = run_pipeline(
        UserInput(text="What is a choropleth map?", session_id="k2"), session, us_engine
    )
    assert trace.kind is QueryClass.VISUALIZATION_KNOWLEDGE
    assert "choropleth" in answer.text.lower()
    assert answer.source is AnswerSource.LANGUAGE_MODEL


def test_shape_of_alabama_fixture(us_engine, us_dataset):
    session = SessionState(session_id="k3")
    answer, trace = run_pipeline(
        UserInput(text="What's the shape of Alabama?", session_id="k3"), session, us_engine
    )
    assert trace.kind is QueryClass.SHAPE
    assert "Alabama" in answer.text
    assert answer.map_directive.focus == state_id(us_dataset, "Alabama")


def test_degraded_answer_without_fixture_or_lm(fixtures):
    answer, answered = answer_knowledge(
        "What is the meaning of cartography?", "general_knowledge", None, fixtures
    )
    assert not answered
    assert "language model" in answer.text
    assert not any(ch.isdigit() for ch in answer.text)  # never fabricates numbers


def test_lm_path_passthrough(fixtures):
    lm = StaticLanguageModel(responses=["Canned model prose."])
    answer, answered = answer_knowledge("Anything at all?", "general_knowledge", lm, fixtures)
    assert answered
    assert answer.text == "Canned model prose."
    assert answer.source is AnswerSource.LANGUAGE_MODEL


def test_legend_prompt_requires_payload():
    with pytest.raises(ValueError):
        build_prompt("Tell me about the legend", "legend", None, None)
    prompt = build_prompt("Tell me about the legend", "legend", {"classes": []}, "Kansas")
    assert prompt.legend_payload is not None
    # non-legend kinds never carry a legend payload
    other = build_prompt("What shape is it?", "shape", {"classes": []}, None)
    assert other.legend_payload is None


def test_legend_query_runs_with_payload(us_engine):
    session = SessionState(session_id="kl")
    answer, trace = run_pipeline(
        UserInput(text="Can you tell me more about the legend?", session_id="kl"),
        session,
        us_engine,
    )
    assert trace.kind is QueryClass.LEGEND
    assert trace.answered
    assert "legend" in answer.text.lower()


def test_normalize_query():
    assert normalize_query("What's the Shape of Alabama?") == "what s the shape of alabama"


# -- adjacency-claim verification ------------------------------------------------


def test_group_contiguity_claim_flags_west_virginia(us_engine, us_dataset):
    text = (
        "Six contiguous states with low access are Mississippi, Arkansas, "
        "Louisiana, West Virginia, Kentucky, Alabama."
    )
    flags = verify_adjacency_claims(text, us_engine.state_weights, us_dataset)
    ms = state_id(us_dataset, "Mississippi")
    wv = state_id(us_dataset, "West Virginia")
    assert tuple(sorted((ms, wv))) in flags


def test_true_neighbor_list_has_no_flags(us_engine, us_dataset):
    text = "The neighboring states of Kansas are Nebraska, Missouri, Oklahoma, and Colorado."
    assert verify_adjacency_claims(text, us_engine.state_weights, us_dataset) == []


def test_pairwise_false_claim_flagged(us_engine, us_dataset):
    text = "Mississippi borders West Virginia."
    flags = verify_adjacency_claims(text, us_engine.state_weights, us_dataset)
    assert len(flags) == 1


def test_fewer_than_two_regions_no_flags(us_engine, us_dataset):
    assert (
        verify_adjacency_claims(
            "Kansas is adjacent to several states.", us_engine.state_weights, us_dataset
        )
        == []
    )


def test_sentences_without_adjacency_phrases_ignored(us_engine, us_dataset):
    text = "Mississippi and West Virginia both have beautiful rivers."
    assert verify_adjacency_claims(text, us_engine.state_weights, us_dataset) == []
