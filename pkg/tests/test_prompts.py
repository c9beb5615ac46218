import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from propshape.errors import CountMismatch, EmptySlot, ParseError
from propshape.prompts import (DEFAULT_QUALITY_SUFFIX, PromptSpec,
                               PromptTemplate, TemplateKind, classify_prompt,
                               load_prompt_set, render_prompt,
                               save_prompt_set)

# Recorded user prompts with the template each was assigned. This fixture is
# the classifier's ground truth; rule changes must keep it at 27/27.
USER_PROMPT_FIXTURE = [
    ("Casper", TemplateKind.NOUN),
    ("A Casper ghost in smiling face", TemplateKind.NOUN_WITH_DESCRIPTION),
    ("Teddybear holding a rocket and spear weapon",
     TemplateKind.NOUN_PERFORMING_ACTION),
    ("Spaceship", TemplateKind.NOUN),
    ("Silver spaceship with sharp head and blue tail",
     TemplateKind.NOUN_WITH_DESCRIPTION),
    ("Eiffel Tower", TemplateKind.NOUN),
    ("Green Goblin from the original Spiderman movie",
     TemplateKind.NOUN_WITH_DESCRIPTION),
    ("Italian woman screaming bloody murder",
     TemplateKind.NOUN_PERFORMING_ACTION),
    ("Tin Foil", TemplateKind.NOUN),
    ("Sport car", TemplateKind.ADJECTIVE_NOUN),
    ("A cute shark child toy", TemplateKind.ADJECTIVE_NOUN),
    ("A cute shark doctor child toy", TemplateKind.ADJECTIVE_NOUN),
    ("Magician", TemplateKind.NOUN),
    ("A witch wearing a hat", TemplateKind.NOUN_PERFORMING_ACTION),
    ("A pink sheep", TemplateKind.ADJECTIVE_NOUN),
    ("A blue Smurfs wearing hats", TemplateKind.NOUN_PERFORMING_ACTION),
    ("A boy wearing a suit", TemplateKind.NOUN_PERFORMING_ACTION),
    ("Appleman", TemplateKind.NOUN),
    ("A cowboy barbie in all pink", TemplateKind.ADJECTIVE_NOUN),
    ("An alien from Jupyter with four eyes",
     TemplateKind.NOUN_WITH_DESCRIPTION),
    ("A VC jelly gummy in orange flavour", TemplateKind.ADJECTIVE_NOUN),
    ("Astronaut", TemplateKind.NOUN),
    ("Alien bear", TemplateKind.ADJECTIVE_NOUN),
    ("Peppa pig", TemplateKind.NOUN),
    ("Deadpool", TemplateKind.NOUN),
    ("SpongeBob", TemplateKind.NOUN),
    ("Kim Jong Un", TemplateKind.NOUN),
]


def test_fixture_has_27_prompts():
    assert len(USER_PROMPT_FIXTURE) == 27


@pytest.mark.parametrize("text,expected", USER_PROMPT_FIXTURE,
                         ids=[t for t, _ in USER_PROMPT_FIXTURE])
def test_classify_user_prompt_fixture(text, expected):
    assert classify_prompt(text) is expected


# -- rendering ---------------------------------------------------------------

def test_render_noun():
    spec = render_prompt(PromptTemplate.noun("Eiffel Tower"))
    assert spec.text == "Eiffel Tower"
    assert spec.kind is TemplateKind.NOUN


def test_render_adjective_noun():
    spec = render_prompt(PromptTemplate.adjective_noun("pink", "sheep"))
    assert spec.text == "A pink sheep"


def test_render_noun_performing_action():
    spec = render_prompt(
        PromptTemplate.noun_performing_action("witch", "wearing a hat"))
    assert spec.text == "A witch wearing a hat"


def test_render_noun_with_description():
    spec = render_prompt(
        PromptTemplate.noun_with_description("spaceship",
                                             "sharp head and blue tail"))
    assert spec.text == "A spaceship with sharp head and blue tail"


def test_render_uses_an_before_vowels():
    spec = render_prompt(PromptTemplate.adjective_noun("alien", "bear"))
    assert spec.text == "An alien bear"


def test_render_quality_suffix_after_comma():
    spec = render_prompt(PromptTemplate.noun("Spiderman toy"),
                         quality_suffix=DEFAULT_QUALITY_SUFFIX)
    assert spec.text == "Spiderman toy, 4K, high-quality, 8K resolution"
    assert spec.quality_suffix == DEFAULT_QUALITY_SUFFIX


def test_template_slot_validation():
    with pytest.raises(EmptySlot):
        PromptTemplate.noun("   ")
    with pytest.raises(ValueError):
        PromptTemplate(TemplateKind.NOUN_WITH_DESCRIPTION, {"noun": "x"})


def test_classify_rejects_empty():
    with pytest.raises(ValueError):
        classify_prompt("  ")


# -- render/classify round trip ----------------------------------------------

SAFE_NOUNS = st.sampled_from(["sheep", "castle", "rocket", "teapot", "shark"])
SAFE_ADJECTIVES = st.sampled_from(["pink", "blue", "cute", "shiny", "golden"])
SAFE_ACTIONS = st.sampled_from(
    ["wearing a hat", "holding a sword", "riding a horse"])
SAFE_DESCRIPTIONS = st.sampled_from(
    ["sharp teeth", "a golden crown", "two heads"])


@given(SAFE_NOUNS)
def test_roundtrip_noun(noun):
    assert classify_prompt(render_prompt(PromptTemplate.noun(noun)).text) \
        is TemplateKind.NOUN


@given(SAFE_ADJECTIVES, SAFE_NOUNS)
def test_roundtrip_adjective_noun(adj, noun):
    text = render_prompt(PromptTemplate.adjective_noun(adj, noun)).text
    assert classify_prompt(text) is TemplateKind.ADJECTIVE_NOUN


@given(SAFE_NOUNS, SAFE_ACTIONS)
def test_roundtrip_action(noun, action):
    text = render_prompt(
        PromptTemplate.noun_performing_action(noun, action)).text
    assert classify_prompt(text) is TemplateKind.NOUN_PERFORMING_ACTION


@given(SAFE_NOUNS, SAFE_DESCRIPTIONS)
def test_roundtrip_description(noun, description):
    text = render_prompt(
        PromptTemplate.noun_with_description(noun, description)).text
    assert classify_prompt(text) is TemplateKind.NOUN_WITH_DESCRIPTION


# -- manifests ----------------------------------------------------------------

def _write_manifest(tmp_path, rows, declared=None):
    lines = []
    if declared is not None:
        lines.append(f"# rows={declared}")
    lines.append("object_id,condition,template_kind,prompt")
    lines.extend(rows)
    path = tmp_path / "prompts.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_load_prompt_set_planned_counts(tmp_path):
    # 8 general prompts apply to all objects; 8 object-specific per object
    rows = [f"*,general,Noun,robot {i}" for i in range(8)]
    objects = [f"obj{k:02d}" for k in range(50)]
    for obj in objects:
        for i in range(8):
            rows.append(f"{obj},object_specific,Noun,{obj} variant {i}")
    path = _write_manifest(tmp_path, rows, declared=len(rows))
    specs = load_prompt_set(path)
    planned = sum(1 for obj in objects for s in specs
                  if s.object_id in ("*", obj))
    assert planned == 8 * 50 + 8 * 50 == 800


def test_load_prompt_set_empty_warns(tmp_path):
    path = _write_manifest(tmp_path, [])
    with pytest.warns(UserWarning):
        assert load_prompt_set(path) == []


def test_load_prompt_set_count_mismatch(tmp_path):
    rows = [f"*,general,Noun,prompt {i}" for i in range(9)]
    path = _write_manifest(tmp_path, rows, declared=10)
    with pytest.raises(CountMismatch):
        load_prompt_set(path)


def test_load_prompt_set_bad_kind(tmp_path):
    path = _write_manifest(tmp_path, ["*,general,Verb,hello"])
    with pytest.raises(ParseError):
        load_prompt_set(path)


def test_load_prompt_set_custom_condition_synonym(tmp_path):
    path = _write_manifest(tmp_path, ["a,custom,Noun,hello"])
    (spec,) = load_prompt_set(path)
    assert spec.condition == "object_specific"


def test_prompt_set_roundtrip(tmp_path):
    specs = [
        PromptSpec(text="toy robot", kind=TemplateKind.NOUN,
                   condition="general", object_id="*"),
        PromptSpec(text="A pink sheep", kind=TemplateKind.ADJECTIVE_NOUN,
                   condition="object_specific", object_id="cube"),
    ]
    path = tmp_path / "set.csv"
    save_prompt_set(specs, path)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        loaded = load_prompt_set(path)
    assert [(s.text, s.kind, s.condition, s.object_id) for s in loaded] \
        == [(s.text, s.kind, s.condition, s.object_id) for s in specs]
