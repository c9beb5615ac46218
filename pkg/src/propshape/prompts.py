"""The four-template prompt taxonomy: rendering, classification, manifests.

Templates: '[Noun]', '[Adjective] [Noun]', '[Noun] with [Description]',
'[Noun] [Performing Action]'. Classification is a shallow word-pattern
heuristic, not a parser; the bundled user-prompt fixture is its ground truth.
"""
from __future__ import annotations

import csv
import enum
import warnings
from dataclasses import dataclass
from pathlib import Path

from .errors import CountMismatch, EmptySlot, ParseError

DEFAULT_QUALITY_SUFFIX = "4K, high-quality, 8K resolution"

GENERAL_CONDITION = "general"
OBJECT_SPECIFIC_CONDITION = "object_specific"


class TemplateKind(enum.Enum):
    NOUN = "Noun"
    ADJECTIVE_NOUN = "AdjectiveNoun"
    NOUN_WITH_DESCRIPTION = "NounWithDescription"
    NOUN_PERFORMING_ACTION = "NounPerformingAction"


_SLOTS = {
    TemplateKind.NOUN: ("noun",),
    TemplateKind.ADJECTIVE_NOUN: ("adjective", "noun"),
    TemplateKind.NOUN_WITH_DESCRIPTION: ("noun", "description"),
    TemplateKind.NOUN_PERFORMING_ACTION: ("noun", "action"),
}

# Attributive words that mark the '[Adjective] [Noun]' template. Deliberately
# small: color/appearance/material words plus the attributive nouns users
# actually lead with. All-uppercase initialisms count as modifiers too.
ADJECTIVES = frozenset({
    "alien", "big", "black", "blue", "colorful", "cool", "copper", "cowboy",
    "cute", "fluffy", "futuristic", "giant", "golden", "gold", "green",
    "huge", "little", "metal", "metallic", "old", "orange", "pink", "purple",
    "red", "robotic", "shiny", "silver", "small", "sport", "sporty", "tiny",
    "white", "wooden", "yellow",
})

# Prepositions that end the leading noun phrase. " with "/" from " introduce
# a description outright; " in " only counts once adjective detection has had
# its chance (users write 'X in all pink' for colorways, not descriptions).
_STRONG_DESCRIPTION_MARKERS = ("with", "from")
_WEAK_DESCRIPTION_MARKERS = ("in", "of", "on")
_PREPOSITIONS = frozenset(_STRONG_DESCRIPTION_MARKERS + _WEAK_DESCRIPTION_MARKERS)
_ARTICLES = frozenset({"a", "an", "the"})


@dataclass(frozen=True)
class PromptTemplate:
    kind: TemplateKind
    slots: dict[str, str]

    def __post_init__(self):
        expected = _SLOTS[self.kind]
        if tuple(sorted(self.slots)) != tuple(sorted(expected)):
            raise ValueError(
                f"{self.kind.value} template needs slots {expected}, "
                f"got {tuple(sorted(self.slots))}")
        for name, value in self.slots.items():
            if not value or not value.strip():
                raise EmptySlot(f"slot {name!r} is empty")

    @classmethod
    def noun(cls, noun: str) -> "PromptTemplate":
        return cls(TemplateKind.NOUN, {"noun": noun})

    @classmethod
    def adjective_noun(cls, adjective: str, noun: str) -> "PromptTemplate":
        return cls(TemplateKind.ADJECTIVE_NOUN,
                   {"adjective": adjective, "noun": noun})

    @classmethod
    def noun_with_description(cls, noun: str, description: str) -> "PromptTemplate":
        return cls(TemplateKind.NOUN_WITH_DESCRIPTION,
                   {"noun": noun, "description": description})

    @classmethod
    def noun_performing_action(cls, noun: str, action: str) -> "PromptTemplate":
        return cls(TemplateKind.NOUN_PERFORMING_ACTION,
                   {"noun": noun, "action": action})


@dataclass(frozen=True)
class PromptSpec:
    """A concrete prompt string plus how it was built and grouped.

    object_id binds an object-specific prompt to one dataset object; "*"
    means the prompt applies to every object (the general set).
    """

    text: str
    kind: TemplateKind
    condition: str | None = None
    quality_suffix: str | None = None
    template: PromptTemplate | None = None
    object_id: str | None = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("prompt text must be nonempty")
        if self.condition is not None and self.condition not in (
                GENERAL_CONDITION, OBJECT_SPECIFIC_CONDITION):
            raise ValueError(f"unknown condition {self.condition!r}")


def _article(word: str) -> str:
    return "An" if word[:1].lower() in "aeiou" else "A"


def render_prompt(template: PromptTemplate,
                  quality_suffix: str | None = None) -> PromptSpec:
    """Deterministic text for a template; the suffix joins after a comma."""
    s = template.slots
    if template.kind is TemplateKind.NOUN:
        text = s["noun"]
    elif template.kind is TemplateKind.ADJECTIVE_NOUN:
        text = f"{_article(s['adjective'])} {s['adjective']} {s['noun']}"
    elif template.kind is TemplateKind.NOUN_WITH_DESCRIPTION:
        text = f"{_article(s['noun'])} {s['noun']} with {s['description']}"
    else:
        text = f"{_article(s['noun'])} {s['noun']} {s['action']}"
    if quality_suffix:
        text = f"{text}, {quality_suffix}"
    return PromptSpec(text=text, kind=template.kind, template=template,
                      quality_suffix=quality_suffix)


def _tokens(text: str) -> list[str]:
    return [t.strip(".,!?;:\"'()") for t in text.split()]


def _is_modifier(token: str) -> bool:
    if token.lower() in ADJECTIVES:
        return True
    return len(token) >= 2 and token.isalpha() and token.isupper()


def classify_prompt(text: str) -> TemplateKind:
    """Assign one of the four template kinds to free prompt text.

    Order of tests: a strong description marker (with/from) wins; then a
    progressive verb directly after the leading noun phrase; then a lexicon
    adjective (or initialism) heading the noun phrase; then a weak
    post-nominal marker (in/of/on); otherwise a bare noun.
    """
    if not text or not text.strip():
        raise ValueError("cannot classify empty text")
    toks = _tokens(text)
    lower = [t.lower() for t in toks]

    if any(t in _STRONG_DESCRIPTION_MARKERS for t in lower):
        return TemplateKind.NOUN_WITH_DESCRIPTION

    for i, tok in enumerate(lower):
        if tok.endswith("ing") and len(tok) > 4 and i > 0:
            if not any(prev in _PREPOSITIONS for prev in lower[:i]):
                return TemplateKind.NOUN_PERFORMING_ACTION
            break

    head = 1 if lower and lower[0] in _ARTICLES else 0
    if len(toks) > head + 1 and _is_modifier(toks[head]):
        return TemplateKind.ADJECTIVE_NOUN

    if len(toks) > 2 and any(t in _WEAK_DESCRIPTION_MARKERS for t in lower[1:]):
        return TemplateKind.NOUN_WITH_DESCRIPTION

    return TemplateKind.NOUN


def load_prompt_set(path) -> list[PromptSpec]:
    """Parse a prompt manifest CSV.

    Columns: object_id,condition,template_kind,prompt. An optional leading
    comment line '# rows=N' declares the expected row count; a mismatch is an
    error. An empty manifest is allowed but warns.
    """
    path = Path(path)
    declared: int | None = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if first.startswith("#"):
            for part in first.lstrip("#").split(","):
                key, _, value = part.strip().partition("=")
                if key == "rows":
                    try:
                        declared = int(value)
                    except ValueError as exc:
                        raise ParseError(f"bad rows declaration {value!r}") from exc
        else:
            fh.seek(0)
        reader = csv.DictReader(fh)
        required = {"object_id", "condition", "template_kind", "prompt"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ParseError(
                f"{path}: manifest header must contain {sorted(required)}")
        specs = []
        for row in reader:
            condition = row["condition"].strip()
            if condition == "custom":  # synonym used by the rating tooling
                condition = OBJECT_SPECIFIC_CONDITION
            try:
                kind = TemplateKind(row["template_kind"].strip())
            except ValueError as exc:
                raise ParseError(
                    f"{path}: unknown template_kind {row['template_kind']!r}"
                ) from exc
            specs.append(PromptSpec(text=row["prompt"], kind=kind,
                                    condition=condition,
                                    object_id=row["object_id"].strip() or "*"))
    if declared is not None and declared != len(specs):
        raise CountMismatch(
            f"{path}: header declares {declared} rows, found {len(specs)}")
    if not specs:
        warnings.warn(f"{path}: prompt manifest is empty", stacklevel=2)
    return specs


def save_prompt_set(specs: list[PromptSpec], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# rows={len(specs)}\n")
        writer = csv.writer(fh)
        writer.writerow(["object_id", "condition", "template_kind", "prompt"])
        for spec in specs:
            writer.writerow([spec.object_id or "*",
                             spec.condition or GENERAL_CONDITION,
                             spec.kind.value, spec.text])
