"""Personas, rating scales, Likert coding and subscale scoring."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from functools import lru_cache
from importlib import resources

from ..errors import UnknownLabel, WrongItemSet

LIKERT_LABELS = (
    "Strongly disagree",
    "Disagree",
    "Slightly disagree",
    "Neutral",
    "Slightly agree",
    "Agree",
    "Strongly agree",
)
NA_LABEL = "NA"
_NA_ALIASES = {
    "na",
    "n/a",
    "not applicable",
    "i don't know",
    "i don’t know",
    "i don't know/not applicable",
    "i don’t know/not applicable",
    "don't know",
}
_BY_LOWER = {label.lower(): label for label in LIKERT_LABELS}
VLAT_LEVELS = ("high", "moderate_high", "moderate", "low")
VISUALIZATIONS = ("heatmap", "recurrence", "spectrogram", "poincare", "tsne")


def _load(name: str):
    return json.loads(resources.files(__package__).joinpath("data", name).read_text("utf-8"))


# --------------------------------------------------------------------------
# Likert coding


def normalize_label(label: str) -> str:
    """Canonical label text; raises :class:`UnknownLabel` for anything else."""
    key = " ".join(str(label).strip().lower().split())
    if key in _BY_LOWER:
        return _BY_LOWER[key]
    if key in _NA_ALIASES:
        return NA_LABEL
    raise UnknownLabel(f"unknown Likert label {label!r}")


def likert_value(label: str) -> int | None:
    """Strongly disagree -> 1 ... Strongly agree -> 7; NA -> None."""
    canon = normalize_label(label)
    return None if canon == NA_LABEL else LIKERT_LABELS.index(canon) + 1


def likert_label(value: int) -> str:
    if not 1 <= value <= 7:
        raise UnknownLabel(f"no label for value {value}")
    return LIKERT_LABELS[value - 1]


@dataclass(frozen=True)
class LikertAnswer:
    code: str
    label: str

    def __post_init__(self):
        object.__setattr__(self, "label", normalize_label(self.label))

    @property
    def numeric(self) -> int | None:
        return likert_value(self.label)


def round_half_away(value: Fraction, places: int = 1) -> float:
    q = Decimal(value.numerator) / Decimal(value.denominator)
    return float(q.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP))


# --------------------------------------------------------------------------
# scales and personas


@dataclass(frozen=True)
class Scale:
    id: str
    name: str
    items: tuple[tuple[str, str], ...]
    subscales: dict[str, tuple[str, ...]]

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(code for code, _ in self.items)


@dataclass(frozen=True)
class PersonaProfile:
    id: str
    name: str
    vlat_level: str
    demographics: str
    mini_vlat: str
    goals: tuple[str, ...] = field(default_factory=tuple)
    challenges: tuple[str, ...] = field(default_factory=tuple)
    preferences: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.vlat_level not in VLAT_LEVELS:
            raise ValueError(f"vlat_level must be one of {VLAT_LEVELS}")

    def prompt_block(self) -> str:
        def bullets(items):
            return "\n".join(f"- {s}" for s in items)

        return (
            f"Persona: {self.name}\n"
            f"Demographics: {self.demographics}\n"
            f"Mini-VLAT level: {self.mini_vlat}\n"
            f"Context & goals:\n{bullets(self.goals)}\n"
            f"Challenges:\n{bullets(self.challenges)}\n"
            f"Preferred visualizations:\n{bullets(self.preferences)}"
        )


@lru_cache(maxsize=None)
def scales() -> dict[str, Scale]:
    out = {}
    for sid, raw in _load("scales.json").items():
        out[sid] = Scale(
            sid,
            raw["name"],
            tuple((c, t) for c, t in raw["items"]),
            {k: tuple(v) for k, v in raw["subscales"].items()},
        )
    return out


@lru_cache(maxsize=None)
def personas() -> dict[str, PersonaProfile]:
    out = {}
    for raw in _load("personas.json"):
        out[raw["id"]] = PersonaProfile(
            raw["id"],
            raw["name"],
            raw["vlat_level"],
            raw["demographics"],
            raw["mini_vlat"],
            tuple(raw["goals"]),
            tuple(raw["challenges"]),
            tuple(raw["preferences"]),
        )
    return out


def persona_generation_prompt() -> str:
    """Template for regenerating personas with a language model."""
    return resources.files(__package__).joinpath("data", "persona_prompt.txt").read_text("utf-8")


def printed_tables() -> dict:
    return _load("printed_tables.json")


# --------------------------------------------------------------------------
# scoring


@dataclass(frozen=True)
class SubscaleScore:
    value: float | None  # None when every item is NA
    na_flag: bool  # at least one constituent item was NA

    def display(self) -> str:
        text = "N/A" if self.value is None else f"{self.value:.1f}"
        return text + ("*" if self.na_flag else "")


def _as_answers(answers) -> dict[str, LikertAnswer]:
    if isinstance(answers, dict):
        answers = [LikertAnswer(c, l) for c, l in answers.items()]
    out = {}
    for a in answers:
        if a.code in out:
            raise WrongItemSet(f"duplicate item {a.code}")
        out[a.code] = a
    return out


def _check(answers: dict[str, LikertAnswer], scale: Scale) -> None:
    if set(answers) != set(scale.codes):
        missing = sorted(set(scale.codes) - set(answers))
        extra = sorted(set(answers) - set(scale.codes))
        raise WrongItemSet(f"{scale.name}: missing {missing}, unexpected {extra}")


def subscale_mean(answers: dict[str, LikertAnswer], codes) -> SubscaleScore:
    values = [answers[c].numeric for c in codes]
    present = [v for v in values if v is not None]
    na = len(present) < len(values)
    if not present:
        return SubscaleScore(None, na)
    return SubscaleScore(round_half_away(Fraction(sum(present), len(present))), na)


def score_scale(answers, scale: Scale) -> dict[str, SubscaleScore]:
    answers = _as_answers(answers)
    _check(answers, scale)
    return {name: subscale_mean(answers, codes) for name, codes in scale.subscales.items()}


def score_beauvis(answers) -> float | None:
    """Mean of BV1-BV5 (NA items excluded), rounded half away from zero to 0.1."""
    return score_scale(answers, scales()["beauvis"])["BeauVis"].value


def score_previs(answers) -> dict[str, SubscaleScore]:
    """Understand, Layout, DataRead and DataFeat means from PV1-PV11."""
    return score_scale(answers, scales()["previs"])
