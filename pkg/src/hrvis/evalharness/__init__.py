"""Persona-based scale administration and score-table verification."""

from .administer import (
    EndpointClient,
    EndpointConfig,
    ScaleResponse,
    administer,
    administer_all,
    build_prompt,
    load_fixture,
    parse_labels,
)
from .instruments import (
    LIKERT_LABELS,
    NA_LABEL,
    VISUALIZATIONS,
    LikertAnswer,
    PersonaProfile,
    Scale,
    SubscaleScore,
    likert_label,
    likert_value,
    persona_generation_prompt,
    personas,
    printed_tables,
    round_half_away,
    scales,
    score_beauvis,
    score_previs,
    score_scale,
)
from .verify import CellCheck, VerificationReport, pearson, verify_tables

__all__ = [
    "CellCheck",
    "EndpointClient",
    "EndpointConfig",
    "LIKERT_LABELS",
    "LikertAnswer",
    "NA_LABEL",
    "PersonaProfile",
    "Scale",
    "ScaleResponse",
    "SubscaleScore",
    "VISUALIZATIONS",
    "VerificationReport",
    "administer",
    "administer_all",
    "build_prompt",
    "likert_label",
    "likert_value",
    "load_fixture",
    "parse_labels",
    "pearson",
    "persona_generation_prompt",
    "personas",
    "printed_tables",
    "round_half_away",
    "scales",
    "score_beauvis",
    "score_previs",
    "score_scale",
    "verify_tables",
]
