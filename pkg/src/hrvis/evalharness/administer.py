"""Administering a rating scale to a persona-conditioned model endpoint.

The endpoint contract is a single JSON POST ``{model, prompt, image_base64,
max_tokens}`` answered by JSON with a ``text`` field. Configuration comes
from ``EVAL_ENDPOINT``, ``EVAL_TOKEN`` and ``EVAL_MODEL``. Offline runs read
canned label sets from a fixture file and never open a connection.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import re
import time
from datetime import datetime, timezone
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from ..errors import MissingItem, TransportError, UnknownLabel, UnparseableResponse
from .instruments import (
    LIKERT_LABELS,
    NA_LABEL,
    LikertAnswer,
    PersonaProfile,
    Scale,
    SubscaleScore,
    normalize_label,
    score_scale,
)

log = logging.getLogger(__name__)

MAX_PARSE_ATTEMPTS = 3
MAX_TRANSPORT_TRIES = 5
BACKOFF_BASE_S = 1.0
BACKOFF_FACTOR = 2.0
MAX_IN_FLIGHT = 2

REPAIR_INSTRUCTION = (
    "Your previous reply could not be parsed. Reply again with ONLY a JSON object "
    "mapping every item code to exactly one of the allowed labels, and nothing else."
)


@dataclass
class ScaleResponse:
    persona: str
    visualization: str
    scale: str
    answers: list[LikertAnswer]
    aggregates: dict[str, SubscaleScore]
    raw_output: str = ""
    transport: dict = field(default_factory=dict)

    def labels(self) -> dict[str, str]:
        return {a.code: a.label for a in self.answers}

    def to_json(self) -> dict:
        return {
            "persona": self.persona,
            "visualization": self.visualization,
            "scale": self.scale,
            "labels": self.labels(),
            "aggregates": {
                k: {"value": v.value, "na_flag": v.na_flag} for k, v in self.aggregates.items()
            },
            "raw_output": self.raw_output,
            "transport": self.transport,
        }

    @classmethod
    def from_json(cls, data: dict, scale: Scale) -> "ScaleResponse":
        answers = [LikertAnswer(c, l) for c, l in data["labels"].items()]
        return cls(
            data["persona"],
            data["visualization"],
            data["scale"],
            answers,
            score_scale(answers, scale),
            data.get("raw_output", ""),
            data.get("transport", {}),
        )


# --------------------------------------------------------------------------
# prompt and parsing


def build_prompt(persona: PersonaProfile, scale: Scale) -> str:
    items = "\n".join(f"{code}: {text}" for code, text in scale.items)
    allowed = ", ".join(f'"{l}"' for l in LIKERT_LABELS + (NA_LABEL,))
    example = ", ".join(f'"{code}": "<label>"' for code in scale.codes)
    return (
        "Adopt the following user persona and answer as this person would when "
        "looking at the attached visualization.\n\n"
        f"{persona.prompt_block()}\n\n"
        f"Rate the visualization on the {scale.name} scale. For each statement choose "
        f"exactly one label from: {allowed} "
        f'(use "{NA_LABEL}" for "I don\'t know / not applicable").\n\n'
        f"{items}\n\n"
        "Respond with a single JSON object keyed by item code and nothing else, e.g.\n"
        f"{{{example}}}"
    )


_JSON_OBJECT = re.compile(r"\{[^{}]*\}", re.S)


def parse_labels(text: str, scale: Scale) -> dict[str, str]:
    """Extract ``{code: label}`` from a model reply.

    Raises :class:`UnparseableResponse` when no usable JSON object is found
    and :class:`MissingItem` when one is found but lacks a scale item.
    """
    best: dict | None = None
    for m in _JSON_OBJECT.finditer(text or ""):
        try:
            obj = json.loads(m.group(0))
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict) and any(k in obj for k in scale.codes):
            best = obj
            break
    if best is None:
        raise UnparseableResponse(text)
    labels = {}
    for code in scale.codes:
        if code not in best:
            raise MissingItem(code)
        try:
            labels[code] = normalize_label(best[code])
        except UnknownLabel:
            raise UnparseableResponse(text, f"{code}: unknown label {best[code]!r}") from None
    return labels


# --------------------------------------------------------------------------
# transport


@dataclass
class EndpointConfig:
    url: str
    token: str = ""
    model: str = ""
    max_tokens: int = 1024
    timeout_s: float = 120.0

    @classmethod
    def from_env(cls, environ=None) -> "EndpointConfig":
        env = os.environ if environ is None else environ
        url = env.get("EVAL_ENDPOINT", "")
        if not url:
            raise TransportError("EVAL_ENDPOINT is not set")
        return cls(url=url, token=env.get("EVAL_TOKEN", ""), model=env.get("EVAL_MODEL", ""))


class EndpointClient:
    """Posts prompt + image; retries transport failures with exponential backoff."""

    def __init__(self, config: EndpointConfig, http: httpx.Client | None = None, sleep=None):
        self.config = config
        self.http = http or httpx.Client(timeout=config.timeout_s)
        self.sleep = sleep or time.sleep

    def complete(self, prompt: str, image_base64: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.config.token:
            headers["Authorization"] = f"Bearer {self.config.token}"
        body = {
            "model": self.config.model,
            "prompt": prompt,
            "image_base64": image_base64,
            "max_tokens": self.config.max_tokens,
        }
        delay = BACKOFF_BASE_S
        last: Exception | None = None
        for attempt in range(1, MAX_TRANSPORT_TRIES + 1):
            try:
                r = self.http.post(self.config.url, json=body, headers=headers)
                if r.status_code == 429 or r.status_code >= 500:
                    raise TransportError(f"HTTP {r.status_code}")
                if r.status_code >= 400:
                    # client errors will not improve on retry
                    raise TransportError(f"HTTP {r.status_code}: {r.text[:200]}")
                payload = r.json()
                if not isinstance(payload, dict) or not isinstance(payload.get("text"), str):
                    raise UnparseableResponse(r.text, "endpoint reply lacks a text field")
                return payload["text"]
            except (httpx.TransportError, TransportError) as exc:
                last = exc
                if isinstance(exc, TransportError) and str(exc).startswith("HTTP 4") and "429" not in str(exc):
                    raise
                if attempt == MAX_TRANSPORT_TRIES:
                    break
                log.warning("endpoint attempt %d failed (%s); retrying in %.0fs", attempt, exc, delay)
                self.sleep(delay)
                delay *= BACKOFF_FACTOR
        raise TransportError(f"endpoint failed after {MAX_TRANSPORT_TRIES} tries: {last}")


# --------------------------------------------------------------------------
# fixtures


def load_fixture(path) -> dict[tuple[str, str, str], dict[str, str]]:
    """Canned labels keyed by ``(persona, visualization, scale)``."""
    entries = json.loads(Path(path).read_text("utf-8"))
    return {(e["persona"], e["visualization"], e["scale"]): e["labels"] for e in entries}


# --------------------------------------------------------------------------
# administration


def administer(
    image,
    persona: PersonaProfile,
    scale: Scale,
    client: EndpointClient | None = None,
    fixture: dict | None = None,
    visualization: str | None = None,
) -> ScaleResponse:
    """Ask ``persona`` to rate ``image`` on ``scale``.

    With ``fixture`` set, labels come from the fixture and ``image`` may be
    None. Otherwise the reply is parsed, with up to two repair re-prompts.
    """
    vis = visualization or (Path(image).stem if image else "")
    if fixture is not None:
        key = (persona.id, vis, scale.id)
        if key not in fixture:
            raise MissingItem(f"fixture entry {key}")
        labels = fixture[key]
        for code in scale.codes:
            if code not in labels:
                raise MissingItem(code)
        answers = [LikertAnswer(code, labels[code]) for code in scale.codes]
        return ScaleResponse(
            persona.id,
            vis,
            scale.id,
            answers,
            score_scale(answers, scale),
            json.dumps(labels, sort_keys=True),
            {"mode": "offline"},
        )

    if client is None:
        raise TransportError("no endpoint client configured and no offline fixture given")
    image_b64 = base64.b64encode(Path(image).read_bytes()).decode("ascii")
    prompt = build_prompt(persona, scale)
    raw = ""
    error: Exception | None = None
    for attempt in range(MAX_PARSE_ATTEMPTS):
        text = prompt if attempt == 0 else f"{prompt}\n\n{REPAIR_INSTRUCTION}\nPrevious reply:\n{raw}"
        raw = client.complete(text, image_b64)
        try:
            labels = parse_labels(raw, scale)
        except (UnparseableResponse, MissingItem) as exc:
            error = exc
            continue
        answers = [LikertAnswer(code, labels[code]) for code in scale.codes]
        return ScaleResponse(
            persona.id,
            vis,
            scale.id,
            answers,
            score_scale(answers, scale),
            raw,
            {
                "mode": "endpoint",
                "model": client.config.model,
                "attempts": attempt + 1,
                "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            },
        )
    if isinstance(error, MissingItem):
        raise error
    raise UnparseableResponse(raw, f"no parseable labels after {MAX_PARSE_ATTEMPTS} attempts")


def administer_all(jobs, client=None, fixture=None, max_workers: int = MAX_IN_FLIGHT) -> list[ScaleResponse]:
    """Run ``(image, persona, scale, visualization)`` jobs, at most two in flight.

    Results come back in job order regardless of completion order.
    """
    jobs = list(jobs)
    if fixture is not None or max_workers <= 1:
        return [administer(img, p, s, client, fixture, v) for img, p, s, v in jobs]
    with ThreadPoolExecutor(max_workers=min(max_workers, MAX_IN_FLIGHT)) as pool:
        futures = [pool.submit(administer, img, p, s, client, None, v) for img, p, s, v in jobs]
        return [f.result() for f in futures]
