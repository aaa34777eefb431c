"""Natural-language terrain descriptions -> property levels.

Two interchangeable backends produce answers to the same prompt: an HTTP
chat-completion backend, and a deterministic rule oracle for offline and
test use. Both run through the identical build-prompt / parse-response
pipeline; only the completion call differs.

The answer grammar is strict: one ``<property>=<LEVEL>`` line per graded
property. Free-form prose around those lines is tolerated, a missing
property is an error, never a silent default.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field

import requests

from .errors import BackendError, ParseError
from .terrain import GRADED_PROPERTIES, PropertyLevel, PropertyLevels

# ---------------------------------------------------------------------------
# Prompt


@dataclass(frozen=True)
class TranslatorPrompt:
    """The five prompt sections, rendered in fixed order."""

    task_instruction: str
    property_definitions: str
    icl_examples: tuple[tuple[str, PropertyLevels], ...]
    input_description: str
    output_format: str

    def render(self) -> str:
        parts = [
            "## 1. Task\n" + self.task_instruction,
            "## 2. Terrain properties\n" + self.property_definitions,
            "## 3. Examples\n" + "\n\n".join(
                _render_icl_example(i + 1, desc, levels)
                for i, (desc, levels) in enumerate(self.icl_examples)
            ),
            "## 4. Input\n" + self.input_description,
            "## 5. Output format\n" + self.output_format,
        ]
        return "\n\n".join(parts) + "\n"


_TASK_INSTRUCTION = (
    "You grade terrains. Given a description of the ground a walking robot "
    "is about to cross, rate each physical property of the surface on a "
    "five-step scale by answering one multiple-choice question per property."
)

_PROPERTY_DEFINITIONS = (
    "restitution: how much of an impact bounces back. Rubber is high, wet soil is very low.\n"
    "friction: grip of the surface. Ice is very low, dry asphalt is high.\n"
    "stiffness: how hard the ground is. Concrete is very high, dry sand is very low.\n"
    "damping: how much the ground swallows motion energy. Mud is very high, a gym floor is low.\n"
    "Each property takes one of five grades: VERY_LOW, LOW, MEDIUM, HIGH, VERY_HIGH.\n"
    "If the description does not constrain a property, grade it MEDIUM."
)

_CHOICES = "A. VERY_LOW  B. LOW  C. MEDIUM  D. HIGH  E. VERY_HIGH"


def render_answer_lines(levels: PropertyLevels) -> str:
    """The strict answer grammar: one property=LEVEL line per property."""
    return "\n".join(
        f"{name}={getattr(levels, name).token}" for name in GRADED_PROPERTIES
    )


def _render_icl_example(index: int, description: str, levels: PropertyLevels) -> str:
    lines = [f"Example {index}:", f'Description: "{description}"']
    for q, name in enumerate(GRADED_PROPERTIES, start=1):
        lines.append(f"Q{q}. What is the {name} level? {_CHOICES}")
    lines.append("Answers:")
    lines.append(render_answer_lines(levels))
    return "\n".join(lines)


_OUTPUT_FORMAT = (
    "Answer the four questions for the input description. Reply with exactly "
    "four lines, nothing else:\n"
    "restitution=<LEVEL>\nfriction=<LEVEL>\nstiffness=<LEVEL>\ndamping=<LEVEL>\n"
    "where <LEVEL> is one of VERY_LOW, LOW, MEDIUM, HIGH, VERY_HIGH."
)

L = PropertyLevel
# Six stock examples spanning the extremes and the middle of the scale.
DEFAULT_ICL_LEVELS: tuple[PropertyLevels, ...] = (
    PropertyLevels(L.VERY_LOW, L.VERY_LOW, L.VERY_LOW, L.VERY_LOW),
    PropertyLevels(L.VERY_HIGH, L.VERY_HIGH, L.VERY_HIGH, L.VERY_HIGH),
    PropertyLevels(L.MEDIUM, L.MEDIUM, L.MEDIUM, L.MEDIUM),
    PropertyLevels(L.VERY_LOW, L.LOW, L.VERY_HIGH, L.VERY_LOW),
    PropertyLevels(L.HIGH, L.VERY_LOW, L.LOW, L.MEDIUM),
    PropertyLevels(L.LOW, L.HIGH, L.MEDIUM, L.VERY_HIGH),
)


def default_icl_examples() -> list[tuple[str, PropertyLevels]]:
    from .terrain import describe_low_level

    return [(describe_low_level(lv), lv) for lv in DEFAULT_ICL_LEVELS]


def build_prompt(
    description: str,
    icl_examples: list[tuple[str, PropertyLevels]] | None = None,
) -> TranslatorPrompt:
    """Assemble the five-section prompt for one description."""
    if not description or not description.strip():
        raise ValueError("description must be non-empty")
    if icl_examples is None:
        icl_examples = default_icl_examples()
    return TranslatorPrompt(
        task_instruction=_TASK_INSTRUCTION,
        property_definitions=_PROPERTY_DEFINITIONS,
        icl_examples=tuple(icl_examples),
        input_description=description,
        output_format=_OUTPUT_FORMAT,
    )


# ---------------------------------------------------------------------------
# Response parsing

_ANSWER_RE = re.compile(
    r"\b(restitution|friction|stiffness|damping)\s*=\s*"
    r"(VERY_LOW|VERY_HIGH|LOW|MEDIUM|HIGH)\b",
    re.IGNORECASE,
)


def parse_response(text: str) -> PropertyLevels:
    """Extract the four answer lines; prose around them is ignored and a
    later duplicate overrides an earlier one."""
    found: dict[str, PropertyLevel] = {}
    for m in _ANSWER_RE.finditer(text):
        found[m.group(1).lower()] = PropertyLevel.from_token(m.group(2))
    missing = [name for name in GRADED_PROPERTIES if name not in found]
    if missing:
        raise ParseError(missing)
    return PropertyLevels(**found)


# ---------------------------------------------------------------------------
# Rule oracle

_MODIFIER_LEVEL = {
    "no": L.VERY_LOW,
    "very low": L.VERY_LOW,
    "low": L.LOW,
    "medium": L.MEDIUM,
    "high": L.HIGH,
    "very high": L.VERY_HIGH,
}

_EXPLICIT_RE = re.compile(
    r"\b(no|very\s+low|very\s+high|low|medium|high)\s+"
    r"(restitution|friction|stiffness|damping)\b",
    re.IGNORECASE,
)

# Terrain nouns, applied in this order; a later rule overrides earlier ones
# on the properties it sets.
_NOUN_RULES: tuple[tuple[str, dict[str, PropertyLevel]], ...] = (
    (r"\bgrass\w*", {"stiffness": L.LOW}),
    (r"\bice\b|\bicy\b|\bsnow\b", {"friction": L.VERY_LOW, "restitution": L.LOW}),
    (r"\bsand\w*|\bbeach\w*", {"stiffness": L.VERY_LOW, "damping": L.VERY_HIGH}),
    (r"\bconcrete\b|\basphalt\b", {"stiffness": L.VERY_HIGH, "friction": L.HIGH}),
    (
        r"\brunning\s+tracks?\b|\brubber\w*",
        {"friction": L.VERY_HIGH, "restitution": L.HIGH, "stiffness": L.HIGH},
    ),
    (r"\bmountain\s+road\w*|\brock\w*", {"stiffness": L.VERY_HIGH, "friction": L.HIGH}),
)

# Weather adjusts properties that no explicit phrase pinned down. Shifts
# saturate at the ends of the scale; "snowy" pins friction outright.
_WEATHER_SHIFTS: tuple[tuple[str, dict[str, int]], ...] = (
    (r"\brain\w*|\bdrizzl\w*|\bwet\b|\bmoist\w*", {"friction": -1, "damping": +1}),
    (r"\bsun\b|\bsunny\b|\bsunshine\b|\bdry\b", {"friction": +1}),
)
_SNOWY_RE = r"\bsnowy\b"


def mock_translate(description: str) -> PropertyLevels:
    """Deterministic rule-table translation; total on any input text.

    Priority: explicit "<modifier> <property>" phrases, then terrain nouns,
    then weather shifts. Unconstrained properties default to MEDIUM.
    """
    text = description.lower()
    levels: dict[str, PropertyLevel] = {name: L.MEDIUM for name in GRADED_PROPERTIES}

    locked: set[str] = set()
    for m in _EXPLICIT_RE.finditer(text):
        modifier = re.sub(r"\s+", " ", m.group(1).lower())
        prop = m.group(2).lower()
        levels[prop] = _MODIFIER_LEVEL[modifier]
        locked.add(prop)

    for pattern, assignments in _NOUN_RULES:
        if re.search(pattern, text):
            for prop, level in assignments.items():
                if prop not in locked:
                    levels[prop] = level

    for pattern, shifts in _WEATHER_SHIFTS:
        if re.search(pattern, text):
            for prop, delta in shifts.items():
                if prop not in locked:
                    levels[prop] = levels[prop].shifted(delta)
    if re.search(_SNOWY_RE, text) and "friction" not in locked:
        levels["friction"] = L.VERY_LOW

    return PropertyLevels(**levels)


# ---------------------------------------------------------------------------
# Backends


@dataclass(frozen=True)
class BackendConfig:
    """Connection settings for a chat-completion-compatible service."""

    base_url: str
    model_name: str
    api_key_env_var: str = "CTXLOCO_API_KEY"
    timeout_ms: int = 30_000
    max_retries: int = 2
    temperature: float = 0.0

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


class MockBackend:
    """Answers the prompt with the rule oracle's rendered answer lines."""

    identity = "mock"
    max_retries = 0

    def complete(self, prompt: TranslatorPrompt) -> str:
        return render_answer_lines(mock_translate(prompt.input_description))


class HttpBackend:
    """Chat-completion client: POST <base_url>/chat/completions."""

    def __init__(self, config: BackendConfig, session: requests.Session | None = None):
        self.config = config
        api_key = os.environ.get(config.api_key_env_var)
        if not api_key:
            raise BackendError(
                f"API key environment variable {config.api_key_env_var!r} is not set"
            )
        self._api_key = api_key
        self._session = session or requests.Session()

    @property
    def identity(self) -> str:
        return f"llm:{self.config.model_name}@{self.config.base_url}"

    @property
    def max_retries(self) -> int:
        return self.config.max_retries

    def complete(self, prompt: TranslatorPrompt) -> str:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        body = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt.render()}],
            "temperature": self.config.temperature,
        }
        headers = {"Authorization": f"Bearer {self._api_key}"}
        try:
            resp = self._session.post(
                url, json=body, headers=headers, timeout=self.config.timeout_ms / 1000.0
            )
            resp.raise_for_status()
            payload = resp.json()
            return payload["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            raise BackendError(f"chat completion failed: {exc}") from exc


# ---------------------------------------------------------------------------
# Cache and the translate pipeline


class TranslationCache:
    """Disk-backed JSON map: (backend, normalized description) hash -> levels.

    Values are deterministic per key, so concurrent last-writer-wins
    rewrites are benign.
    """

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = os.fspath(path) if path is not None else None
        self._entries: dict[str, dict] = {}
        if self.path and os.path.exists(self.path):
            with open(self.path, "r", encoding="utf-8") as fh:
                self._entries = json.load(fh)

    def get(self, key: str) -> PropertyLevels | None:
        raw = self._entries.get(key)
        return PropertyLevels.from_dict(raw) if raw is not None else None

    def put(self, key: str, levels: PropertyLevels) -> None:
        self._entries[key] = levels.to_dict()
        if self.path:
            tmp = f"{self.path}.tmp.{os.getpid()}"
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(self._entries, fh, indent=1, sort_keys=True)
            os.replace(tmp, self.path)

    def __len__(self) -> int:
        return len(self._entries)


@dataclass(frozen=True)
class TranslationResult:
    levels: PropertyLevels
    raw_response: str
    backend: str
    latency_ms: float
    cached: bool


def normalize_description(description: str) -> str:
    return " ".join(description.split()).lower()


def cache_key(backend_identity: str, description: str) -> str:
    payload = f"{backend_identity}\n{normalize_description(description)}"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def translate(
    description: str,
    backend,
    cache: TranslationCache | None = None,
    max_retries: int | None = None,
    icl_examples: list[tuple[str, PropertyLevels]] | None = None,
) -> TranslationResult:
    """Full pipeline: prompt -> backend completion -> parsed levels.

    Transport failures and unparseable replies are retried up to
    ``max_retries`` times (default: the backend's own setting), then the
    last error propagates. Results are cached by (backend identity,
    normalized description); a hit skips the backend call entirely.
    """
    prompt = build_prompt(description, icl_examples)
    key = cache_key(backend.identity, description)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return TranslationResult(
                levels=hit,
                raw_response=render_answer_lines(hit),
                backend=backend.identity,
                latency_ms=0.0,
                cached=True,
            )

    retries = backend.max_retries if max_retries is None else max_retries
    start = time.monotonic()
    last_error: Exception | None = None
    for _ in range(retries + 1):
        try:
            raw = backend.complete(prompt)
            levels = parse_response(raw)
            break
        except (BackendError, ParseError) as exc:
            last_error = exc
    else:
        raise last_error  # type: ignore[misc]
    latency_ms = (time.monotonic() - start) * 1000.0

    if cache is not None:
        cache.put(key, levels)
    return TranslationResult(
        levels=levels,
        raw_response=raw,
        backend=backend.identity,
        latency_ms=latency_ms,
        cached=False,
    )
