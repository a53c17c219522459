"""Turn a free-text query into a place name and then coordinates.

Two extraction backends share one contract: an LLM-backed one (abstract
client, scripted fakes in tests) and an offline gazetteer matcher that
fuzzy-matches query tokens and bigrams against known names, falling back to
capitalized proper-noun runs for names outside the gazetteer (so fictional
or unknown places are still extracted and fail later, at geocoding).

Geocoding likewise has a gazetteer backend and a Nominatim-compatible HTTP
client; both return the first/highest-ranked match only.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .errors import (
    BackendUnavailable,
    InvalidInput,
    NoLocationFound,
    NotFound,
    ServiceError,
)
from .raster_geo import GeoPoint

_TOKEN_RE = re.compile(r"[^\W\d_]+(?:'[^\W\d_]+)?", re.UNICODE)

# Words that are often capitalized mid-query but are never place names.
_HEURISTIC_STOPWORDS = {
    "flood", "floods", "flooding", "situation", "status", "risk", "alert",
    "alerts", "tsunami", "weather", "forecast", "storm", "rain", "rainfall",
    "water", "river", "level", "levels", "coast", "city", "region", "area",
    "the", "what", "is", "in", "near", "for", "of", "at", "around", "about",
    "current", "latest", "show", "me", "give", "check", "please", "update",
}


@dataclass(frozen=True)
class LocationCandidate:
    name: str
    confidence: float
    method: str  # "llm" | "gazetteer"

    def __post_init__(self):
        if not self.name:
            raise InvalidInput("candidate name must be non-empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidInput(f"confidence {self.confidence} outside [0, 1]")
        if self.method not in ("llm", "gazetteer"):
            raise InvalidInput(f"unknown extraction method {self.method!r}")


@dataclass(frozen=True)
class GazetteerEntry:
    canonical_name: str
    aliases: tuple[str, ...]
    point: GeoPoint


class Gazetteer:
    """Immutable name -> coordinates lookup loaded from JSON-lines."""

    def __init__(self, entries: list[GazetteerEntry]):
        seen = set()
        for e in entries:
            key = e.canonical_name.lower()
            if key in seen:
                raise InvalidInput(f"duplicate gazetteer name {e.canonical_name!r}")
            seen.add(key)
        self.entries = tuple(entries)
        self._by_name: dict[str, GazetteerEntry] = {}
        for e in entries:
            self._by_name[e.canonical_name.lower()] = e
            for alias in e.aliases:
                self._by_name.setdefault(alias.lower(), e)

    @classmethod
    def load(cls, path) -> "Gazetteer":
        entries = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            entries.append(
                GazetteerEntry(
                    canonical_name=obj["name"],
                    aliases=tuple(obj.get("aliases", [])),
                    point=GeoPoint(float(obj["lat"]), float(obj["lon"])),
                )
            )
        return cls(entries)

    def lookup(self, name: str) -> GazetteerEntry | None:
        return self._by_name.get(name.lower())

    def known_names(self) -> list[tuple[str, GazetteerEntry]]:
        """(matchable name, entry) pairs covering canonical names and aliases."""
        out = []
        for e in self.entries:
            out.append((e.canonical_name, e))
            for alias in e.aliases:
                out.append((alias, e))
        return out


def edit_distance(a: str, b: str) -> int:
    """Plain Levenshtein distance."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _fuzzy_accepts(token: str, name: str) -> tuple[bool, float]:
    """Accept when distance <= ceil(len/3) of the longer string; the score
    is the normalized distance (0 = exact)."""
    d = edit_distance(token.lower(), name.lower())
    longest = max(len(token), len(name))
    if longest == 0:
        return False, 1.0
    return d <= math.ceil(longest / 3), d / longest


def _ngrams(tokens: list[str], n: int) -> list[str]:
    return [" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


@dataclass(frozen=True)
class GazetteerExtractor:
    """Offline extraction: fuzzy gazetteer match, then proper-noun fallback."""

    gazetteer: Gazetteer

    def extract(self, text: str) -> LocationCandidate:
        tokens = _TOKEN_RE.findall(text)
        if not tokens:
            raise NoLocationFound("query contains no words")
        grams = _ngrams(tokens, 1) + _ngrams(tokens, 2)
        best: tuple[float, int, str] | None = None  # (score, -len, canonical)
        for gram in grams:
            for known, entry in self.gazetteer.known_names():
                ok, score = _fuzzy_accepts(gram, known)
                if not ok:
                    continue
                key = (score, -len(entry.canonical_name), entry.canonical_name)
                if best is None or key < best:
                    best = key
        if best is not None:
            score, _, canonical = best
            return LocationCandidate(
                name=canonical, confidence=1.0 - score, method="gazetteer"
            )
        fallback = self._proper_noun_run(tokens)
        if fallback is not None:
            return LocationCandidate(name=fallback, confidence=0.5, method="gazetteer")
        raise NoLocationFound(f"no place name recognized in {text!r}")

    def _proper_noun_run(self, tokens: list[str]) -> str | None:
        """Last run of capitalized tokens that survives the stopword filter,
        skipping the sentence-initial word."""
        runs: list[list[str]] = []
        current: list[str] = []
        for i, tok in enumerate(tokens):
            capitalized = tok[0].isupper() and i > 0
            if capitalized and tok.lower() not in _HEURISTIC_STOPWORDS:
                current.append(tok)
            else:
                if current:
                    runs.append(current)
                current = []
        if current:
            runs.append(current)
        if not runs:
            return None
        return " ".join(runs[-1])


LLM_SYSTEM_PROMPT = (
    "You extract place names. Reply with the single most likely place name "
    "mentioned or implied by the user's message, corrected for spelling, as "
    "plain text with no punctuation. If there is no place name, reply NONE."
)


@dataclass(frozen=True)
class LLMExtractor:
    """Extraction through a chat-completion client.

    The client exposes complete(system, user) -> str; any exception it
    raises surfaces as BackendUnavailable.
    """

    client: object
    method: str = field(default="llm", init=False)

    def extract(self, text: str) -> LocationCandidate:
        try:
            reply = self.client.complete(LLM_SYSTEM_PROMPT, text)
        except Exception as exc:
            raise BackendUnavailable(f"LLM client failed: {exc}") from exc
        name = (reply or "").strip()
        if not name or name.upper() == "NONE":
            raise NoLocationFound(f"no place name recognized in {text!r}")
        return LocationCandidate(name=name, confidence=1.0, method="llm")


def extract_location(text: str, extractor) -> LocationCandidate:
    if not text or not text.strip():
        raise InvalidInput("query text must be non-empty")
    return extractor.extract(text)


@dataclass(frozen=True)
class GazetteerGeocoder:
    """Offline geocoding against the loaded gazetteer."""

    gazetteer: Gazetteer

    def geocode(self, name: str) -> GeoPoint:
        entry = self.gazetteer.lookup(name)
        if entry is None:
            raise NotFound(f"no coordinates for {name!r}")
        return entry.point


class NominatimClient:
    """Minimal search client: GET <base>/search?q=<name>&format=json and take
    the first result's lat/lon."""

    def __init__(self, base_url: str, client: httpx.Client | None = None, timeout=10.0):
        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=timeout)

    def geocode(self, name: str) -> GeoPoint:
        try:
            resp = self._client.get(
                f"{self.base_url}/search", params={"q": name, "format": "json"}
            )
            resp.raise_for_status()
            results = resp.json()
        except httpx.HTTPError as exc:
            raise ServiceError(f"geocoding request failed: {exc}") from exc
        except ValueError as exc:
            raise ServiceError(f"geocoding response was not JSON: {exc}") from exc
        if not isinstance(results, list) or not results:
            raise NotFound(f"no coordinates for {name!r}")
        first = results[0]
        try:
            return GeoPoint(float(first["lat"]), float(first["lon"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceError(f"malformed geocoding result: {exc}") from exc


def geocode(name: str, client) -> GeoPoint:
    if not name or not name.strip():
        raise InvalidInput("place name must be non-empty")
    return client.geocode(name)


# ---------------------------------------------------------------------------
# interface evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InterfaceCase:
    """One evaluation query.

    ``expected`` is the name the extractor should produce, or None when the
    query contains no location. ``geocodable`` records whether that name
    resolves to coordinates, so fictional places score as geocoding failures
    without penalizing a correct extraction.
    """

    query: str
    expected: str | None
    geocodable: bool = True


@dataclass(frozen=True)
class InterfaceReport:
    extraction_accuracy: float
    geocoding_success_rate: float
    error_rate: float

    def __post_init__(self):
        for name in ("extraction_accuracy", "geocoding_success_rate", "error_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidInput(f"{name} outside [0, 1]")


def load_interface_cases(path) -> list[InterfaceCase]:
    cases = []
    for obj in json.loads(Path(path).read_text(encoding="utf-8")):
        cases.append(
            InterfaceCase(
                query=obj["query"],
                expected=obj.get("expected"),
                geocodable=bool(obj.get("geocodable", True)),
            )
        )
    return cases


def evaluate_interface(
    cases: list[InterfaceCase], extractor, client
) -> InterfaceReport:
    """Score extraction and geocoding over a case list.

    extraction_accuracy counts queries whose extraction outcome matches the
    expectation (right name, or no-location for location-free queries).
    geocoding_success_rate is geocoded / extraction successes. error_rate
    counts wrong names that nevertheless geocoded, plus any failure on a
    case whose expected name should geocode. Failures are tallied, never
    raised.
    """
    if not cases:
        raise InvalidInput("need at least one case")
    total = len(cases)
    correct_extractions = 0
    extraction_successes = 0
    geocoded = 0
    errors = 0
    for case in cases:
        name: str | None = None
        try:
            name = extract_location(case.query, extractor).name
        except (NoLocationFound, BackendUnavailable, InvalidInput):
            name = None
        point = None
        if name is not None:
            extraction_successes += 1
            try:
                point = geocode(name, client)
            except (NotFound, ServiceError, InvalidInput):
                point = None
            if point is not None:
                geocoded += 1
        name_correct = (
            case.expected is not None
            and name is not None
            and name.lower() == case.expected.lower()
        )
        if case.expected is None:
            if name is None:
                correct_extractions += 1
            elif point is not None:
                errors += 1  # invented a location and geocoded it
        else:
            if name_correct:
                correct_extractions += 1
            if case.geocodable:
                # should have ended with coordinates of the expected name
                if not name_correct or point is None:
                    errors += 1
            else:
                # expected to stop at geocoding; geocoding a wrong name is
                # still an error
                if not name_correct and point is not None:
                    errors += 1
    rate = geocoded / extraction_successes if extraction_successes else 0.0
    return InterfaceReport(
        extraction_accuracy=correct_extractions / total,
        geocoding_success_rate=rate,
        error_rate=errors / total,
    )
