"""Utterance normalization and alias matching.

The deterministic stand-ins for language understanding live here: the
mock planner and the mock name/doc provider both match object aliases and
lead verbs by plain substring rules over punctuation-stripped text.
"""

from __future__ import annotations

import re

from .dsl import ObjectRef

_PUNCT_RE = re.compile(r"[^\w\s]|_")
_WS_RE = re.compile(r"\s+")

# Filler tokens skipped when hunting for the lead verb of an utterance and
# ignored when matching doc words.
STOPWORDS = frozenset(
    "a about an and are can could do for hey how i in into it its let lets me my "
    "next now of ok on or please robot should that the their them then this to us "
    "we what while will with would you your".split()
)


def normalize(text: str) -> str:
    """Lowercase, strip punctuation to spaces, collapse whitespace."""
    return _WS_RE.sub(" ", _PUNCT_RE.sub(" ", text.lower())).strip()


def tokens(text: str) -> list[str]:
    return normalize(text).split()


def lead_verb(text: str) -> str:
    """First non-filler token; the imperative verb in utterances like
    'Pack the Rice Krispies in the lunchbox'."""
    for tok in tokens(text):
        if tok not in STOPWORDS:
            return tok
    return ""


def _mention_position(utterance_norm: str, obj: ObjectRef) -> int | None:
    """Earliest character index at which the object is mentioned, or None."""
    best: int | None = None
    for phrase in (obj.display_name.lower(), *obj.aliases):
        needle = normalize(phrase)
        if not needle:
            continue
        idx = find_word_phrase(utterance_norm, needle)
        if idx >= 0 and (best is None or idx < best):
            best = idx
    return best


def find_word_phrase(haystack: str, needle: str) -> int:
    """Substring search that respects word boundaries on both ends."""
    start = 0
    while True:
        idx = haystack.find(needle, start)
        if idx < 0:
            return -1
        before_ok = idx == 0 or haystack[idx - 1] == " "
        end = idx + len(needle)
        after_ok = end == len(haystack) or haystack[end] == " "
        if before_ok and after_ok:
            return idx
        start = idx + 1


def align_utterance(utterance: str, objects: list[ObjectRef] | tuple[ObjectRef, ...]) -> set[str]:
    """Ids of the objects mentioned in the utterance (alias or display name
    appears as a whole-word phrase after punctuation stripping)."""
    norm = normalize(utterance)
    return {o.id for o in objects if _mention_position(norm, o) is not None}


def align_ordered(utterance: str, objects: list[ObjectRef] | tuple[ObjectRef, ...]) -> list[str]:
    """Mentioned object ids sorted by first mention position."""
    norm = normalize(utterance)
    hits = []
    for o in objects:
        pos = _mention_position(norm, o)
        if pos is not None:
            hits.append((pos, o.id))
    return [oid for _, oid in sorted(hits)]


def replace_mentions(utterance: str, objects: list[ObjectRef], replacement: str) -> str:
    """Replace each mention of the given objects (plus an immediately
    preceding article) in the utterance, preserving surrounding case."""
    phrases = sorted(
        {normalize(p) for o in objects for p in (o.display_name, *o.aliases) if normalize(p)},
        key=len,
        reverse=True,
    )
    out = utterance
    for phrase in phrases:
        flexible = r"[\s\-_']+".join(re.escape(w) for w in phrase.split())
        pattern = re.compile(r"(?:\b(?:the|a|an)\s+)?\b" + flexible + r"\b", re.IGNORECASE)
        out = pattern.sub(replacement, out)
    return _WS_RE.sub(" ", out).strip()
