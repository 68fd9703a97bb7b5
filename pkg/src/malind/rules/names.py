"""Text and name heuristics for the metadata rules."""

from __future__ import annotations

import re
from typing import Iterable, Optional

from rapidfuzz.distance import DamerauLevenshtein

_WORD = re.compile(r"[A-Za-z]+")

# visually confusable characters -> the ASCII letters they imitate
HOMOGLYPHS: dict[str, tuple[str, ...]] = {
    "0": ("o",), "1": ("l", "i"), "3": ("e",), "4": ("a",), "5": ("s",), "7": ("t",), "8": ("b",),
    "9": ("g",), "l": ("i", "1"), "i": ("l", "1"), "o": ("0",),
    "а": ("a",), "е": ("e",), "о": ("o",), "р": ("p",), "с": ("c",),
    "х": ("x",), "у": ("y",), "і": ("i",), "ѕ": ("s",), "ԁ": ("d",),
}
MULTI_GLYPHS = {"rn": "m", "vv": "w", "cl": "d", "nn": "m"}


def normalize_name(name: str) -> str:
    return re.sub(r"[-_.]+", "-", name.strip()).lower()


def randomness_score(text: str, common_bigrams: frozenset[str], min_letters: int = 6) -> float:
    """How random a short identity or description string looks, on [0, 1].

    Combines the share of letter bigrams that are rare in English with how
    often letter case flips inside words (``AxEVrqYB``). Texts with fewer
    than ``min_letters`` letters score 0.
    """
    words = _WORD.findall(text)
    letters = sum(len(w) for w in words)
    if letters < min_letters:
        return 0.0
    bigrams = rare = 0
    pairs = flips = 0
    for w in words:
        low = w.lower()
        for a, b in zip(low, low[1:]):
            bigrams += 1
            if a + b not in common_bigrams:
                rare += 1
        # a leading capital is normal; count flips after the first letter
        for a, b in zip(w[1:], w[2:]):
            pairs += 1
            if a.isupper() != b.isupper():
                flips += 1
    if bigrams == 0:
        return 0.0
    rare_frac = rare / bigrams
    chaos = flips / pairs if pairs else 0.0
    return min(1.0, rare_frac + chaos * (1.0 - rare_frac))


def duplicate_token_ratio(text: str) -> float:
    """Share of word tokens that repeat an earlier token (case-insensitive)."""
    tokens = [t.lower() for t in re.findall(r"\w+", text)]
    if not tokens:
        return 0.0
    return 1.0 - len(set(tokens)) / len(tokens)


def dl_distance(a: str, b: str) -> int:
    return DamerauLevenshtein.distance(a, b)


def closest_popular(name: str, popular: Iterable[str], max_distance: int, min_len: int) -> Optional[tuple[str, int]]:
    """Nearest popular name within ``max_distance`` edits, excluding exact matches."""
    best: Optional[tuple[str, int]] = None
    for p in popular:
        if p == name or len(p) < min_len or abs(len(p) - len(name)) > max_distance:
            continue
        d = DamerauLevenshtein.distance(name, p, score_cutoff=max_distance)
        if d <= max_distance and (best is None or (d, p) < (best[1], best[0])):
            best = (p, d)
    return best


def homoglyph_match(name: str, popular: frozenset[str]) -> Optional[str]:
    """A popular name reachable by undoing one confusable substitution."""
    if name in popular:
        return None
    for i, ch in enumerate(name):
        for alt in HOMOGLYPHS.get(ch, ()):
            cand = name[:i] + alt + name[i + 1 :]
            if cand != name and cand in popular:
                return cand
    for fake, real in MULTI_GLYPHS.items():
        start = name.find(fake)
        while start >= 0:
            cand = name[:start] + real + name[start + len(fake) :]
            if cand in popular:
                return cand
            start = name.find(fake, start + 1)
    return None


def combosquat_base(name: str, popular: Iterable[str]) -> Optional[str]:
    """The popular name that ``name`` extends with a separated prefix or suffix."""
    best = None
    for p in popular:
        if p == name:
            return None
        if name.startswith(p + "-") or name.endswith("-" + p) or f"-{p}-" in name:
            if best is None or len(p) > len(best):
                best = p
    return best
