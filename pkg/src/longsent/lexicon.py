"""Valence-lexicon sentiment scoring.

A lexicon maps tokens to raw valences in [-4, 4]. Raw contributions are
summed over a text (a negator within the three preceding tokens damps
and flips a contribution by NEGATION_SCALE) and the sum is squashed into
[-1, 1] by s / sqrt(s^2 + ALPHA). Scores are then labeled against a
closed neutral band [-t, t].
"""

import hashlib
import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum

from .errors import DataError

logger = logging.getLogger(__name__)

#: Normalization constant for the compound squash.
ALPHA = 15.0
#: Multiplier applied to a valence preceded by a negator.
NEGATION_SCALE = -0.74
#: How many immediately preceding tokens are scanned for a negator.
NEGATION_WINDOW = 3

MIN_VALENCE = -4.0
MAX_VALENCE = 4.0


class SentimentLabel(IntEnum):
    """Class order is fixed: Negative=0, Neutral=1, Positive=2."""

    NEGATIVE = 0
    NEUTRAL = 1
    POSITIVE = 2

    def as_text(self):
        return self.name.lower()

    @classmethod
    def from_text(cls, text):
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise DataError(f"unknown sentiment label {text!r}") from None


DEFAULT_THRESHOLD = 0.075


@dataclass(frozen=True)
class Lexicon:
    valences: dict  # token -> raw valence in [-4, 4]
    negators: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        for token, v in self.valences.items():
            if not MIN_VALENCE <= v <= MAX_VALENCE:
                raise DataError(
                    f"valence for {token!r} outside [-4, 4]: {v}"
                )

    def content_hash(self):
        """sha256 over a canonical rendering of entries and negators."""
        h = hashlib.sha256()
        for token in sorted(self.valences):
            h.update(f"{token}\t{self.valences[token]!r}\n".encode("utf-8"))
        h.update(b"--negators--\n")
        for token in sorted(self.negators):
            h.update(token.encode("utf-8") + b"\n")
        return h.hexdigest()


def load_lexicon(path, negator_path=None):
    """Load a TSV valence lexicon (token<TAB>valence, `#` comments).

    Duplicate tokens: last entry wins, with a counted warning. A valence
    outside [-4, 4] is fatal and names the offending line. Negators, if
    given, come from a one-token-per-line file.
    """
    valences = {}
    duplicates = 0
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read lexicon file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                logger.warning("%s:%d: unparseable lexicon line skipped", path, lineno)
                continue
            token = parts[0].strip().lower()
            try:
                valence = float(parts[1])
            except ValueError:
                logger.warning("%s:%d: bad valence %r skipped", path, lineno, parts[1])
                continue
            if not MIN_VALENCE <= valence <= MAX_VALENCE:
                raise DataError(
                    f"{path}:{lineno}: valence {valence} for {token!r} outside [-4, 4]"
                )
            if token in valences:
                duplicates += 1
            valences[token] = valence
    if duplicates:
        logger.warning("%s: %d duplicate lexicon tokens (last wins)", path, duplicates)

    negators = frozenset()
    if negator_path is not None:
        from .corpus import load_token_file

        negators = frozenset(load_token_file(negator_path))
    return Lexicon(valences=valences, negators=negators)


def normalize_score(s, alpha=ALPHA):
    """Squash a raw valence sum into [-1, 1] via s / sqrt(s^2 + alpha)."""
    score = s / math.sqrt(s * s + alpha)
    return max(-1.0, min(1.0, score))


def token_compound(lex, token, alpha=ALPHA):
    """Compound score of a single token (0 if absent from the lexicon)."""
    v = lex.valences.get(token, 0.0)
    if v == 0.0:
        return 0.0
    return normalize_score(v, alpha)


def text_compound(
    lex,
    tokens,
    alpha=ALPHA,
    negation_scale=NEGATION_SCALE,
    negation_window=NEGATION_WINDOW,
):
    """Compound score of a token sequence.

    Each token with nonzero valence contributes its raw valence, scaled
    by `negation_scale` when any negator occurs within the
    `negation_window` immediately preceding tokens; the contribution sum
    is squashed into [-1, 1].
    """
    s = 0.0
    for i, token in enumerate(tokens):
        v = lex.valences.get(token, 0.0)
        if v == 0.0:
            continue
        window = tokens[max(0, i - negation_window) : i]
        if any(t in lex.negators for t in window):
            v *= negation_scale
        s += v
    if s == 0.0:
        return 0.0
    return normalize_score(s, alpha)


def classify_score(score, threshold=DEFAULT_THRESHOLD):
    """Label a compound score against the closed neutral band [-t, t]."""
    if score > threshold:
        return SentimentLabel.POSITIVE
    if score < -threshold:
        return SentimentLabel.NEGATIVE
    return SentimentLabel.NEUTRAL
