"""Corpus construction: dump ingestion, keyword filtering, cleaning.

Reads Reddit-style JSON Lines dumps, keeps posts that mention any of the
tracked keywords, tokenizes title+body, strips stopwords, and drops posts
left blank by cleaning. Posts are tagged with their UTC posting year and
the university derived from the source subreddit.
"""

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from .errors import DataError

logger = logging.getLogger(__name__)


class University(Enum):
    WATERLOO = "Waterloo"
    UBC = "UBC"
    MCGILL = "McGill"
    UOFT = "UofT"


#: Subreddit (lowercased) -> University for the four tracked subreddits.
DEFAULT_SUBREDDIT_MAP = {
    "uwaterloo": University.WATERLOO,
    "ubc": University.UBC,
    "mcgill": University.MCGILL,
    "uoft": University.UOFT,
}

#: The twelve tracked keywords; "mental health" is a two-token phrase.
DEFAULT_KEYWORDS = (
    "stress",
    "worried",
    "nervous",
    "uneasy",
    "distress",
    "fear",
    "concern",
    "unmotivated",
    "anxious",
    "anxiety",
    "unease",
    "mental health",
)


@dataclass(frozen=True)
class Post:
    id: str
    university: University
    created_utc: int
    year: int
    title: str
    body: str


@dataclass(frozen=True)
class CleanPost:
    post_id: str
    tokens: tuple
    year: int
    university: University


@dataclass(frozen=True)
class KeywordSet:
    """Whole-token keywords: single tokens plus multi-token phrases."""

    single_tokens: frozenset
    phrases: frozenset  # of token tuples, each length >= 2

    @classmethod
    def from_strings(cls, keywords):
        singles, phrases = set(), set()
        for kw in keywords:
            parts = tuple(tokenize(kw))
            if not parts:
                raise DataError(f"keyword {kw!r} contains no tokens")
            if len(parts) == 1:
                singles.add(parts[0])
            else:
                phrases.add(parts)
        return cls(frozenset(singles), frozenset(phrases))

    @classmethod
    def default(cls):
        return cls.from_strings(DEFAULT_KEYWORDS)

    def display_strings(self):
        """Keywords as display strings (phrases joined by single spaces)."""
        return sorted(self.single_tokens) + sorted(
            " ".join(p) for p in self.phrases
        )


@dataclass
class IngestStats:
    loaded: int = 0
    skipped_unmapped: int = 0
    skipped_malformed: int = 0
    unmapped_subreddits: Counter = field(default_factory=Counter)


# Tokens are runs of letters/digits, optionally joined by internal
# apostrophes ("i'm"); underscores and all other characters split.
_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")


def tokenize(text):
    """Lowercase tokens of `text`; splits on anything that is not a
    letter, digit, or apostrophe internal to a token."""
    if not text:
        return []
    return _TOKEN_RE.findall(text.lower().replace("’", "'"))


def _required_str(record, key):
    value = record.get(key)
    if not isinstance(value, str):
        raise KeyError(key)
    return value


def _epoch_seconds(record):
    value = record.get("created_utc")
    if isinstance(value, bool):
        raise KeyError("created_utc")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        return int(value.strip())
    raise KeyError("created_utc")


def ingest_dump(path, subreddit_map=None):
    """Parse one JSONL dump into Posts.

    Records from unmapped subreddits are skipped and counted; malformed
    records (bad JSON, missing/ill-typed fields, empty or duplicate ids)
    are skipped with a counted warning. Returns (posts, IngestStats).
    """
    if subreddit_map is None:
        subreddit_map = DEFAULT_SUBREDDIT_MAP
    subreddit_map = {k.lower(): v for k, v in subreddit_map.items()}

    stats = IngestStats()
    posts = []
    seen_ids = set()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read dump file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                post_id = _required_str(record, "id")
                subreddit = _required_str(record, "subreddit")
                title = _required_str(record, "title")
                body = _required_str(record, "selftext")
                created = _epoch_seconds(record)
                if not post_id or post_id in seen_ids:
                    raise ValueError(f"empty or duplicate id {post_id!r}")
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                stats.skipped_malformed += 1
                logger.warning("%s:%d: skipping malformed record (%s)", path, lineno, exc)
                continue
            university = subreddit_map.get(subreddit.lower())
            if university is None:
                stats.skipped_unmapped += 1
                stats.unmapped_subreddits[subreddit] += 1
                continue
            seen_ids.add(post_id)
            year = datetime.fromtimestamp(created, tz=timezone.utc).year
            posts.append(
                Post(
                    id=post_id,
                    university=university,
                    created_utc=created,
                    year=year,
                    title=title,
                    body=body,
                )
            )
            stats.loaded += 1
    return posts, stats


def _post_tokens(post):
    return tokenize(post.title + " " + post.body)


def _contains_phrase(tokens, phrase):
    n = len(phrase)
    if n > len(tokens):
        return False
    for i in range(len(tokens) - n + 1):
        if tuple(tokens[i : i + n]) == phrase:
            return True
    return False


def _matched_keywords(tokens, kw):
    """Display strings of every keyword present in `tokens`."""
    token_set = set(tokens)
    hits = [t for t in kw.single_tokens if t in token_set]
    hits.extend(
        " ".join(p) for p in kw.phrases if _contains_phrase(tokens, p)
    )
    return hits


def filter_by_keywords(posts, kw=None):
    """Posts whose tokenized title+body contains any keyword as whole
    tokens (phrases must appear as consecutive tokens)."""
    if kw is None:
        kw = KeywordSet.default()
    return [p for p in posts if _matched_keywords(_post_tokens(p), kw)]


def keyword_histogram(posts, kw=None):
    """Per-keyword count of posts containing it (a post may count for
    several keywords, but never twice for the same one)."""
    if kw is None:
        kw = KeywordSet.default()
    counts = {k: 0 for k in kw.display_strings()}
    for post in posts:
        for hit in _matched_keywords(_post_tokens(post), kw):
            counts[hit] += 1
    return counts


def clean_corpus(posts, stopwords):
    """Tokenize title+body, drop stopword tokens, drop blank posts.

    Returns (clean_posts, dropped_count); dropped_count is the number of
    posts whose token sequence became empty.
    """
    stopwords = set(stopwords)
    cleaned = []
    dropped = 0
    for post in posts:
        tokens = tuple(t for t in _post_tokens(post) if t not in stopwords)
        if not tokens:
            dropped += 1
            continue
        cleaned.append(
            CleanPost(
                post_id=post.id,
                tokens=tokens,
                year=post.year,
                university=post.university,
            )
        )
    return cleaned, dropped


def load_token_file(path):
    """One lowercase token per line; blank lines and `#` comments ignored."""
    tokens = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read token file {path}: {exc}") from exc
    with fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                tokens.append(line.lower())
    return tokens


def load_keyword_file(path):
    """Keyword file: one keyword per line; a line with spaces is a phrase."""
    return KeywordSet.from_strings(load_token_file(path))


def save_clean_corpus(clean_posts, path):
    """Write cleaned posts as JSONL: post_id, university, year, tokens."""
    with open(path, "w", encoding="utf-8") as fh:
        for cp in clean_posts:
            fh.write(
                json.dumps(
                    {
                        "post_id": cp.post_id,
                        "university": cp.university.value,
                        "year": cp.year,
                        "tokens": list(cp.tokens),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_clean_corpus(path):
    """Inverse of save_clean_corpus."""
    posts = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read corpus file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                posts.append(
                    CleanPost(
                        post_id=rec["post_id"],
                        tokens=tuple(rec["tokens"]),
                        year=int(rec["year"]),
                        university=University(rec["university"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: bad corpus record ({exc})") from exc
    return posts
