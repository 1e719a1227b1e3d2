"""Corpus ingestion: posts, comments, and verdict mining.

Input is line-delimited JSON, one post per line:
    {"id": str, "title": str, "body": str, "comments": [{"id": str, "body": str}]}

Verdicts are mined from comment bodies with a configurable lexicon of
whole-token patterns; matched tokens are scrubbed from the text that later
feeds the classifier.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Iterator, Sequence

logger = logging.getLogger(__name__)

DEFAULT_PREFIXES = ("AITA for",)
WIBTA_PREFIX = "WIBTA for"


class CorpusError(ValueError):
    """Fatal corpus problem (duplicate ids, unreadable verdict table)."""


@dataclass(frozen=True)
class ParseError:
    line_no: int
    message: str


class Verdict(str, Enum):
    YTA = "YTA"
    NTA = "NTA"


@dataclass(frozen=True)
class Comment:
    id: str
    post_id: str
    body: str


@dataclass(frozen=True)
class Post:
    id: str
    title: str
    situation: str
    body: str
    comments: tuple[Comment, ...]


@dataclass(frozen=True)
class VerdictRecord:
    comment_id: str
    post_id: str
    verdict: Verdict
    scrubbed_text: str


def _compile(patterns: Sequence[str]) -> re.Pattern:
    # longest alternative first so phrases win over any token they contain;
    # \w lookarounds keep "wanta" from matching "NTA"
    parts = [
        re.escape(p).replace(r"\ ", r"\s+")
        for p in sorted(patterns, key=len, reverse=True)
    ]
    return re.compile(r"(?<!\w)(?:" + "|".join(parts) + r")(?!\w)", re.IGNORECASE)


@dataclass(frozen=True)
class VerdictLexicon:
    yta_patterns: tuple[str, ...]
    nta_patterns: tuple[str, ...]

    def __post_init__(self):
        if not self.yta_patterns or not self.nta_patterns:
            raise ValueError("both pattern sets must be non-empty")
        yta = {p.lower() for p in self.yta_patterns}
        nta = {p.lower() for p in self.nta_patterns}
        if yta & nta:
            raise ValueError(f"pattern sets overlap: {sorted(yta & nta)}")
        object.__setattr__(self, "_yta_re", _compile(self.yta_patterns))
        object.__setattr__(self, "_nta_re", _compile(self.nta_patterns))
        object.__setattr__(
            self, "_all_re", _compile(tuple(self.yta_patterns) + tuple(self.nta_patterns))
        )

    def matches_yta(self, text: str) -> bool:
        return self._yta_re.search(text) is not None

    def matches_nta(self, text: str) -> bool:
        return self._nta_re.search(text) is not None

    def matches_any(self, text: str) -> bool:
        return self._all_re.search(text) is not None

    def scrub(self, text: str) -> str:
        """Remove every lexicon token and normalize whitespace.

        Applied to a fixpoint: removing a token can make two fragments
        adjacent that together spell another pattern, so one pass is not
        enough to guarantee a clean result.
        """
        while self._all_re.search(text):
            text = self._all_re.sub(" ", text)
        return " ".join(text.split())


DEFAULT_LEXICON = VerdictLexicon(
    yta_patterns=("YTA", "you're the asshole", "you are the asshole"),
    nta_patterns=("NTA", "not the asshole", "not an asshole"),
)


def extract_situation(title: str, prefix: str | Sequence[str] = DEFAULT_PREFIXES) -> str:
    """Strip the leading verdict-question prefix (case-insensitive) from a title.

    Stripping repeats until no configured prefix remains, so the result never
    starts with one. Titles without a prefix are returned whole, trimmed.
    """
    prefixes = (prefix,) if isinstance(prefix, str) else tuple(prefix)
    text = title.strip()
    stripped = True
    while stripped:
        stripped = False
        for p in prefixes:
            if text.lower().startswith(p.lower()):
                text = text[len(p):].strip()
                stripped = True
    return text


def classify_comment(body: str, lexicon: VerdictLexicon = DEFAULT_LEXICON) -> str:
    """Return "YTA", "NTA", "ambiguous" (both polarities) or "none"."""
    yta = lexicon.matches_yta(body)
    nta = lexicon.matches_nta(body)
    if yta and nta:
        return "ambiguous"
    if yta:
        return Verdict.YTA.value
    if nta:
        return Verdict.NTA.value
    return "none"


def extract_verdict(
    comment: Comment, lexicon: VerdictLexicon = DEFAULT_LEXICON
) -> VerdictRecord | None:
    """Mine a single polarity from one comment; ambiguous comments yield None."""
    outcome = classify_comment(comment.body, lexicon)
    if outcome in ("ambiguous", "none"):
        return None
    return VerdictRecord(
        comment_id=comment.id,
        post_id=comment.post_id,
        verdict=Verdict(outcome),
        scrubbed_text=lexicon.scrub(comment.body),
    )


def parse_corpus(
    lines: Iterable[str],
    prefix: str | Sequence[str] = DEFAULT_PREFIXES,
    errors: list[ParseError] | None = None,
) -> list[Post]:
    """Parse JSONL posts; malformed lines are skipped and reported.

    Record-level problems are appended to ``errors`` (when given) and logged;
    a duplicate post id is fatal and raises :class:`CorpusError`.
    """
    posts: list[Post] = []
    seen_ids: set[str] = set()

    def record_error(line_no: int, message: str) -> None:
        logger.warning("line %d: %s", line_no, message)
        if errors is not None:
            errors.append(ParseError(line_no, message))

    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            record_error(line_no, f"invalid JSON: {exc.msg}")
            continue
        try:
            post = _post_from_record(raw, prefix)
        except ValueError as exc:
            record_error(line_no, str(exc))
            continue
        if post.id in seen_ids:
            raise CorpusError(f"duplicate post id {post.id!r} at line {line_no}")
        seen_ids.add(post.id)
        posts.append(post)
    return posts


def _post_from_record(raw: object, prefix) -> Post:
    if not isinstance(raw, dict):
        raise ValueError("record is not an object")
    for key, kind in (("id", str), ("title", str), ("body", str), ("comments", list)):
        if key not in raw:
            raise ValueError(f"missing field {key!r}")
        if not isinstance(raw[key], kind):
            raise ValueError(f"field {key!r} must be {kind.__name__}")
    if not raw["id"]:
        raise ValueError("post id must be non-empty")
    comments: list[Comment] = []
    comment_ids: set[str] = set()
    for k, c in enumerate(raw["comments"]):
        if not isinstance(c, dict) or not isinstance(c.get("id"), str) or not isinstance(
            c.get("body"), str
        ):
            raise ValueError(f"comment {k} must have string 'id' and 'body'")
        if c["id"] in comment_ids:
            raise ValueError(f"duplicate comment id {c['id']!r}")
        comment_ids.add(c["id"])
        comments.append(Comment(id=c["id"], post_id=raw["id"], body=c["body"]))
    return Post(
        id=raw["id"],
        title=raw["title"],
        situation=extract_situation(raw["title"], prefix),
        body=raw["body"],
        comments=tuple(comments),
    )


def serialize_posts(posts: Iterable[Post], stream: IO[str]) -> None:
    for post in posts:
        record = {
            "id": post.id,
            "title": post.title,
            "body": post.body,
            "comments": [{"id": c.id, "body": c.body} for c in post.comments],
        }
        stream.write(json.dumps(record, ensure_ascii=False) + "\n")


def iter_comments(posts: Iterable[Post]) -> Iterator[Comment]:
    for post in posts:
        yield from post.comments


def mine_verdicts(
    posts: Iterable[Post], lexicon: VerdictLexicon = DEFAULT_LEXICON
) -> list[VerdictRecord]:
    records = []
    for comment in iter_comments(posts):
        record = extract_verdict(comment, lexicon)
        if record is not None:
            records.append(record)
    return records


@dataclass(frozen=True)
class CorpusStats:
    post_count: int
    verdict_count: int
    nta_count: int
    yta_count: int
    ambiguous_count: int


def corpus_stats(
    posts: Sequence[Post], lexicon: VerdictLexicon = DEFAULT_LEXICON
) -> CorpusStats:
    nta = yta = ambiguous = 0
    for comment in iter_comments(posts):
        outcome = classify_comment(comment.body, lexicon)
        if outcome == "NTA":
            nta += 1
        elif outcome == "YTA":
            yta += 1
        elif outcome == "ambiguous":
            ambiguous += 1
    return CorpusStats(
        post_count=len(posts),
        verdict_count=nta + yta,
        nta_count=nta,
        yta_count=yta,
        ambiguous_count=ambiguous,
    )


def format_stats(stats: CorpusStats) -> str:
    return (
        f"post_count={stats.post_count}\n"
        f"verdict_count={stats.verdict_count}\n"
        f"nta_count={stats.nta_count}\n"
        f"yta_count={stats.yta_count}\n"
        f"ambiguous_count={stats.ambiguous_count}\n"
    )


def write_verdict_table(records: Iterable[VerdictRecord], stream: IO[str]) -> None:
    stream.write("comment_id\tpost_id\tverdict\tscrubbed_text\n")
    for r in records:
        stream.write(f"{r.comment_id}\t{r.post_id}\t{r.verdict.value}\t{r.scrubbed_text}\n")


def read_verdict_table(stream: IO[str]) -> list[VerdictRecord]:
    lines = [ln.rstrip("\r\n") for ln in stream if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != "comment_id\tpost_id\tverdict\tscrubbed_text":
        raise CorpusError("verdict table must start with its four-column header")
    records = []
    for ln in lines[1:]:
        parts = ln.split("\t")
        if len(parts) != 4:
            raise CorpusError(f"verdict row has {len(parts)} columns, expected 4")
        comment_id, post_id, verdict, scrubbed = parts
        records.append(
            VerdictRecord(comment_id, post_id, Verdict(verdict), scrubbed)
        )
    return records
