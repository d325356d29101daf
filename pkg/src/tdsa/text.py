"""Lower-casing tokenizer and left/target/right context extraction.

The tokenizer is an ordered regular expression in the spirit of Twokenizer:
URLs, then whitespace-delimited emoticons, then @mentions and #hashtags,
then decimal numbers, words (with internal apostrophes and hyphens), and
finally runs of punctuation. It is one defensible reading of a
Twitter-oriented tokenizer, not a byte-for-byte port.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import TargetInstance

_MOUTH = r"[\)\]\(\[dDpP/\\\}\{@\|\*oO]"
_EMOTICON = (
    r"(?<!\S)(?:"
    rf"[<>]?[:;=][\-o\*'^]?{_MOUTH}+"
    r"|[\)\]\(\[/\\\}\{\|]+[\-\*'^]?[:;=][<>]?"
    r"|<3+|\^_*\^|-_+-|o_O|O_o"
    r")(?=\s|$)"
)
_URL = r"(?:https?://|www\.)\S+?(?=[.,!?;:\)\]\"']*(?:\s|$))"
_TOKEN_RE = re.compile(
    "|".join([
        _URL,
        _EMOTICON,
        r"[@#]\w+",
        r"\d+(?:[.,:]\d+)+",
        r"\w+(?:['’\-]\w+)*",
        r"[^\w\s]+",
    ])
)


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True)
class ContextBundle:
    """Token contexts around one occurrence of a target."""

    left: tuple[Token, ...]
    target: tuple[Token, ...]
    right: tuple[Token, ...]
    full: tuple[Token, ...]

    def surfaces(self, name: str) -> list[str]:
        return [token.surface for token in getattr(self, name)]


class AlignmentError(ValueError):
    """A target span starts or ends inside a token."""


def tokenize(text: str, boundaries: Iterable[int] = ()) -> list[Token]:
    """Lower-cased tokens with character offsets into ``text``.

    :param boundaries: extra offsets at which tokens are forced to break,
                       used to keep annotated spans token-aligned.
    """
    cuts = sorted({0, len(text), *(b for b in boundaries if 0 < b < len(text))})
    tokens = []
    for start, end in zip(cuts, cuts[1:]):
        segment = text[start:end]
        for match in _TOKEN_RE.finditer(segment):
            tokens.append(Token(match.group().lower(), start + match.start(), start + match.end()))
    return tokens


def surfaces(tokens: Sequence[Token]) -> list[str]:
    return [token.surface for token in tokens]


def extract_contexts(instance: TargetInstance, split_at_spans: bool = False,
                     tokens: Sequence[Token] | None = None) -> list[ContextBundle]:
    """One :class:`ContextBundle` per target occurrence, in span order.

    :param split_at_spans: force token breaks at every span edge before
                           aligning; when False a span that cuts a token is an
                           error.
    :raises AlignmentError: naming the offending span.
    """
    if tokens is None:
        edges = [offset for span in instance.spans for offset in span] if split_at_spans else ()
        tokens = tokenize(instance.text, edges)
    full = tuple(tokens)
    bundles = []
    for start, end in instance.spans:
        left, target, right = [], [], []
        for token in full:
            if token.end <= start:
                left.append(token)
            elif token.start >= end:
                right.append(token)
            elif token.start >= start and token.end <= end:
                target.append(token)
            else:
                raise AlignmentError(
                    f'{instance.id}: span ({start}, {end}) cuts token '
                    f'{instance.text[token.start:token.end]!r} at ({token.start}, {token.end})')
        if not target:
            raise AlignmentError(f'{instance.id}: span ({start}, {end}) contains no token')
        bundles.append(ContextBundle(tuple(left), tuple(target), tuple(right), full))
    return bundles
