"""Sentiment lexicon loaders (MPQA, Hu & Liu, NRC), union and masking.

A word may carry both polarities within one lexicon; entries therefore map
each word to a frozenset of :class:`Polarity` values.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence, Union

logger = logging.getLogger(__name__)

ZERO = '<ZERO>'
"""Placeholder for a masked-out token; it embeds to the zero vector.

Tokenizer surfaces are lower-cased, so this upper-case string never collides
with a real token.
"""


class Polarity(Enum):
    POSITIVE = 'positive'
    NEGATIVE = 'negative'


@dataclass(frozen=True)
class SentimentLexicon:
    name: str
    entries: dict = field(default_factory=dict)
    skipped: int = field(default=0, compare=False)

    def __post_init__(self):
        entries = {word: frozenset(polarities) for word, polarities in self.entries.items()}
        object.__setattr__(self, 'entries', entries)
        lowered: dict[str, frozenset] = {}
        for word, polarities in entries.items():
            lowered[word.lower()] = lowered.get(word.lower(), frozenset()) | polarities
        object.__setattr__(self, '_lowered', lowered)

    @property
    def lowered(self) -> dict:
        """Lower-cased view: each lower-cased word maps to the union of its forms' polarities."""
        return self._lowered

    def __contains__(self, word: str) -> bool:
        return word.lower() in self._lowered

    def __len__(self) -> int:
        return len(self.entries)

    def polarities(self, word: str) -> frozenset:
        return self._lowered.get(word.lower(), frozenset())

    def words(self, polarity: Polarity, lowered: bool = False) -> set:
        source = self._lowered if lowered else self.entries
        return {word for word, polarities in source.items() if polarity in polarities}


def _decode(data: Union[bytes, str]) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode('utf-8')
    except UnicodeDecodeError:
        return data.decode('latin-1')


def _build(name: str, pairs: Iterable[tuple[str, Polarity]], skipped: int = 0) -> SentimentLexicon:
    entries: dict[str, set] = {}
    for word, polarity in pairs:
        entries.setdefault(word, set()).add(polarity)
    return SentimentLexicon(name, entries, skipped)


def parse_mpqa(data: Union[bytes, str], name: str = 'MPQA') -> SentimentLexicon:
    """Parse the subjectivity-clues file (``type=... word1=... priorpolarity=...``).

    Only ``positive`` and ``negative`` prior polarities are kept; ``both`` and
    ``neutral`` clues are ignored. Lines without ``word1`` or
    ``priorpolarity`` are skipped and counted.
    """
    pairs, skipped = [], 0
    for line in _decode(data).splitlines():
        if not line.strip():
            continue
        fields = dict(part.split('=', 1) for part in line.split() if '=' in part)
        word, prior = fields.get('word1'), fields.get('priorpolarity')
        if not word or not prior:
            skipped += 1
            continue
        if prior in ('positive', 'negative'):
            pairs.append((word, Polarity(prior)))
    if skipped:
        logger.info('%s: skipped %d malformed lines', name, skipped)
    return _build(name, pairs, skipped)


def _word_list(data: Union[bytes, str]) -> list[str]:
    words = []
    for line in _decode(data).splitlines():
        line = line.strip()
        if line and not line.startswith(';'):
            words.append(line)
    return words


def parse_hl(pos_bytes: Union[bytes, str], neg_bytes: Union[bytes, str],
             name: str = 'HL') -> SentimentLexicon:
    """Parse the Hu & Liu opinion-word lists (``;`` starts a comment line)."""
    pairs = [(w, Polarity.POSITIVE) for w in _word_list(pos_bytes)]
    pairs += [(w, Polarity.NEGATIVE) for w in _word_list(neg_bytes)]
    return _build(name, pairs)


def parse_nrc(data: Union[bytes, str], name: str = 'NRC') -> SentimentLexicon:
    """Parse ``word<TAB>emotion<TAB>flag`` triples; keeps flagged positive/negative only.

    Header prose and any line that is not a triple with an integer flag is
    skipped.
    """
    pairs, skipped = [], 0
    for line in _decode(data).splitlines():
        parts = line.strip().split('\t')
        if len(parts) != 3 or not parts[2].strip().lstrip('-').isdigit():
            if line.strip():
                skipped += 1
            continue
        word, emotion, flag = parts[0].strip(), parts[1].strip(), int(parts[2])
        if flag == 1 and emotion in ('positive', 'negative'):
            pairs.append((word, Polarity(emotion)))
    return _build(name, pairs, skipped)


def union(lexicons: Sequence[SentimentLexicon], name: str | None = None) -> SentimentLexicon:
    """Per-word union of polarity sets."""
    if not lexicons:
        raise ValueError('union needs at least one lexicon')
    entries: dict[str, set] = {}
    for lexicon in lexicons:
        for word, polarities in lexicon.entries.items():
            entries.setdefault(word, set()).update(polarities)
    return SentimentLexicon(name or ' & '.join(lex.name for lex in lexicons), entries)


def counts(lexicon: SentimentLexicon, lowered: bool = False) -> tuple[int, int]:
    """``(positive, negative)`` word counts; ``lowered`` counts distinct lower-cased words."""
    return (len(lexicon.words(Polarity.POSITIVE, lowered)),
            len(lexicon.words(Polarity.NEGATIVE, lowered)))


def mask_context(tokens: Sequence[str], lexicon: SentimentLexicon,
                 polarity: Polarity | None = None) -> list[str]:
    """Replace every token outside the lexicon by :data:`ZERO`.

    :param polarity: when given, keep only words carrying that polarity
                     (e.g. positive words for the left context); by default
                     membership under either polarity is enough.
    """
    masked = []
    for token in tokens:
        found = lexicon.polarities(token)
        keep = bool(found) if polarity is None else polarity in found
        masked.append(token if keep else ZERO)
    return masked
