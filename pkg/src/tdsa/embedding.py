"""Word-vector storage: text-format loading, vocabulary filtering, lookup, concatenation."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .lexicon import ZERO

logger = logging.getLogger(__name__)


class EmbeddingFormatError(ValueError):
    pass


class EmbeddingMatrix:
    """Dense word vectors with a word -> row index map.

    Out-of-vocabulary tokens and the :data:`~tdsa.lexicon.ZERO` mask token
    look up to the zero vector.
    """

    def __init__(self, vocab: dict, rows: np.ndarray, dim: int | None = None,
                 name: str = '', duplicates: int = 0):
        rows = np.asarray(rows, dtype=np.float64)
        if dim is None:
            if rows.ndim != 2:
                raise ValueError('rows must be a 2-D matrix')
            dim = rows.shape[1]
        rows = rows.reshape(len(vocab), dim) if rows.size == 0 else rows
        if dim < 1:
            raise ValueError('dim must be positive')
        if rows.shape != (len(vocab), dim):
            raise ValueError(f'rows shape {rows.shape} does not match vocab {len(vocab)} x dim {dim}')
        if vocab and max(vocab.values()) >= len(rows):
            raise ValueError('vocab index out of range')
        self.vocab = dict(vocab)
        self.rows = rows
        self.rows.setflags(write=False)
        self.dim = dim
        self.name = name
        self.duplicates = duplicates
        self._zero = np.zeros(dim)
        self._zero.setflags(write=False)

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, word: str) -> bool:
        return word in self.vocab

    def __repr__(self) -> str:
        return f'EmbeddingMatrix(name={self.name!r}, words={len(self)}, dim={self.dim})'

    def lookup(self, token: str) -> np.ndarray:
        index = self.vocab.get(token)
        if index is None or token == ZERO:
            return self._zero
        return self.rows[index]

    def matrix(self, tokens: Sequence[str]) -> np.ndarray:
        """``len(tokens) x dim`` matrix of looked-up vectors."""
        out = np.zeros((len(tokens), self.dim))
        for i, token in enumerate(tokens):
            index = self.vocab.get(token)
            if index is not None and token != ZERO:
                out[i] = self.rows[index]
        return out


def lookup(matrix: EmbeddingMatrix, token: str) -> np.ndarray:
    return matrix.lookup(token)


def load_text_embeddings(data: Union[bytes, str, Path], name: str = '') -> EmbeddingMatrix:
    """Load ``word v1 ... vd`` lines; an optional ``count dim`` header is skipped.

    The first occurrence of a duplicated word wins; the number of duplicates
    is kept on ``.duplicates``.

    :raises EmbeddingFormatError: on a row whose width differs from the first
                                  row, naming the 1-based line number.
    """
    if isinstance(data, Path):
        data = data.read_bytes()
    text = data.decode('utf-8', errors='replace') if isinstance(data, bytes) else data
    vocab: dict[str, int] = {}
    vectors: list[list[float]] = []
    dim = None
    duplicates = 0
    for number, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if len(parts) < 2:
            if line.strip():
                raise EmbeddingFormatError(f'line {number}: no vector values')
            continue
        if number == 1 and len(parts) == 2 and parts[0].isdigit() and parts[1].isdigit():
            continue
        if dim is None:
            dim = len(parts) - 1
        elif len(parts) - 1 != dim:
            raise EmbeddingFormatError(f'line {number}: expected {dim} values, found {len(parts) - 1}')
        word = parts[0]
        if word in vocab:
            duplicates += 1
            continue
        try:
            vectors.append([float(v) for v in parts[1:]])
        except ValueError as error:
            raise EmbeddingFormatError(f'line {number}: {error}') from None
        vocab[word] = len(vocab)
    if dim is None:
        raise EmbeddingFormatError('no vectors found')
    if duplicates:
        logger.info('%s: %d duplicate words ignored', name or 'embeddings', duplicates)
    return EmbeddingMatrix(vocab, np.array(vectors, dtype=np.float64).reshape(len(vocab), dim),
                           dim, name=name, duplicates=duplicates)


def filter_vocab(matrix: EmbeddingMatrix, keep: Iterable[str]) -> EmbeddingMatrix:
    """Restrict the vocabulary to ``keep``; kept rows are copied unchanged."""
    keep = set(keep)
    words = [w for w in matrix.vocab if w in keep]
    rows = matrix.rows[[matrix.vocab[w] for w in words]] if words else np.zeros((0, matrix.dim))
    return EmbeddingMatrix({w: i for i, w in enumerate(words)}, rows, matrix.dim, name=matrix.name)


def concat(a: EmbeddingMatrix, b: EmbeddingMatrix) -> EmbeddingMatrix:
    """Side-by-side concatenation over the union vocabulary; a missing side is zeros."""
    words = list(a.vocab) + [w for w in b.vocab if w not in a.vocab]
    rows = np.zeros((len(words), a.dim + b.dim))
    for i, word in enumerate(words):
        if word in a.vocab:
            rows[i, :a.dim] = a.rows[a.vocab[word]]
        if word in b.vocab:
            rows[i, a.dim:] = b.rows[b.vocab[word]]
    name = '+'.join(n for n in (a.name, b.name) if n)
    return EmbeddingMatrix({w: i for i, w in enumerate(words)}, rows, a.dim + b.dim, name=name)
