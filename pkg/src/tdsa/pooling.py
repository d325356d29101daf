"""Neural pooling features for the Target-dep and TDParse method families.

Each context (a token sequence) is embedded into an ``n x d`` matrix and
reduced per dimension by max, min, average, standard deviation and product.
The pooled contexts a method uses are concatenated into one feature vector
per target occurrence, and the occurrences of one instance are combined by a
per-dimension median.
"""
from __future__ import annotations

import json
import struct
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence, Union

import numpy as np

from .embedding import EmbeddingMatrix
from .lexicon import Polarity, SentimentLexicon, mask_context
from .text import ContextBundle


class PoolOp(Enum):
    MAX = 'max'
    MIN = 'min'
    AVG = 'avg'
    STD = 'std'
    PROD = 'prod'


POOL_ORDER = (PoolOp.MAX, PoolOp.MIN, PoolOp.AVG, PoolOp.STD, PoolOp.PROD)


def _sequential_sum(rows: np.ndarray) -> np.ndarray:
    # Row-by-row accumulation fixes the summation order for every column.
    total = rows[0].copy()
    for row in rows[1:]:
        total += row
    return total


def pool(context_matrix: np.ndarray, op: PoolOp) -> np.ndarray:
    """Reduce an ``n x d`` matrix to a length-``d`` vector.

    STD is the population standard deviation. An empty context (``n == 0``)
    pools to the zero vector for every op.
    """
    rows = np.asarray(context_matrix, dtype=np.float64)
    n, d = rows.shape
    if n == 0:
        return np.zeros(d)
    if op is PoolOp.MAX:
        return rows.max(axis=0)
    if op is PoolOp.MIN:
        return rows.min(axis=0)
    if op is PoolOp.AVG:
        return _sequential_sum(rows) / n
    if op is PoolOp.STD:
        mean = _sequential_sum(rows) / n
        return np.sqrt(_sequential_sum((rows - mean) ** 2) / n)
    if op is PoolOp.PROD:
        product = rows[0].copy()
        for row in rows[1:]:
            product *= row
        return product
    raise ValueError(f'unknown pooling op {op!r}')


def context_features(tokens: Sequence[str], embedding: EmbeddingMatrix) -> np.ndarray:
    """Pooled features of one context: MAX, MIN, AVG, STD, PROD blocks of length ``d``."""
    rows = embedding.matrix(tokens)
    return np.concatenate([pool(rows, op) for op in POOL_ORDER])


class Method(Enum):
    TARGET_IND = 'target-ind'
    TARGET_DEP_MINUS = 'target-dep-'
    TARGET_DEP = 'target-dep'
    TARGET_DEP_PLUS = 'target-dep+'
    TDPARSE_MINUS = 'tdparse-'
    TDPARSE = 'tdparse'
    TDPARSE_PLUS = 'tdparse+'

    @property
    def needs_lexicon(self) -> bool:
        return self in (Method.TARGET_DEP_PLUS, Method.TDPARSE_PLUS)

    @property
    def needs_graph(self) -> bool:
        return self.value.startswith('tdparse')


CONTEXTS = {
    Method.TARGET_IND: ('full',),
    Method.TARGET_DEP_MINUS: ('left', 'right', 'target'),
    Method.TARGET_DEP: ('full', 'left', 'right', 'target'),
    Method.TARGET_DEP_PLUS: ('full', 'left', 'right', 'target', 'left_sentiment', 'right_sentiment'),
    Method.TDPARSE_MINUS: ('dependency',),
    Method.TDPARSE: ('dependency', 'left', 'right'),
    Method.TDPARSE_PLUS: ('dependency', 'left', 'right', 'left_sentiment', 'right_sentiment'),
}


@dataclass(frozen=True)
class MethodSpec:
    """Which contexts to pool, plus the lexicon for the sentiment contexts.

    :param polarity_split: keep only positive lexicon words in the left
                           sentiment context and only negative ones in the
                           right; by default both keep any lexicon word.
    :param dep_depth: bound the dependency context to tokens within this many
                      undirected edges of the target; ``None`` keeps the
                      whole connected component.
    """

    family: Method
    lexicon: SentimentLexicon | None = None
    polarity_split: bool = False
    dep_depth: int | None = None

    def __post_init__(self):
        if self.family.needs_lexicon and self.lexicon is None:
            raise ValueError(f'{self.family.value} requires a sentiment lexicon')


@dataclass(frozen=True)
class LayoutEntry:
    context: str
    op: str
    start: int
    end: int


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    layout: tuple[LayoutEntry, ...] = field(compare=False)


def layout_for(family: Method, dim: int) -> tuple[LayoutEntry, ...]:
    entries, offset = [], 0
    for context in CONTEXTS[family]:
        for op in POOL_ORDER:
            entries.append(LayoutEntry(context, op.value, offset, offset + dim))
            offset += dim
    return tuple(entries)


def median_pool(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Per-dimension median over occurrence vectors (mean of the middle pair when even)."""
    stacked = np.sort(np.asarray(vectors, dtype=np.float64), axis=0)
    k = len(stacked)
    if k == 0:
        raise ValueError('median over zero occurrences')
    if k % 2:
        return stacked[k // 2].copy()
    return (stacked[k // 2 - 1] + stacked[k // 2]) / 2


# ---------------------------------------------------------------------------
# Dependency graphs
# ---------------------------------------------------------------------------

class DepGraphError(ValueError):
    pass


@dataclass(frozen=True)
class DepGraph:
    """A single-rooted dependency tree; ``heads`` are 1-based with 0 for the root."""

    tokens: tuple[str, ...]
    heads: tuple[int, ...]
    relations: tuple[str, ...] = ()
    sentence_id: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'tokens', tuple(self.tokens))
        object.__setattr__(self, 'heads', tuple(int(h) for h in self.heads))
        relations = tuple(self.relations) or ('_',) * len(self.tokens)
        object.__setattr__(self, 'relations', relations)
        label = self.sentence_id or '<unnamed>'
        n = len(self.tokens)
        if len(self.heads) != n or len(relations) != n:
            raise DepGraphError(f'sentence {label}: tokens, heads and relations differ in length')
        if n == 0:
            raise DepGraphError(f'sentence {label}: empty graph')
        if any(not 0 <= h <= n for h in self.heads):
            raise DepGraphError(f'sentence {label}: head index out of range')
        roots = self.heads.count(0)
        if roots != 1:
            raise DepGraphError(f'sentence {label}: {roots} roots, expected exactly one')
        for start in range(1, n + 1):
            seen, node = set(), start
            while node != 0:
                if node in seen:
                    raise DepGraphError(f'sentence {label}: head cycle through token {node}')
                seen.add(node)
                node = self.heads[node - 1]

    @property
    def root(self) -> int:
        """0-based index of the root token."""
        return self.heads.index(0)

    def neighbours(self) -> list[list[int]]:
        adjacency: list[list[int]] = [[] for _ in self.tokens]
        for child, head in enumerate(self.heads):
            if head:
                adjacency[child].append(head - 1)
                adjacency[head - 1].append(child)
        return adjacency


def dep_context(graph: DepGraph, target_token_indices: Iterable[int],
                max_depth: int | None = None) -> list[str]:
    """Tokens connected to any target token in the undirected tree, in surface order.

    Target tokens are included. With ``max_depth=None`` this is the whole
    connected component, i.e. the whole sentence for a valid tree.
    """
    targets = sorted(set(target_token_indices))
    if not targets:
        raise DepGraphError('dependency context needs at least one target token')
    if any(not 0 <= i < len(graph.tokens) for i in targets):
        raise DepGraphError(f'target index outside sentence {graph.sentence_id or "<unnamed>"}')
    adjacency = graph.neighbours()
    depth = {i: 0 for i in targets}
    queue = deque(targets)
    while queue:
        node = queue.popleft()
        if max_depth is not None and depth[node] >= max_depth:
            continue
        for other in adjacency[node]:
            if other not in depth:
                depth[other] = depth[node] + 1
                queue.append(other)
    return [graph.tokens[i] for i in sorted(depth)]


def parse_conll(data: Union[bytes, str]) -> list[DepGraph]:
    """Read CoNLL-U / CoNLL-X blocks (ID FORM LEMMA UPOS XPOS FEATS HEAD DEPREL ...).

    Multiword-token ranges (``3-4``) and empty nodes (``5.1``) are skipped.
    Forms are lower-cased to match tokenizer surfaces.

    :raises DepGraphError: naming the sentence on cycles or multiple roots.
    """
    text = data.decode('utf-8') if isinstance(data, bytes) else data
    graphs: list[DepGraph] = []
    tokens, heads, relations, sentence_id = [], [], [], ''

    def flush():
        nonlocal tokens, heads, relations, sentence_id
        if tokens:
            graphs.append(DepGraph(tokens, heads, relations,
                                   sentence_id or str(len(graphs) + 1)))
        tokens, heads, relations, sentence_id = [], [], [], ''

    for number, line in enumerate(text.splitlines(), 1):
        line = line.rstrip('\n')
        if not line.strip():
            flush()
            continue
        if line.startswith('#'):
            if line[1:].strip().startswith('sent_id'):
                sentence_id = line.split('=', 1)[-1].strip()
            continue
        columns = line.split('\t')
        if len(columns) < 8:
            raise DepGraphError(f'line {number}: expected at least 8 tab-separated columns')
        if '-' in columns[0] or '.' in columns[0]:
            continue
        tokens.append(columns[1].lower())
        try:
            heads.append(int(columns[6]))
        except ValueError:
            raise DepGraphError(f'line {number}: non-integer head {columns[6]!r}') from None
        relations.append(columns[7])
    flush()
    return graphs


def align_graph(graph: DepGraph, text: str) -> list[tuple[int, int] | None]:
    """Character span of each graph token in ``text`` by left-to-right surface matching.

    Tokens the parser normalised (and so cannot be found) get ``None``.
    """
    lowered = text.lower()
    position = 0
    spans: list[tuple[int, int] | None] = []
    for token in graph.tokens:
        found = lowered.find(token, position)
        if found < 0:
            spans.append(None)
            continue
        spans.append((found, found + len(token)))
        position = found + len(token)
    return spans


def graph_target_indices(graph: DepGraph, text: str, start: int, end: int) -> list[int]:
    """Indices of graph tokens overlapping the character range ``[start, end)``."""
    indices = [i for i, span in enumerate(align_graph(graph, text))
               if span is not None and span[0] < end and span[1] > start]
    if not indices:
        raise DepGraphError(f'no parsed token of sentence {graph.sentence_id or "<unnamed>"} '
                            f'covers characters ({start}, {end})')
    return indices


# ---------------------------------------------------------------------------
# Feature assembly
# ---------------------------------------------------------------------------

def _context_tokens(name: str, bundle: ContextBundle, spec: MethodSpec,
                    dependency: list[str] | None) -> list[str]:
    if name == 'dependency':
        return dependency
    if name in ('left_sentiment', 'right_sentiment'):
        side = bundle.surfaces(name.split('_')[0])
        polarity = None
        if spec.polarity_split:
            polarity = Polarity.POSITIVE if name == 'left_sentiment' else Polarity.NEGATIVE
        return mask_context(side, spec.lexicon, polarity)
    return bundle.surfaces(name)


def occurrence_features(bundle: ContextBundle, spec: MethodSpec, embedding: EmbeddingMatrix,
                        dependency: list[str] | None = None) -> np.ndarray:
    return np.concatenate([
        context_features(_context_tokens(name, bundle, spec, dependency), embedding)
        for name in CONTEXTS[spec.family]
    ])


def assemble_features(bundles: Sequence[ContextBundle], spec: MethodSpec,
                      embedding: EmbeddingMatrix, dep_graphs=None,
                      text: str | None = None) -> FeatureVector:
    """Feature vector of one instance: per-occurrence pooled contexts, median-combined.

    :param dep_graphs: for the TDParse family, the instance's parse, either one
                       :class:`DepGraph` or one per bundle.
    :param text: raw instance text, used to align graph tokens to the target
                 span; when omitted the bundle tokens are aligned instead.
    """
    if not bundles:
        raise ValueError('at least one context bundle is required')
    if spec.family.needs_lexicon and spec.lexicon is None:
        raise ValueError(f'{spec.family.value} requires a sentiment lexicon')
    if spec.family.needs_graph:
        if dep_graphs is None:
            raise ValueError(f'{spec.family.value} requires dependency graphs')
        graphs = [dep_graphs] * len(bundles) if isinstance(dep_graphs, DepGraph) else list(dep_graphs)
        if len(graphs) != len(bundles):
            raise ValueError('one dependency graph per occurrence is required')
    vectors = []
    for i, bundle in enumerate(bundles):
        dependency = None
        if spec.family.needs_graph:
            start, end = bundle.target[0].start, bundle.target[-1].end
            source = text if text is not None else _bundle_text(bundle)
            targets = graph_target_indices(graphs[i], source, start, end)
            dependency = dep_context(graphs[i], targets, spec.dep_depth)
        vectors.append(occurrence_features(bundle, spec, embedding, dependency))
    return FeatureVector(median_pool(vectors), layout_for(spec.family, embedding.dim))


def _bundle_text(bundle: ContextBundle) -> str:
    # Rebuild a text with the original offsets from the token surfaces.
    length = bundle.full[-1].end if bundle.full else 0
    chars = [' '] * length
    for token in bundle.full:
        if len(token.surface) == token.end - token.start:
            chars[token.start:token.end] = token.surface
    return ''.join(chars)


# ---------------------------------------------------------------------------
# Feature files: length-prefixed little-endian float32 records + JSON sidecar
# ---------------------------------------------------------------------------

def write_features(path: Union[str, Path], vectors: Sequence[np.ndarray],
                   layout: Sequence[LayoutEntry], ids: Sequence[str] = (),
                   labels: Sequence[str] = (), extra: dict | None = None) -> Path:
    """Write records as ``uint32 length`` followed by that many float32 values.

    The layout, ids and labels go to ``<path>.json``. Returns the sidecar path.
    """
    path = Path(path)
    with open(path, 'wb') as handle:
        for vector in vectors:
            values = np.asarray(vector, dtype='<f4')
            handle.write(struct.pack('<I', len(values)))
            handle.write(values.tobytes())
    sidecar = path.with_name(path.name + '.json')
    meta = {'layout': [entry.__dict__ for entry in layout], 'ids': list(ids),
            'labels': list(labels), 'count': len(vectors)}
    meta.update(extra or {})
    sidecar.write_text(json.dumps(meta, indent=1))
    return sidecar


def read_feature_records(handle: BinaryIO) -> list[np.ndarray]:
    records = []
    while True:
        header = handle.read(4)
        if not header:
            return records
        if len(header) < 4:
            raise ValueError('truncated feature record header')
        (length,) = struct.unpack('<I', header)
        payload = handle.read(4 * length)
        if len(payload) < 4 * length:
            raise ValueError('truncated feature record')
        records.append(np.frombuffer(payload, dtype='<f4').astype(np.float64))


def read_features(path: Union[str, Path]) -> tuple[np.ndarray, dict]:
    """Load a feature file and its sidecar; returns ``(matrix, metadata)``."""
    path = Path(path)
    with open(path, 'rb') as handle:
        records = read_feature_records(handle)
    meta = json.loads(path.with_name(path.name + '.json').read_text())
    meta['layout'] = tuple(LayoutEntry(**entry) for entry in meta['layout'])
    if not records:
        width = meta['layout'][-1].end if meta['layout'] else 0
        return np.zeros((0, width)), meta
    return np.vstack(records), meta
