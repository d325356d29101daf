"""Dataset parsing into one canonical target-instance representation.

Every supported corpus format is converted into a :class:`Dataset` of
:class:`TargetInstance` objects. Parsers are pure functions of their input
bytes; records that cannot be converted are counted in ``Dataset.meta`` and
logged instead of aborting the parse, so full-corpus counts stay auditable.
"""
from __future__ import annotations

import io
import json
import logging
import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from enum import IntEnum
from pathlib import Path
from typing import IO, Iterable, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

Span = tuple[int, int]
BytesLike = Union[bytes, str]


class CorpusFormatError(ValueError):
    """Raised when input bytes cannot be read as the declared format."""


class InstanceError(ValueError):
    """Raised when a target instance violates its span/label invariants."""


class Label(IntEnum):
    """Three-way sentiment label. The integer order is the tie-break order."""

    NEG = 0
    NEU = 1
    POS = 2

    @property
    def word(self) -> str:
        return _LABEL_WORDS[self]

    @classmethod
    def parse(cls, value) -> "Label":
        """Map ``"positive"``/``"pos"``/``1``/``"-1"`` style values to a label.

        :raises ValueError: for anything outside the three classes
                            (e.g. ``"conflict"`` or ``2``).
        """
        if isinstance(value, Label):
            return value
        key = str(value).strip().lower()
        try:
            return _LABEL_LOOKUP[key]
        except KeyError:
            raise ValueError(f'not a three-class sentiment label: {value!r}') from None


_LABEL_WORDS = {Label.NEG: 'negative', Label.NEU: 'neutral', Label.POS: 'positive'}
_LABEL_LOOKUP = {
    'negative': Label.NEG, 'neg': Label.NEG, '-1': Label.NEG,
    'neutral': Label.NEU, 'neu': Label.NEU, '0': Label.NEU,
    'positive': Label.POS, 'pos': Label.POS, '1': Label.POS,
}


@dataclass(frozen=True)
class TargetInstance:
    """One text with one annotated target (one or more occurrences)."""

    id: str
    text: str
    target: str
    spans: tuple[Span, ...]
    label: Label

    def __post_init__(self):
        spans = tuple((int(s), int(e)) for s, e in self.spans)
        object.__setattr__(self, 'spans', spans)
        if not isinstance(self.label, Label):
            raise InstanceError(f'{self.id}: label must be a Label, got {self.label!r}')
        if not spans:
            raise InstanceError(f'{self.id}: no spans')
        previous_end = -1
        target = self.target.lower()
        for start, end in spans:
            if not 0 <= start < end <= len(self.text):
                raise InstanceError(f'{self.id}: span ({start}, {end}) out of bounds')
            if start < previous_end:
                raise InstanceError(f'{self.id}: spans unsorted or overlapping')
            if self.text[start:end].lower() != target:
                raise InstanceError(
                    f'{self.id}: span ({start}, {end}) covers '
                    f'{self.text[start:end]!r}, expected {self.target!r}')
            previous_end = end


@dataclass(frozen=True)
class Dataset:
    """An ordered, immutable collection of target instances.

    ``meta`` holds parse bookkeeping (rejected/skipped counts and the ids of
    multi-occurrence instances); it takes no part in equality.
    """

    name: str
    instances: tuple[TargetInstance, ...]
    medium: str = 'written'
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'instances', tuple(self.instances))
        seen = set()
        for instance in self.instances:
            if instance.id in seen:
                raise InstanceError(f'duplicate instance id {instance.id!r} in {self.name}')
            seen.add(instance.id)

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def __getitem__(self, index):
        return self.instances[index]

    @property
    def labels(self) -> list[Label]:
        return [instance.label for instance in self.instances]


@dataclass(frozen=True)
class DatasetStats:
    size: int
    ats: float
    uniq: int
    avg_len: float
    s1: float
    s2: float
    s3: float

    def as_row(self) -> dict:
        return {'size': self.size, 'ats': round(self.ats, 2), 'uniq': self.uniq,
                'avg_len': round(self.avg_len, 2), 's1': round(self.s1, 2),
                's2': round(self.s2, 2), 's3': round(self.s3, 2)}


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f'test_fraction must lie in (0, 1), got {self.test_fraction}')
        if self.seed < 0:
            raise ValueError('seed must be non-negative')


class _ParseLog:
    """Counts records that were dropped while parsing one corpus."""

    def __init__(self, name: str):
        self.name = name
        self.counts = {'rejected': 0, 'skipped': 0, 'conflict': 0}
        self.multi_occurrence: list[str] = []

    def reject(self, record, reason):
        self.counts['rejected'] += 1
        logger.warning('%s: rejected record %s: %s', self.name, record, reason)

    def skip(self, record, reason):
        self.counts['skipped'] += 1
        logger.info('%s: skipped record %s: %s', self.name, record, reason)

    def meta(self) -> dict:
        return dict(self.counts, multi_occurrence=list(self.multi_occurrence))


def _as_text(data: BytesLike) -> str:
    if isinstance(data, bytes):
        return data.decode('utf-8-sig')
    return data


def _make(log: _ParseLog, record, **kwargs):
    try:
        return TargetInstance(**kwargs)
    except InstanceError as error:
        log.reject(record, error)
        return None


def parse_semeval(xml_bytes: BytesLike, name: str = 'semeval',
                  medium: str = 'written') -> Dataset:
    """Parse a SemEval-2014 ABSA XML file (``sentence``/``aspectTerm`` elements).

    Conflict-labelled aspect terms are dropped and counted under
    ``meta['conflict']``.

    :raises CorpusFormatError: when the XML is malformed; the message carries
                               the line number.
    """
    data = xml_bytes.encode('utf-8') if isinstance(xml_bytes, str) else xml_bytes
    try:
        root = ET.fromstring(data)
    except ET.ParseError as error:
        line, column = error.position
        raise CorpusFormatError(f'{name}: malformed XML at line {line}, column {column}: {error}') from None
    log = _ParseLog(name)
    instances = []
    for sentence in root.iter('sentence'):
        sentence_id = sentence.get('id', str(len(instances)))
        text_element = sentence.find('text')
        if text_element is None or text_element.text is None:
            log.skip(sentence_id, 'sentence without text')
            continue
        text = text_element.text.replace('\xa0', ' ')
        for index, term in enumerate(sentence.iter('aspectTerm')):
            record = f'{sentence_id}#{index}'
            polarity = term.get('polarity', '')
            if polarity == 'conflict':
                log.counts['conflict'] += 1
                continue
            try:
                label = Label.parse(polarity)
                span = (int(term.get('from')), int(term.get('to')))
            except (TypeError, ValueError) as error:
                log.reject(record, error)
                continue
            instance = _make(log, record, id=record, text=text,
                             target=term.get('term', '').replace('\xa0', ' '),
                             spans=(span,), label=label)
            if instance is not None:
                instances.append(instance)
    return Dataset(name, instances, medium=medium, meta=log.meta())


_PLACEHOLDER = '$T$'


def parse_dong(text_bytes: BytesLike, name: str = 'dong') -> Dataset:
    """Parse the three-lines-per-record Twitter format.

    Each record is a sentence containing ``$T$``, the target, and a label in
    ``{-1, 0, 1}``. The placeholder is replaced by the target; the span is the
    position of the first placeholder.

    :raises CorpusFormatError: when the line count is not a multiple of three.
    """
    lines = _as_text(text_bytes).splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) % 3:
        raise CorpusFormatError(f'{name}: {len(lines)} lines do not divide into 3-line records')
    log = _ParseLog(name)
    instances = []
    for record in range(len(lines) // 3):
        sentence, target, raw_label = (line.strip() for line in lines[3 * record: 3 * record + 3])
        if raw_label not in ('-1', '0', '1'):
            log.reject(record, f'label {raw_label!r} outside {{-1, 0, 1}}')
            continue
        start = sentence.find(_PLACEHOLDER)
        if start < 0:
            log.reject(record, 'missing $T$ placeholder')
            continue
        if not target:
            log.reject(record, 'empty target')
            continue
        text = sentence.replace(_PLACEHOLDER, target)
        instance = _make(log, record, id=str(record), text=text, target=target,
                         spans=((start, start + len(target)),),
                         label=Label.parse(raw_label))
        if instance is not None:
            instances.append(instance)
    return Dataset(name, instances, meta=log.meta())


_NO_SENTIMENT = {'_', '-', 'o', 'none', ''}


def _mitchell_tag(columns: list[str]) -> tuple[str, str | None]:
    # 3+ columns: token, entity tag, sentiment; 2 columns: token, BIO-sentiment tag.
    if len(columns) >= 3:
        tag, sentiment = columns[1], columns[2]
    else:
        tag = columns[1]
        sentiment = tag[2:] if tag[:2] in ('B-', 'I-') else ''
    prefix = tag[:1].upper() if tag[1:2] == '-' else 'O'
    sentiment = None if sentiment.lower() in _NO_SENTIMENT else sentiment
    return prefix, sentiment


def parse_mitchell(conll_bytes: BytesLike, name: str = 'mitchell') -> Dataset:
    """Parse token-per-line BIO files with entity sentiment.

    Sentences are blank-line separated, an optional ``## ...`` line names the
    sentence, and token lines hold ``token tag [sentiment]``. Each contiguous
    B/I run becomes one instance; the text is the tokens joined by single
    spaces. Runs whose tokens disagree on sentiment are rejected.
    """
    log = _ParseLog(name)
    instances = []
    blocks: list[tuple[str | None, list[list[str]]]] = []
    header, rows = None, []
    for line in _as_text(conll_bytes).splitlines():
        stripped = line.strip()
        if not stripped:
            if rows:
                blocks.append((header, rows))
            header, rows = None, []
        elif stripped.startswith('##'):
            if rows:
                blocks.append((header, rows))
                rows = []
            header = stripped.lstrip('#').strip()
        else:
            columns = stripped.split()
            if len(columns) < 2:
                log.reject(stripped, 'token line needs at least two columns')
                continue
            rows.append(columns)
    if rows:
        blocks.append((header, rows))

    for ordinal, (header, rows) in enumerate(blocks):
        sentence_id = header if header else str(ordinal)
        tokens = [row[0] for row in rows]
        offsets, position = [], 0
        for token in tokens:
            offsets.append((position, position + len(token)))
            position += len(token) + 1
        text = ' '.join(tokens)
        runs: list[list[int]] = []
        for index, row in enumerate(rows):
            prefix, _ = _mitchell_tag(row)
            if prefix == 'B' or (prefix == 'I' and not (runs and runs[-1][-1] == index - 1)):
                runs.append([index])
            elif prefix == 'I':
                runs[-1].append(index)
        for run_index, run in enumerate(runs):
            record = f'{sentence_id}#{run_index}'
            sentiments = {_mitchell_tag(rows[i])[1] for i in run}
            if sentiments == {None}:
                log.skip(record, 'entity without sentiment')
                continue
            if len(sentiments) > 1:
                log.reject(record, f'conflicting sentiments {sorted(map(str, sentiments))}')
                continue
            try:
                label = Label.parse(sentiments.pop())
            except ValueError as error:
                log.reject(record, error)
                continue
            start, end = offsets[run[0]][0], offsets[run[-1]][1]
            instance = _make(log, record, id=record, text=text, target=text[start:end],
                             spans=((start, end),), label=label)
            if instance is not None:
                instances.append(instance)
    return Dataset(name, instances, meta=log.meta())


def _json_records(data: BytesLike, list_keys: Sequence[str]) -> list:
    """Read a JSON array, a JSON object wrapping one, or JSON lines."""
    text = _as_text(data).strip()
    if not text:
        return []
    try:
        payload = json.loads(text)
    except json.JSONDecodeError:
        payload = []
        for number, line in enumerate(text.splitlines(), 1):
            if line.strip():
                try:
                    payload.append(json.loads(line))
                except json.JSONDecodeError as error:
                    raise CorpusFormatError(f'invalid JSON on line {number}: {error}') from None
    if isinstance(payload, dict):
        for key in list_keys:
            if key in payload:
                return list(payload[key])
        return [payload]
    return list(payload)


def _first(mapping: dict, *keys, default=None):
    for key in keys:
        if key in mapping:
            return mapping[key]
    return default


def parse_election(file_set: Iterable[BytesLike], name: str = 'election') -> Dataset:
    """Parse election-tweet annotation documents.

    Each document is JSON (an object, an array of objects, or JSON lines)
    with one object per tweet::

        {"id": "...", "content": "...",
         "entities": [{"entity": "...", "offset": 17, "sentiment": "negative"}]}

    ``offset`` may instead be given as ``"spans": [[start, end], ...]``.
    Entities without any span are skipped and counted under
    ``meta['skipped']``; they cannot be tied to one occurrence.
    """
    log = _ParseLog(name)
    instances = []
    for document in file_set:
        for tweet in _json_records(document, ('tweets', 'data')):
            tweet_id = str(_first(tweet, 'id', 'tweet_id', default=len(instances)))
            text = _first(tweet, 'content', 'text', default='')
            for index, entity in enumerate(_first(tweet, 'entities', 'targets', 'items', default=[])):
                record = f'{tweet_id}#{index}'
                target = _first(entity, 'entity', 'target', default='')
                spans = entity.get('spans')
                offset = entity.get('offset')
                if spans is None and offset is not None:
                    spans = [(int(offset), int(offset) + len(target))]
                if not spans:
                    log.skip(record, 'annotation without a target span')
                    continue
                try:
                    label = Label.parse(_first(entity, 'sentiment', 'polarity', default=''))
                except ValueError as error:
                    log.reject(record, error)
                    continue
                instance = _make(log, record, id=record, text=text, target=target,
                                 spans=tuple(sorted(tuple(s) for s in spans)), label=label)
                if instance is not None:
                    instances.append(instance)
    return Dataset(name, instances, meta=log.meta())


def find_spans(text: str, phrase: str) -> list[Span]:
    """All non-overlapping case-insensitive matches of ``phrase`` in ``text``."""
    if not phrase:
        return []
    return [(m.start(), m.end()) for m in re.finditer(re.escape(phrase), text, re.IGNORECASE)]


def parse_youtubean(json_bytes: BytesLike, name: str = 'youtubean') -> Dataset:
    """Parse YouTube review records (sentence, aspect, polarity).

    Records with ``from``/``to`` offsets use them; otherwise every
    case-insensitive match of the aspect becomes a span and the record id is
    listed under ``meta['multi_occurrence']`` when there is more than one.
    """
    log = _ParseLog(name)
    instances = []
    for index, record in enumerate(_json_records(json_bytes, ('sentences', 'data', 'records'))):
        record_id = str(_first(record, 'id', default=index))
        text = _first(record, 'sentence', 'text', default='')
        aspect = _first(record, 'aspect', 'target', 'term', default='')
        try:
            label = Label.parse(_first(record, 'polarity', 'sentiment', 'label', default=''))
        except ValueError as error:
            log.reject(record_id, error)
            continue
        if 'from' in record and 'to' in record:
            spans = [(int(record['from']), int(record['to']))]
        else:
            spans = find_spans(text, aspect)
            if not spans:
                log.reject(record_id, f'aspect {aspect!r} not found in sentence')
                continue
            if len(spans) > 1:
                log.multi_occurrence.append(record_id)
        instance = _make(log, record_id, id=record_id, text=text, target=aspect,
                         spans=tuple(spans), label=label)
        if instance is not None:
            instances.append(instance)
    return Dataset(name, instances, medium='spoken', meta=log.meta())


def concat(datasets: Sequence[Dataset], name: str | None = None) -> Dataset:
    """Join datasets in order; meta counts are summed."""
    meta: dict = {'rejected': 0, 'skipped': 0, 'conflict': 0, 'multi_occurrence': []}
    for dataset in datasets:
        for key, value in dataset.meta.items():
            meta[key] = meta.get(key, 0 if not isinstance(value, list) else []) + value
    name = name or '+'.join(d.name for d in datasets)
    medium = datasets[0].medium if datasets else 'written'
    return Dataset(name, [i for d in datasets for i in d], medium=medium, meta=meta)


FORMATS = ('semeval', 'dong', 'mitchell', 'election', 'youtubean', 'jsonl')


def load(fmt: str, paths: Sequence[Union[str, Path]], name: str | None = None) -> Dataset:
    """Read files of one format and parse them into a single dataset.

    A directory given for the election format is expanded to its ``*.json``
    files in sorted order. When several files are given, instance ids are
    prefixed with the file stem so they stay unique.
    """
    paths = [Path(p) for p in paths]
    name = name or (paths[0].stem if paths else fmt)
    if fmt == 'election':
        files = []
        for path in paths:
            files.extend(sorted(path.glob('*.json')) if path.is_dir() else [path])
        return parse_election([f.read_bytes() for f in files], name=name)
    parsers = {'semeval': parse_semeval, 'dong': parse_dong, 'mitchell': parse_mitchell,
               'youtubean': parse_youtubean,
               'jsonl': lambda data, name: read_jsonl(io.StringIO(_as_text(data)), name=name)}
    if fmt not in parsers:
        raise ValueError(f'unknown format {fmt!r}; expected one of {FORMATS}')
    parts = [parsers[fmt](path.read_bytes(), name=f'{name}:{path.name}') for path in paths]
    if len(parts) == 1:
        return Dataset(name, parts[0].instances, parts[0].medium, parts[0].meta)
    renamed = []
    for path, part in zip(paths, parts):
        instances = [replace(i, id=f'{path.stem}/{i.id}') for i in part]
        renamed.append(Dataset(part.name, instances, part.medium, part.meta))
    return concat(renamed, name=name)


def _allocate_test_counts(class_sizes: dict, fraction: float) -> dict:
    # Largest-remainder allocation: every class within one instance of its ideal.
    ideal = {c: fraction * n for c, n in class_sizes.items()}
    counts = {c: math.floor(v) for c, v in ideal.items()}
    total = round(fraction * sum(class_sizes.values()))
    by_remainder = sorted(ideal, key=lambda c: (-(ideal[c] - counts[c]), c))
    for c in by_remainder[:max(0, total - sum(counts.values()))]:
        counts[c] += 1
    return {c: min(max(k, 1), class_sizes[c] - 1) for c, k in counts.items()}


def stratified_holdout(labels: Sequence, fraction: float, seed: int) -> tuple[list[int], list[int]]:
    """Seeded stratified ``(train_indices, heldout_indices)``, each in input order.

    Every class contributes within one instance of ``fraction`` of its size
    to the held-out part.

    :raises ValueError: naming the class when a label has a single instance.
    """
    by_class: dict = {}
    for index, label in enumerate(labels):
        by_class.setdefault(label, []).append(index)
    for label, members in sorted(by_class.items()):
        if len(members) < 2:
            name = getattr(label, 'word', label)
            raise ValueError(f'class {name} has {len(members)} instance; '
                             'a stratified split needs at least 2')
    held_counts = _allocate_test_counts({c: len(m) for c, m in by_class.items()}, fraction)
    rng = np.random.default_rng(seed)
    held = set()
    for label in sorted(by_class):
        members = by_class[label]
        held.update(members[i] for i in rng.permutation(len(members))[:held_counts[label]])
    train = [i for i in range(len(labels)) if i not in held]
    return train, sorted(held)


def make_split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Stratified, seeded train/test split; instance order is preserved.

    :raises ValueError: naming the class when a label has a single instance.
    """
    labels = dataset.labels if spec.stratified else [0] * len(dataset)
    train, test = stratified_holdout(labels, spec.test_fraction, spec.seed)
    return (Dataset(f'{dataset.name}-train', [dataset[i] for i in train], dataset.medium),
            Dataset(f'{dataset.name}-test', [dataset[i] for i in test], dataset.medium))


def sentence_key(text: str) -> str:
    return ' '.join(text.split())


def dataset_stats(dataset: Dataset) -> DatasetStats:
    """Size, targets per sentence, unique targets, length and label mix.

    Sentences are identified by their whitespace-normalised text; the average
    length counts tokens once per target instance.
    """
    from .text import tokenize

    if not len(dataset):
        raise ValueError('statistics need a non-empty dataset')
    sentence_labels: dict[str, set] = {}
    lengths: dict[str, int] = {}
    for instance in dataset:
        key = sentence_key(instance.text)
        sentence_labels.setdefault(key, set()).add(instance.label)
        if key not in lengths:
            lengths[key] = len(tokenize(instance.text))
    n_sentences = len(sentence_labels)
    distinct = [len(labels) for labels in sentence_labels.values()]
    total_length = sum(lengths[sentence_key(i.text)] for i in dataset)
    return DatasetStats(
        size=len(dataset),
        ats=len(dataset) / n_sentences,
        uniq=len({instance.target.lower() for instance in dataset}),
        avg_len=total_length / len(dataset),
        s1=100.0 * distinct.count(1) / n_sentences,
        s2=100.0 * distinct.count(2) / n_sentences,
        s3=100.0 * distinct.count(3) / n_sentences,
    )


def instance_to_json(instance: TargetInstance) -> dict:
    return {'id': instance.id, 'text': instance.text, 'target': instance.target,
            'spans': [list(span) for span in instance.spans], 'label': instance.label.word}


def instance_from_json(record: dict, index: int = 0) -> TargetInstance:
    missing = [k for k in ('id', 'text', 'target', 'spans', 'label') if k not in record]
    if missing:
        raise CorpusFormatError(f'record {index}: missing keys {missing}')
    try:
        spans = tuple((int(s), int(e)) for s, e in record['spans'])
        return TargetInstance(str(record['id']), record['text'], record['target'],
                              spans, Label.parse(record['label']))
    except (TypeError, ValueError) as error:
        raise CorpusFormatError(f'record {index}: {error}') from None


def write_jsonl(dataset: Dataset, sink: Union[str, Path, IO[str]]) -> None:
    """Write one canonical JSON object per instance."""
    if isinstance(sink, (str, Path)):
        with open(sink, 'w', encoding='utf-8') as handle:
            write_jsonl(dataset, handle)
        return
    for instance in dataset:
        sink.write(json.dumps(instance_to_json(instance), ensure_ascii=False) + '\n')


def read_jsonl(source: Union[str, Path, IO[str]], name: str | None = None,
               medium: str = 'written') -> Dataset:
    """Read canonical JSONL written by :func:`write_jsonl`.

    :raises CorpusFormatError: with the 0-based record index on schema errors.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding='utf-8') as handle:
            return read_jsonl(handle, name=name or Path(source).stem, medium=medium)
    instances = []
    for line in source:
        if not line.strip():
            continue
        index = len(instances)
        try:
            record = json.loads(line)
        except json.JSONDecodeError as error:
            raise CorpusFormatError(f'record {index}: invalid JSON: {error}') from None
        instances.append(instance_from_json(record, index))
    return Dataset(name or 'dataset', instances, medium=medium)


def dumps_jsonl(dataset: Dataset) -> str:
    buffer = io.StringIO()
    write_jsonl(dataset, buffer)
    return buffer.getvalue()
