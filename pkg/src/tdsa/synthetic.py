"""Small synthetic corpora and resource files for demos and tests.

Sentences mention a target followed by a sentiment cue. Positive and
negative cue words get embeddings pushed apart along the first dimension,
so the task is learnable but not trivially separable once label noise is
added.
"""
from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np

from .corpus import Dataset, Label, TargetInstance, write_jsonl
from .text import tokenize

TARGETS = ('camera', 'battery', 'screen', 'price', 'phone', 'battery life')
CUES = {
    Label.POS: ('good', 'great', 'love', 'excellent'),
    Label.NEG: ('bad', 'awful', 'hate', 'terrible'),
    Label.NEU: ('is', 'has', 'seems', 'was'),
}
FILLER = ('the', 'my', 'new', 'today', 'really', 'and', 'it', 'this', 'so', 'with')


def make_dataset(n: int, seed: int = 0, noise: float = 0.1, name: str = 'synthetic',
                 repeat_rate: float = 0.15) -> Dataset:
    """``n`` instances cycling through the three labels.

    :param noise: probability that an instance's label is replaced by a random one.
    :param repeat_rate: probability that the target is mentioned twice.
    """
    rng = np.random.default_rng(seed)
    labels = list(Label)
    instances = []
    for index in range(n):
        label = labels[index % 3]
        target = TARGETS[rng.integers(len(TARGETS))]
        cue = CUES[label][rng.integers(4)]
        left = [FILLER[i] for i in rng.integers(len(FILLER), size=rng.integers(0, 4))]
        right = [FILLER[i] for i in rng.integers(len(FILLER), size=rng.integers(0, 4))]
        words = left + [target, cue] + right
        if rng.random() < repeat_rate:
            words += ['and', target]
        text = ' '.join(words)
        spans, position = [], 0
        while True:
            found = text.find(target, position)
            if found < 0:
                break
            spans.append((found, found + len(target)))
            position = found + len(target)
        if rng.random() < noise:
            label = labels[rng.integers(3)]
        instances.append(TargetInstance(f'{name}-{index}', text, target, tuple(spans), label))
    return Dataset(name, instances)


def vocabulary() -> list[str]:
    words = {w for phrase in TARGETS for w in phrase.split()}
    words.update(w for cues in CUES.values() for w in cues)
    words.update(FILLER)
    return sorted(words)


def make_embeddings(dim: int = 6, seed: int = 0, signal: float = 1.0) -> dict:
    """Word -> vector with polarity signal on the first coordinate."""
    rng = np.random.default_rng(seed)
    vectors = {}
    for word in vocabulary():
        vector = rng.normal(scale=0.5, size=dim)
        if word in CUES[Label.POS]:
            vector[0] += signal
        elif word in CUES[Label.NEG]:
            vector[0] -= signal
        elif word in CUES[Label.NEU] and dim > 1:
            vector[1] += signal
        vectors[word] = vector
    return vectors


def write_embeddings(path: Union[str, Path], vectors: dict, header: bool = False) -> Path:
    path = Path(path)
    dim = len(next(iter(vectors.values())))
    lines = [f'{len(vectors)} {dim}'] if header else []
    lines += [word + ' ' + ' '.join(repr(float(v)) for v in vector) for word, vector in vectors.items()]
    path.write_text('\n'.join(lines) + '\n')
    return path


def write_conll(path: Union[str, Path], dataset: Dataset) -> Path:
    """One chain-shaped parse per instance (each token headed by the next)."""
    blocks = []
    for instance in dataset:
        tokens = tokenize(instance.text)
        lines = [f'# sent_id = {instance.id}']
        for i, token in enumerate(tokens, 1):
            head = i + 1 if i < len(tokens) else 0
            lines.append(f'{i}\t{instance.text[token.start:token.end]}\t_\t_\t_\t_\t{head}\tdep\t_\t_')
        blocks.append('\n'.join(lines))
    Path(path).write_text('\n\n'.join(blocks) + '\n')
    return Path(path)


def write_lexicons(directory: Union[str, Path]) -> dict:
    """Hu-Liu style word lists built from the cue words; returns config entries."""
    directory = Path(directory)
    (directory / 'positive-words.txt').write_text(
        '; synthetic positive list\n' + '\n'.join(CUES[Label.POS]) + '\n')
    (directory / 'negative-words.txt').write_text(
        '; synthetic negative list\n' + '\n'.join(CUES[Label.NEG]) + '\n')
    return {'hl_pos_path': 'positive-words.txt', 'hl_neg_path': 'negative-words.txt'}


def write_workspace(root: Union[str, Path], n_train: int = 90, n_test: int = 45, seed: int = 0,
                    dim: int = 6, noise: float = 0.1) -> dict:
    """Write a complete experiment workspace under ``root``; returns a config dict.

    Paths in the config are relative, so ``TDSA_DATA_DIR`` must point at
    ``root`` (or the caller runs from it).
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    train = make_dataset(n_train, seed, noise, name='train')
    test = make_dataset(n_test, seed + 1, noise, name='test')
    write_jsonl(train, root / 'train.jsonl')
    write_jsonl(test, root / 'test.jsonl')
    write_conll(root / 'train.conll', train)
    write_conll(root / 'test.conll', test)
    write_embeddings(root / 'vectors.txt', make_embeddings(dim, seed))
    lexicons = write_lexicons(root)
    return {
        'dataset': {'name': 'synthetic', 'format': 'jsonl', 'train': ['train.jsonl'],
                    'test': ['test.jsonl'], 'conll_train': 'train.conll', 'conll_test': 'test.conll'},
        'method': {'name': 'target-dep'},
        'embeddings': {'use': ['toy'], 'toy': {'path': 'vectors.txt', 'dim': dim}},
        'lexicons': lexicons,
        'training': {'c_value': 1.0},
        'output': {'results_dir': str(root / 'results')},
    }
