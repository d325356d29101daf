"""Config-driven experiments, a content-addressed results store and table reports.

A config is a TOML document (or the equivalent dict) with the sections
``[dataset]``, ``[method]``, ``[embeddings]``, ``[lexicons]``, ``[training]``
and optionally ``[text]`` and ``[output]``. Relative paths are resolved
against ``$TDSA_DATA_DIR`` (or the working directory when it is unset).
"""
from __future__ import annotations

import copy
import datetime
import glob as globlib
import hashlib
import json
import logging
import math
import os
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from . import __version__
from . import corpus, embedding as emb, lexicon as lex, linear, pooling, recurrent
from .corpus import Dataset, Label
from .metrics import CLASSES, accuracy, macro_f1, per_class_scores
from .text import extract_contexts

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

logger = logging.getLogger(__name__)

NP_METHODS = tuple(m.value for m in pooling.Method)
LSTM_METHODS = tuple(a.value for a in recurrent.Arch)
TABLE6_METHODS = ('target-dep', 'target-dep+', 'tdparse', 'tdparse+', 'lstm', 'tdlstm', 'tclstm')

DEFAULTS = {
    'dataset': {'split': {'test_fraction': 0.2, 'seed': 0}},
    'method': {'lexicons': [], 'polarity_split': False, 'dep_depth': None},
    'embeddings': {'use': [], 'filter_vocab': True},
    'lexicons': {},
    'training': {
        'scaling': True, 'c_value': None, 'c_grid': list(linear.DEFAULT_C_GRID), 'folds': 5,
        'seed': 0, 'tolerance': 1e-4, 'max_iterations': 10000,
        'learning_rate': 0.01, 'max_epochs': 300, 'patience': 10, 'hidden_dim': None,
        'validation_fraction': 0.2, 'validation_seed': 0, 'include_target': True, 'seeds': [],
        'evaluation': 'holdout',
    },
    'text': {'split_at_spans': True},
    'output': {'results_dir': 'results'},
}


class ResourceError(FileNotFoundError):
    """A path named by a config key does not resolve."""


class ExperimentError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f'stage {stage!r} failed: {cause}')
        self.stage = stage
        self.cause = cause


def _merge(base: dict, override: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(source: Union[str, Path, dict]) -> dict:
    """Read a TOML config (or take a dict) and fill in every default."""
    if isinstance(source, dict):
        raw = source
    else:
        with open(source, 'rb') as handle:
            raw = tomllib.load(handle)
    return _merge(DEFAULTS, raw)


def data_root() -> Path:
    return Path(os.environ.get('TDSA_DATA_DIR', '.'))


def resolve(config: dict, dotted_key: str) -> Path | None:
    """Resolve the path stored under ``dotted_key``; ``None`` when the key is unset.

    :raises ResourceError: naming the key when the path does not exist.
    """
    node = config
    for part in dotted_key.split('.'):
        if not isinstance(node, dict) or part not in node:
            return None
        node = node[part]
    if node is None:
        return None
    path = Path(node)
    if not path.is_absolute():
        path = data_root() / path
    if not path.exists():
        raise ResourceError(f'config key {dotted_key!r}: {path} does not exist')
    return path


def _resolve_list(config: dict, dotted_key: str) -> list[Path]:
    section, key = dotted_key.rsplit('.', 1)
    node = config
    for part in section.split('.'):
        node = node.get(part, {})
    values = node.get(key)
    if values is None:
        return []
    values = [values] if isinstance(values, str) else list(values)
    paths = []
    for index, value in enumerate(values):
        path = Path(value) if Path(value).is_absolute() else data_root() / value
        if not path.exists():
            raise ResourceError(f'config key {dotted_key!r}[{index}]: {path} does not exist')
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# Resource loading
# ---------------------------------------------------------------------------

LEXICON_KEYS = {'mpqa': ('mpqa_path',), 'hl': ('hl_pos_path', 'hl_neg_path'), 'nrc': ('nrc_path',)}


def load_lexicon(config: dict, name: str) -> lex.SentimentLexicon:
    name = name.lower()
    if name not in LEXICON_KEYS:
        raise ValueError(f'unknown lexicon {name!r}; expected one of {sorted(LEXICON_KEYS)}')
    paths = []
    for key in LEXICON_KEYS[name]:
        path = resolve(config, f'lexicons.{key}')
        if path is None:
            raise ResourceError(f'config key lexicons.{key} is not set')
        paths.append(path.read_bytes())
    if name == 'mpqa':
        return lex.parse_mpqa(paths[0])
    if name == 'hl':
        return lex.parse_hl(paths[0], paths[1])
    return lex.parse_nrc(paths[0])


def load_lexicons(config: dict, names: Sequence[str]) -> lex.SentimentLexicon | None:
    if not names:
        return None
    lexicons = [load_lexicon(config, name) for name in names]
    return lexicons[0] if len(lexicons) == 1 else lex.union(lexicons)


def load_embedding(config: dict, name: str) -> emb.EmbeddingMatrix:
    path = resolve(config, f'embeddings.{name}.path')
    if path is None:
        raise ResourceError(f'config key embeddings.{name}.path is not set')
    matrix = emb.load_text_embeddings(path.read_bytes(), name=name)
    expected = config['embeddings'].get(name, {}).get('dim')
    if expected is not None and expected != matrix.dim:
        raise ValueError(f'embeddings.{name}.dim is {expected} but {path} holds {matrix.dim}-d vectors')
    return matrix


def load_embeddings(config: dict, names: Sequence[str]) -> emb.EmbeddingMatrix:
    if not names:
        raise ResourceError('config key embeddings.use names no embeddings')
    matrices = [load_embedding(config, name) for name in names]
    combined = matrices[0]
    for other in matrices[1:]:
        combined = emb.concat(combined, other)
    return combined


def load_datasets(config: dict) -> tuple[Dataset, Dataset]:
    """Train and test datasets, either from explicit files or a seeded split."""
    section = config['dataset']
    fmt = section.get('format')
    name = section.get('name', fmt)
    if section.get('train'):
        train = corpus.load(fmt, _resolve_list(config, 'dataset.train'), name=f'{name}-train')
        if not section.get('test'):
            # cross-validation runs need no held-out part
            return train, Dataset(f'{name}-test', [])
        test = corpus.load(fmt, _resolve_list(config, 'dataset.test'), name=f'{name}-test')
        return train, test
    full = corpus.load(fmt, _resolve_list(config, 'dataset.path'), name=name)
    split = corpus.SplitSpec(section['split']['test_fraction'], section['split']['seed'])
    return corpus.make_split(full, split)


def load_graphs(config: dict, which: str, size: int) -> list[pooling.DepGraph]:
    path = resolve(config, f'dataset.conll_{which}')
    if path is None:
        raise ResourceError(f'config key dataset.conll_{which} is required by the TDParse methods')
    graphs = pooling.parse_conll(path.read_bytes())
    if len(graphs) != size:
        raise ValueError(f'{path} holds {len(graphs)} parses for {size} instances')
    return graphs


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

def _canonical(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(',', ':'), default=str)


@dataclass(frozen=True)
class ExperimentRecord:
    config: dict
    metrics: dict
    environment: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    content_hash: str = ''

    def __post_init__(self):
        if not self.content_hash:
            object.__setattr__(self, 'content_hash', self.compute_hash())

    def body(self) -> dict:
        return {'config': self.config, 'metrics': self.metrics,
                'environment': self.environment, 'artifacts': self.artifacts}

    def compute_hash(self) -> str:
        return hashlib.sha256(_canonical(self.body()).encode('utf-8')).hexdigest()

    def to_json(self) -> dict:
        return dict(self.body(), content_hash=self.content_hash)

    @classmethod
    def from_json(cls, payload: dict) -> "ExperimentRecord":
        record = cls(payload['config'], payload['metrics'], payload.get('environment', {}),
                     payload.get('artifacts', {}), payload.get('content_hash', ''))
        if record.content_hash != record.compute_hash():
            raise ValueError('experiment record content does not match its stored hash')
        return record

    @property
    def method(self) -> str:
        return self.config['method']['name']

    @property
    def dataset(self) -> str:
        return self.config['dataset'].get('name') or self.config['dataset'].get('format', '?')


def write_record(record: ExperimentRecord, directory: Union[str, Path]) -> Path:
    """Store a record as ``<hash prefix>.json``; identical content maps to the same file."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f'{record.content_hash[:16]}.json'
    text = json.dumps(record.to_json(), indent=1, sort_keys=True, default=str)
    temporary = path.with_suffix(f'.{os.getpid()}.tmp')
    temporary.write_text(text)
    os.replace(temporary, path)
    return path


def read_record(path: Union[str, Path]) -> ExperimentRecord:
    return ExperimentRecord.from_json(json.loads(Path(path).read_text()))


def read_records(pattern: str) -> list[ExperimentRecord]:
    return [read_record(path) for path in sorted(globlib.glob(pattern))]


def environment() -> dict:
    return {'version': __version__, 'python': platform.python_version(),
            'numpy': np.__version__,
            'timestamp': datetime.datetime.now(datetime.timezone.utc).isoformat()}


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------

def _evaluation(predicted: Sequence[Label], gold: Sequence[Label]) -> dict:
    scores = per_class_scores(predicted, gold)
    return {'accuracy': accuracy(predicted, gold), 'macro_f1': macro_f1(predicted, gold),
            'per_class': {cls.word: scores[cls] for cls in CLASSES}, 'n_test': len(gold)}


def corpus_vocabulary(datasets: Iterable[Dataset], split_at_spans: bool = True,
                      graphs: Iterable[pooling.DepGraph] = ()) -> set:
    vocab = set()
    for dataset in datasets:
        for instance in dataset:
            for bundle in extract_contexts(instance, split_at_spans):
                vocab.update(bundle.surfaces('full'))
                break
    for graph in graphs:
        vocab.update(graph.tokens)
    return vocab


def np_features(dataset: Dataset, spec: pooling.MethodSpec, matrix: emb.EmbeddingMatrix,
                split_at_spans: bool = True, graphs: Sequence[pooling.DepGraph] | None = None
                ) -> np.ndarray:
    rows = []
    for index, instance in enumerate(dataset):
        bundles = extract_contexts(instance, split_at_spans)
        graph = graphs[index] if graphs is not None else None
        rows.append(pooling.assemble_features(bundles, spec, matrix, graph, text=instance.text).values)
    return np.vstack(rows)


def _svm_config(training: dict, c_value: float) -> linear.SvmConfig:
    return linear.SvmConfig(c_value, training['tolerance'], training['max_iterations'],
                            training['seed'])


def run_np(config: dict, train: Dataset, test: Dataset, stage: list) -> tuple[dict, dict]:
    method = pooling.Method(config['method']['name'])
    training = config['training']
    split_at_spans = config['text']['split_at_spans']
    stage[0] = 'resources'
    lexicon = load_lexicons(config, config['method']['lexicons']) if method.needs_lexicon else None
    graphs_train = graphs_test = None
    if method.needs_graph:
        graphs_train = load_graphs(config, 'train', len(train))
        graphs_test = load_graphs(config, 'test', len(test)) if len(test) else []
    matrix = load_embeddings(config, config['embeddings']['use'])
    if config['embeddings']['filter_vocab']:
        keep = corpus_vocabulary([train, test], split_at_spans,
                                 (graphs_train or []) + (graphs_test or []))
        matrix = emb.filter_vocab(matrix, keep)
    spec = pooling.MethodSpec(method, lexicon, config['method']['polarity_split'],
                              config['method']['dep_depth'])
    stage[0] = 'features'
    x_train = np_features(train, spec, matrix, split_at_spans, graphs_train)
    y_train = train.labels
    c_value = training['c_value']
    if training['evaluation'] == 'cv':
        # k-fold accuracy on the training data; the best grid point when C is unset
        stage[0] = 'train'
        grid = [c_value] if c_value is not None else training['c_grid']
        best, scores = linear.cv_select_c(x_train, y_train, grid, training['folds'],
                                          training['seed'], training['scaling'],
                                          _svm_config(training, 1.0))
        return {'evaluation': 'cv', 'accuracy': scores[best], 'c_value': best,
                'cv_scores': {repr(c): v for c, v in scores.items()}, 'n_train': len(train),
                'n_features': int(x_train.shape[1])}, {}
    if training['evaluation'] != 'holdout':
        raise ValueError(f"training.evaluation must be 'holdout' or 'cv', got {training['evaluation']!r}")
    x_test = np_features(test, spec, matrix, split_at_spans, graphs_test)
    gold = test.labels
    stage[0] = 'train'
    extra = {}
    if c_value is None:
        c_value, scores = linear.cv_select_c(x_train, y_train, training['c_grid'], training['folds'],
                                             training['seed'], training['scaling'],
                                             _svm_config(training, 1.0))
        extra['cv_scores'] = {repr(c): s for c, s in scores.items()}
    if training['scaling']:
        scaler = linear.fit_scaler(x_train)
        x_train, x_test = scaler.transform(x_train), scaler.transform(x_test)
    model = linear.train_svm(x_train, y_train, _svm_config(training, c_value))
    stage[0] = 'evaluate'
    metrics = _evaluation(model.predict(x_test), gold)
    metrics.update(extra, c_value=c_value, n_features=int(x_train.shape[1]))
    return metrics, {}


def lstm_data(config: dict, train: Dataset, test: Dataset):
    """Model spec and padded inputs for the LSTM family (first occurrence of each target)."""
    arch = recurrent.Arch(config['method']['name'])
    training = config['training']
    split_at_spans = config['text']['split_at_spans']
    matrix = load_embeddings(config, config['embeddings']['use'])
    if config['embeddings']['filter_vocab']:
        matrix = emb.filter_vocab(matrix, corpus_vocabulary([train, test], split_at_spans))
    include_target = training['include_target']
    bundles_train = [extract_contexts(i, split_at_spans)[0] for i in train]
    bundles_test = [extract_contexts(i, split_at_spans)[0] for i in test]
    pad_length = recurrent.pad_length_for(bundles_train, arch, include_target)
    x_train = [recurrent.build_inputs(b, arch, matrix, pad_length, include_target) for b in bundles_train]
    x_test = [recurrent.build_inputs(b, arch, matrix, pad_length, include_target) for b in bundles_test]
    model = recurrent.ModelSpec(arch, training['hidden_dim'] or matrix.dim, matrix.dim)
    return model, x_train, x_test, pad_length


def _train_spec(training: dict, seed: int) -> recurrent.TrainSpec:
    return recurrent.TrainSpec(training['learning_rate'], training['max_epochs'],
                               training['patience'], seed, training['validation_fraction'],
                               training['validation_seed'])


def run_lstm(config: dict, train: Dataset, test: Dataset, stage: list) -> tuple[dict, dict]:
    training = config['training']
    stage[0] = 'features'
    model, x_train, x_test, pad_length = lstm_data(config, train, test)
    stage[0] = 'train'
    seeds = training['seeds']
    if seeds:
        study = recurrent.seed_study(model, x_train, train.labels, x_test, test.labels, seeds,
                                     _train_spec(training, seeds[0]))
        summary = study.summary
        metrics = {'macro_f1': summary['macro_f1']['mean'],
                   'accuracy': summary['accuracy']['mean'],
                   'seed_study': study.to_json(), 'n_test': len(test)}
    else:
        params, history = recurrent.train(model, x_train, train.labels,
                                           _train_spec(training, training['seed']))
        stage[0] = 'evaluate'
        metrics = _evaluation(recurrent.predict(params, model.arch, x_test), test.labels)
        metrics['epochs'] = len(history)
        metrics['best_val_accuracy'] = max(h['val_accuracy'] for h in history)
    metrics.update(pad_length=pad_length, hidden_dim=model.hidden_dim)
    return metrics, {}


def run_experiment(config: Union[str, Path, dict], persist: bool = True) -> ExperimentRecord:
    """Parse, featurise, train and score one configuration; store the record as JSON.

    :raises ResourceError: naming the config key of a missing resource.
    :raises ExperimentError: wrapping any other failure with the stage name.
    """
    config = load_config(config)
    stage = ['load']
    try:
        train, test = load_datasets(config)
        name = config['method']['name']
        if name in NP_METHODS:
            metrics, artifacts = run_np(config, train, test, stage)
        elif name in LSTM_METHODS:
            metrics, artifacts = run_lstm(config, train, test, stage)
        else:
            raise ValueError(f'unknown method {name!r}')
    except ResourceError:
        raise
    except Exception as error:
        raise ExperimentError(stage[0], error) from error
    record = ExperimentRecord(config, metrics, environment(), artifacts)
    if persist:
        path = write_record(record, config['output']['results_dir'])
        logger.info('wrote %s', path)
    return record


def mass_evaluation_configs(base: dict, datasets: dict,
                            methods: Sequence[str] = TABLE6_METHODS) -> list[dict]:
    """One config per (method, dataset) pair; ``datasets`` maps a name to a ``[dataset]`` section."""
    configs = []
    for dataset_name, section in datasets.items():
        for method in methods:
            override = {'dataset': dict(section, name=dataset_name), 'method': {'name': method}}
            configs.append(_merge(base, override))
    return configs


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

SHAPES = ('table2', 'table3', 'table4', 'table5', 'table6', 'fig_dist')


def _format_table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [[str(h) for h in header]] + [
        [f'{v:.2f}' if isinstance(v, float) else ('-' if v is None else str(v)) for v in row]
        for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = [' | '.join(c.ljust(w) for c, w in zip(row, widths)) for row in cells]
    lines.insert(1, '-+-'.join('-' * w for w in widths))
    return '\n'.join(lines)


def _method_label(record: ExperimentRecord) -> str:
    label = record.method
    lexicons = record.config['method'].get('lexicons') or []
    if label in NP_METHODS and pooling.Method(label).needs_lexicon:
        label += ': ' + ' & '.join(name.upper() for name in lexicons)
    return label


def report(records: Sequence, shape: str) -> tuple[str, dict]:
    """Render records as a report table; returns ``(text, json_payload)``.

    ``table2`` takes ``(name, DatasetStats)`` pairs and ``table3`` takes
    :class:`~tdsa.lexicon.SentimentLexicon` objects; the other shapes take
    :class:`ExperimentRecord` objects. Percentages carry two decimals.
    """
    if shape not in SHAPES:
        raise ValueError(f'unknown report shape {shape!r}; expected one of {SHAPES}')
    if shape == 'table2':
        header = ['Dataset', 'Size', 'ATS', 'Uniq', 'AVG Len', 'S1', 'S2', 'S3']
        rows = [[name, s.size, s.ats, s.uniq, s.avg_len, s.s1, s.s2, s.s3] for name, s in records]
        payload = {'columns': header, 'rows': [dict(zip(header, row)) for row in rows]}
        return _format_table(header, rows), payload
    if shape == 'table3':
        header = ['Lexicon', 'Positive', 'Positive Lowered', 'Negative', 'Negative Lowered']
        rows = []
        for lexicon in records:
            positive, negative = lex.counts(lexicon)
            positive_lowered, negative_lowered = lex.counts(lexicon, lowered=True)
            rows.append([lexicon.name, positive, positive_lowered, negative, negative_lowered])
        payload = {'columns': header, 'rows': [dict(zip(header, row)) for row in rows]}
        return _format_table(header, rows), payload
    if shape == 'table4':
        header = ['Method', 'Dataset', 'Accuracy %']
        rows = sorted([_method_label(r), r.dataset, 100 * r.metrics['accuracy']] for r in records)
        payload = {'columns': header, 'rows': [dict(zip(header, row)) for row in rows]}
        return _format_table(header, rows), payload
    if shape in ('table5', 'fig_dist'):
        studies = [r for r in records if 'seed_study' in r.metrics]
        if shape == 'fig_dist':
            distributions = {}
            for r in studies:
                key = f'{r.method}/{"+".join(r.config["embeddings"]["use"])}/{r.dataset}'
                runs = r.metrics['seed_study']['per_seed']
                distributions[key] = [100 * runs[s]['macro_f1'] for s in sorted(runs, key=int)]
            header = ['Series', 'Runs', 'Min', 'Mean', 'Max']
            rows = [[k, len(v), min(v), math.fsum(v) / len(v), max(v)]
                    for k, v in sorted(distributions.items())]
            return _format_table(header, rows), {'distributions': distributions}
        header = ['Method', 'Dataset', 'R (Max)', 'R (Mean)', 'Std', 'Seeds']
        rows = []
        for r in studies:
            summary = r.metrics['seed_study']['summary']['macro_f1']
            rows.append([r.method, r.dataset, 100 * summary['max'], 100 * summary['mean'],
                         100 * summary['std'], len(r.metrics['seed_study']['seeds'])])
        rows.sort()
        payload = {'columns': header, 'rows': [dict(zip(header, row)) for row in rows]}
        return _format_table(header, rows), payload
    # table6: dataset x method macro-F1 grid plus a mean row
    grid: dict = {}
    for r in records:
        cell = (r.dataset, r.method)
        if cell in grid:
            raise ValueError(f'two records for dataset {cell[0]!r} and method {cell[1]!r}')
        grid[cell] = 100 * r.metrics['macro_f1']
    methods = [m for m in TABLE6_METHODS if any(k[1] == m for k in grid)] or list(TABLE6_METHODS)
    methods += sorted({k[1] for k in grid} - set(methods))
    datasets = sorted({k[0] for k in grid})
    header = ['Dataset'] + [f'{m} F1' for m in methods]
    rows = [[d] + [grid.get((d, m)) for m in methods] for d in datasets]
    means = {}
    for m in methods:
        values = [grid[(d, m)] for d in datasets if (d, m) in grid]
        if values:
            means[m] = math.fsum(values) / len(values)
    if datasets:
        rows.append(['Mean'] + [means.get(m) for m in methods])
    payload = {'columns': header, 'methods': methods, 'datasets': datasets,
               'cells': {d: {m: grid.get((d, m)) for m in methods} for d in datasets},
               'mean': means}
    return _format_table(header, rows), payload
