"""LSTM, TDLSTM and TCLSTM classifiers trained by per-example SGD.

Everything is float64 numpy with hand-derived backpropagation through time.
Gate blocks are stacked in the order input, forget, output, candidate:
``a_t = W x_t + U h_{t-1} + b`` split into four ``H``-sized pieces.

* LSTM runs one cell over the whole (padded) sentence.
* TDLSTM runs a left cell over ``left + target`` and a right cell over
  ``target + right`` read from the sentence end towards the target; the two
  final hidden states are concatenated before the softmax layer.
* TCLSTM is TDLSTM with the mean target embedding appended to every input.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import NamedTuple, Sequence, Union

import numpy as np

from .blob import read_blob, write_blob
from .corpus import Label, stratified_holdout
from .embedding import EmbeddingMatrix
from .metrics import accuracy, macro_f1
from .text import ContextBundle

INIT_RANGE = 0.003
N_CLASSES = 3


class Arch(Enum):
    LSTM = 'lstm'
    TDLSTM = 'tdlstm'
    TCLSTM = 'tclstm'

    @property
    def sides(self) -> tuple[str, ...]:
        return ('',) if self is Arch.LSTM else ('left_', 'right_')


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class LstmTrace(NamedTuple):
    """Forward cache of one cell run; ``hidden``/``cell`` are ``T x H``."""

    inputs: np.ndarray
    hidden: np.ndarray
    cell: np.ndarray
    gates: np.ndarray

    @property
    def final_state(self) -> tuple[np.ndarray, np.ndarray]:
        if not len(self.hidden):
            h = np.zeros(self.gates.shape[1] // 4)
            return h, h.copy()
        return self.hidden[-1], self.cell[-1]


def _cell(params: dict, prefix: str = '') -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return params[prefix + 'W'], params[prefix + 'U'], params[prefix + 'b']


def lstm_forward(params: dict, inputs: np.ndarray, prefix: str = '') -> LstmTrace:
    """Run one LSTM cell from a zero state over ``inputs`` (``T x D``).

    :param prefix: selects ``{prefix}W``, ``{prefix}U``, ``{prefix}b`` in ``params``.
    :raises ValueError: when the input width differs from ``W``'s.
    """
    W, U, b = _cell(params, prefix)
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != W.shape[1]:
        raise ValueError(f'inputs of shape {inputs.shape} do not match input dim {W.shape[1]}')
    hidden_dim = U.shape[1]
    steps = len(inputs)
    hidden = np.zeros((steps, hidden_dim))
    cell = np.zeros((steps, hidden_dim))
    gates = np.zeros((steps, 4 * hidden_dim))
    h = np.zeros(hidden_dim)
    c = np.zeros(hidden_dim)
    projected = inputs @ W.T + b
    for t in range(steps):
        a = projected[t] + U @ h
        i = sigmoid(a[:hidden_dim])
        f = sigmoid(a[hidden_dim:2 * hidden_dim])
        o = sigmoid(a[2 * hidden_dim:3 * hidden_dim])
        g = np.tanh(a[3 * hidden_dim:])
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[t] = np.concatenate([i, f, o, g])
        hidden[t], cell[t] = h, c
    return LstmTrace(inputs, hidden, cell, gates)


def lstm_backward(params: dict, trace: LstmTrace | None, d_hidden: np.ndarray,
                  prefix: str = '') -> dict:
    """Backpropagate through one cell run.

    :param d_hidden: loss gradient w.r.t. the hidden states, either ``T x H``
                     or a length-``H`` gradient of the final state only.
    :returns: ``{prefix}W``, ``{prefix}U``, ``{prefix}b`` gradients plus
              ``inputs`` (gradient w.r.t. the input sequence).
    :raises ValueError: when the forward trace is missing.
    """
    if trace is None:
        raise ValueError('lstm_backward needs the trace returned by lstm_forward')
    W, U, _ = _cell(params, prefix)
    steps, hidden_dim = trace.hidden.shape
    d_hidden = np.asarray(d_hidden, dtype=np.float64)
    if d_hidden.ndim == 1:
        full = np.zeros((steps, hidden_dim))
        if steps:
            full[-1] = d_hidden
        d_hidden = full
    dW, dU, db = np.zeros_like(W), np.zeros_like(U), np.zeros(4 * hidden_dim)
    d_inputs = np.zeros_like(trace.inputs)
    dh_next = np.zeros(hidden_dim)
    dc_next = np.zeros(hidden_dim)
    zero = np.zeros(hidden_dim)
    for t in reversed(range(steps)):
        gates = trace.gates[t]
        i, f = gates[:hidden_dim], gates[hidden_dim:2 * hidden_dim]
        o, g = gates[2 * hidden_dim:3 * hidden_dim], gates[3 * hidden_dim:]
        c_prev = trace.cell[t - 1] if t else zero
        h_prev = trace.hidden[t - 1] if t else zero
        tanh_c = np.tanh(trace.cell[t])
        dh = d_hidden[t] + dh_next
        dc = dh * o * (1.0 - tanh_c ** 2) + dc_next
        da = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            dh * tanh_c * o * (1.0 - o),
            dc * i * (1.0 - g ** 2),
        ])
        dW += np.outer(da, trace.inputs[t])
        dU += np.outer(da, h_prev)
        db += da
        d_inputs[t] = W.T @ da
        dh_next = U.T @ da
        dc_next = dc * f
    return {prefix + 'W': dW, prefix + 'U': dU, prefix + 'b': db, 'inputs': d_inputs}


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


def cross_entropy_grad(probabilities: np.ndarray, label: int) -> np.ndarray:
    """Gradient of ``-log p[label]`` w.r.t. the logits: ``p - onehot(label)``."""
    grad = probabilities.copy()
    grad[label] -= 1.0
    return grad


# ---------------------------------------------------------------------------
# Classifiers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    arch: Arch
    hidden_dim: int
    input_dim: int

    @property
    def cell_input_dim(self) -> int:
        return 2 * self.input_dim if self.arch is Arch.TCLSTM else self.input_dim


def init_params(spec: ModelSpec, seed: int, scale: float = INIT_RANGE) -> dict:
    """All weights and biases drawn from ``U(-scale, scale)``."""
    rng = np.random.default_rng(seed)
    hidden, inputs = spec.hidden_dim, spec.cell_input_dim
    params = {}
    for side in spec.arch.sides:
        params[side + 'W'] = rng.uniform(-scale, scale, (4 * hidden, inputs))
        params[side + 'U'] = rng.uniform(-scale, scale, (4 * hidden, hidden))
        params[side + 'b'] = rng.uniform(-scale, scale, 4 * hidden)
    params['V'] = rng.uniform(-scale, scale, (N_CLASSES, hidden * len(spec.arch.sides)))
    params['c'] = rng.uniform(-scale, scale, N_CLASSES)
    return params


def model_forward(params: dict, arch: Arch, inputs: tuple) -> tuple[np.ndarray, dict]:
    """Class probabilities and the cache for :func:`model_backward`.

    ``inputs`` is a 1-tuple of sequences for LSTM and a (left, right) pair
    for TDLSTM/TCLSTM, as produced by :func:`build_inputs`.
    """
    traces = [lstm_forward(params, seq, side) for side, seq in zip(arch.sides, inputs)]
    features = np.concatenate([trace.final_state[0] for trace in traces])
    probabilities = softmax(params['V'] @ features + params['c'])
    return probabilities, {'traces': traces, 'features': features, 'probabilities': probabilities}


def model_backward(params: dict, arch: Arch, cache: dict, d_logits: np.ndarray) -> dict:
    hidden = params['V'].shape[1] // len(arch.sides)
    grads = {'V': np.outer(d_logits, cache['features']), 'c': d_logits.copy()}
    d_features = params['V'].T @ d_logits
    for k, (side, trace) in enumerate(zip(arch.sides, cache['traces'])):
        cell_grads = lstm_backward(params, trace, d_features[k * hidden:(k + 1) * hidden], side)
        cell_grads.pop('inputs')
        grads.update(cell_grads)
    return grads


def loss_and_grads(params: dict, arch: Arch, inputs: tuple, label: int) -> tuple[float, dict]:
    probabilities, cache = model_forward(params, arch, inputs)
    loss = -math.log(max(probabilities[label], 1e-300))
    return loss, model_backward(params, arch, cache, cross_entropy_grad(probabilities, label))


def predict(params: dict, arch: Arch, inputs: Sequence[tuple]) -> list[Label]:
    return [Label(int(np.argmax(model_forward(params, arch, x)[0]))) for x in inputs]


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------

def side_sequences(bundle: ContextBundle, arch: Arch, include_target: bool = True
                   ) -> tuple[list[str], ...]:
    """Token sequences fed to each cell, in reading order."""
    target = bundle.surfaces('target')
    if arch is Arch.LSTM:
        return (bundle.surfaces('full'),)
    middle = target if include_target else []
    left = bundle.surfaces('left') + middle
    right = list(reversed(middle + bundle.surfaces('right')))
    return left, right


def pad_length_for(bundles: Sequence[ContextBundle], arch: Arch, include_target: bool = True) -> int:
    """Longest sequence any cell sees over the training bundles."""
    return max((len(seq) for b in bundles for seq in side_sequences(b, arch, include_target)),
               default=1) or 1


def _pad(matrix: np.ndarray, pad_length: int) -> np.ndarray:
    # Keep the last rows (nearest the target / sentence end), zero-pad in front.
    matrix = matrix[-pad_length:] if len(matrix) > pad_length else matrix
    out = np.zeros((pad_length, matrix.shape[1]))
    if len(matrix):
        out[pad_length - len(matrix):] = matrix
    return out


def build_inputs(bundle: ContextBundle, arch: Arch, embedding: EmbeddingMatrix,
                 pad_length: int, include_target: bool = True) -> tuple:
    """Padded embedded sequences for one target occurrence.

    :raises ValueError: when the occurrence has no target tokens.
    """
    if not bundle.target:
        raise ValueError('cannot build inputs for an empty target')
    sequences = [embedding.matrix(seq) for seq in side_sequences(bundle, arch, include_target)]
    if arch is Arch.TCLSTM:
        target_vector = embedding.matrix(bundle.surfaces('target')).mean(axis=0)
        sequences = [np.hstack([seq, np.tile(target_vector, (len(seq), 1))]) for seq in sequences]
    return tuple(_pad(seq, pad_length) for seq in sequences)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainSpec:
    learning_rate: float = 0.01
    max_epochs: int = 300
    patience: int = 10
    seed: int = 0
    validation_fraction: float = 0.2
    validation_seed: int = 0

    def __post_init__(self):
        if not self.patience < self.max_epochs:
            raise ValueError('patience must be smaller than max_epochs')


class EarlyStopping:
    """Tracks the best validation score; stops after ``patience`` epochs without improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_score = -math.inf
        self.best_epoch = 0
        self.best_state = None
        self.epochs_without_improvement = 0

    def update(self, epoch: int, score: float, state=None) -> bool:
        """Record one epoch; returns True when training should stop."""
        if score > self.best_score:
            self.best_score, self.best_epoch = score, epoch
            self.best_state = state
            self.epochs_without_improvement = 0
        else:
            self.epochs_without_improvement += 1
        return self.epochs_without_improvement >= self.patience


def validation_split(labels: Sequence, spec: TrainSpec) -> tuple[list[int], list[int]]:
    """Stratified train/validation indices from the dedicated validation seed.

    :raises ValueError: when a class would be missing from the validation part.
    """
    train, held = stratified_holdout(labels, spec.validation_fraction, spec.validation_seed)
    missing = set(labels) - {labels[i] for i in held}
    if missing:
        raise ValueError(f'validation split leaves class(es) {sorted(missing)} empty')
    return train, held


def train(model: ModelSpec, inputs: Sequence[tuple], labels: Sequence, spec: TrainSpec,
          split: tuple[list[int], list[int]] | None = None) -> tuple[dict, list[dict]]:
    """SGD (batch size 1) with early stopping on validation accuracy.

    Returns the parameters of the best-validation epoch and a per-epoch
    history of ``train_loss`` and ``val_accuracy``.
    """
    labels = [int(label) for label in labels]
    train_index, val_index = split if split is not None else validation_split(labels, spec)
    rng = np.random.default_rng(spec.seed)
    params = init_params(model, spec.seed)
    val_inputs = [inputs[i] for i in val_index]
    val_gold = [labels[i] for i in val_index]
    stopper = EarlyStopping(spec.patience)
    history = []
    for epoch in range(1, spec.max_epochs + 1):
        total_loss = 0.0
        for position in rng.permutation(len(train_index)):
            i = train_index[position]
            loss, grads = loss_and_grads(params, model.arch, inputs[i], labels[i])
            total_loss += loss
            for name, grad in grads.items():
                params[name] -= spec.learning_rate * grad
        predicted = [int(p) for p in predict(params, model.arch, val_inputs)]
        val_accuracy = accuracy(predicted, val_gold)
        history.append({'epoch': epoch, 'train_loss': total_loss / max(len(train_index), 1),
                        'val_accuracy': val_accuracy})
        snapshot = {name: value.copy() for name, value in params.items()}
        if stopper.update(epoch, val_accuracy, snapshot):
            break
    return stopper.best_state, history


# ---------------------------------------------------------------------------
# Seed study
# ---------------------------------------------------------------------------

def summarize(values: Sequence[float]) -> dict:
    """Order-independent mean, max, min and population std."""
    values = sorted(values)
    if not values:
        raise ValueError('nothing to summarize')
    mean = math.fsum(values) / len(values)
    variance = math.fsum((v - mean) ** 2 for v in values) / len(values)
    return {'mean': mean, 'max': values[-1], 'min': values[0], 'std': math.sqrt(variance)}


@dataclass
class SeedStudy:
    arch: Arch
    seeds: list
    per_seed: dict = field(default_factory=dict)

    @property
    def summary(self) -> dict:
        return {metric: summarize([run[metric] for run in self.per_seed.values()])
                for metric in ('macro_f1', 'accuracy')}

    def to_json(self) -> dict:
        return {'arch': self.arch.value, 'seeds': list(self.seeds),
                'per_seed': {str(seed): run for seed, run in sorted(self.per_seed.items())},
                'summary': self.summary}

    def write(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))


def seed_study(model: ModelSpec, train_inputs: Sequence[tuple], train_labels: Sequence,
               test_inputs: Sequence[tuple], test_labels: Sequence, seeds: Sequence[int],
               spec: TrainSpec = TrainSpec()) -> SeedStudy:
    """Train once per seed on one fixed train/validation split; score the test set."""
    labels = [int(label) for label in train_labels]
    split = validation_split(labels, spec)
    gold = [Label(int(label)) for label in test_labels]
    study = SeedStudy(model.arch, list(seeds))
    for seed in seeds:
        run_spec = TrainSpec(spec.learning_rate, spec.max_epochs, spec.patience, seed,
                             spec.validation_fraction, spec.validation_seed)
        params, history = train(model, train_inputs, labels, run_spec, split)
        predicted = predict(params, model.arch, test_inputs)
        study.per_seed[seed] = {'macro_f1': macro_f1(predicted, gold),
                                'accuracy': accuracy(predicted, gold),
                                'epochs': len(history)}
    return study


def save_params(params: dict, model: ModelSpec, path: Union[str, Path]) -> None:
    header = {'kind': 'lstm', 'arch': model.arch.value, 'hidden_dim': model.hidden_dim,
              'input_dim': model.input_dim}
    write_blob(path, header, dict(sorted(params.items())))


def load_params(path: Union[str, Path]) -> tuple[dict, ModelSpec]:
    header, arrays = read_blob(path)
    if header.get('kind') != 'lstm':
        raise ValueError(f'{path}: not an LSTM parameter file')
    return arrays, ModelSpec(Arch(header['arch']), header['hidden_dim'], header['input_dim'])
