# coding: utf-8

# # Target-aware LSTMs and seed variance
#
# TDLSTM runs one LSTM left to right up to the target and another right to
# left back to it, then classifies from both final states. TCLSTM also
# appends the target vector to every input. Training is plain SGD with early
# stopping on a fixed validation split.
#
# The interesting part is how much the random initialisation matters. Here
# the same model is trained with several seeds on identical data.

import os
import tempfile

from tdsa import harness, synthetic

root = tempfile.mkdtemp()
os.environ['TDSA_DATA_DIR'] = root
config = synthetic.write_workspace(root, n_train=300, n_test=90, dim=6)
config = harness._merge(config, {'method': {'name': 'tdlstm'},
                                 'training': {'learning_rate': 0.1, 'seeds': [0, 1, 2, 3]}})

record = harness.run_experiment(config, persist=False)
for seed, run in record.metrics['seed_study']['per_seed'].items():
    print(f'seed {seed}: macro-F1 {run["macro_f1"]:.3f} after {run["epochs"]} epochs')

# The summary mirrors how results are reported: the best seed next to the
# mean over seeds.

text, _ = harness.report([record], 'table5')
print(text)
