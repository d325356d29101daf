# coding: utf-8

# # Running experiments from configs
#
# An experiment is a nested dict (or a TOML file with the same layout). The
# harness loads the data and resources it names, trains, scores and writes a
# content-hashed JSON record. Reports are rebuilt from those records alone.

import os
import tempfile

from tdsa import harness, synthetic

root = tempfile.mkdtemp()
os.environ['TDSA_DATA_DIR'] = root
base = synthetic.write_workspace(root, n_train=150, n_test=60)

# Resource paths in the config are relative to `TDSA_DATA_DIR`.

print({k: base[k] for k in ('dataset', 'embeddings')})

records = []
for method in ('target-dep', 'target-dep+', 'tdparse', 'tdparse+'):
    config = harness._merge(base, {'method': {'name': method, 'lexicons': ['hl']}})
    records.append(harness.run_experiment(config))
    print(method, round(records[-1].metrics['macro_f1'], 3), records[-1].content_hash[:12])

# Records on disk are verified against their hash when read back, so a
# hand-edited result is caught.

stored = harness.read_records(os.path.join(base['output']['results_dir'], '*.json'))
text, payload = harness.report(stored, 'table6')
print(text)

# ## Cross-validated accuracy
#
# Setting `training.evaluation = "cv"` scores by 5-fold cross validation on
# the training data instead of a held-out test set.

cv = harness._merge(base, {'training': {'evaluation': 'cv'}})
del cv['dataset']['test']
record = harness.run_experiment(cv, persist=False)
print(harness.report([record], 'table4')[0])
