# coding: utf-8

# # Neural pooling features
#
# A context is a stack of word vectors. Pooling squeezes it to a fixed size
# vector by reducing each dimension with max, min, mean, standard deviation
# and product.

import numpy as np

from tdsa import embedding as emb, pooling, synthetic
from tdsa.corpus import Label, TargetInstance
from tdsa.pooling import Method, MethodSpec
from tdsa.text import extract_contexts

context = np.array([[1.0, -2.0], [3.0, 0.5], [-1.0, 4.0]])
for op in pooling.POOL_ORDER:
    print(f'{op.value:5}', pooling.pool(context, op))

# ## Word vectors
#
# Embeddings load from the usual whitespace-separated text format. Unknown
# words map to zero vectors.

vectors = synthetic.make_embeddings(dim=4, seed=0)
lines = '\n'.join(w + ' ' + ' '.join(map(str, v)) for w, v in vectors.items())
matrix = emb.load_text_embeddings(lines.encode(), name='toy')
print(len(matrix), 'words of dim', matrix.dim)
print(emb.lookup(matrix, 'great'), emb.lookup(matrix, 'unseen'))

# ## Method layouts
#
# Each method concatenates pooled features over a fixed list of contexts.
# Target-dep pools the full text, left, right and target contexts: 4 contexts
# times 5 ops times 4 dimensions.

for family in (Method.TARGET_IND, Method.TARGET_DEP_MINUS, Method.TARGET_DEP):
    layout = pooling.layout_for(family, matrix.dim)
    print(f'{family.value:12}', layout[-1].end, sorted({entry.context for entry in layout}))

# ## Several occurrences
#
# A target mentioned twice gives one feature vector per occurrence. They are
# combined with an element-wise median, which for two vectors is their mean.

item = TargetInstance('a', 'great camera and the camera was bad', 'camera',
                      ((6, 12), (21, 27)), Label.NEU)
bundles = extract_contexts(item)
spec = MethodSpec(Method.TARGET_DEP)
per_occurrence = [pooling.occurrence_features(b, spec, matrix) for b in bundles]
combined = pooling.assemble_features(bundles, spec, matrix).values
print(np.array_equal(combined, (per_occurrence[0] + per_occurrence[1]) / 2))
