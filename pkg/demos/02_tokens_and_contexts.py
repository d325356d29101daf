# coding: utf-8

# # Tokens and target contexts
#
# Tweets carry emoticons, URLs and hashtags, so the tokenizer is a
# Twitter-aware regular expression. Tokens are lower-cased but keep their
# character offsets into the original text.

from tdsa.corpus import Label, TargetInstance
from tdsa.text import AlignmentError, extract_contexts, surfaces, tokenize

text = 'Loving the new #iPhone :) see http://t.co/x'
for token in tokenize(text):
    print(f'{token.surface!r:12} {token.start:3d} {token.end:3d}')

# ## Context bundles
#
# Each occurrence of the target gets a bundle of four token sequences: left
# of the target, the target, right of it, and the full text. A target that
# appears twice yields two bundles.

item = TargetInstance('a', 'good camera , camera works', 'camera', ((5, 11), (14, 20)), Label.POS)
for bundle in extract_contexts(item):
    print({name: bundle.surfaces(name) for name in ('left', 'target', 'right')})

# ## When a span cuts through a token
#
# Here the target "iPhone" sits inside the single token "iphone6". By default
# that is an error. Passing `split_at_spans=True` forces token breaks at the
# span edges instead, which is what the experiment harness does.

glued = TargetInstance('b', 'my iPhone6 rocks', 'iPhone', ((3, 9),), Label.POS)
try:
    extract_contexts(glued)
except AlignmentError as error:
    print('strict:', error)
print('split:', surfaces(extract_contexts(glued, split_at_spans=True)[0].full))
