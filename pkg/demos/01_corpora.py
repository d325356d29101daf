# coding: utf-8

# # Reading the benchmark corpora
#
# Every dataset in the benchmark ships in its own format. The `tdsa.corpus`
# parsers turn each one into the same thing: a `Dataset` of
# `TargetInstance` records, each holding the text, the target phrase, the
# character spans where the target occurs, and a three-way label.

import json
import tempfile
from pathlib import Path

from tdsa import corpus

# ## SemEval aspect terms
#
# Aspect terms marked `conflict` are dropped, and the parser keeps a count of
# what it skipped in `dataset.meta`.

semeval = b"""<sentences>
  <sentence id="1">
    <text>The battery life is great but the screen is dim.</text>
    <aspectTerms>
      <aspectTerm term="battery life" polarity="positive" from="4" to="16"/>
      <aspectTerm term="screen" polarity="negative" from="34" to="40"/>
      <aspectTerm term="battery" polarity="conflict" from="4" to="11"/>
    </aspectTerms>
  </sentence>
</sentences>"""

laptops = corpus.parse_semeval(semeval, name='laptops')
for instance in laptops:
    print(instance.target, instance.spans, instance.label.name)
print(laptops.meta)

# ## Dong et al. style tweets
#
# Three lines per instance: the sentence with `$T$` standing in for the
# target, the target itself, then -1, 0 or 1.

dong = corpus.parse_dong("i love $T$ so much\nnlp\n1\n$T$ is terrible\nthe update\n-1\n")
print([(i.text, i.target, i.label.name) for i in dong])

# ## Saving to the canonical JSONL form
#
# Whatever the source, a dataset round-trips through JSONL unchanged, which
# is what the command line tools and the harness read.

workdir = Path(tempfile.mkdtemp())
corpus.write_jsonl(laptops, workdir / 'laptops.jsonl')
print((workdir / 'laptops.jsonl').read_text().splitlines()[0])
assert corpus.read_jsonl(workdir / 'laptops.jsonl').instances == laptops.instances

# ## Statistics and splits
#
# `dataset_stats` gives the size, average targets per sentence (ATS) and the
# share of sentences holding one, two or three distinct labels.

from tdsa import synthetic

toy = synthetic.make_dataset(200, seed=1)
print(json.dumps(corpus.dataset_stats(toy).as_row()))

# Splits are stratified, so each label keeps its share in both halves.

train, test = corpus.make_split(toy, corpus.SplitSpec(test_fraction=0.2, seed=0))
for part in (train, test):
    print(part.name, len(part), {label.name: part.labels.count(label) for label in corpus.Label})
