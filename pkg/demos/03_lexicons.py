# coding: utf-8

# # Sentiment lexicons
#
# Three public word lists are supported: MPQA subjectivity clues, the Hu and
# Liu opinion lexicon, and the NRC emotion lexicon. Each parser produces a
# `SentimentLexicon` mapping a word to the set of polarities it carries.

from tdsa import lexicon as lex

mpqa = lex.parse_mpqa(
    'type=weaksubj len=1 word1=abandon pos1=verb stemmed1=n priorpolarity=negative\n'
    'type=strongsubj len=1 word1=good pos1=adj stemmed1=n priorpolarity=positive\n'
    'type=weaksubj len=1 word1=fun pos1=noun stemmed1=n priorpolarity=both\n')
hl = lex.parse_hl('; positive words\ngood\nGreat\n', '; negative words\nbad\nabandon\n')
nrc = lex.parse_nrc('bad\tnegative\t1\nbad\tpositive\t0\nsunny\tpositive\t1\n')

for lexicon in (mpqa, hl, nrc):
    print(lexicon.name, lex.counts(lexicon))

# MPQA clues whose prior polarity is "both" or "neutral" are left out, so
# "fun" does not appear. Unions merge the polarity sets word by word, which
# means a word can be positive in one list and negative in another and keep
# both labels. Counts can be taken on the raw entries or after lower-casing.

combined = lex.union([mpqa, hl, nrc], name='All three')
print(combined.name, lex.counts(combined), lex.counts(combined, lowered=True))

# ## Masking a context
#
# The LS and RS contexts used by the `+` methods keep only lexicon words.
# Everything else becomes the `<ZERO>` token, whose embedding is all zeros.

tokens = ['the', 'good', 'camera', 'is', 'bad']
print(lex.mask_context(tokens, hl))
print(lex.mask_context(tokens, hl, polarity=lex.Polarity.POSITIVE))
