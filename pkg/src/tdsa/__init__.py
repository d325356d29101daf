"""Reproducible target-dependent sentiment analysis benchmarks.

Modules:

* :mod:`tdsa.corpus` -- dataset parsers, splits and statistics
* :mod:`tdsa.text` -- tokenizer and left/target/right contexts
* :mod:`tdsa.lexicon` -- MPQA, Hu & Liu and NRC sentiment lexicons
* :mod:`tdsa.embedding` -- word-vector loading and filtering
* :mod:`tdsa.pooling` -- neural pooling features, dependency contexts
* :mod:`tdsa.linear` -- Max-Min scaling and the linear SVM
* :mod:`tdsa.recurrent` -- LSTM, TDLSTM and TCLSTM
* :mod:`tdsa.harness` -- experiment runner, results store, reports
"""
__version__ = '0.1.0'
