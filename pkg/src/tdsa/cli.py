"""``tdsa`` command line interface."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import corpus, harness, linear, pooling, recurrent
from .corpus import Label
from .text import tokenize


def _config(path):
    return harness.load_config(path if path else {})


def cmd_parse(args):
    dataset = corpus.load(args.format, args.inputs, name=args.name)
    corpus.write_jsonl(dataset, args.out)
    meta = {k: (len(v) if isinstance(v, list) else v) for k, v in dataset.meta.items()}
    print(f'{len(dataset)} instances -> {args.out} {json.dumps(meta, sort_keys=True)}')


def cmd_stats(args):
    rows = []
    for path in args.inputs:
        dataset = corpus.read_jsonl(path)
        rows.append((dataset.name, corpus.dataset_stats(dataset)))
    text, payload = harness.report(rows, 'table2')
    print(json.dumps(payload, indent=1) if args.json else text)


def cmd_tokenize(args):
    dataset = corpus.read_jsonl(args.input)
    with open(args.out, 'w', encoding='utf-8') as handle:
        for instance in dataset:
            record = corpus.instance_to_json(instance)
            tokens = tokenize(instance.text)
            record['tokens'] = [t.surface for t in tokens]
            record['token_spans'] = [list(t.span) for t in tokens]
            handle.write(json.dumps(record, ensure_ascii=False) + '\n')


def cmd_lexicon_stats(args):
    config = _config(args.config)
    names = [n for n in ('mpqa', 'hl', 'nrc') if all(
        config['lexicons'].get(key) for key in harness.LEXICON_KEYS[n])]
    if not names:
        sys.exit('no lexicon paths configured (lexicons.mpqa_path, lexicons.hl_pos_path, ...)')
    lexicons = {n: harness.load_lexicon(config, n) for n in names}
    rows = [lexicons[n] for n in names]
    if {'mpqa', 'hl'} <= lexicons.keys():
        rows.append(harness.lex.union([lexicons['mpqa'], lexicons['hl']], name='MPQA & HL'))
    if len(lexicons) == 3:
        rows.append(harness.lex.union(list(lexicons.values()), name='All three'))
    text, payload = harness.report(rows, 'table3')
    print(json.dumps(payload, indent=1) if args.json else text)


def cmd_embed_info(args):
    config = _config(args.config)
    matrix = harness.load_embedding(config, args.name)
    norms = np.linalg.norm(matrix.rows, axis=1) if len(matrix) else np.zeros(1)
    print(json.dumps({'name': args.name, 'words': len(matrix), 'dim': matrix.dim,
                      'duplicates': matrix.duplicates, 'mean_norm': float(norms.mean())}))


def cmd_features(args):
    config = _config(args.config)
    method = pooling.Method(args.method)
    dataset = corpus.read_jsonl(args.input)
    lexicon = harness.load_lexicons(config, args.lexicon.split(',')) if args.lexicon else None
    matrix = harness.load_embeddings(config, args.embeddings.split(','))
    graphs = None
    if method.needs_graph:
        if not args.conll:
            sys.exit(f'{method.value} needs --conll')
        graphs = pooling.parse_conll(Path(args.conll).read_bytes())
    spec = pooling.MethodSpec(method, lexicon, args.polarity_split, args.dep_depth)
    features = harness.np_features(dataset, spec, matrix, not args.strict_spans, graphs)
    layout = pooling.layout_for(method, matrix.dim)
    sidecar = pooling.write_features(args.out, features, layout, [i.id for i in dataset],
                                     [i.label.word for i in dataset], {'method': method.value})
    print(f'{features.shape[0]} x {features.shape[1]} features -> {args.out} ({sidecar.name})')


def _labels(meta):
    return [Label.parse(label) for label in meta['labels']]


def cmd_train_svm(args):
    features, meta = pooling.read_features(args.features)
    labels = _labels(meta)
    if not args.no_scale:
        scaler = linear.fit_scaler(features)
        features = scaler.transform(features)
    model = linear.train_svm(features, labels, linear.SvmConfig(args.c, args.tolerance,
                                                                args.max_iterations, args.seed))
    linear.save_model(model, args.out)
    if not args.no_scale:
        Path(args.out + '.scaler.json').write_text(json.dumps(
            {'min': scaler.min_.tolist(), 'max': scaler.max_.tolist()}))
    train_accuracy = np.mean([p == g for p, g in zip(model.predict(features), labels)])
    print(f'trained {len(model.classes)}-class SVM, C={args.c}, training accuracy {train_accuracy:.4f}')


def cmd_cv(args):
    features, meta = pooling.read_features(args.features)
    grid = [float(c) for c in args.grid.split(',')] if args.grid else linear.DEFAULT_C_GRID
    best, scores = linear.cv_select_c(features, _labels(meta), grid, args.folds, args.seed,
                                      not args.no_scale)
    print(json.dumps({'best_c': best, 'mean_accuracy': {repr(c): s for c, s in scores.items()}},
                     indent=1))


def _lstm_config(args):
    config = _config(args.config)
    if args.arch:
        config['method']['name'] = args.arch
    if config['method'].get('name') not in harness.LSTM_METHODS:
        sys.exit(f'method must be one of {harness.LSTM_METHODS}')
    return config


def cmd_train_lstm(args):
    config = _lstm_config(args)
    train, test = harness.load_datasets(config)
    model, x_train, x_test, _ = harness.lstm_data(config, train, test)
    spec = harness._train_spec(config['training'], config['training']['seed'])
    params, history = recurrent.train(model, x_train, train.labels, spec)
    predicted = recurrent.predict(params, model.arch, x_test)
    if args.out:
        recurrent.save_params(params, model, args.out)
    print(json.dumps({'epochs': len(history),
                      'best_val_accuracy': max(h['val_accuracy'] for h in history),
                      'test_macro_f1': harness.macro_f1(predicted, test.labels),
                      'test_accuracy': harness.accuracy(predicted, test.labels)}, indent=1))


def cmd_multiseed(args):
    config = _lstm_config(args)
    train, test = harness.load_datasets(config)
    model, x_train, x_test, _ = harness.lstm_data(config, train, test)
    seeds = list(range(args.first_seed, args.first_seed + args.seeds))
    study = recurrent.seed_study(model, x_train, train.labels, x_test, test.labels, seeds,
                                 harness._train_spec(config['training'], seeds[0]))
    study.write(args.out)
    print(json.dumps(study.summary, indent=1))


def cmd_run(args):
    record = harness.run_experiment(args.config, persist=not args.dry_run)
    shown = {k: v for k, v in record.metrics.items() if k != 'seed_study'}
    print(json.dumps({'hash': record.content_hash[:16], 'metrics': shown}, indent=1, default=str))


def cmd_report(args):
    records = harness.read_records(args.glob)
    text, payload = harness.report(records, args.shape)
    print(text)
    if args.json:
        Path(args.json).write_text(json.dumps(payload, indent=1))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='tdsa', description=__doc__)
    parser.add_argument('-v', '--verbose', action='store_true')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('parse', help='convert a corpus to canonical JSONL')
    p.add_argument('--format', required=True, choices=corpus.FORMATS)
    p.add_argument('--in', dest='inputs', required=True, nargs='+')
    p.add_argument('--out', required=True)
    p.add_argument('--name')
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser('stats', help='dataset statistics row(s)')
    p.add_argument('--in', dest='inputs', required=True, nargs='+')
    p.add_argument('--json', action='store_true')
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser('tokenize', help='add token arrays to canonical JSONL')
    p.add_argument('--in', dest='input', required=True)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser('lexicon-stats', help='lexicon word counts')
    p.add_argument('--config')
    p.add_argument('--json', action='store_true')
    p.set_defaults(func=cmd_lexicon_stats)

    p = sub.add_parser('embed-info', help='summarise one configured embedding')
    p.add_argument('--name', required=True)
    p.add_argument('--config')
    p.set_defaults(func=cmd_embed_info)

    p = sub.add_parser('features', help='neural pooling features to a binary file')
    p.add_argument('--method', required=True, choices=[m.value for m in pooling.Method])
    p.add_argument('--lexicon', default='')
    p.add_argument('--embeddings', required=True)
    p.add_argument('--in', dest='input', required=True)
    p.add_argument('--conll')
    p.add_argument('--out', required=True)
    p.add_argument('--config')
    p.add_argument('--polarity-split', action='store_true')
    p.add_argument('--dep-depth', type=int)
    p.add_argument('--strict-spans', action='store_true',
                   help='fail on spans that cut a token instead of splitting there')
    p.set_defaults(func=cmd_features)

    p = sub.add_parser('train-svm', help='train a one-vs-rest linear SVM on a feature file')
    p.add_argument('--features', required=True)
    p.add_argument('--c', type=float, default=1.0)
    p.add_argument('--tolerance', type=float, default=1e-4)
    p.add_argument('--max-iterations', type=int, default=10000)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--no-scale', action='store_true')
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_train_svm)

    p = sub.add_parser('cv', help='select C by stratified cross validation')
    p.add_argument('--features', required=True)
    p.add_argument('--grid', help='comma separated C values')
    p.add_argument('--folds', type=int, default=5)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--no-scale', action='store_true')
    p.set_defaults(func=cmd_cv)

    for name, func, text in (('train-lstm', cmd_train_lstm, 'train one LSTM-family model'),
                             ('multiseed', cmd_multiseed, 'train and score over many seeds')):
        p = sub.add_parser(name, help=text)
        p.add_argument('--config', required=True)
        p.add_argument('--arch', choices=harness.LSTM_METHODS)
        if name == 'train-lstm':
            p.add_argument('--out')
        else:
            p.add_argument('--seeds', type=int, default=30)
            p.add_argument('--first-seed', type=int, default=0)
            p.add_argument('--out', required=True)
        p.set_defaults(func=func)

    p = sub.add_parser('run', help='run one experiment config')
    p.add_argument('--config', required=True)
    p.add_argument('--dry-run', action='store_true', help='do not persist the record')
    p.set_defaults(func=cmd_run)

    p = sub.add_parser('report', help='render stored records as a table')
    p.add_argument('--shape', required=True, choices=[s for s in harness.SHAPES
                                                      if s not in ('table2', 'table3')])
    p.add_argument('--glob', required=True)
    p.add_argument('--json')
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    args.func(args)


if __name__ == '__main__':
    main()
