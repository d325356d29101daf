import json

import pytest

from tdsa import cli, corpus, linear, pooling, synthetic


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    monkeypatch.setenv('TDSA_DATA_DIR', str(tmp_path))
    monkeypatch.chdir(tmp_path)
    config = synthetic.write_workspace(tmp_path, n_train=45, n_test=30)
    lines = ['[dataset]', 'name = "synthetic"', 'format = "jsonl"', 'train = ["train.jsonl"]',
             'test = ["test.jsonl"]', '[method]', 'name = "target-dep"', '[embeddings]',
             'use = ["toy"]', '[embeddings.toy]', 'path = "vectors.txt"', '[lexicons]',
             f'hl_pos_path = "{config["lexicons"]["hl_pos_path"]}"',
             f'hl_neg_path = "{config["lexicons"]["hl_neg_path"]}"', '[training]', 'c_value = 1.0',
             'learning_rate = 0.1', 'max_epochs = 12', '[output]', 'results_dir = "results"']
    (tmp_path / 'exp.toml').write_text('\n'.join(lines) + '\n')
    return tmp_path


def run(capsys, *argv):
    cli.main(list(argv))
    return capsys.readouterr().out


def test_parse_and_stats(tmp_path, capsys):
    source = tmp_path / 'dong.txt'
    source.write_text('i love $T$\nnlp\n1\n$T$ is bad\nit\n-1\n')
    out = run(capsys, 'parse', '--format', 'dong', '--in', str(source), '--out', str(tmp_path / 'd.jsonl'))
    assert out.startswith('2 instances')
    assert len(corpus.read_jsonl(tmp_path / 'd.jsonl')) == 2
    payload = json.loads(run(capsys, 'stats', '--in', str(tmp_path / 'd.jsonl'), '--json'))
    assert payload['rows'][0]['Size'] == 2 and payload['rows'][0]['S1'] == 100.0


def test_tokenize(workspace, capsys):
    run(capsys, 'tokenize', '--in', 'test.jsonl', '--out', 'tokens.jsonl')
    first = json.loads((workspace / 'tokens.jsonl').read_text().splitlines()[0])
    assert first['tokens'] == first['text'].split()


def test_features_svm_cv(workspace, capsys):
    out = run(capsys, 'features', '--method', 'tdparse', '--embeddings', 'toy', '--in', 'train.jsonl',
              '--conll', 'train.conll', '--out', 'f.bin', '--config', 'exp.toml')
    assert out.startswith('45 x 90 features')
    matrix, meta = pooling.read_features(workspace / 'f.bin')
    assert matrix.shape == (45, 90) and meta['method'] == 'tdparse'
    out = run(capsys, 'train-svm', '--features', 'f.bin', '--c', '1', '--out', 'svm.bin')
    assert 'training accuracy' in out
    assert linear.load_model(workspace / 'svm.bin').weights.shape == (3, 90)
    assert (workspace / 'svm.bin.scaler.json').exists()
    result = json.loads(run(capsys, 'cv', '--features', 'f.bin', '--grid', '0.1,1', '--folds', '3'))
    assert result['best_c'] in (0.1, 1.0)


def test_features_need_conll(workspace, capsys):
    with pytest.raises(SystemExit, match='needs --conll'):
        run(capsys, 'features', '--method', 'tdparse', '--embeddings', 'toy', '--in', 'train.jsonl',
            '--out', 'f.bin', '--config', 'exp.toml')


def test_lexicon_and_embedding_info(workspace, capsys):
    out = run(capsys, 'lexicon-stats', '--config', 'exp.toml', '--json')
    assert json.loads(out)['rows'][0]['Positive'] == 4
    info = json.loads(run(capsys, 'embed-info', '--name', 'toy', '--config', 'exp.toml'))
    assert info['dim'] == 6 and info['words'] == len(synthetic.vocabulary())


def test_run_and_report(workspace, capsys):
    out = json.loads(run(capsys, 'run', '--config', 'exp.toml'))
    assert 0 <= out['metrics']['accuracy'] <= 1
    text = run(capsys, 'report', '--shape', 'table6', '--glob', 'results/*.json', '--json', 'grid.json')
    assert text.splitlines()[-1].startswith('Mean')
    assert json.loads((workspace / 'grid.json').read_text())['datasets'] == ['synthetic']


def test_lstm_commands(workspace, capsys):
    out = json.loads(run(capsys, 'train-lstm', '--config', 'exp.toml', '--arch', 'lstm', '--out', 'm.bin'))
    assert out['epochs'] <= 12 and (workspace / 'm.bin').exists()
    summary = json.loads(run(capsys, 'multiseed', '--config', 'exp.toml', '--arch', 'tclstm',
                             '--seeds', '2', '--out', 'dist.json'))
    assert set(summary) == {'macro_f1', 'accuracy'}
    assert json.loads((workspace / 'dist.json').read_text())['seeds'] == [0, 1]


def test_lstm_commands_reject_np_method(workspace, capsys):
    with pytest.raises(SystemExit):
        run(capsys, 'multiseed', '--config', 'exp.toml', '--out', 'x.json')
