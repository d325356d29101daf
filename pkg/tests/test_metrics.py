import numpy as np
import pytest

from tdsa.corpus import Label
from tdsa.metrics import accuracy, confusion_matrix, macro_f1, per_class_scores

NEG, NEU, POS = Label.NEG, Label.NEU, Label.POS


def from_confusion(matrix):
    """Expand a gold-by-predicted count matrix into label lists."""
    predictions, gold = [], []
    for g, row in enumerate(matrix):
        for p, count in enumerate(row):
            gold += [Label(g)] * count
            predictions += [Label(p)] * count
    return predictions, gold


class TestAccuracy:
    def test_all_correct(self):
        assert accuracy([POS, NEG], [POS, NEG]) == 1.0

    def test_all_wrong(self):
        assert accuracy([POS, NEG], [NEG, POS]) == 0.0

    def test_two_of_three(self):
        assert accuracy([POS, NEG, NEU], [POS, NEG, POS]) == pytest.approx(0.6667, abs=1e-4)

    @pytest.mark.parametrize('predictions, gold', [([POS], []), ([], [])])
    def test_preconditions(self, predictions, gold):
        with pytest.raises(ValueError):
            accuracy(predictions, gold)

    def test_majority_baseline_floor(self):
        gold = [POS] * 5 + [NEG] * 3 + [NEU] * 2
        assert accuracy([POS] * 10, gold) >= max(gold.count(c) for c in Label) / len(gold)


class TestMacroF1:
    def test_perfect(self):
        labels = [NEG, NEU, POS, POS]
        assert macro_f1(labels, labels) == 1.0

    def test_single_class_gold(self):
        assert macro_f1([POS] * 4, [POS] * 4) == pytest.approx(1 / 3, abs=1e-12)

    def test_hand_expanded_confusion_matrix(self):
        counts = [[2, 1, 0], [0, 3, 1], [1, 0, 2]]
        predictions, gold = from_confusion(counts)
        np.testing.assert_array_equal(confusion_matrix(predictions, gold), counts)
        # NEG: P = 2/3, R = 2/3; NEU: P = 3/4, R = 3/4; POS: P = 2/3, R = 2/3
        f1 = [2 / 3, 3 / 4, 2 / 3]
        scores = per_class_scores(predictions, gold)
        for label, expected in zip(Label, f1):
            assert scores[label]['f1'] == pytest.approx(expected, abs=1e-12)
        assert macro_f1(predictions, gold) == pytest.approx(25 / 36, abs=1e-9)

    def test_unequal_precision_recall(self):
        predictions, gold = from_confusion([[1, 2, 0], [0, 0, 0], [0, 0, 3]])
        scores = per_class_scores(predictions, gold)
        assert scores[NEG] == {'precision': 1.0, 'recall': pytest.approx(1 / 3), 'f1': pytest.approx(0.5)}
        assert scores[NEU]['f1'] == 0.0
        assert macro_f1(predictions, gold) == pytest.approx((0.5 + 0 + 1) / 3)

    def test_relabelling_invariance(self):
        rng = np.random.default_rng(0)
        permutations = [(0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
        for trial in range(100):
            n = int(rng.integers(1, 40))
            gold = [Label(int(v)) for v in rng.integers(0, 3, n)]
            predictions = [Label(int(v)) for v in rng.integers(0, 3, n)]
            mapping = permutations[trial % len(permutations)]
            moved = lambda labels: [Label(mapping[int(v)]) for v in labels]
            assert macro_f1(moved(predictions), moved(gold)) == macro_f1(predictions, gold)
