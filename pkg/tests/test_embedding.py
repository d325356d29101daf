import numpy as np
import pytest

from tdsa import embedding as emb
from tdsa.embedding import EmbeddingFormatError
from tdsa.lexicon import ZERO


@pytest.fixture
def small():
    return emb.load_text_embeddings('a 1 2\nb 3 4\nc 5 6\n', name='small')


class TestLoading:
    def test_three_lines(self, small):
        assert small.rows.shape == (3, 2)
        np.testing.assert_array_equal(small.lookup('b'), [3, 4])

    def test_header_skipped(self):
        matrix = emb.load_text_embeddings('400000 2\nx 1 1\n')
        assert len(matrix) == 1 and 'x' in matrix

    def test_duplicates_first_wins(self):
        matrix = emb.load_text_embeddings('a 1 1\nb 2 2\na 9 9\n')
        assert len(matrix) == 3 - matrix.duplicates == 2
        np.testing.assert_array_equal(matrix.lookup('a'), [1, 1])

    def test_ragged_row(self):
        with pytest.raises(EmbeddingFormatError, match='line 3'):
            emb.load_text_embeddings('a 1 2\nb 1 2\nc 1\n')

    def test_tab_separated(self):
        matrix = emb.load_text_embeddings('a\t0.5\t1.5\n')
        np.testing.assert_array_equal(matrix.lookup('a'), [0.5, 1.5])

    def test_rows_read_only(self, small):
        with pytest.raises(ValueError):
            small.rows[0, 0] = 7


class TestLookup:
    @pytest.mark.parametrize('token', ['zzz', ZERO])
    def test_zero_vector(self, small, token):
        np.testing.assert_array_equal(emb.lookup(small, token), [0, 0])

    def test_matrix(self, small):
        np.testing.assert_array_equal(small.matrix(['c', 'q', 'a']), [[5, 6], [0, 0], [1, 2]])


class TestFilter:
    def test_identity(self, small):
        kept = emb.filter_vocab(small, small.vocab)
        for word in small.vocab:
            np.testing.assert_array_equal(kept.lookup(word), small.lookup(word))

    def test_empty(self, small):
        kept = emb.filter_vocab(small, set())
        assert len(kept) == 0 and kept.dim == 2
        np.testing.assert_array_equal(kept.lookup('a'), [0, 0])

    def test_subset_bit_identical(self, small):
        kept = emb.filter_vocab(small, {'c', 'unseen'})
        assert list(kept.vocab) == ['c']
        assert kept.lookup('c').tobytes() == small.lookup('c').tobytes()


class TestConcat:
    def test_dims_add(self):
        a = emb.EmbeddingMatrix({'w': 0}, np.ones((1, 50)))
        b = emb.EmbeddingMatrix({'w': 0}, np.ones((1, 200)))
        assert emb.concat(a, b).dim == 250

    def test_one_sided_and_both(self, small):
        other = emb.load_text_embeddings('b 7\nz 8\n')
        joined = emb.concat(small, other)
        np.testing.assert_array_equal(joined.lookup('a'), [1, 2, 0])
        np.testing.assert_array_equal(joined.lookup('b'), [3, 4, 7])
        np.testing.assert_array_equal(joined.lookup('z'), [0, 0, 8])
