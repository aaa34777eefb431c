import pytest

from ctxloco.embedding import (
    ContextMode,
    embed,
    embedding_dim,
    index_embedding,
    no_context,
    onehot,
)
from ctxloco.terrain import PropertyLevel, PropertyLevels, all_level_combinations

L = PropertyLevel


class TestOnehot:
    def test_very_low(self):
        assert onehot(L.VERY_LOW) == [1, 0, 0, 0, 0]

    def test_very_high(self):
        assert onehot(L.VERY_HIGH) == [0, 0, 0, 0, 1]

    def test_medium(self):
        assert onehot(L.MEDIUM) == [0, 0, 1, 0, 0]


class TestEmbed:
    def test_worked_two_property_example(self):
        # friction VERY_LOW and damping VERY_HIGH: the friction block is
        # [1,0,0,0,0], the damping block [0,0,0,0,1]; concatenating just
        # those two blocks gives [1,0,0,0,0,0,0,0,0,1]
        levels = PropertyLevels(L.MEDIUM, L.VERY_LOW, L.MEDIUM, L.VERY_HIGH)
        vec = embed(levels).values
        friction_block = list(vec[5:10])
        damping_block = list(vec[15:20])
        assert friction_block == [1, 0, 0, 0, 0]
        assert damping_block == [0, 0, 0, 0, 1]
        assert friction_block + damping_block == [1, 0, 0, 0, 0, 0, 0, 0, 0, 1]

    def test_all_very_low_block_structure(self):
        vec = embed(PropertyLevels.uniform(L.VERY_LOW)).values
        assert [i for i, v in enumerate(vec) if v] == [0, 5, 10, 15]

    def test_exactly_four_ones_everywhere(self):
        for levels in all_level_combinations():
            vec = embed(levels).values
            assert len(vec) == 20
            assert sum(vec) == 4
            for block in range(4):
                assert sum(vec[5 * block : 5 * block + 5]) == 1

    def test_injective(self):
        seen = {embed(levels).values for levels in all_level_combinations()}
        assert len(seen) == 625

    def test_optional_rolling_block(self):
        levels = PropertyLevels(L.MEDIUM, L.HIGH, L.MEDIUM, L.MEDIUM)
        vec = embed(levels, include_rolling_friction=True)
        assert vec.dim == 25
        # rolling block copies the friction grade
        assert list(vec.values[10:15]) == [0, 0, 0, 1, 0]


class TestIndexEmbedding:
    def test_training_onehot(self):
        vec = index_embedding(3, 8, is_training=True)
        assert list(vec.values) == [0, 0, 0, 1, 0, 0, 0, 0]
        assert vec.mode is ContextMode.INDEXING

    def test_evaluation_zero_padding(self):
        for idx in (0, 5, 7):
            vec = index_embedding(idx, 8, is_training=False)
            assert list(vec.values) == [0] * 8

    def test_out_of_range_raises(self):
        with pytest.raises(ValueError):
            index_embedding(8, 8, is_training=True)
        with pytest.raises(ValueError):
            index_embedding(-1, 8, is_training=True)


def test_no_context_empty():
    vec = no_context()
    assert vec.dim == 0 and vec.mode is ContextMode.NO_CONTEXT


def test_embedding_dim_per_mode():
    assert embedding_dim(ContextMode.EMBEDDING) == 20
    assert embedding_dim(ContextMode.INDEXING, 8) == 8
    assert embedding_dim(ContextMode.NO_CONTEXT) == 0
