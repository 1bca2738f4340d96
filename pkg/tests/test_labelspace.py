"""Label space: construction rules, encodings, and the disjoint mask layout."""

import numpy as np
import pytest

from disembed.errors import ConfigurationError
from disembed.labelspace import LabelSpace, Mask, Notion, build_masks


def test_tag_ordering_is_concatenated_notion_order(small_space):
    assert small_space.tags == ("red", "blue", "round", "square")
    assert small_space.num_tags == 4
    assert small_space.num_notions == 2


def test_embedding_dim_must_divide():
    with pytest.raises(ConfigurationError):
        LabelSpace([("a", ["x"]), ("b", ["y"]), ("c", ["z"])], embedding_dim=8)


def test_duplicate_tags_rejected():
    with pytest.raises(ConfigurationError):
        LabelSpace([("a", ["x", "y"]), ("b", ["y"])], embedding_dim=2)


def test_duplicate_notion_names_rejected():
    with pytest.raises(ConfigurationError):
        LabelSpace([("a", ["x"]), ("a", ["y"])], embedding_dim=2)


def test_empty_space_rejected():
    with pytest.raises(ConfigurationError):
        LabelSpace([], embedding_dim=4)


def test_multi_hot_round_trip(small_space):
    v = small_space.multi_hot(["blue", "square"])
    assert np.array_equal(v, [0, 1, 0, 1])
    assert small_space.decode(v) == ("blue", "square")


def test_multi_hot_unknown_tag(small_space):
    with pytest.raises(ConfigurationError):
        small_space.multi_hot(["green"])


def test_decode_wrong_length(small_space):
    with pytest.raises(ConfigurationError):
        small_space.decode(np.zeros(3))


def test_notion_of(small_space):
    assert small_space.notion_of("red") == "color"
    assert small_space.notion_of("square") == "shape"
    with pytest.raises(ConfigurationError):
        small_space.notion_of("nope")


def test_block_slices_partition_dimension(small_space):
    assert small_space.block_slice("color") == slice(0, 4)
    assert small_space.block_slice("shape") == slice(4, 8)
    assert small_space.block_size == 4


def test_masks_partition_and_orthogonality(small_space):
    masks = build_masks(small_space)
    total = sum(m.vector for m in masks)
    assert np.array_equal(total, np.ones(8))
    for i, mi in enumerate(masks):
        for mj in masks[i + 1 :]:
            assert np.dot(mi.vector, mj.vector) == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_masks_partition_random_spaces(seed):
    # randomized layouts: notion count 1..6, any divisible embedding width
    rng = np.random.default_rng(seed)
    g = int(rng.integers(1, 7))
    d = g * int(rng.integers(1, 9))
    notions = [
        (f"n{i}", [f"n{i}t{j}" for j in range(int(rng.integers(1, 5)))])
        for i in range(g)
    ]
    space = LabelSpace(notions, embedding_dim=d)
    masks = build_masks(space)
    assert np.array_equal(sum(m.vector for m in masks), np.ones(d))
    stacked = np.stack([m.vector for m in masks])
    # each dimension belongs to exactly one mask
    assert np.array_equal(stacked.sum(axis=0), np.ones(d))
    gram = stacked @ stacked.T
    assert np.array_equal(gram, np.diag(np.diag(gram)))


def test_tag_indices_of_notion(small_space):
    assert np.array_equal(small_space.tag_indices_of_notion("shape"), [2, 3])


def test_dict_round_trip(small_space):
    d = small_space.to_dict()
    back = LabelSpace.from_dict(d)
    assert back.tags == small_space.tags
    assert back.embedding_dim == small_space.embedding_dim
    assert [n.name for n in back.notions] == ["color", "shape"]


def test_from_dict_rejects_malformed():
    with pytest.raises(ConfigurationError):
        LabelSpace.from_dict({"notions": [{"name": "a"}], "embedding_dim": 4})


def test_notion_dataclass_accepted_directly():
    space = LabelSpace([Notion("a", ("x",)), Notion("b", ("y",))], embedding_dim=4)
    assert space.tags == ("x", "y")


def test_mask_is_binary(small_space):
    m = small_space.mask("color")
    assert isinstance(m, Mask)
    assert set(np.unique(m.vector)) <= {0.0, 1.0}
