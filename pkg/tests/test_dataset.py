"""Dataset tests: IDX byte-exactness, CSV parsing, splits, batching."""

import struct

import numpy as np
import pytest

from ipnas.dataset import (
    IMAGE_MAGIC,
    LABEL_MAGIC,
    LabeledDataset,
    SplitSpec,
    iter_batches,
    load_csv,
    load_idx,
    save_idx,
    split,
    synthetic_bars,
)
from ipnas.errors import ConfigError, ConsistencyError, FormatError, RangeError


def write_idx_pair(tmp_path, pixels, labels, rows=2, cols=2):
    """Build raw IDX bytes by hand; the layout itself is the oracle."""
    n = len(labels)
    images_path = tmp_path / "images.idx"
    labels_path = tmp_path / "labels.idx"
    images_path.write_bytes(
        struct.pack(">4i", IMAGE_MAGIC, n, rows, cols) + bytes(pixels)
    )
    labels_path.write_bytes(struct.pack(">2i", LABEL_MAGIC, n) + bytes(labels))
    return images_path, labels_path


def test_load_idx_hand_built(tmp_path):
    pixels = [0, 1, 128, 255, 10, 20, 30, 40]
    images_path, labels_path = write_idx_pair(tmp_path, pixels, [0, 9])
    ds = load_idx(images_path, labels_path)
    assert len(ds) == 2
    assert ds.images.shape == (2, 2, 2, 1)
    assert ds.num_classes == 10  # boundary label 9 accepted
    np.testing.assert_allclose(
        ds.images[0, :, :, 0], np.array([[0, 1], [128, 255]]) / 255.0
    )
    assert list(ds.labels) == [0, 9]


def test_load_idx_wrong_magic(tmp_path):
    images_path, labels_path = write_idx_pair(tmp_path, [0] * 8, [0, 1])
    bad = tmp_path / "bad.idx"
    bad.write_bytes(struct.pack(">4i", 0x00000777, 2, 2, 2) + bytes(8))
    with pytest.raises(FormatError, match="magic"):
        load_idx(bad, labels_path)


def test_load_idx_truncated(tmp_path):
    images_path, labels_path = write_idx_pair(tmp_path, [0] * 8, [0, 1])
    truncated = tmp_path / "short.idx"
    truncated.write_bytes(images_path.read_bytes()[:-3])
    with pytest.raises(FormatError, match="pixel"):
        load_idx(truncated, labels_path)


def test_load_idx_count_mismatch(tmp_path):
    images_path, _ = write_idx_pair(tmp_path, [0] * 8, [0, 1])
    other_labels = tmp_path / "three.idx"
    other_labels.write_bytes(struct.pack(">2i", LABEL_MAGIC, 3) + bytes([0, 1, 0]))
    with pytest.raises(ConsistencyError):
        load_idx(images_path, other_labels)


def test_idx_write_read_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    ds = synthetic_bars(20, rng=rng)
    images_path = tmp_path / "rt_images.idx"
    labels_path = tmp_path / "rt_labels.idx"
    save_idx(ds, images_path, labels_path)
    again = load_idx(images_path, labels_path)
    assert np.array_equal(ds.images, again.images)
    assert np.array_equal(ds.labels, again.labels)
    # A second save must reproduce identical bytes.
    save_idx(again, tmp_path / "rt2_images.idx", tmp_path / "rt2_labels.idx")
    assert (tmp_path / "rt2_images.idx").read_bytes() == images_path.read_bytes()
    assert (tmp_path / "rt2_labels.idx").read_bytes() == labels_path.read_bytes()


def test_load_csv_single_row(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("1,0,0,0,255\n")
    ds = load_csv(path, 2, 2)
    assert len(ds) == 1
    assert ds.labels[0] == 1
    assert ds.images[0, 1, 1, 0] == 1.0
    assert ds.images[0, 0, 0, 0] == 0.0


def test_load_csv_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(FormatError):
        load_csv(path, 2, 2)


def test_load_csv_pixel_overflow(tmp_path):
    path = tmp_path / "over.csv"
    path.write_text("0,0,0,0,256\n")
    with pytest.raises(RangeError):
        load_csv(path, 2, 2)


def test_load_csv_ragged_row(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("0,0,0,0,1\n1,0,0\n")
    with pytest.raises(FormatError):
        load_csv(path, 2, 2)


def test_split_sizes_and_determinism():
    ds = synthetic_bars(10, rng=np.random.default_rng(1))
    spec = SplitSpec(train_fraction=0.8, seed=7)
    train_a, fit_a = split(ds, spec)
    train_b, fit_b = split(ds, spec)
    assert len(train_a) == 8 and len(fit_a) == 2
    assert np.array_equal(train_a.images, train_b.images)
    assert np.array_equal(fit_a.labels, fit_b.labels)


def test_split_union_is_original_multiset():
    rng = np.random.default_rng(2)
    for n, fraction in [(10, 0.8), (17, 0.5), (23, 0.31)]:
        ds = synthetic_bars(n, rng=rng)
        train, fit = split(ds, SplitSpec(train_fraction=fraction, seed=3))
        assert len(train) + len(fit) == n
        combined = np.concatenate(
            [
                np.column_stack([train.labels, train.images.reshape(len(train), -1)]),
                np.column_stack([fit.labels, fit.images.reshape(len(fit), -1)]),
            ]
        )
        original = np.column_stack([ds.labels, ds.images.reshape(n, -1)])
        seen = combined[np.lexsort(combined.T)]
        expected = original[np.lexsort(original.T)]
        assert np.array_equal(seen, expected)


def test_split_empty_part_rejected():
    ds = synthetic_bars(3, rng=np.random.default_rng(3))
    with pytest.raises(ConfigError):
        split(ds, SplitSpec(train_fraction=0.1, seed=0))


def test_iter_batches_covers_exactly_once():
    ds = synthetic_bars(13, rng=np.random.default_rng(4))
    batches = list(iter_batches(ds.images, ds.labels, 5))
    assert [len(y) for _, y in batches] == [5, 5, 3]
    stacked = np.concatenate([x for x, _ in batches])
    assert np.array_equal(stacked, ds.images)


def test_iter_batches_shuffled_deterministic():
    ds = synthetic_bars(12, rng=np.random.default_rng(5))
    order_a = [y for _, y in iter_batches(ds.images, ds.labels, 4, rng=np.random.default_rng(9))]
    order_b = [y for _, y in iter_batches(ds.images, ds.labels, 4, rng=np.random.default_rng(9))]
    assert all(np.array_equal(a, b) for a, b in zip(order_a, order_b))
    flat = np.concatenate(order_a)
    assert sorted(flat) == sorted(ds.labels)


def test_dataset_validation():
    with pytest.raises(RangeError):
        LabeledDataset(np.full((2, 2, 2, 1), 1.5), np.array([0, 1]), 2)
    with pytest.raises(ConsistencyError):
        LabeledDataset(np.zeros((2, 2, 2, 1)), np.array([0, 1, 1]), 2)
    with pytest.raises(RangeError):
        LabeledDataset(np.zeros((2, 2, 2, 1)), np.array([0, 5]), 2)


def test_synthetic_bars_properties():
    ds = synthetic_bars(50, rng=np.random.default_rng(6))
    assert ds.images.shape == (50, 8, 8, 1)
    assert ds.num_classes == 2
    assert 0.0 <= ds.images.min() and ds.images.max() <= 1.0
    assert set(np.unique(ds.labels)) == {0, 1}
