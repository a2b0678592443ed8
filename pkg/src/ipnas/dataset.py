"""Dataset ingestion: IDX and CSV image files, splitting, batching.

Images are stored as (n, height, width, 1) float arrays with pixel bytes
scaled by 1/255; labels as an integer vector.  IDX files use the classic
big-endian layout: images carry magic 0x00000803 followed by count, rows
and columns, labels carry magic 0x00000801 followed by count, then one
unsigned byte per pixel or label.  Datasets are immutable after load.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConsistencyError, FormatError, RangeError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


@dataclass
class LabeledDataset:
    images: np.ndarray  # (n, h, w, 1), values in [0, 1]
    labels: np.ndarray  # (n,), ints in [0, num_classes)
    num_classes: int

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4 or self.images.shape[3] != 1:
            raise FormatError(f"images must be (n, h, w, 1), got {self.images.shape}")
        if self.labels.shape != (self.images.shape[0],):
            raise ConsistencyError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )
        if len(self) < 1:
            raise FormatError("dataset must contain at least one example")
        if self.images.min() < 0.0 or self.images.max() > 1.0:
            raise RangeError("image values must lie in [0, 1]")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise RangeError(
                f"labels must lie in [0, {self.num_classes}),"
                f" got [{self.labels.min()}, {self.labels.max()}]"
            )

    def __len__(self) -> int:
        return self.images.shape[0]

    def subset(self, indices) -> "LabeledDataset":
        return LabeledDataset(
            images=self.images[indices],
            labels=self.labels[indices],
            num_classes=self.num_classes,
        )


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic split: shuffle by seed, take the first fraction."""

    train_fraction: float
    seed: int

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(
                f"train_fraction must be in (0, 1), got {self.train_fraction}"
            )


def _read_header(data: bytes, path, expected_magic: int, n_dims: int):
    header_len = 4 * (1 + n_dims)
    if len(data) < header_len:
        raise FormatError(f"{path}: truncated header")
    fields = struct.unpack(f">{1 + n_dims}i", data[:header_len])
    if fields[0] != expected_magic:
        raise FormatError(
            f"{path}: bad magic 0x{fields[0]:08X}, expected 0x{expected_magic:08X}"
        )
    return fields[1:], data[header_len:]


def load_idx(images_path, labels_path) -> LabeledDataset:
    """Load an IDX image/label file pair; labels infer num_classes."""
    with open(images_path, "rb") as fh:
        image_data = fh.read()
    with open(labels_path, "rb") as fh:
        label_data = fh.read()

    (n, rows, cols), pixels = _read_header(image_data, images_path, IMAGE_MAGIC, 3)
    if len(pixels) != n * rows * cols:
        raise FormatError(
            f"{images_path}: expected {n * rows * cols} pixel bytes, got {len(pixels)}"
        )
    (n_labels,), label_bytes = _read_header(label_data, labels_path, LABEL_MAGIC, 1)
    if len(label_bytes) != n_labels:
        raise FormatError(
            f"{labels_path}: expected {n_labels} label bytes, got {len(label_bytes)}"
        )
    if n != n_labels:
        raise ConsistencyError(f"{n} images but {n_labels} labels")

    images = np.frombuffer(pixels, dtype=np.uint8).reshape(n, rows, cols, 1) / 255.0
    labels = np.frombuffer(label_bytes, dtype=np.uint8).astype(np.int64)
    return LabeledDataset(images, labels, num_classes=int(labels.max()) + 1)


def save_idx(dataset: LabeledDataset, images_path, labels_path):
    """Write a dataset back to an IDX pair, byte-exact inverse of load_idx."""
    n, rows, cols, _ = dataset.images.shape
    pixel_bytes = np.round(dataset.images * 255.0).astype(np.uint8)
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">4i", IMAGE_MAGIC, n, rows, cols))
        fh.write(pixel_bytes.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">2i", LABEL_MAGIC, n))
        fh.write(dataset.labels.astype(np.uint8).tobytes())


def load_csv(path, height: int, width: int) -> LabeledDataset:
    """Load a header-less CSV with rows of ``label, pixel0, ..., pixelN``.

    Pixels are bytes in [0, 255], normalized exactly like IDX data.
    """
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != 1 + height * width:
                raise FormatError(
                    f"{path}:{line_no}: expected {1 + height * width} columns,"
                    f" got {len(cells)}"
                )
            try:
                values = [int(cell) for cell in cells]
            except ValueError:
                raise FormatError(
                    f"{path}:{line_no}: non-integer cell"
                ) from None
            if values[0] < 0:
                raise RangeError(f"{path}:{line_no}: negative label {values[0]}")
            for pixel in values[1:]:
                if not 0 <= pixel <= 255:
                    raise RangeError(
                        f"{path}:{line_no}: pixel {pixel} outside [0, 255]"
                    )
            rows.append(values)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    table = np.array(rows, dtype=np.int64)
    labels = table[:, 0]
    images = table[:, 1:].reshape(len(rows), height, width, 1) / 255.0
    return LabeledDataset(images, labels, num_classes=int(labels.max()) + 1)


def split(dataset: LabeledDataset, spec: SplitSpec):
    """Seeded permutation split into (train_part, fitness_part)."""
    n = len(dataset)
    n_train = int(np.floor(n * spec.train_fraction))
    if n_train < 1 or n - n_train < 1:
        raise ConfigError(
            f"train_fraction {spec.train_fraction} leaves an empty part for n={n}"
        )
    order = np.random.default_rng(spec.seed).permutation(n)
    return dataset.subset(order[:n_train]), dataset.subset(order[n_train:])


def iter_batches(images, labels, batch_size: int, rng=None):
    """Yield (x, y) batches covering every example exactly once.

    With an rng the order is shuffled; the final batch is short when
    batch_size does not divide the example count.
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size must be at least 1, got {batch_size}")
    n = images.shape[0]
    order = rng.permutation(n) if rng is not None else np.arange(n)
    for start in range(0, n, batch_size):
        idx = order[start : start + batch_size]
        yield images[idx], labels[idx]


def synthetic_bars(
    n: int,
    height: int = 8,
    width: int = 8,
    noise: float = 0.15,
    contrast: float = 0.8,
    rng: np.random.Generator | None = None,
) -> LabeledDataset:
    """Two-class toy images: a bright horizontal bar versus a vertical one.

    ``contrast`` is the bar height above the 0.1 background; with the
    default settings the classes stay linearly separable in pixel space
    despite the Gaussian noise, which makes the set a quick trainability
    probe.  Lower contrast against higher noise turns it into a landscape
    where architecture quality actually matters.
    """
    rng = rng if rng is not None else np.random.default_rng()
    labels = rng.integers(0, 2, size=n)
    images = np.full((n, height, width, 1), 0.1)
    mid_row, mid_col = height // 2, width // 2
    images[labels == 0, mid_row - 1 : mid_row + 1, :, 0] += contrast
    images[labels == 1, :, mid_col - 1 : mid_col + 1, 0] += contrast
    images += noise * rng.standard_normal(images.shape)
    images = np.clip(images, 0.0, 1.0)
    # Snap to the byte grid so IDX round-trips reproduce the data exactly.
    images = np.round(images * 255.0) / 255.0
    return LabeledDataset(images, labels, num_classes=2)
