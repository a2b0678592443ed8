"""Fitness evaluation: the evaluator contract, a deterministic surrogate,
and the partial-dataset train-then-batch-evaluate protocol.

The protocol trains a freshly initialized model for k epochs on one part of
the training data, batch-evaluates accuracy on the held-out part, and
reports the mean of the per-batch accuracies.  A final short batch counts
as one batch in that mean, so the score differs slightly from
example-weighted accuracy unless the batch size divides the part evenly.

The surrogate maps an architecture to exp(-sharpness * distance(a, t))
against a target architecture t, where

    distance = edit_distance(kind sequence)         (unit cost per op)
             + sum of per-position parameter gaps   (aligned, same kind)
             + |depth(a) - depth(t)|

and a parameter gap normalizes each field difference by its range width:
conv |df|/7 + |dm|/127 + |ds|/3, pool |dk|/3 + |ds|/3 + (1 if the types
differ), fully-connected |dn|/2047.  Pool placeholders are semantically
inert and do not contribute.  The surrogate is exactly 1 at the target and
strictly below 1 at any architecture whose semantics differ.
"""

import abc
import math
from dataclasses import dataclass

import numpy as np

from .codec import Architecture, ConvSpec, FcSpec, PoolSpec
from .cnn import backward_and_step, build_model
from .dataset import LabeledDataset, iter_batches
from .errors import (
    ConfigError,
    ConsistencyError,
    EvaluatorFailure,
    NumericError,
    RangeError,
)


class FitnessEvaluator(abc.ABC):
    """Maps a decoded architecture to a fitness in [0, 1].

    ``concurrency_safe`` declares whether distinct calls may run in
    parallel; evaluations must be deterministic given the same rng seed.
    """

    concurrency_safe = False

    @abc.abstractmethod
    def evaluate(self, architecture: Architecture, rng: np.random.Generator) -> float:
        ...


@dataclass
class EvalProtocolConfig:
    """Knobs of the training protocol, including the optimizer defaults."""

    k: int
    batch_size: int
    train_fraction: float
    learning_rate: float = 0.01
    momentum: float = 0.9
    train_batch_size: int = 50
    dtype: str = "float32"

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be at least 1, got {self.k}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be at least 1, got {self.batch_size}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(
                f"train_fraction must be in (0, 1), got {self.train_fraction}"
            )
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.momentum < 0:
            raise ConfigError("momentum must be non-negative")
        if self.train_batch_size < 1:
            raise ConfigError("train_batch_size must be at least 1")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError(f"dtype must be float32 or float64, got {self.dtype}")


def mean_of_batch_accuracies(correct: np.ndarray, batch_size: int) -> float:
    """Mean of per-batch accuracies over consecutive batches of flags.

    Equals the overall accuracy exactly when batch_size divides the flag
    count; a trailing short batch is weighted as one full batch.
    """
    n = correct.shape[0]
    accs = [
        float(np.mean(correct[start : start + batch_size]))
        for start in range(0, n, batch_size)
    ]
    return float(np.mean(accs))


def batched_model_accuracy(model, dataset: LabeledDataset, batch_size: int, dtype) -> float:
    """Batch-evaluate a model: mean of per-batch accuracies on the dataset."""
    flags = []
    for x, y in iter_batches(dataset.images, dataset.labels, batch_size):
        predictions = model.predict(x.astype(dtype))
        flags.append(predictions == y)
    return mean_of_batch_accuracies(np.concatenate(flags), batch_size)


def evaluate_by_training(
    architecture: Architecture,
    train_part: LabeledDataset,
    fitness_part: LabeledDataset,
    config: EvalProtocolConfig,
    rng: np.random.Generator,
) -> float:
    """Train a fresh model for k epochs, then batch-evaluate its accuracy.

    Raises EvaluatorFailure when training produces non-finite values; the
    engine maps that to fitness 0 rather than aborting the search.
    """
    if train_part.num_classes != fitness_part.num_classes:
        raise ConsistencyError(
            f"train part has {train_part.num_classes} classes,"
            f" fitness part has {fitness_part.num_classes}"
        )
    dtype = np.float32 if config.dtype == "float32" else np.float64
    _, h, w, channels = train_part.images.shape
    model = build_model(architecture, h, w, channels, rng=rng, dtype=dtype)
    images = train_part.images.astype(dtype)
    labels = train_part.labels
    try:
        for _ in range(config.k):
            for x, y in iter_batches(images, labels, config.train_batch_size, rng=rng):
                backward_and_step(model, x, y, config.learning_rate, config.momentum)
    except NumericError as exc:
        raise EvaluatorFailure(f"training diverged: {exc}") from exc
    return batched_model_accuracy(model, fitness_part, config.batch_size, dtype)


class TrainingEvaluator(FitnessEvaluator):
    """Evaluator backed by the live training protocol on a fixed split."""

    concurrency_safe = True

    def __init__(
        self,
        train_part: LabeledDataset,
        fitness_part: LabeledDataset,
        config: EvalProtocolConfig,
    ):
        self.train_part = train_part
        self.fitness_part = fitness_part
        self.config = config

    def evaluate(self, architecture: Architecture, rng: np.random.Generator) -> float:
        return evaluate_by_training(
            architecture, self.train_part, self.fitness_part, self.config, rng
        )


@dataclass
class SurrogateLandscape:
    """Deterministic landscape peaked (fitness 1) at a target architecture."""

    target: Architecture
    sharpness: float

    def __post_init__(self):
        if self.sharpness <= 0:
            raise RangeError(f"sharpness must be positive, got {self.sharpness}")


def _kind_sequence(architecture: Architecture):
    return [layer.kind for layer in architecture.layers]


def _edit_distance(a, b) -> int:
    """Classic Levenshtein distance over layer-kind sequences."""
    previous = list(range(len(b) + 1))
    for i, item_a in enumerate(a, start=1):
        current = [i]
        for j, item_b in enumerate(b, start=1):
            cost = 0 if item_a == item_b else 1
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
            )
        previous = current
    return previous[-1]


def _layer_gap(a, b) -> float:
    """Normalized L1 gap between two same-kind layers (placeholders ignored)."""
    if isinstance(a, ConvSpec):
        return (
            abs(a.filter_size - b.filter_size) / 7.0
            + abs(a.feature_maps - b.feature_maps) / 127.0
            + abs(a.stride - b.stride) / 3.0
        )
    if isinstance(a, PoolSpec):
        return (
            abs(a.kernel - b.kernel) / 3.0
            + abs(a.stride - b.stride) / 3.0
            + (0.0 if a.pool_type is b.pool_type else 1.0)
        )
    if isinstance(a, FcSpec):
        return abs(a.neurons - b.neurons) / 2047.0
    raise RangeError(f"cannot compare {a!r}")


def landscape_distance(architecture: Architecture, target: Architecture) -> float:
    """Feature distance: kind edit distance + aligned parameter gaps + depth gap."""
    kinds_a = _kind_sequence(architecture)
    kinds_t = _kind_sequence(target)
    distance = float(_edit_distance(kinds_a, kinds_t))
    for layer_a, layer_t in zip(architecture.layers, target.layers):
        if layer_a.kind == layer_t.kind:
            distance += _layer_gap(layer_a, layer_t)
    distance += abs(architecture.depth - target.depth)
    return distance


def surrogate_evaluate(architecture: Architecture, landscape: SurrogateLandscape) -> float:
    """exp(-sharpness * distance to the target); 1.0 exactly at the target."""
    return math.exp(
        -landscape.sharpness * landscape_distance(architecture, landscape.target)
    )


class SurrogateEvaluator(FitnessEvaluator):
    """Pure, deterministic evaluator used for engine testing."""

    concurrency_safe = True

    def __init__(self, landscape: SurrogateLandscape):
        self.landscape = landscape

    def evaluate(self, architecture: Architecture, rng: np.random.Generator) -> float:
        return surrogate_evaluate(architecture, self.landscape)
