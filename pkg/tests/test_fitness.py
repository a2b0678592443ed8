"""Fitness tests: surrogate landscape oracles and the training protocol."""

import itertools

import numpy as np
import pytest

from ipnas.cnn import FcLayer, FlattenLayer, Model
from ipnas.codec import (
    Architecture,
    ConvSpec,
    FcSpec,
    PoolSpec,
    PoolType,
    decode_particle_position,
)
from ipnas.dataset import SplitSpec, split, synthetic_bars
from ipnas.errors import ConfigError, EvaluatorFailure, RangeError
from ipnas.fitness import (
    EvalProtocolConfig,
    SurrogateEvaluator,
    SurrogateLandscape,
    TrainingEvaluator,
    batched_model_accuracy,
    evaluate_by_training,
    landscape_distance,
    mean_of_batch_accuracies,
    surrogate_evaluate,
)

TARGET = Architecture(
    layers=(
        ConvSpec(filter_size=3, feature_maps=32, stride=1),
        PoolSpec(kernel=2, stride=2, pool_type=PoolType.MAX),
        FcSpec(neurons=10),
    ),
    num_classes=10,
)
LANDSCAPE = SurrogateLandscape(target=TARGET, sharpness=0.5)


def lattice():
    """A small enumerable architecture lattice containing the target."""
    fc = FcSpec(neurons=10)
    for f, m, s in itertools.product(range(1, 9), (1, 16, 32, 64, 128), range(1, 5)):
        yield Architecture(layers=(ConvSpec(f, m, s), fc), num_classes=10)
    for f, m, s, k, sp, t in itertools.product(
        range(1, 9),
        (16, 32, 64),
        (1, 2),
        range(1, 5),
        range(1, 5),
        (PoolType.MAX, PoolType.AVERAGE),
    ):
        yield Architecture(
            layers=(ConvSpec(f, m, s), PoolSpec(k, sp, t), fc), num_classes=10
        )


def test_surrogate_is_one_exactly_at_target():
    assert surrogate_evaluate(TARGET, LANDSCAPE) == 1.0
    assert landscape_distance(TARGET, TARGET) == 0.0


def test_surrogate_below_one_for_deeper_architecture():
    deeper = Architecture(
        layers=TARGET.layers[:1] + (ConvSpec(3, 32, 1),) + TARGET.layers[1:],
        num_classes=10,
    )
    assert surrogate_evaluate(deeper, LANDSCAPE) < 1.0


def test_surrogate_lattice_argmax_matches_brute_force():
    best_arch, best_fit = None, -1.0
    count = 0
    for arch in lattice():
        fit = surrogate_evaluate(arch, LANDSCAPE)
        count += 1
        if fit > best_fit:
            best_arch, best_fit = arch, fit
    assert count <= 10_000
    assert best_fit == 1.0
    assert best_arch == TARGET


def test_surrogate_range_property():
    rng = np.random.default_rng(0)
    from ipnas.particle import PsoCoefficients
    from ipnas.swarm import SlotConstraints, SwarmConfig, init_population

    config = SwarmConfig(
        constraints=SlotConstraints(max_length=9, max_fully_connected=3, num_classes=10),
        coefficients=PsoCoefficients(
            w=0.7298, c1=[1.49618, 1.49618], c2=[1.49618, 1.49618], v_max=[4.0, 25.6]
        ),
        population_size=100,
        max_generations=1,
    )
    for particle in init_population(config, rng):
        arch = decode_particle_position(particle.position, 10)
        assert 0.0 <= surrogate_evaluate(arch, LANDSCAPE) <= 1.0


def test_surrogate_placeholder_is_semantically_inert():
    a = Architecture(
        layers=(
            ConvSpec(3, 32, 1),
            PoolSpec(2, 2, PoolType.MAX, placeholder=0),
            FcSpec(10),
        ),
        num_classes=10,
    )
    b = Architecture(
        layers=(
            ConvSpec(3, 32, 1),
            PoolSpec(2, 2, PoolType.MAX, placeholder=63),
            FcSpec(10),
        ),
        num_classes=10,
    )
    assert surrogate_evaluate(a, LANDSCAPE) == surrogate_evaluate(b, LANDSCAPE)


def test_surrogate_evaluator_ignores_rng():
    ev = SurrogateEvaluator(LANDSCAPE)
    a = ev.evaluate(TARGET, np.random.default_rng(1))
    b = ev.evaluate(TARGET, np.random.default_rng(999))
    assert a == b == 1.0


# ---------------------------------------------------------------- protocol

def separable_parts():
    ds = synthetic_bars(400, noise=0.15, rng=np.random.default_rng(10))
    return split(ds, SplitSpec(train_fraction=0.8, seed=3))


def test_linearly_separable_set_trains_above_point_nine():
    train_part, fitness_part = separable_parts()

    # Independent oracle: plain logistic regression must ace the same split.
    from sklearn.linear_model import LogisticRegression

    oracle = LogisticRegression(max_iter=3000).fit(
        train_part.images.reshape(len(train_part), -1), train_part.labels
    )
    oracle_acc = oracle.score(
        fitness_part.images.reshape(len(fitness_part), -1), fitness_part.labels
    )
    assert oracle_acc >= 0.99

    config = EvalProtocolConfig(k=5, batch_size=50, train_fraction=0.8)
    for position in ([2, 61, 27, 255], [14, 128, 18, 143, 27, 255]):
        arch = decode_particle_position(position, 2)
        fitness = evaluate_by_training(
            arch, train_part, fitness_part, config, np.random.default_rng(4)
        )
        assert fitness > 0.9


def test_training_evaluator_deterministic_per_seed():
    train_part, fitness_part = separable_parts()
    ev = TrainingEvaluator(
        train_part, fitness_part, EvalProtocolConfig(k=2, batch_size=50, train_fraction=0.8)
    )
    arch = decode_particle_position([2, 61, 27, 255], 2)
    a = ev.evaluate(arch, np.random.default_rng(5))
    b = ev.evaluate(arch, np.random.default_rng(5))
    assert a == b


def test_constant_label_ceiling():
    ds = synthetic_bars(60, rng=np.random.default_rng(6))
    all_zero = ds.subset(np.where(ds.labels == 0)[0])
    # A degenerate model that always predicts class 0.
    model = Model([FlattenLayer(), FcLayer(np.zeros((64, 2)), np.array([1.0, 0.0]))], 2)
    assert batched_model_accuracy(model, all_zero, 7, np.float64) == 1.0


def test_mean_of_batch_accuracies_identity_when_divisible():
    rng = np.random.default_rng(7)
    flags = rng.random(600) < 0.83
    assert abs(mean_of_batch_accuracies(flags, 50) - flags.mean()) < 1e-12
    assert abs(mean_of_batch_accuracies(flags, 600) - flags.mean()) < 1e-12


def test_mean_of_batch_accuracies_short_batch_weighting():
    flags = np.array([True] * 4 + [False])
    # Two batches of accuracy 1.0 and 0.0; the short one counts as a batch.
    assert mean_of_batch_accuracies(flags, 4) == 0.5
    assert flags.mean() == 0.8


def test_training_divergence_maps_to_evaluator_failure():
    train_part, fitness_part = separable_parts()
    config = EvalProtocolConfig(
        k=1, batch_size=50, train_fraction=0.8, learning_rate=1e12
    )
    arch = decode_particle_position([2, 61, 27, 255], 2)
    with np.errstate(all="ignore"), pytest.raises(EvaluatorFailure):
        evaluate_by_training(
            arch, train_part, fitness_part, config, np.random.default_rng(8)
        )


def test_protocol_config_validation():
    with pytest.raises(ConfigError):
        EvalProtocolConfig(k=0, batch_size=50, train_fraction=0.8)
    with pytest.raises(ConfigError):
        EvalProtocolConfig(k=1, batch_size=0, train_fraction=0.8)
    with pytest.raises(ConfigError):
        EvalProtocolConfig(k=1, batch_size=50, train_fraction=1.0)
    with pytest.raises(ConfigError):
        EvalProtocolConfig(k=1, batch_size=50, train_fraction=0.8, dtype="float16")


def test_landscape_requires_positive_sharpness():
    with pytest.raises(RangeError):
        SurrogateLandscape(target=TARGET, sharpness=0.0)
