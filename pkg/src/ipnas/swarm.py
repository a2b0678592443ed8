"""Swarm orchestration: slot-constrained initialization and the search loop.

Interfaces are constrained by their slot in the particle: the first slot is
always a convolution, the last is always fully-connected, and in between
pooling/disabled (and, near the tail, fully-connected) entries are allowed.
The loop is synchronous: all particles move, then all are evaluated, then
the personal and global bests are merged.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .codec import (
    Architecture,
    CONV_SUBNET,
    DISABLED_SUBNET,
    FC_SUBNET,
    LayerKind,
    POOL_SUBNET,
    Subnet,
    decode_particle_position,
)
from .errors import EvaluatorFailure, RangeError
from .particle import (
    Particle,
    PsoCoefficients,
    random_address_value,
    random_velocity,
    repair_interface,
    update_position,
    update_velocity,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SlotConstraints:
    """Structural limits of a particle: length, tail width, output classes."""

    max_length: int
    max_fully_connected: int
    num_classes: int

    def __post_init__(self):
        if self.max_length < 2:
            raise RangeError("max_length must be at least 2")
        if not 1 <= self.max_fully_connected < self.max_length:
            raise RangeError(
                "max_fully_connected must be in [1, max_length)"
            )
        if not 1 <= self.num_classes <= 2048:
            raise RangeError("num_classes must be in [1, 2048]")

    @property
    def n_dims(self) -> int:
        return 2 * self.max_length


def allowed_subnets(
    slot: int, has_seen_fc: bool, constraints: SlotConstraints
) -> tuple[Subnet, ...]:
    """Subnets legal at one slot, given whether an FC layer already appeared.

    Slot 0 is convolution only and the last slot fully-connected only.  The
    middle region allows conv/pool/disabled; the last max_fully_connected - 1
    interior slots additionally allow fully-connected, collapsing to
    {fully-connected, disabled} once one has appeared.
    """
    last = constraints.max_length - 1
    if not 0 <= slot <= last:
        raise RangeError(f"slot {slot} out of range [0, {last}]")
    if slot == 0:
        return (CONV_SUBNET,)
    if slot == last:
        return (FC_SUBNET,)
    if slot < constraints.max_length - constraints.max_fully_connected:
        return (CONV_SUBNET, POOL_SUBNET, DISABLED_SUBNET)
    if has_seen_fc:
        return (FC_SUBNET, DISABLED_SUBNET)
    return (CONV_SUBNET, POOL_SUBNET, FC_SUBNET, DISABLED_SUBNET)


@dataclass
class SwarmConfig:
    """Everything the engine needs besides the evaluator and the RNG."""

    constraints: SlotConstraints
    coefficients: PsoCoefficients
    population_size: int
    max_generations: int

    def __post_init__(self):
        if self.population_size < 1:
            raise RangeError("population_size must be at least 1")
        if self.max_generations < 1:
            raise RangeError("max_generations must be at least 1")


@dataclass
class SwarmState:
    """Mutable search state: the particles plus global-best bookkeeping."""

    particles: list
    gbest_position: np.ndarray | None = None
    gbest_fitness: float | None = None
    generation: int = 0


@dataclass
class GenerationSnapshot:
    """Observer payload: positions and fitnesses after one generation."""

    generation: int
    positions: np.ndarray  # (population, 2 * max_length)
    fitnesses: np.ndarray  # (population,)
    gbest_position: np.ndarray
    gbest_fitness: float


@dataclass
class SearchResult:
    gbest_position: np.ndarray
    gbest_fitness: float
    architecture: Architecture
    history: list = field(default_factory=list)


def init_population(config: SwarmConfig, rng: np.random.Generator) -> list:
    """Random particles whose every slot respects its allowed subnets."""
    particles = []
    for _ in range(config.population_size):
        position = np.empty(config.constraints.n_dims)
        has_seen_fc = False
        for slot in range(config.constraints.max_length):
            choices = allowed_subnets(slot, has_seen_fc, config.constraints)
            subnet = choices[int(rng.integers(len(choices)))]
            value = random_address_value(subnet, rng)
            position[2 * slot] = value >> 8
            position[2 * slot + 1] = value & 0xFF
            if subnet.kind is LayerKind.FC:
                has_seen_fc = True
        velocity = random_velocity(
            config.constraints.n_dims, config.coefficients, rng
        )
        particles.append(
            Particle(
                position=position,
                velocity=velocity,
                pbest_position=position.copy(),
            )
        )
    return particles


def repair_particle(
    particle: Particle, constraints: SlotConstraints, rng: np.random.Generator
):
    """Scan slots left to right, repairing each against its allowed set.

    The has-seen-FC flag is re-derived during the scan, so a mid-vector
    mutation re-legalizes the tail on every generation.
    """
    has_seen_fc = False
    for slot in range(constraints.max_length):
        allowed = allowed_subnets(slot, has_seen_fc, constraints)
        subnet = repair_interface(
            particle.position, particle.velocity, slot, allowed, rng
        )
        if subnet.kind is LayerKind.FC:
            has_seen_fc = True


def _evaluate_all(particles, evaluator, constraints, rng):
    """Evaluate every particle; a failed evaluation scores 0 (and is logged)."""
    for index, particle in enumerate(particles):
        child = np.random.default_rng(int(rng.integers(2**63)))
        architecture = decode_particle_position(
            particle.position, constraints.num_classes
        )
        try:
            fitness = float(evaluator.evaluate(architecture, child))
            if not np.isfinite(fitness) or not 0.0 <= fitness <= 1.0:
                raise EvaluatorFailure(
                    f"fitness {fitness!r} outside [0, 1]"
                )
        except EvaluatorFailure as exc:
            logger.warning("evaluation failed for particle %d: %s", index, exc)
            fitness = 0.0
        particle.fitness = fitness


def _update_bests(state: SwarmState):
    """Merge fitnesses into pbest/gbest; ties keep the incumbent."""
    for particle in state.particles:
        if particle.pbest_fitness is None or particle.fitness > particle.pbest_fitness:
            particle.pbest_fitness = particle.fitness
            particle.pbest_position = particle.position.copy()
    for particle in state.particles:
        if state.gbest_fitness is None or particle.pbest_fitness > state.gbest_fitness:
            state.gbest_fitness = particle.pbest_fitness
            state.gbest_position = particle.pbest_position.copy()


def run(
    config: SwarmConfig,
    evaluator,
    rng: np.random.Generator,
    observer=None,
) -> SearchResult:
    """Run the full search and return the decoded global best.

    The initial population is evaluated once before the loop (generation 0,
    not recorded) so that every velocity update has a personal and global
    best to pull toward.  Each recorded generation then moves every
    particle, repairs every slot, evaluates, and merges the bests.  The
    observer, when given, receives one :class:`GenerationSnapshot` per
    recorded generation.
    """
    constraints = config.constraints
    particles = init_population(config, rng)
    state = SwarmState(particles=particles)
    _evaluate_all(particles, evaluator, constraints, rng)
    _update_bests(state)

    history = []
    for generation in range(1, config.max_generations + 1):
        state.generation = generation
        for particle in particles:
            particle.velocity = update_velocity(
                particle, state.gbest_position, config.coefficients, rng
            )
            particle.position = update_position(particle.position, particle.velocity)
            repair_particle(particle, constraints, rng)
        _evaluate_all(particles, evaluator, constraints, rng)
        _update_bests(state)
        snapshot = GenerationSnapshot(
            generation=generation,
            positions=np.array([p.position for p in particles]),
            fitnesses=np.array([p.fitness for p in particles]),
            gbest_position=state.gbest_position.copy(),
            gbest_fitness=state.gbest_fitness,
        )
        history.append(snapshot)
        if observer is not None:
            observer(snapshot)

    architecture = decode_particle_position(
        state.gbest_position, constraints.num_classes
    )
    return SearchResult(
        gbest_position=state.gbest_position.copy(),
        gbest_fitness=state.gbest_fitness,
        architecture=architecture,
        history=history,
    )
