"""Particle state and per-byte velocity/position updates with clamping.

Positions and velocities are real vectors of length 2 * max_length; every
byte of an encoded interface is one dimension.  Coefficients come in pairs
indexed by byte position within an interface (0 = high byte, 1 = low byte)
so the two bytes can explore at different speeds.
"""

from dataclasses import dataclass

import numpy as np

from .codec import Subnet, address_from_reals, subnet_of
from .errors import RangeError, StateError


@dataclass
class PsoCoefficients:
    """Inertia, acceleration pairs and the per-byte velocity clamp.

    ``c1`` weighs attraction to a particle's own best, ``c2`` to the swarm
    best.  ``v_max`` bounds |velocity| per byte index after every update.
    """

    w: float
    c1: np.ndarray
    c2: np.ndarray
    v_max: np.ndarray

    def __post_init__(self):
        self.c1 = np.asarray(self.c1, dtype=float)
        self.c2 = np.asarray(self.c2, dtype=float)
        self.v_max = np.asarray(self.v_max, dtype=float)
        for name, arr in (("c1", self.c1), ("c2", self.c2), ("v_max", self.v_max)):
            if arr.shape != (2,):
                raise RangeError(f"{name} must have exactly 2 entries")
        # The zero-coefficient corner (w = c1 = c2 = 0) is legal: it yields
        # a provably zero velocity and is useful for isolating terms.
        if self.w < 0 or (self.c1 < 0).any() or (self.c2 < 0).any():
            raise RangeError("w, c1 and c2 must be non-negative")
        if (self.v_max <= 0).any():
            raise RangeError("v_max entries must be positive")

    def per_dimension(self, n_dims: int):
        """Tile the byte-indexed pairs across a full position vector."""
        reps = n_dims // 2
        return (
            np.tile(self.c1, reps),
            np.tile(self.c2, reps),
            np.tile(self.v_max, reps),
        )


@dataclass
class Particle:
    """Position/velocity vectors plus personal-best bookkeeping."""

    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_fitness: float | None = None
    fitness: float | None = None

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        self.pbest_position = np.asarray(self.pbest_position, dtype=float)
        n = self.position.shape
        if self.velocity.shape != n or self.pbest_position.shape != n:
            raise RangeError("position, velocity and pbest must share one length")

    @property
    def n_dims(self) -> int:
        return self.position.shape[0]


def update_velocity(
    particle: Particle,
    gbest_position: np.ndarray,
    coeffs: PsoCoefficients,
    rng: np.random.Generator,
) -> np.ndarray:
    """New clamped velocity: w*v + c1[i]*r1*(pbest - x) + c2[i]*r2*(gbest - x).

    r1 and r2 are drawn fresh per dimension (per byte).  The result is
    clamped to [-v_max[i], +v_max[i]] with i the byte index (d mod 2).
    """
    if particle.pbest_fitness is None:
        raise StateError("personal best is unset; evaluate the particle first")
    gbest_position = np.asarray(gbest_position, dtype=float)
    if gbest_position.shape != particle.position.shape:
        raise RangeError("gbest length does not match the particle")
    n = particle.n_dims
    c1, c2, v_max = coeffs.per_dimension(n)
    r1 = rng.random(n)
    r2 = rng.random(n)
    velocity = (
        coeffs.w * particle.velocity
        + c1 * r1 * (particle.pbest_position - particle.position)
        + c2 * r2 * (gbest_position - particle.position)
    )
    return np.clip(velocity, -v_max, v_max)


def update_position(position: np.ndarray, velocity: np.ndarray) -> np.ndarray:
    """Move and wrap: values above 255 lose 255, negatives gain 255.

    The overflow rule subtracts 255 (not 256), and negatives mirror it; the
    result always lands in [0, 255].
    """
    moved = np.asarray(position, dtype=float) + np.asarray(velocity, dtype=float)
    while (moved > 255).any():
        moved = np.where(moved > 255, moved - 255, moved)
    while (moved < 0).any():
        moved = np.where(moved < 0, moved + 255, moved)
    return moved


def random_address_value(subnet: Subnet, rng: np.random.Generator) -> int:
    """Uniformly random address value inside one subnet."""
    return subnet.base + int(rng.integers(subnet.size))


def random_velocity(
    n_dims: int, coeffs: PsoCoefficients, rng: np.random.Generator
) -> np.ndarray:
    """Initial velocity, uniform in [-v_max[i], +v_max[i]] per dimension."""
    _, _, v_max = coeffs.per_dimension(n_dims)
    return rng.uniform(-v_max, v_max)


def repair_interface(
    position: np.ndarray,
    velocity: np.ndarray,
    layer_index: int,
    allowed: tuple,
    rng: np.random.Generator,
) -> Subnet:
    """Force one interface into an allowed subnet, in place.

    If the byte pair at ``layer_index`` already decodes into one of the
    ``allowed`` subnets it is left untouched.  Otherwise both bytes are
    replaced by a uniformly random address drawn from a uniformly chosen
    allowed subnet, and the velocity of those two dimensions is reset to
    zero so the fresh interface is not immediately flung away.

    Returns the subnet the interface lies in after the call.
    """
    if not 0 <= 2 * layer_index + 1 < position.shape[0]:
        raise RangeError(f"layer_index {layer_index} out of range")
    hi = position[2 * layer_index]
    lo = position[2 * layer_index + 1]
    current = subnet_of(address_from_reals(hi, lo))
    if current is not None and current in allowed:
        return current
    subnet = allowed[int(rng.integers(len(allowed)))]
    value = random_address_value(subnet, rng)
    position[2 * layer_index] = value >> 8
    position[2 * layer_index + 1] = value & 0xFF
    velocity[2 * layer_index] = 0.0
    velocity[2 * layer_index + 1] = 0.0
    return subnet
