"""Encoding and decoding of CNN layers as 2-byte addresses in CIDR-style subnets.

Every layer configuration packs into the payload bits of one 2-byte address.
Four disjoint subnets partition the valid address space [0.0, 39.255] and
identify the layer type:

    conv      0.0/4    range 0.0-15.255    12 payload bits
    pool      16.0/5   range 16.0-23.255   11 payload bits
    full      24.0/5   range 24.0-31.255   11 payload bits
    disabled  32.0/5   range 32.0-39.255   11 payload bits

A numeric field with range [1, 2**b] occupies b bits and is stored as
value - 1; the pool type stores Max as 0 and Average as 1; placeholder
fields are stored raw.  Payload fields are concatenated most significant
first, in the order listed on each spec class below.

All functions here are pure and safe for concurrent use.
"""

import enum
import math
from dataclasses import dataclass
from typing import Union

from .errors import InvalidParticleError, InvalidSubnetError, RangeError

MAX_VALID_VALUE = 0x27FF  # 39.255, last address of the disabled subnet


class LayerKind(enum.Enum):
    CONV = "conv"
    POOL = "pool"
    FC = "full"
    DISABLED = "disabled"


class PoolType(enum.Enum):
    MAX = "Max"
    AVERAGE = "Average"


@dataclass(frozen=True)
class InterfaceAddress:
    """A 2-byte address, rendered in dotted decimal as ``hi.lo``."""

    byte_hi: int
    byte_lo: int

    def __post_init__(self):
        for name, byte in (("byte_hi", self.byte_hi), ("byte_lo", self.byte_lo)):
            if not 0 <= byte <= 255:
                raise RangeError(f"{name} must be in [0, 255], got {byte}")

    @classmethod
    def from_value(cls, value: int) -> "InterfaceAddress":
        if not 0 <= value <= 0xFFFF:
            raise RangeError(f"address value must be in [0, 65535], got {value}")
        return cls(value >> 8, value & 0xFF)

    @classmethod
    def parse(cls, text: str) -> "InterfaceAddress":
        parts = text.strip().split(".")
        if len(parts) != 2:
            raise RangeError(f"address must look like 'H.L', got {text!r}")
        try:
            hi, lo = int(parts[0]), int(parts[1])
        except ValueError:
            raise RangeError(f"address bytes must be integers, got {text!r}") from None
        return cls(hi, lo)

    @property
    def value(self) -> int:
        return self.byte_hi * 256 + self.byte_lo

    @property
    def is_valid(self) -> bool:
        return self.value <= MAX_VALID_VALUE

    def __str__(self) -> str:
        return f"{self.byte_hi}.{self.byte_lo}"


@dataclass(frozen=True)
class Subnet:
    """One contiguous address range owned by a single layer kind."""

    kind: LayerKind
    base: int
    prefix_len: int

    @property
    def payload_bits(self) -> int:
        return 16 - self.prefix_len

    @property
    def size(self) -> int:
        return 1 << self.payload_bits

    @property
    def last(self) -> int:
        return self.base + self.size - 1

    def contains(self, value: int) -> bool:
        return self.base <= value <= self.last

    @property
    def cidr(self) -> str:
        return f"{InterfaceAddress.from_value(self.base)}/{self.prefix_len}"


CONV_SUBNET = Subnet(LayerKind.CONV, 0x0000, 4)
POOL_SUBNET = Subnet(LayerKind.POOL, 0x1000, 5)
FC_SUBNET = Subnet(LayerKind.FC, 0x1800, 5)
DISABLED_SUBNET = Subnet(LayerKind.DISABLED, 0x2000, 5)

SUBNETS = (CONV_SUBNET, POOL_SUBNET, FC_SUBNET, DISABLED_SUBNET)
SUBNET_BY_KIND = {subnet.kind: subnet for subnet in SUBNETS}


def _check_range(name: str, value: int, lo: int, hi: int):
    if not isinstance(value, int) or isinstance(value, bool) or not lo <= value <= hi:
        raise RangeError(f"{name} must be an integer in [{lo}, {hi}], got {value!r}")


@dataclass(frozen=True)
class ConvSpec:
    """Convolution layer: filter_size (3 bits), feature_maps (7), stride (2)."""

    filter_size: int
    feature_maps: int
    stride: int

    kind = LayerKind.CONV

    def __post_init__(self):
        _check_range("filter_size", self.filter_size, 1, 8)
        _check_range("feature_maps", self.feature_maps, 1, 128)
        _check_range("stride", self.stride, 1, 4)


@dataclass(frozen=True)
class PoolSpec:
    """Pooling layer: kernel (2 bits), stride (2), pool_type (1), placeholder (6).

    The placeholder has no semantic effect; it only pads the payload to 11
    bits and is preserved verbatim on round-trips.
    """

    kernel: int
    stride: int
    pool_type: PoolType
    placeholder: int = 0

    kind = LayerKind.POOL

    def __post_init__(self):
        _check_range("kernel", self.kernel, 1, 4)
        _check_range("stride", self.stride, 1, 4)
        if not isinstance(self.pool_type, PoolType):
            raise RangeError(f"pool_type must be a PoolType, got {self.pool_type!r}")
        _check_range("placeholder", self.placeholder, 0, 63)


@dataclass(frozen=True)
class FcSpec:
    """Fully-connected layer: neurons (11 bits)."""

    neurons: int

    kind = LayerKind.FC

    def __post_init__(self):
        _check_range("neurons", self.neurons, 1, 2048)


@dataclass(frozen=True)
class DisabledSpec:
    """Disabled layer: an 11-bit raw placeholder, dropped on decoding."""

    placeholder: int = 0

    kind = LayerKind.DISABLED

    def __post_init__(self):
        _check_range("placeholder", self.placeholder, 0, 2047)


LayerSpec = Union[ConvSpec, PoolSpec, FcSpec, DisabledSpec]


def encode_layer(spec: LayerSpec) -> InterfaceAddress:
    """Pack a layer spec into its address: subnet base + payload bits."""
    if isinstance(spec, ConvSpec):
        payload = (
            ((spec.filter_size - 1) << 9)
            | ((spec.feature_maps - 1) << 2)
            | (spec.stride - 1)
        )
        subnet = CONV_SUBNET
    elif isinstance(spec, PoolSpec):
        type_bit = 0 if spec.pool_type is PoolType.MAX else 1
        payload = (
            ((spec.kernel - 1) << 9)
            | ((spec.stride - 1) << 7)
            | (type_bit << 6)
            | spec.placeholder
        )
        subnet = POOL_SUBNET
    elif isinstance(spec, FcSpec):
        payload = spec.neurons - 1
        subnet = FC_SUBNET
    elif isinstance(spec, DisabledSpec):
        payload = spec.placeholder
        subnet = DISABLED_SUBNET
    else:
        raise RangeError(f"not a layer spec: {spec!r}")
    return InterfaceAddress.from_value(subnet.base + payload)


def subnet_of(addr: InterfaceAddress) -> Subnet | None:
    """Return the subnet containing ``addr``, or None outside all four."""
    for subnet in SUBNETS:
        if subnet.contains(addr.value):
            return subnet
    return None


def decode_address(addr: InterfaceAddress) -> LayerSpec:
    """Exact inverse of :func:`encode_layer`."""
    subnet = subnet_of(addr)
    if subnet is None:
        raise InvalidSubnetError(
            f"address {addr} is outside the valid range 0.0-39.255"
        )
    payload = addr.value - subnet.base
    if subnet.kind is LayerKind.CONV:
        return ConvSpec(
            filter_size=(payload >> 9) + 1,
            feature_maps=((payload >> 2) & 0x7F) + 1,
            stride=(payload & 0x3) + 1,
        )
    if subnet.kind is LayerKind.POOL:
        return PoolSpec(
            kernel=(payload >> 9) + 1,
            stride=((payload >> 7) & 0x3) + 1,
            pool_type=PoolType.MAX if (payload >> 6) & 0x1 == 0 else PoolType.AVERAGE,
            placeholder=payload & 0x3F,
        )
    if subnet.kind is LayerKind.FC:
        return FcSpec(neurons=payload + 1)
    return DisabledSpec(placeholder=payload)


@dataclass(frozen=True)
class Architecture:
    """A decoded network: disabled entries removed, output width fixed.

    Valid architectures start with a convolution, end with a fully-connected
    layer of ``num_classes`` neurons, and once a fully-connected layer
    appears every later layer is fully-connected.
    """

    layers: tuple
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        layers = self.layers
        if len(layers) < 2:
            raise InvalidParticleError(
                f"architecture needs at least 2 layers, got {len(layers)}"
            )
        if any(isinstance(layer, DisabledSpec) for layer in layers):
            raise InvalidParticleError("architecture must not contain disabled layers")
        if not isinstance(layers[0], ConvSpec):
            raise InvalidParticleError(
                f"first layer must be a convolution, got {layers[0]!r}"
            )
        last = layers[-1]
        if not isinstance(last, FcSpec) or last.neurons != self.num_classes:
            raise InvalidParticleError(
                f"last layer must be fully-connected with {self.num_classes} neurons,"
                f" got {last!r}"
            )
        seen_fc = False
        for layer in layers:
            if isinstance(layer, FcSpec):
                seen_fc = True
            elif seen_fc:
                raise InvalidParticleError(
                    f"{layer!r} appears after a fully-connected layer"
                )

    @property
    def depth(self) -> int:
        return len(self.layers)


def address_from_reals(hi: float, lo: float) -> InterfaceAddress:
    """Floor a real-valued byte pair (each in [0, 256)) to an address."""
    return InterfaceAddress(int(math.floor(hi)), int(math.floor(lo)))


def decode_particle_position(position, num_classes: int) -> Architecture:
    """Decode a full position vector into an architecture.

    Consecutive byte pairs are floored and decoded left to right; disabled
    layers are dropped; the last interface always yields a fully-connected
    layer of ``num_classes`` neurons regardless of its encoded field.
    """
    values = list(position)
    if len(values) % 2 != 0 or not values:
        raise InvalidParticleError(
            f"position length must be even and nonzero, got {len(values)}"
        )
    specs = []
    for slot in range(len(values) // 2):
        hi, lo = values[2 * slot], values[2 * slot + 1]
        if not (0 <= hi < 256 and 0 <= lo < 256):
            raise InvalidParticleError(
                f"slot {slot} bytes ({hi}, {lo}) outside [0, 256)"
            )
        addr = address_from_reals(hi, lo)
        try:
            specs.append(decode_address(addr))
        except InvalidSubnetError as exc:
            raise InvalidParticleError(f"slot {slot}: {exc}") from exc
    if isinstance(specs[-1], FcSpec):
        specs[-1] = FcSpec(neurons=num_classes)
    layers = [spec for spec in specs if not isinstance(spec, DisabledSpec)]
    return Architecture(layers=tuple(layers), num_classes=num_classes)


def format_layer(spec: LayerSpec) -> str:
    """One-line rendering of a layer, e.g. ``conv | Filter size: 2, ...``."""
    if isinstance(spec, ConvSpec):
        detail = (
            f"Filter size: {spec.filter_size}, Stride size: {spec.stride},"
            f" feature maps: {spec.feature_maps}"
        )
    elif isinstance(spec, PoolSpec):
        detail = (
            f"Kernel size: {spec.kernel}, Stride size: {spec.stride},"
            f" Type: {spec.pool_type.value}"
        )
    elif isinstance(spec, FcSpec):
        detail = f"Neurons: {spec.neurons}"
    elif isinstance(spec, DisabledSpec):
        detail = f"Place holder: {spec.placeholder}"
    else:
        raise RangeError(f"not a layer spec: {spec!r}")
    return f"{spec.kind.value} | {detail}"


def format_architecture(arch: Architecture) -> list[str]:
    """Render an architecture as one formatted line per layer."""
    return [format_layer(layer) for layer in arch.layers]
