"""Run configuration: defaults, the flat dotted-key file format, validation.

Config files are plain text with one ``section.key = value`` pair per line;
``#`` starts a comment.  Pair-valued PSO settings take two comma-separated
numbers.  Every field is range-checked; unknown keys are rejected so typos
cannot silently fall back to defaults.
"""

from dataclasses import dataclass, fields

from .codec import (
    Architecture,
    DisabledSpec,
    FcSpec,
    InterfaceAddress,
    decode_address,
)
from .errors import ConfigError, InvalidParticleError, InvalidSubnetError, RangeError
from .fitness import EvalProtocolConfig, SurrogateEvaluator, SurrogateLandscape
from .particle import PsoCoefficients
from .swarm import SlotConstraints, SwarmConfig


@dataclass
class RunConfig:
    """All search parameters with their standard defaults."""

    max_length: int = 9
    max_fully_connected: int = 3
    population: int = 30
    max_generations: int = 10
    num_classes: int = 10
    seed: int = 0
    w: float = 0.7298
    c1: tuple = (1.49618, 1.49618)
    c2: tuple = (1.49618, 1.49618)
    v_max: tuple = (4.0, 25.6)
    evaluator: str = "surrogate"
    k: int = 10
    batch_size: int = 200
    train_fraction: float = 0.8
    learning_rate: float = 0.01
    momentum: float = 0.9
    train_batch_size: int = 50
    dtype: str = "float32"
    surrogate_target: str = "2.61 18.143 27.255"
    surrogate_sharpness: float = 0.25
    images_path: str = ""
    labels_path: str = ""
    csv_path: str = ""
    csv_height: int = 28
    csv_width: int = 28

    def validate(self):
        try:
            self.slot_constraints()
            self.coefficients()
        except RangeError as exc:
            raise ConfigError(str(exc)) from exc
        if self.population < 1:
            raise ConfigError("swarm.population must be at least 1")
        if self.max_generations < 1:
            raise ConfigError("swarm.max_generations must be at least 1")
        if self.evaluator not in ("surrogate", "train"):
            raise ConfigError(
                f"fitness.evaluator must be 'surrogate' or 'train',"
                f" got {self.evaluator!r}"
            )
        if self.surrogate_sharpness <= 0:
            raise ConfigError("surrogate.sharpness must be positive")
        if self.csv_height < 1 or self.csv_width < 1:
            raise ConfigError("dataset.height and dataset.width must be positive")
        # Delegates the remaining range checks (k, batches, optimizer).
        self.protocol_config()

    def slot_constraints(self) -> SlotConstraints:
        return SlotConstraints(
            max_length=self.max_length,
            max_fully_connected=self.max_fully_connected,
            num_classes=self.num_classes,
        )

    def coefficients(self) -> PsoCoefficients:
        return PsoCoefficients(w=self.w, c1=self.c1, c2=self.c2, v_max=self.v_max)

    def swarm_config(self) -> SwarmConfig:
        return SwarmConfig(
            constraints=self.slot_constraints(),
            coefficients=self.coefficients(),
            population_size=self.population,
            max_generations=self.max_generations,
        )

    def protocol_config(self) -> EvalProtocolConfig:
        return EvalProtocolConfig(
            k=self.k,
            batch_size=self.batch_size,
            train_fraction=self.train_fraction,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            train_batch_size=self.train_batch_size,
            dtype=self.dtype,
        )

    def surrogate_target_architecture(self) -> Architecture:
        """Decode the configured address list into the surrogate target."""
        specs = []
        for token in self.surrogate_target.replace(",", " ").split():
            try:
                specs.append(decode_address(InterfaceAddress.parse(token)))
            except (RangeError, InvalidSubnetError) as exc:
                raise ConfigError(f"surrogate.target: {exc}") from exc
        specs = [spec for spec in specs if not isinstance(spec, DisabledSpec)]
        if not specs or not isinstance(specs[-1], FcSpec):
            raise ConfigError(
                "surrogate.target must end with a fully-connected address"
            )
        specs[-1] = FcSpec(neurons=self.num_classes)
        try:
            return Architecture(layers=tuple(specs), num_classes=self.num_classes)
        except InvalidParticleError as exc:
            raise ConfigError(f"surrogate.target: {exc}") from exc

    def surrogate_evaluator(self) -> SurrogateEvaluator:
        landscape = SurrogateLandscape(
            target=self.surrogate_target_architecture(),
            sharpness=self.surrogate_sharpness,
        )
        return SurrogateEvaluator(landscape)

    def to_dict(self) -> dict:
        """Flat dotted-key echo of every field, for result files."""
        return {key: getattr(self, name) for key, name in sorted(KEY_TO_FIELD.items())}


KEY_TO_FIELD = {
    "swarm.max_length": "max_length",
    "swarm.max_fully_connected": "max_fully_connected",
    "swarm.population": "population",
    "swarm.max_generations": "max_generations",
    "swarm.num_classes": "num_classes",
    "run.seed": "seed",
    "pso.w": "w",
    "pso.c1": "c1",
    "pso.c2": "c2",
    "pso.v_max": "v_max",
    "fitness.evaluator": "evaluator",
    "fitness.k": "k",
    "fitness.batch_size": "batch_size",
    "fitness.train_fraction": "train_fraction",
    "optimizer.learning_rate": "learning_rate",
    "optimizer.momentum": "momentum",
    "optimizer.train_batch_size": "train_batch_size",
    "optimizer.dtype": "dtype",
    "surrogate.target": "surrogate_target",
    "surrogate.sharpness": "surrogate_sharpness",
    "dataset.images": "images_path",
    "dataset.labels": "labels_path",
    "dataset.csv": "csv_path",
    "dataset.height": "csv_height",
    "dataset.width": "csv_width",
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(key: str, field_name: str, raw: str):
    kind = _FIELD_TYPES[field_name]
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple:
            parts = [p for p in raw.replace(",", " ").split() if p]
            if len(parts) != 2:
                raise ValueError(f"expected 2 numbers, got {len(parts)}")
            return (float(parts[0]), float(parts[1]))
        return raw
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} ({exc})") from exc


def parse_config_text(text: str) -> RunConfig:
    """Parse the flat key-value format into a validated RunConfig."""
    config = RunConfig()
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in KEY_TO_FIELD:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        field_name = KEY_TO_FIELD[key]
        setattr(config, field_name, _parse_value(key, field_name, raw))
    config.validate()
    return config


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
