"""Command-line entry point.

Commands:
    search  run the swarm search and write gbest.json + trajectory.csv
            (plus report figures) into an output directory
    decode  print the layers behind dotted addresses or position rows
    eval    score the particles in a positions CSV with the configured
            evaluator
    pca     project a trajectory file onto its top-2 principal components

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .codec import (
    DisabledSpec,
    InterfaceAddress,
    address_from_reals,
    decode_address,
    decode_particle_position,
    format_architecture,
    format_layer,
)
from .config import RunConfig, load_config
from .dataset import SplitSpec, load_csv, load_idx, split
from .errors import (
    ConfigError,
    ConsistencyError,
    DegenerateError,
    FormatError,
    InvalidParticleError,
    InvalidSubnetError,
    IpnasError,
    RangeError,
)
from .fitness import TrainingEvaluator
from .pca import pca_top2
from .swarm import run as run_search

USAGE_ERRORS = (
    ConfigError,
    FormatError,
    ConsistencyError,
    RangeError,
    InvalidSubnetError,
    InvalidParticleError,
)

TRAJECTORY_FIXED_COLUMNS = ["generation", "particle", "fitness", "is_gbest"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipnas",
        description="Evolve CNN architectures with a particle swarm over "
        "a 2-byte subnet-coded layer encoding.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_search = sub.add_parser("search", help="run the architecture search")
    p_search.add_argument("--config", required=True, help="path to a config file")
    p_search.add_argument("--seed", type=int, default=None, help="override run.seed")
    p_search.add_argument("--out", default=".", help="output directory")
    p_search.add_argument(
        "--no-plot", action="store_true", help="skip the report figures"
    )

    p_decode = sub.add_parser("decode", help="decode addresses or position rows")
    p_decode.add_argument("addresses", nargs="*", help="dotted addresses like 18.143")
    p_decode.add_argument(
        "--positions", default=None, help="CSV of position rows (2*max_length columns)"
    )

    p_eval = sub.add_parser("eval", help="evaluate particles from a positions CSV")
    p_eval.add_argument("--config", required=True, help="path to a config file")
    p_eval.add_argument("--positions", required=True, help="CSV of position rows")

    p_pca = sub.add_parser("pca", help="project a trajectory onto 2 components")
    p_pca.add_argument("--trajectory", required=True, help="trajectory.csv from search")
    p_pca.add_argument("--out", required=True, help="output CSV path")
    p_pca.add_argument(
        "--no-plot", action="store_true", help="skip the report figures"
    )

    return parser


def _build_evaluator(config: RunConfig):
    if config.evaluator == "surrogate":
        return config.surrogate_evaluator()
    if config.images_path and config.labels_path:
        dataset = load_idx(config.images_path, config.labels_path)
    elif config.csv_path:
        dataset = load_csv(config.csv_path, config.csv_height, config.csv_width)
    else:
        raise ConfigError(
            "evaluator 'train' needs dataset.images and dataset.labels"
            " (or dataset.csv) in the config"
        )
    if dataset.num_classes > config.num_classes:
        raise ConfigError(
            f"dataset has {dataset.num_classes} classes but swarm.num_classes"
            f" is {config.num_classes}"
        )
    train_part, fitness_part = split(
        dataset, SplitSpec(train_fraction=config.train_fraction, seed=config.seed)
    )
    return TrainingEvaluator(train_part, fitness_part, config.protocol_config())


def write_trajectory(history, path):
    """One row per particle per generation plus one global-best row."""
    n_dims = history[0].positions.shape[1]
    columns = TRAJECTORY_FIXED_COLUMNS + [f"x{d}" for d in range(n_dims)]
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for snap in history:
            for index in range(snap.positions.shape[0]):
                writer.writerow(
                    [snap.generation, index, f"{snap.fitnesses[index]:.17g}", 0]
                    + [f"{x:.17g}" for x in snap.positions[index]]
                )
            writer.writerow(
                [snap.generation, -1, f"{snap.gbest_fitness:.17g}", 1]
                + [f"{x:.17g}" for x in snap.gbest_position]
            )


def read_trajectory(path):
    """Return (positions, fitnesses, generations, is_gbest) arrays."""
    with open(path, "r", newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[: len(TRAJECTORY_FIXED_COLUMNS)] != TRAJECTORY_FIXED_COLUMNS:
            raise FormatError(f"{path}: not a trajectory file (bad header)")
        rows = [row for row in reader if row]
    if len(rows) < 3:
        raise FormatError(f"{path}: need at least 3 records, got {len(rows)}")
    table = np.array(rows, dtype=float)
    generations = table[:, 0].astype(int)
    fitnesses = table[:, 2]
    is_gbest = table[:, 3].astype(int)
    positions = table[:, 4:]
    return positions, fitnesses, generations, is_gbest


def read_positions(path) -> np.ndarray:
    """Rows of raw position coordinates, one particle per row."""
    with open(path, "r", newline="", encoding="ascii") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise FormatError(f"{path}: no rows")
    start = 0
    try:
        float(rows[0][0])
    except ValueError:
        start = 1  # tolerate a header row
    if start == len(rows):
        raise FormatError(f"{path}: no data rows")
    try:
        table = np.array(rows[start:], dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric cell ({exc})") from exc
    if table.ndim != 2 or table.shape[1] % 2 != 0:
        raise FormatError(
            f"{path}: rows must have an even number of columns, got {table.shape}"
        )
    return table


def cmd_search(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
        config.validate()
    evaluator = _build_evaluator(config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(config.seed)
    result = run_search(config.swarm_config(), evaluator, rng)

    trajectory_path = out_dir / "trajectory.csv"
    write_trajectory(result.history, trajectory_path)

    gbest = {
        "fitness": result.gbest_fitness,
        "seed": config.seed,
        "position": [float(x) for x in result.gbest_position],
        "architecture": format_architecture(result.architecture),
        "config": config.to_dict(),
    }
    gbest_path = out_dir / "gbest.json"
    with open(gbest_path, "w", encoding="ascii") as fh:
        json.dump(gbest, fh, indent=2)
        fh.write("\n")

    if not args.no_plot:
        from . import plotting

        plotting.save_fitness_history(result.history, out_dir / "fitness_history.png")

    print(f"gbest fitness: {result.gbest_fitness:.6f}")
    for line in format_architecture(result.architecture):
        print(line)
    print(f"wrote {gbest_path} and {trajectory_path}")
    return 0


def _print_interface_list(addresses) -> None:
    """Per-address layer lines, then the architecture without disabled entries."""
    specs = []
    for addr in addresses:
        spec = decode_address(addr)
        specs.append(spec)
        print(f"{addr} -> {format_layer(spec)}")
    enabled = [spec for spec in specs if not isinstance(spec, DisabledSpec)]
    if not enabled:
        print("warning: empty architecture (every interface is disabled)")
        return
    print(f"architecture ({len(enabled)} layers):")
    for spec in enabled:
        print(f"  {format_layer(spec)}")


def cmd_decode(args) -> int:
    if not args.addresses and not args.positions:
        raise ConfigError("decode needs addresses or --positions")
    if args.addresses:
        addresses = [InterfaceAddress.parse(token) for token in args.addresses]
        _print_interface_list(addresses)
    if args.positions:
        for row_index, row in enumerate(read_positions(args.positions)):
            print(f"# particle {row_index}")
            addresses = [
                address_from_reals(row[2 * slot], row[2 * slot + 1])
                for slot in range(row.shape[0] // 2)
            ]
            _print_interface_list(addresses)
    return 0


def cmd_eval(args) -> int:
    config = load_config(args.config)
    evaluator = _build_evaluator(config)
    positions = read_positions(args.positions)
    rng = np.random.default_rng(config.seed)
    print("particle,fitness")
    for index, row in enumerate(positions):
        architecture = decode_particle_position(row, config.num_classes)
        child = np.random.default_rng(int(rng.integers(2**63)))
        fitness = evaluator.evaluate(architecture, child)
        print(f"{index},{fitness:.10g}")
    return 0


def cmd_pca(args) -> int:
    positions, fitnesses, generations, is_gbest = read_trajectory(args.trajectory)
    result = pca_top2(positions)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pc1", "pc2", "fitness", "generation", "is_gbest"])
        for i in range(positions.shape[0]):
            writer.writerow(
                [
                    f"{result.projected[i, 0]:.17g}",
                    f"{result.projected[i, 1]:.17g}",
                    f"{fitnesses[i]:.17g}",
                    generations[i],
                    is_gbest[i],
                ]
            )
    print(
        f"wrote {out_path} (top-2 explained variance"
        f" {result.explained_variance_ratio:.4f})"
    )
    if not args.no_plot:
        from . import plotting

        pc1, pc2 = result.projected[:, 0], result.projected[:, 1]
        surface_path = out_path.with_name(out_path.stem + "_surface.png")
        trajectory_path = out_path.with_name(out_path.stem + "_trajectory.png")
        plotting.save_pca_surface(pc1, pc2, fitnesses, surface_path)
        plotting.save_pca_trajectory(pc1, pc2, fitnesses, is_gbest, trajectory_path)
        print(f"wrote {surface_path} and {trajectory_path}")
    return 0


COMMANDS = {
    "search": cmd_search,
    "decode": cmd_decode,
    "eval": cmd_eval,
    "pca": cmd_pca,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IpnasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
