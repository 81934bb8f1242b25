"""
Command Line

The `augmap` command wires scenario simulation, tracking, evaluation,
sweeping and rendering into reproducible runs:

    augmap simulate --scenario corridor.json --out run/
    augmap track --log run/ --grid run/grid.pgm --out run/augmented.jsonl
    augmap eval --augmented run/augmented.jsonl --truth run/truth.txt --mask run/mask.txt
    augmap sweep --scenario clustered_doors --param delta --values 0.9,1.0,1.2,1.5 --seeds 20 --out sweep/
    augmap render --augmented run/augmented.jsonl --grid run/grid.pgm --out run/overlay.ppm

Scenario arguments are JSON files or the names of the built-in scenarios.
Exit codes: 0 on success, 2 on usage, configuration and input format
errors, 3 on other data errors.
"""
# flake8: noqa: E501

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from pydantic import BaseModel

from augmap import __version__
from augmap.core.mapper import SemanticMapper
from augmap.errors import AugmapError, ConfigError, DataError, FormatError
from augmap.evaluation.metrics import DEFAULT_RADIUS, evaluate
from augmap.evaluation.sweep import sweep
from augmap.maps.map_io import (
    AugmentedMap,
    load_annotations,
    load_augmented,
    load_events,
    load_log,
    load_mask,
    save_annotations,
    save_augmented,
    save_events,
    save_log,
    save_mask,
)
from augmap.maps.occupancy import load_grid, save_grid, sidecar_path
from augmap.schemas.config import PipelineConfig, ScenarioConfig
from augmap.schemas.records import RunManifest
from augmap.simulation.scenarios import SCENARIOS
from augmap.simulation.simulator import run_scenario
from augmap.utils.hashing import canonical_json, config_hash, file_digest
from augmap.visualization.overlay import render

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3

LOG_NAME = "log.jsonl"
EVENTS_NAME = "events.jsonl"
TRUTH_NAME = "truth.txt"
MASK_NAME = "mask.txt"
GRID_NAME = "grid.pgm"
MANIFEST_NAME = "manifest.json"


def configure_logging(verbose: int = 0, quiet: bool = False) -> None:
    """Log to stderr: WARNING by default, INFO with -v, DEBUG with -vv, ERROR with --quiet."""
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def load_scenario(source: str) -> ScenarioConfig:
    """
    Load a scenario from a JSON file or build a named built-in one.

    A relative `grid_path` is resolved against the scenario file's directory.

    Raises:
        ConfigError: If the file is missing or does not validate.
    """
    path = Path(source)
    if not path.exists() and source in SCENARIOS:
        return SCENARIOS[source]()
    cfg = ScenarioConfig.from_file(path)
    if cfg.grid_path is not None and not Path(cfg.grid_path).is_absolute():
        cfg = cfg.model_copy(update={"grid_path": str(path.parent / cfg.grid_path)})
    return cfg


def _digests(paths: Iterable[Path]) -> Dict[str, str]:
    return {p.name: file_digest(p) for p in paths if p.exists()}


def write_manifest(
    path: Path,
    command: str,
    config: BaseModel,
    seed: Optional[int],
    inputs: Iterable[Path] = (),
    outputs: Iterable[Path] = (),
) -> RunManifest:
    """Write the provenance record of a run as canonical JSON."""
    manifest = RunManifest(
        command=command,
        config_hash=config_hash(config),
        seed=seed,
        version=__version__,
        inputs=_digests(inputs),
        outputs=_digests(outputs),
    )
    path.write_text(canonical_json(manifest) + "\n")
    return manifest


def _log_paths(source: Path) -> List[Path]:
    """The log and events files of a run directory or of a log file."""
    if source.is_dir():
        return [source / LOG_NAME, source / EVENTS_NAME]
    return [source, source.with_name(EVENTS_NAME)]


# Commands


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_scenario(args.scenario)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    grid = load_grid(cfg.grid_path) if cfg.grid_path else None

    result = run_scenario(cfg, grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = [out / LOG_NAME, out / EVENTS_NAME, out / TRUTH_NAME, out / MASK_NAME, out / GRID_NAME]
    save_log(result.header, result.log, outputs[0])
    save_events(result.events, outputs[1])
    save_annotations(result.truth, outputs[2])
    save_mask(result.observed, outputs[3])
    save_grid(result.grid, outputs[4])
    outputs.append(sidecar_path(outputs[4]))

    inputs = [Path(args.scenario)] + ([Path(cfg.grid_path)] if cfg.grid_path else [])
    write_manifest(out / MANIFEST_NAME, "simulate", cfg, cfg.seed, inputs, outputs)
    logger.info("wrote %d frames to %s", len(result.log), out)
    return EXIT_OK


def cmd_track(args: argparse.Namespace) -> int:
    pipeline = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    log_path, events_path = _log_paths(Path(args.log))
    header, frames = load_log(log_path)
    events = load_events(events_path)
    load_grid(args.grid)

    mapper = SemanticMapper.from_header(header, pipeline)
    state = mapper.replay(frames, events)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_augmented(AugmentedMap.from_state(state, Path(args.grid).name), out)

    inputs = [log_path, events_path, Path(args.grid)] + ([Path(args.config)] if args.config else [])
    write_manifest(out.with_name(out.name + ".manifest.json"), "track", pipeline, pipeline.fitting.seed, inputs, [out])
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    augmented = load_augmented(args.augmented)
    truth = load_annotations(args.truth)
    observed = load_mask(args.mask) if args.mask else None
    if observed is not None and len(observed) != len(truth):
        raise FormatError(f"{args.mask} has {len(observed)} entries for {len(truth)} annotations")

    report = evaluate(augmented, truth, observed, args.radius)
    if args.out:
        Path(args.out).write_text(report.to_jsonl())
    sys.stdout.write(report.table())
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    base = load_scenario(args.scenario)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as err:
        raise ConfigError(f"cannot parse --values {args.values!r}: {err}") from err
    pipeline = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()

    result = sweep(base, args.param, values, args.seeds, pipeline, args.workers, args.radius)
    table = result.table()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.jsonl").write_text(result.to_jsonl())
        (out / "summary.txt").write_text(table)
        if args.plot:
            result.plot(out / "sweep.png")
        write_manifest(
            out / MANIFEST_NAME,
            "sweep",
            base,
            base.seed,
            [Path(args.scenario)],
            [out / "sweep.jsonl", out / "summary.txt"],
        )
    sys.stdout.write(table)
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    augmented = load_augmented(args.augmented)
    grid = load_grid(args.grid)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    clamped = render(augmented, grid, out)
    if clamped:
        logger.info("%d glyphs clamped to the grid border", clamped)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="augmap", description="Semantic map augmentation with simulated RGB-D sensing.")
    parser.add_argument("--version", action="version", version=f"augmap {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More logging (-vv for debug).")
    parser.add_argument("--quiet", action="store_true", help="Only log errors.")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("simulate", help="Simulate a scenario into a frame log.")
    p.add_argument("--scenario", required=True, help="Scenario JSON file or built-in scenario name.")
    p.add_argument("--out", required=True, help="Output directory.")
    p.add_argument("--seed", type=int, default=None, help="Override the scenario seed.")
    p.set_defaults(func=cmd_simulate)

    p = commands.add_parser("track", help="Replay a frame log into an augmented map.")
    p.add_argument("--log", required=True, help="Run directory or log file.")
    p.add_argument("--grid", required=True, help="Occupancy grid PGM.")
    p.add_argument("--config", default=None, help="Pipeline configuration JSON.")
    p.add_argument("--out", required=True, help="Augmented map file.")
    p.set_defaults(func=cmd_track)

    p = commands.add_parser("eval", help="Score an augmented map against ground truth.")
    p.add_argument("--augmented", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--mask", default=None, help="Observed-mask file; all annotations count when omitted.")
    p.add_argument("--radius", type=float, default=DEFAULT_RADIUS)
    p.add_argument("--out", default=None, help="Write the report as JSON lines.")
    p.set_defaults(func=cmd_eval)

    p = commands.add_parser("sweep", help="Sweep one parameter over values and seeds.")
    p.add_argument("--scenario", required=True, help="Scenario JSON file or built-in scenario name.")
    p.add_argument("--param", required=True, choices=["delta", "sigma_I", "max_range"])
    p.add_argument("--values", required=True, help="Comma-separated values.")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--out", default=None, help="Output directory.")
    p.add_argument("--config", default=None, help="Pipeline configuration JSON.")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--radius", type=float, default=DEFAULT_RADIUS)
    p.add_argument("--plot", action="store_true", help="Also save sweep.png (needs matplotlib).")
    p.set_defaults(func=cmd_sweep)

    p = commands.add_parser("render", help="Draw an augmented map over its grid as a PPM image.")
    p.add_argument("--augmented", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line.

    Args:
        argv: Arguments without the program name; sys.argv when omitted.

    Returns:
        The exit code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    configure_logging(args.verbose, args.quiet)

    started = time.perf_counter()
    try:
        code = args.func(args)
    except FileNotFoundError as err:
        logger.error("missing input: %s", err.filename or err)
        return EXIT_USAGE
    except (ConfigError, FormatError) as err:
        logger.error("%s", err)
        return EXIT_USAGE
    except DataError as err:
        logger.error("%s", err)
        return EXIT_DATA
    except AugmapError as err:
        logger.error("%s", err)
        return EXIT_DATA
    logger.info("%s finished in %.2f s", args.command, time.perf_counter() - started)
    return code
