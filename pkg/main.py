#!/usr/bin/env python3
"""
deh-harvest - scenario runner for deterministic energy harvesting by a qubit
from a quantized field mode.
"""

import argparse
import copy
import logging
import math
import sys
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from config import Config
from managers.data_manager import DataManager
from managers.scenario_manager import ScenarioManager
from models.scenario import ScenarioConfig
from physics.errors import (
    ConfigError,
    ConfigParseError,
    HarvestError,
    InvalidSpecError,
    NormalizationError,
)
from utils.event_bus import OUTPUT_WRITTEN, SCENARIO_FAILED, SCENARIO_FINISHED, SCENARIO_STARTED, EventBus

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_PHYSICS = 4
EXIT_UNEXPECTED = 1

SUBCOMMANDS = ("fidelity", "entropy", "wigner", "verify", "robustness", "semiclassical")
SOURCE_KINDS = ("fock", "coherent", "cat", "coherent_mixture", "cat_ensemble", "thermal")
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configure_logging(level: str, log_file: Optional[str] = None) -> None:
    """Log to stderr (stdout carries CLI output) and optionally to a file."""
    handlers: List[logging.Handler] = [logging.StreamHandler(stream=sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT,
                        handlers=handlers, force=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deh-harvest", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--settings", help="JSON file with runner settings (threads, logging, defaults)")
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run a scenario file as declared")
    run.add_argument("config", help="scenario JSON file")
    run.add_argument("--out", required=True, help="output directory")

    for name in SUBCOMMANDS:
        sub = commands.add_parser(name, help=f"{name} scenario; flags shadow --config keys")
        sub.add_argument("source", nargs="?", choices=SOURCE_KINDS, help="source kind")
        sub.add_argument("--config", help="scenario JSON file to start from")
        sub.add_argument("--out", required=True, help="output directory")
        sub.add_argument("--name", help="scenario name")
        sub.add_argument("--kind", dest="hamiltonian_kind", choices=("jc_rwa", "rabi_full", "semiclassical"))
        sub.add_argument("--g", type=float)
        sub.add_argument("--omega0", type=float)
        sub.add_argument("--omega-c", type=float)
        sub.add_argument("--drive-amplitude", type=float)
        sub.add_argument("--n-max", type=int)
        sub.add_argument("--t-end", type=float)
        sub.add_argument("--samples", type=int)
        sub.add_argument("--alpha", type=float, help="cat / mixture amplitude")
        sub.add_argument("--alpha-mag", type=float, help="coherent amplitude magnitude")
        sub.add_argument("--phases", type=float, nargs="+", help="coherent phases")
        sub.add_argument("--parity", choices=("even", "odd"))
        sub.add_argument("--n-bar", type=float)
        sub.add_argument("--n", type=int, help="Fock number")
        sub.add_argument("--tau", type=float)
        sub.add_argument("--tolerance", type=float)
        sub.add_argument("--points", type=int, help="Wigner points per axis")
    return parser


def default_document(command: str, config: Config) -> Dict[str, Any]:
    """Scenario document seeded from the runner defaults."""
    wigner_range = list(config.get("wigner_range"))
    return {
        "name": command,
        "kind": command,
        "hamiltonian": {"g": config.get("g"), "omega0": config.get("omega0"),
                        "omega_c": config.get("omega_c"), "n_max": config.get("n_max")},
        "grid": {"t_end": config.get("t_end"), "samples": config.get("samples")},
        "tolerances": {"deh": config.get("tolerance")},
        "wigner": {"q_range": wigner_range, "p_range": wigner_range, "points": config.get("wigner_points")},
        "semiclassical": {"substeps": config.get("substeps"), "max_substeps": config.get("max_substeps"),
                          "convergence_tol": config.get("convergence_tol")},
    }


def _source_from_flags(kind: str, args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    if kind == "fock":
        return {"kind": kind, "n": 1 if args.n is None else args.n}
    if kind == "coherent":
        return {"kind": kind,
                "alpha_mag": config.get("alpha_mag") if args.alpha_mag is None else args.alpha_mag,
                "phases": args.phases or [0.0]}
    if kind == "thermal":
        return {"kind": kind, "n_bar": 1.0 if args.n_bar is None else args.n_bar}
    source = {"kind": kind, "alpha": config.get("alpha_mag") if args.alpha is None else args.alpha}
    if kind == "cat":
        source["parity"] = args.parity or "even"
    return source


# Source fields each kind accepts from the command line.
SOURCE_FLAGS = {
    "fock": ("n",),
    "coherent": ("alpha_mag", "phases"),
    "cat": ("alpha", "parity"),
    "coherent_mixture": ("alpha",),
    "cat_ensemble": ("alpha",),
    "thermal": ("n_bar",),
}


def _override_source(source: Dict[str, Any], args: argparse.Namespace) -> None:
    for key in SOURCE_FLAGS.get(source.get("kind"), ()):
        value = getattr(args, key)
        if value is not None:
            source[key] = value


def apply_overrides(document: Dict[str, Any], args: argparse.Namespace, config: Config) -> Dict[str, Any]:
    """Shadow scenario keys with the command-line flags that were given."""
    doc = copy.deepcopy(document)
    if doc.get("kind") != args.command:
        doc["outputs"] = []
    doc["kind"] = args.command
    if args.name:
        doc["name"] = args.name

    hamiltonian = doc.setdefault("hamiltonian", {})
    for key, value in (("kind", args.hamiltonian_kind), ("g", args.g), ("omega0", args.omega0),
                       ("omega_c", args.omega_c), ("drive_amplitude", args.drive_amplitude),
                       ("n_max", args.n_max)):
        if value is not None:
            hamiltonian[key] = value
    if args.n_max is not None:
        doc.pop("n_max", None)
    grid = doc.setdefault("grid", {})
    if args.t_end is not None:
        grid["t_end"] = args.t_end
    if args.samples is not None:
        grid["samples"] = args.samples
    if args.tolerance is not None:
        doc.setdefault("tolerances", {})["deh"] = args.tolerance
    if args.tau is not None:
        doc.setdefault("verify", {})["tau"] = args.tau
    if args.points is not None:
        doc.setdefault("wigner", {})["points"] = args.points
    if args.command == "robustness" and isinstance(doc.get("robustness"), dict):
        doc["robustness"].setdefault("smoothing_eta", config.get("smoothing_eta"))

    if args.command == "semiclassical":
        options = doc.setdefault("semiclassical", {})
        if args.alpha_mag is not None:
            options["alpha_mag"] = args.alpha_mag
            if args.n_max is None and "n_max" not in doc:
                # room for |alpha|^2 plus ten standard deviations of the photon number
                needed = math.ceil(args.alpha_mag ** 2 + 10 * args.alpha_mag)
                hamiltonian["n_max"] = max(hamiltonian.get("n_max", 0), needed)
        return doc

    if args.source is not None:
        doc["source"] = _source_from_flags(args.source, args, config)
    elif isinstance(doc.get("source"), dict):
        _override_source(doc["source"], args)
    return doc


def register_event_logging(event_bus: EventBus) -> None:
    event_bus.register(SCENARIO_STARTED, lambda e: logger.debug(f"Scenario started: {e['name']}"))
    event_bus.register(OUTPUT_WRITTEN, lambda e: logger.info(f"Wrote {e['channel']} to {e['path']}"))
    event_bus.register(SCENARIO_FINISHED, lambda e: logger.info(f"Scenario '{e['name']}' finished"))
    event_bus.register(SCENARIO_FAILED, lambda e: logger.debug(f"Scenario '{e['name']}' failed: {e['error']}"))


def load_scenario(args: argparse.Namespace, config: Config) -> ScenarioConfig:
    if args.command == "run":
        return DataManager.load_scenario(args.config)
    document = DataManager.load_document(args.config) if args.config else default_document(args.command, config)
    return ScenarioConfig.model_validate(apply_overrides(document, args, config))


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one scenario and map failures to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_PARSE if e.code else EXIT_OK

    try:
        config = Config(args.settings)
    except ConfigError as e:
        configure_logging("INFO")
        logger.error(f"Invalid settings: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    configure_logging("DEBUG" if args.verbose else config.get("log_level"), config.get("log_file"))
    logger.debug(f"Starting deh-harvest {args.command}")

    try:
        scenario = load_scenario(args, config)
        event_bus = EventBus()
        register_event_logging(event_bus)
        manager = ScenarioManager(DataManager(args.out), threads=config.get("threads"), event_bus=event_bus)
        for path in manager.run(scenario):
            print(path)
        return EXIT_OK
    except ConfigParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, InvalidSpecError, NormalizationError, ConfigError) as e:
        if isinstance(e, ValidationError):
            first = e.errors()[0]
            first_line = f"{'.'.join(str(part) for part in first['loc'])}: {first['msg']}"
        else:
            first_line = str(e)
        print(f"error: invalid scenario: {first_line}", file=sys.stderr)
        logger.debug("Validation failure", exc_info=True)
        return EXIT_VALIDATION
    except HarvestError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        logger.debug("Physics failure", exc_info=True)
        return EXIT_PHYSICS
    except Exception as e:
        logger.error(f"Unhandled exception in main: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
