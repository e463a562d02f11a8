"""
euler-vacuum-lab command line.

    python main.py simulate --scenario double_rarefaction --gamma 3 --n 4096 --t-end 50
    python main.py verify runs/<run_id>
    python main.py trace runs/<run_id> --seeds 0.5,1.0 --family +
    python main.py fit runs/<run_id> --window 5,50
    python main.py list-scenarios
"""
import argparse
import importlib
import logging
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from shared.config import COMMANDS_CONFIG, CONFIG_KEYS, get_log_level
from shared.errors import ArtifactError, ConfigError, DomainError, HistoryBoundsError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_ARTIFACT = 3


def configure_logging(level: str):
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)
    logging.captureWarnings(True)


def _add_config_flags(parser: argparse.ArgumentParser, keys=None):
    for key in keys or CONFIG_KEYS:
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None, metavar="VALUE",
                            help=CONFIG_KEYS[key])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="euler-vacuum-lab",
        description="Smooth 1-D Lagrangian Euler runs checked against invariant-domain, "
                    "density-floor and uniform bounds.",
    )
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default) or ERROR")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True

    for command, info in COMMANDS_CONFIG.items():
        sub = subparsers.add_parser(command, help=info["description"], description=info["description"])
        if command in ("verify", "trace", "fit"):
            sub.add_argument("run_dir", nargs="?" if command == "verify" else None, type=Path,
                             help="run directory written by simulate")
        if command in ("simulate", "verify"):
            sub.add_argument("--config", type=Path, help="flat key=value config file; flags override it")
            _add_config_flags(sub)
        if command == "simulate":
            sub.add_argument("--slack-study", action="store_true",
                             help="run n/4, n/2, n and record 3x the largest bound overshoot as slack")
        if command == "trace":
            _add_config_flags(sub, ("seeds", "family", "t0", "epsilon"))
            sub.add_argument("--estimate-blowup", action="store_true",
                             help="also extrapolate the gradient blowup time along the traced paths")
        if command == "fit":
            _add_config_flags(sub, ("window",))
    return parser


def run_command(command: str, args) -> int:
    """Dispatch to tools.<command>.command.run."""
    module = importlib.import_module(f"tools.{command.replace('-', '_')}.command")
    return module.run(args)


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(get_log_level(args.log_level))

    try:
        return run_command(args.command, args)
    except (ConfigError, DomainError, HistoryBoundsError) as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArtifactError as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT


if __name__ == "__main__":
    sys.exit(main())
