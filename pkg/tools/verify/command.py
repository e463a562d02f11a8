import logging

from shared.config import config_from_args, parse_floats
from shared.errors import ConfigError
from shared.fields import validate_epsilon
from shared.monitors import DEFAULT_DECAY_WINDOW, DEFAULT_SLACK, check_bounds, theorem_constants
from shared.storage import RunStore, generate_run_id
from tools.simulate.command import simulate_run

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1


def _open_store(args) -> RunStore:
    """The given run directory, or the run of the configuration (simulated first if absent)."""
    if args.run_dir is not None:
        return RunStore.open(args.run_dir)
    config, out = config_from_args(args)
    store = RunStore(out, generate_run_id(config))
    if store.exists() and store.status() == "completed":
        logger.info("reusing completed run %s", store.directory)
        return store
    return simulate_run(config, out)


def _setting(cli_value, stored: str, default):
    if cli_value is not None:
        return cli_value
    return stored if stored else default


def run(args) -> int:
    # reject a bad epsilon before any run is touched
    try:
        cli_epsilon = validate_epsilon(float(args.epsilon)) if args.epsilon is not None else None
    except ValueError as exc:
        raise ConfigError(f"invalid epsilon: {exc}") from exc
    store = _open_store(args)
    manifest = store.read_manifest()
    history = store.load_history()

    epsilon = cli_epsilon
    if epsilon is None and manifest.get("constants.epsilon"):
        epsilon = validate_epsilon(float(manifest["constants.epsilon"]))
    try:
        slack = float(_setting(args.slack, manifest.get("slack"), DEFAULT_SLACK))
        window = parse_floats(_setting(args.window, manifest.get("config.window"), DEFAULT_DECAY_WINDOW))
    except ValueError as exc:
        raise ConfigError(f"invalid slack or window: {exc}") from exc
    if len(window) != 2:
        raise ConfigError(f"window needs two values t_a,t_b, got {window!r}")

    constants = theorem_constants(history.initial, history.model, epsilon)
    report = check_bounds(history, constants, slack=slack, window=window,
                          scenario=manifest.get("scenario", ""))
    store.write_frame("report_files", "report.csv", report.table())
    store.write_text("report_files", "report.txt", report.to_text())
    store.write_text("report_files", "report.json", report.to_json() + "\n")
    violation = report.first_violation or {}
    store.update_manifest(**{"verify.all_pass": report.all_pass,
                             "verify.slack": slack,
                             "verify.first_violation_t": violation.get("t"),
                             "verify.first_violation_check": violation.get("check")})

    print(report.to_text(), end="")
    print(report.to_json())
    return EXIT_PASS if report.all_pass else EXIT_FAIL
