import logging
from pathlib import Path

import numpy as np

from shared.config import RunConfig, config_from_args
from shared.errors import LabError
from shared.fields import Grid1D
from shared.monitors import bound_overshoot, measure_slack, theorem_constants
from shared.solver import StopReason, build_grid, conservation_drift, run as run_solver
from shared.storage import RunStore, generate_run_id

logger = logging.getLogger(__name__)

SLACK_STUDY_DIVISORS = (4, 2, 1)


def slack_study(config: RunConfig, grid: Grid1D) -> dict:
    """Bound overshoot at n/4, n/2 and n on the same domain."""
    spec = config.scenario_spec()
    model = spec.model()
    solver_config = config.solver_config()
    ns, overshoots = [], []
    for divisor in SLACK_STUDY_DIVISORS:
        n = grid.n // divisor
        history = run_solver(spec, Grid1D(grid.x_min, grid.x_max, n), model, solver_config)
        constants = theorem_constants(history.initial, model, spec.epsilon)
        ns.append(n)
        overshoots.append(bound_overshoot(history, constants))
        logger.info("slack study n=%d: overshoot %.3g", n, overshoots[-1])
    return {"slack": measure_slack(overshoots), "slack_levels": ns, "slack_overshoots": overshoots}


def simulate_run(config: RunConfig, out: Path, with_slack_study: bool = False) -> RunStore:
    """Run the solver for a configuration and store snapshots plus the manifest."""
    store = RunStore(out, generate_run_id(config))
    store.create(config)
    try:
        spec = config.scenario_spec()
        model = spec.model()
        grid = build_grid(spec, model, config.n, config.t_end)
        history = run_solver(spec, grid, model, config.solver_config())
        store.write_history(history, spec.name, epsilon=spec.epsilon)

        constants = theorem_constants(history.initial, model, spec.epsilon)
        drift = conservation_drift(history)
        extra = {f"constants.{k}": v for k, v in constants.as_record().items()}
        extra.update({
            "conservation.tau": drift["tau"],
            "conservation.u": drift["u"],
            "eulerian_sound_speed_max": float(np.max(history.initial.c * history.initial.tau)),
        })
        if with_slack_study:
            extra.update(slack_study(config, grid))
        store.update_manifest(**extra)
    except LabError as exc:
        store.set_status("failed", str(exc))
        raise
    store.set_status("completed")
    return store


def run(args) -> int:
    config, out = config_from_args(args)
    store = simulate_run(config, out, with_slack_study=args.slack_study)
    manifest = store.read_manifest()
    print(f"run: {store.directory}")
    print(f"stop: {manifest['stop_reason']} at t={float(manifest['t_stop']):.6g} "
          f"({len(store.listed_files('snapshot_files'))} snapshots, {manifest['steps']} steps)")
    if manifest["stop_reason"] == StopReason.BLOWUP.value:
        print(f"blowup suspected: {manifest['stop_detail']}")
    if "slack" in manifest:
        print(f"slack: {float(manifest['slack']):.3g}")
    return 0
