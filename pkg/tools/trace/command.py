import logging

import numpy as np
import pandas as pd

from shared.characteristics import (FORWARD, CharacteristicPath, estimate_blowup_time, eta_transport_residual,
                                    integrate_riccati_full, integrate_riccati_psystem, lemma_cases, parse_family,
                                    trace_many)
from shared.config import parse_floats
from shared.errors import ConfigError
from shared.fields import validate_epsilon
from shared.monitors import theorem_constants
from shared.solver import PSYSTEM
from shared.storage import PATH_DIR, RunStore

logger = logging.getLogger(__name__)

CASE_KEYS = ("case_I", "case_I_ok", "case_II", "case_II_ok")


def _padded(values: np.ndarray, size: int) -> np.ndarray:
    out = np.full(size, np.nan)
    out[: len(values)] = values
    return out


def path_frame(path: CharacteristicPath, carried: CharacteristicPath) -> pd.DataFrame:
    """One row per path sample; carried_value and field_value are NaN past the resolved part."""
    coeff = path.coefficients
    frame = pd.DataFrame({
        "t": path.t, "x": path.x, "u": path.u, "eta": path.eta, "m": path.m, "c": path.c,
        "s": path.s, "r": path.r, "alpha": path.alpha, "beta": path.beta,
        "k1": coeff.k1, "k2": coeff.k2, "k1_eps": coeff.k1_eps, "k2_eps": coeff.k2_eps,
    })
    if path.epsilon is not None:
        frame["alpha_eps"] = path.scaled("alpha")
        frame["beta_eps"] = path.scaled("beta")
    frame["carried_value"] = _padded(carried.carried, len(path))
    frame["field_value"] = _padded(carried.field_value, len(path))
    return frame


def run(args) -> int:
    try:
        seeds = parse_floats(args.seeds) if args.seeds is not None else ()
        t0 = float(args.t0) if args.t0 is not None else None
        epsilon = validate_epsilon(float(args.epsilon)) if args.epsilon is not None else None
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not seeds:
        raise ConfigError("trace needs at least one seed position (--seeds x1,x2,...)")
    family = parse_family(args.family or "+")

    store = RunStore.open(args.run_dir)
    history = store.load_history()
    paths = trace_many(history, seeds, family=family, t0=t0, epsilon=epsilon)
    constants = theorem_constants(history.initial, epsilon=epsilon) if epsilon is not None else None
    cases = dict.fromkeys(CASE_KEYS, 0)

    label = "plus" if family == FORWARD else "minus"
    logger.info("tracing %d %s paths through %s", len(paths), label, store.directory)
    quantity = None
    for k, path in enumerate(paths):
        if history.system == PSYSTEM:
            carried = integrate_riccati_psystem(path, history)
        else:
            carried = integrate_riccati_full(path, history, epsilon)
        quantity = carried.quantity
        name = f"{PATH_DIR}/path_{label}_{k}.csv"
        store.write_frame("path_files", name, path_frame(path, carried))
        invariant = path.s if family == FORWARD else path.r
        print(f"{name}: {len(path)} samples, t in [{path.t[0]:.6g}, {path.t[-1]:.6g}], stop={path.stop}, "
              f"max|invariant drift|={float(np.max(np.abs(invariant - invariant[0]))):.3g}, "
              f"eta transport residual={eta_transport_residual(path, history):.3g}")
        if constants is not None and family == FORWARD:
            for key, count in lemma_cases(path, constants.N, constants.K1_hat, history.model.gamma).items():
                cases[key] += count

    extra = {"trace.carried_quantity": quantity, "trace.family": label}
    if constants is not None and family == FORWARD:
        print(f"regime counts above N/2: case I {cases['case_I_ok']}/{cases['case_I']} hold, "
              f"case II {cases['case_II_ok']}/{cases['case_II']} decreasing")
        extra.update({f"trace.{key}": value for key, value in cases.items()})
    store.update_manifest(**extra)

    if args.estimate_blowup:
        estimate = estimate_blowup_time(history, seeds={family: list(seeds)})
        if estimate is None:
            print("blowup estimate: none within the horizon")
        else:
            print(f"blowup estimate: t*={estimate.t_star:.6g} at x={estimate.x_star:.6g}")
            store.update_manifest(**{"blowup.t_star": estimate.t_star, "blowup.x_star": estimate.x_star,
                                     "blowup.family": estimate.family})
    return 0
