import numpy as np

from shared.config import parse_floats
from shared.errors import ConfigError
from shared.monitors import DEFAULT_DECAY_WINDOW, fit_decay_exponent
from shared.storage import RunStore


def run(args) -> int:
    try:
        window = parse_floats(args.window) if args.window is not None else DEFAULT_DECAY_WINDOW
    except ValueError as exc:
        raise ConfigError(f"invalid window: {exc}") from exc
    if len(window) != 2:
        raise ConfigError(f"window needs two values t_a,t_b, got {window!r}")

    store = RunStore.open(args.run_dir)
    history = store.load_history()
    min_rho = np.array([float(np.min(snap.rho)) for snap in history])
    exponent, residual = fit_decay_exponent(history.times, min_rho, window)
    store.update_manifest(**{"fit.exponent": exponent, "fit.residual": residual, "fit.window": list(window)})
    print(f"exponent {exponent:.6f} residual {residual:.3g} window [{window[0]:g}, {window[1]:g}]")
    return 0
