"""
Run directories on the local filesystem.

    <out>/<run_id>/manifest.txt                 key=value index of the run
    <out>/<run_id>/snapshots/snapshot_00000.csv
    <out>/<run_id>/report.csv|txt|json
    <out>/<run_id>/paths/path_<family>_<k>.csv

The manifest is the only index: every emitted file is listed there and
readers never open a file it does not list.
"""
import logging
import os
import tempfile
from datetime import datetime
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd
from dotenv import dotenv_values

from .config import RUN_STATUSES, RunConfig
from .errors import ArtifactError, ConfigError, DomainError
from .fields import FieldSnapshot, Grid1D
from .solver import SolutionHistory, SolverConfig, StopReason
from .thermo import GasModel

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.txt"
SNAPSHOT_DIR = "snapshots"
PATH_DIR = "paths"
FLOAT_FORMAT = "%.17g"
FILE_KINDS = ("snapshot_files", "report_files", "path_files")


def generate_run_id(config: RunConfig) -> str:
    """Explicit run_id, or <scenario>_<config hash> so identical configs share a directory."""
    return config.run_id or config.default_run_id()


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (list, tuple, np.ndarray)):
        return ",".join(_format(v) for v in value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _floats(text: Optional[str]) -> List[float]:
    return [float(v) for v in (text or "").split(",") if v]


def _names(text: Optional[str]) -> List[str]:
    return [v for v in (text or "").split(",") if v]


def snapshot_frame(snap: FieldSnapshot, epsilon: Optional[float] = None) -> pd.DataFrame:
    """Stored columns of one snapshot. Loading reads back u, eta and m only."""
    frame = pd.DataFrame({"x": snap.x, "u": snap.u, "eta": snap.eta, "m": snap.m,
                          "tau": snap.tau, "rho": snap.rho, "p": snap.p, "c": snap.c,
                          "s": snap.s, "r": snap.r, "alpha": snap.alpha, "beta": snap.beta})
    if epsilon is not None:
        frame["alpha_eps"], frame["beta_eps"] = snap.scaled(epsilon)
    return frame


class RunStore:
    """Reads and writes one run directory."""

    def __init__(self, root, run_id: str):
        if not run_id or "/" in run_id or run_id in (".", ".."):
            raise ConfigError(f"invalid run id {run_id!r}")
        self.root = Path(root)
        self.run_id = run_id
        self.directory = self.root / run_id
        self.manifest_path = self.directory / MANIFEST_NAME

    @classmethod
    def open(cls, run_dir) -> "RunStore":
        run_dir = Path(run_dir)
        if not (run_dir / MANIFEST_NAME).is_file():
            raise ArtifactError(f"{run_dir} is not a run directory (no {MANIFEST_NAME})")
        return cls(run_dir.parent, run_dir.name)

    def exists(self) -> bool:
        return self.manifest_path.is_file()

    # manifest

    def read_manifest(self) -> Dict[str, str]:
        if not self.exists():
            raise ArtifactError(f"manifest not found: {self.manifest_path}")
        return {k: (v or "") for k, v in dotenv_values(self.manifest_path, interpolate=False).items()}

    def write_manifest(self, record: Dict):
        self.directory.mkdir(parents=True, exist_ok=True)
        lines = [f"{key}={_quote(_format(value))}" for key, value in record.items()]
        handle, tmp = tempfile.mkstemp(dir=self.directory, prefix=".manifest", suffix=".tmp")
        try:
            with os.fdopen(handle, "w") as stream:
                stream.write("\n".join(lines) + "\n")
            os.replace(tmp, self.manifest_path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def update_manifest(self, **changes):
        record = self.read_manifest() if self.exists() else {}
        record.update(changes)
        record["updated_at"] = datetime.now().isoformat(timespec="seconds")
        self.write_manifest(record)

    def set_status(self, status: str, detail: str = ""):
        if status not in RUN_STATUSES:
            raise ValueError(f"unknown run status {status!r}")
        self.update_manifest(status=status, status_detail=detail)

    def status(self) -> str:
        return self.read_manifest().get("status", "")

    def create(self, config: RunConfig):
        """Fresh run directory: previous manifest-listed files are removed, status 'running'."""
        if self.exists():
            manifest = self.read_manifest()
            for kind in FILE_KINDS:
                for name in _names(manifest.get(kind)):
                    (self.directory / name).unlink(missing_ok=True)
        (self.directory / SNAPSHOT_DIR).mkdir(parents=True, exist_ok=True)
        record = {"run_id": self.run_id, "status": "running",
                  "created_at": datetime.now().isoformat(timespec="seconds")}
        record.update({f"config.{k}": v for k, v in config.as_record().items()})
        for kind in FILE_KINDS:
            record[kind] = ""
        self.write_manifest(record)
        logger.info("run directory %s", self.directory)

    # listed files

    def listed_files(self, kind: str) -> List[str]:
        return _names(self.read_manifest().get(kind))

    def _register(self, kind: str, names: Iterable[str]):
        manifest = self.read_manifest()
        listed = _names(manifest.get(kind))
        listed += [name for name in names if name not in listed]
        self.update_manifest(**{kind: ",".join(listed)})

    def _listed_path(self, kind: str, name: str) -> Path:
        if name not in self.listed_files(kind):
            raise ArtifactError(f"{name} is not listed in {self.manifest_path}")
        path = self.directory / name
        if not path.is_file():
            raise ArtifactError(f"manifest lists {name} but the file is missing")
        return path

    def write_frame(self, kind: str, name: str, frame: pd.DataFrame):
        path = self.directory / name
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        self._register(kind, [name])
        return path

    def write_text(self, kind: str, name: str, text: str):
        path = self.directory / name
        path.write_text(text)
        self._register(kind, [name])
        return path

    def read_frame(self, kind: str, name: str, **kwargs) -> pd.DataFrame:
        return pd.read_csv(self._listed_path(kind, name), **kwargs)

    def read_text(self, kind: str, name: str) -> str:
        return self._listed_path(kind, name).read_text()

    # histories

    def write_history(self, history: SolutionHistory, scenario: str, epsilon: Optional[float] = None):
        names = []
        for index, snap in enumerate(history):
            name = f"{SNAPSHOT_DIR}/snapshot_{index:05d}.csv"
            frame = snapshot_frame(snap, epsilon)
            path = self.directory / name
            path.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
            names.append(name)
        grid, model = history.grid, history.model
        self.update_manifest(
            scenario=scenario, system=history.system, boundary=history.boundary,
            stop_reason=history.stop_reason, stop_detail=history.stop_detail,
            t_stop=history.t_stop, steps=history.steps,
            **{"grid.x_min": grid.x_min, "grid.x_max": grid.x_max, "grid.n": grid.n,
               "model.K": model.K, "model.gamma": model.gamma, "model.c_v": model.c_v,
               "model.K_tau": model.K_tau, "model.K_p": model.K_p, "model.K_c": model.K_c},
            times=list(history.times), snapshot_files=",".join(names),
        )
        logger.info("stored %d snapshots in %s", len(names), self.directory)

    def load_history(self) -> SolutionHistory:
        """Rebuild the stored history from manifest-listed snapshot files only."""
        manifest = self.read_manifest()
        try:
            grid = Grid1D(float(manifest["grid.x_min"]), float(manifest["grid.x_max"]), int(manifest["grid.n"]))
            model = GasModel(K=float(manifest["model.K"]), gamma=float(manifest["model.gamma"]),
                             c_v=float(manifest["model.c_v"]))
            config = SolverConfig(**{key: float(manifest[f"config.{key}"])
                                     for key in ("cfl", "t_end", "ux_blowup_factor", "rho_floor_factor",
                                                 "front_cells")},
                                  stride=int(manifest["config.stride"]),
                                  boundary=manifest["boundary"], system=manifest["system"])
            stop_reason = StopReason(manifest["stop_reason"])
        except (KeyError, ValueError, DomainError, ConfigError) as exc:
            raise ArtifactError(f"manifest {self.manifest_path} is incomplete: {exc}") from exc

        times = _floats(manifest.get("times"))
        names = _names(manifest.get("snapshot_files"))
        if not names or len(names) != len(times):
            raise ArtifactError(f"manifest lists {len(names)} snapshot files for {len(times)} stored times")

        history = SolutionHistory(grid=grid, model=model, system=manifest["system"], config=config,
                                  stop_reason=stop_reason, stop_detail=manifest.get("stop_detail", ""),
                                  t_stop=float(manifest.get("t_stop") or times[-1]),
                                  steps=int(manifest.get("steps") or 0))
        for t, name in zip(times, names):
            frame = self.read_frame("snapshot_files", name)
            if len(frame) != grid.n:
                raise ArtifactError(f"{name} has {len(frame)} rows, expected {grid.n}")
            try:
                history.append(FieldSnapshot(t=t, u=frame["u"].to_numpy(), eta=frame["eta"].to_numpy(),
                                             m=frame["m"].to_numpy(), grid=grid, model=model,
                                             boundary=manifest["boundary"]))
            except (KeyError, DomainError) as exc:
                raise ArtifactError(f"{name} is not a valid snapshot: {exc}") from exc
        return history

    def config_record(self) -> Dict[str, str]:
        """The run configuration as stored, without the config. prefix."""
        return {key[len("config."):]: value for key, value in self.read_manifest().items()
                if key.startswith("config.")}
