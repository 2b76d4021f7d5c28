"""File formats and atomic output helpers.

Operators ship as JSON with a model echo, the lexicographic layout tag and
row-major [re, im] entries.  Trajectories ship as CSV with 17 significant
digits.  All writers go through a temp file plus atomic rename so failures
never leave partial outputs.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Mapping

import numpy as np

from .classical import Trajectory
from .lattice import TorusModel
from .operators import OperatorMatrix


def model_payload(model: TorusModel) -> dict:
    return {
        "m": model.m,
        "controlled": list(model.controlled),
        "offsets": list(model.offsets),
        "truncation": model.truncation,
    }


def operator_payload(op: OperatorMatrix) -> dict:
    entries = [[float(z.real), float(z.imag)] for z in op.matrix.ravel()]
    return {
        "format": "operator",
        "model": model_payload(op.model),
        "layout": "lexicographic modes, |n_k| <= truncation",
        "shape": list(op.matrix.shape),
        "entries": entries,
    }


def trajectory_csv(trajectory: Trajectory) -> str:
    m = trajectory.actions.shape[1]
    header = ["t"] + [f"I_{k + 1}" for k in range(m)] + [f"phi_{k + 1}" for k in range(m)]
    lines = [",".join(header)]
    for i in range(len(trajectory)):
        row = [trajectory.times[i], *trajectory.actions[i], *trajectory.angles[i]]
        lines.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def as_builtin(value):
    """Recursively convert numpy scalars/arrays for JSON output."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return [as_builtin(v) for v in value]
    if isinstance(value, dict):
        return {k: as_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [as_builtin(v) for v in value]
    return value


def atomic_write_json(path: str, payload: Mapping) -> None:
    atomic_write_text(path, json.dumps(as_builtin(payload), indent=1, sort_keys=True) + "\n")
