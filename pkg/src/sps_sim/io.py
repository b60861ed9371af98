"""CSV, JSON and checksum helpers for run artifacts."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

CSV_DIGITS = 12


def format_value(x) -> str:
    return f"{float(x):.{CSV_DIGITS}g}"


def write_csv(path, header, columns) -> Path:
    """Write equal-length columns with a header row; '.' decimals, LF endings."""
    path = Path(path)
    columns = [np.asarray(c, dtype=float).ravel() for c in columns]
    if len(header) != len(columns):
        raise ValueError("header and columns differ in length")
    n = {c.size for c in columns}
    if len(n) != 1:
        raise ValueError("columns must have equal length")
    lines = [",".join(header)]
    lines.extend(",".join(format_value(v) for v in row) for row in zip(*columns))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path) -> dict:
    """Read a file written by :func:`write_csv` into a dict of float arrays."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    header = Path(path).read_text().split("\n", 1)[0].split(",")
    return {name: data[:, k] for k, name in enumerate(header)}


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def probabilities_csv(path, trace, dephased: bool = False) -> Path:
    """Probability trace with times in ns."""
    suffix = "_avg" if dephased else ""
    header = ["t_ns"] + [f"{name}{suffix}" for name in ("p_e", "p_c", "p_out", "p_side")]
    return write_csv(path, header, [trace.times * 1e9, trace.p_e, trace.p_c, trace.p_out, trace.p_side])


def monte_carlo_csv(path, estimate) -> tuple[Path, Path]:
    """Monte Carlo means and standard errors, plus a JSON sidecar with seed and n_traj."""
    m, s = estimate.mean, estimate.stderr
    header = ["t_ns", "mean_re_E", "mean_im_E", "mean_abs2_E", "mean_abs2_C", "mean_re_H", "mean_im_H",
              "stderr_re_E", "stderr_im_E", "stderr_abs2_E", "stderr_abs2_C", "stderr_re_H", "stderr_im_H"]
    cols = [estimate.times * 1e9, m["E"].real, m["E"].imag, m["abs2_E"], m["abs2_C"], m["H"].real, m["H"].imag,
            s["re_E"], s["im_E"], s["abs2_E"], s["abs2_C"], s["re_H"], s["im_H"]]
    path = write_csv(path, header, cols)
    sidecar = write_json(Path(path).with_suffix(".json"), {
        "seed": estimate.seed,
        "n_traj": estimate.n_traj,
        "substeps": estimate.substeps,
    })
    return path, sidecar
