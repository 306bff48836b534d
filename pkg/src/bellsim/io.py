"""CSV formats for mode lists, trajectories and correlation sweeps.

All files are UTF-8 with LF endings.  Lines starting with ``#`` are
comments; in trajectory files they carry ``key=value`` metadata.  Floats
are written with ``repr`` (shortest string that round-trips a double).
"""

from __future__ import annotations

import csv
import hashlib
import io
from pathlib import Path

from .errors import InputError
from .geometry import SI
from .gw_background import GWBackground, GWMode
from .oscillator import Trajectory

MODE_HEADER = ("mode_index", "e11", "e12", "e22", "kx", "ky", "kz", "omega_g", "phi0")
TRAJECTORY_HEADER = ("t", "ell", "ell_dot")
SWEEP_HEADER = ("theta_deg", "value", "stderr", "n")

MODE_COMMENT = (
    "# e11,e12,e22 are TT components in the mode frame (p, q, k_hat) with "
    "k_hat = k/|k|, p = polar unit vector, q = azimuthal unit vector of k_hat; "
    "spatial e_ij = R local R^T with R = [p q k_hat], e_0mu = 0"
)


def fmt(x) -> str:
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return repr(float(x))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_text(path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _rows_to_text(comments, header, rows) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _read_table(path, header):
    try:
        with open(path, encoding="utf-8", newline="") as f:
            lines = f.read().split("\n")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    comments = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if ln and not ln.startswith("#")]
    if not body or tuple(body[0].split(",")) != header:
        raise InputError(f"{path}: expected header {','.join(header)}")
    rows = []
    for lineno, row in enumerate(csv.reader(body[1:]), start=2):
        if len(row) != len(header):
            raise InputError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        try:
            rows.append([float(v) for v in row])
        except ValueError as exc:
            raise InputError(f"{path}: row {lineno}: {exc}") from exc
    return comments, rows


def modes_to_csv(bg: GWBackground) -> str:
    rows = []
    for i, m in enumerate(bg.modes):
        e11, e12, e22 = m.local_components()
        rows.append([i, e11, e12, e22, *m.k_spatial, m.omega_g, m.phi0])
    return _rows_to_text([MODE_COMMENT], MODE_HEADER, rows)


def write_modes(bg: GWBackground, path):
    _write_text(path, modes_to_csv(bg))


def read_modes(path, c: float = SI.c) -> GWBackground:
    _, rows = _read_table(path, MODE_HEADER)
    modes = []
    for row in rows:
        _, e11, e12, e22, kx, ky, kz, omega, phi0 = row
        try:
            modes.append(GWMode.from_tt(e11, e12, e22, (kx, ky, kz), omega, phi0))
        except ValueError as exc:
            raise InputError(f"{path}: mode {int(row[0])}: {exc}") from exc
    return GWBackground(tuple(modes), c=c)


def trajectory_to_csv(traj: Trajectory, meta: dict | None = None) -> str:
    comments = [f"# dt={fmt(traj.dt)}", f"# t0={fmt(traj.t0)}"]
    for key, value in (meta or {}).items():
        comments.append(f"# {key}={value}")
    times = traj.times
    rows = zip(times, traj.ell, traj.ell_dot)
    return _rows_to_text(comments, TRAJECTORY_HEADER, rows)


def write_trajectory(traj: Trajectory, path, meta: dict | None = None):
    _write_text(path, trajectory_to_csv(traj, meta))


def read_trajectory(path) -> tuple[Trajectory, dict]:
    comments, rows = _read_table(path, TRAJECTORY_HEADER)
    meta = {}
    for line in comments:
        key, sep, value = line[1:].strip().partition("=")
        if sep:
            meta[key.strip()] = value.strip()
    if "dt" not in meta or "t0" not in meta:
        raise InputError(f"{path}: trajectory metadata must include dt and t0")
    try:
        traj = Trajectory(float(meta["t0"]), float(meta["dt"]),
                          [r[1] for r in rows], [r[2] for r in rows])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return traj, meta


def sweep_to_csv(rows) -> str:
    """``rows`` of (theta_deg, value, stderr, n)."""
    return _rows_to_text([], SWEEP_HEADER, rows)


def write_sweep(rows, path):
    _write_text(path, sweep_to_csv(rows))


def read_sweep(path):
    return _read_table(path, SWEEP_HEADER)[1]


def ensure_parent(path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
