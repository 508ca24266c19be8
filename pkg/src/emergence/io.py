"""Artifact serialization: state dumps, CSV tables, atomic writes."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import EmergenceError, InputError
from .hilbert import (
    FockBasis,
    GridBasis,
    ProductBasis,
    StateOperator,
    purity,
    von_neumann_entropy,
)


class IoError(EmergenceError, OSError):
    pass


def atomic_write(path, data: str | bytes):
    """Write via a temp file in the target directory and rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode() if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise IoError(f"cannot write {path}: {exc}") from exc


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def fmt(x) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.16e}"
    return str(x)


def csv_text(header, rows, footer=()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise InputError(f"row has {len(row)} fields, header has {len(header)}")
        w.writerow([fmt(x) for x in row])
    for line in footer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def write_csv(path, header, rows, footer=()):
    rows = list(rows)
    if not rows:
        raise InputError("refusing to write an empty table")
    atomic_write(path, csv_text(header, rows, footer))


SWEEP_HEADER = ("hbar", "nu", "dQ_disc", "dP_disc", "Q_disc", "P_disc", "aggregate", "mc_error")


def emit_sweep_csv(table, path):
    """One row per sweep point, fitted order as a trailing comment line."""
    rows = [(r.hbar, r.nu, r.dQ_disc, r.dP_disc, r.Q_disc, r.P_disc, r.aggregate, r.mc_error)
            for r in table.rows]
    write_csv(path, SWEEP_HEADER, rows, [f"fitted_order={fmt(table.fitted_order)}"])


# --- state dumps ---------------------------------------------------------------

def basis_descriptor(b) -> dict:
    if isinstance(b, GridBasis):
        return {"type": "grid", "x_min": b.x_min, "x_max": b.x_max, "n_points": b.n_points}
    if isinstance(b, FockBasis):
        return {"type": "fock", "dim": b.dim, "center_Q": b.center_Q, "center_P": b.center_P,
                "mass_scale": b.mass_scale, "hbar": b.hbar}
    if isinstance(b, ProductBasis):
        return {"type": "product", "factors": [basis_descriptor(f) for f in b.factors]}
    raise InputError(f"unknown basis {b!r}")


def basis_from_descriptor(d: dict):
    kind = d.get("type")
    if kind == "grid":
        return GridBasis(float(d["x_min"]), float(d["x_max"]), int(d["n_points"]))
    if kind == "fock":
        return FockBasis(int(d["dim"]), float(d["center_Q"]), float(d["center_P"]),
                         float(d["mass_scale"]), float(d["hbar"]))
    if kind == "product":
        return ProductBasis(tuple(basis_from_descriptor(f) for f in d["factors"]))
    raise InputError(f"unknown basis type {kind!r}")


def state_document(rho: StateOperator, hbar: float | None = None) -> dict:
    from .mepacket import moments_of_state

    moments = None
    if isinstance(rho.basis, FockBasis) or (isinstance(rho.basis, GridBasis) and hbar is not None):
        m = moments_of_state(rho, hbar=hbar)
        moments = {"Q": m.Q[0], "P": m.P[0], "dQ": m.dQ[0], "dP": m.dP[0], "hbar": m.hbar}
    mat = rho.matrix
    return {
        "basis": basis_descriptor(rho.basis),
        "dim": rho.dim,
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in mat],
        "moments": moments,
        "entropy": von_neumann_entropy(rho),
        "purity": purity(rho),
    }


def dump_state(rho: StateOperator, path, hbar: float | None = None):
    atomic_write(path, json.dumps(state_document(rho, hbar), indent=1) + "\n")


def load_state(path) -> StateOperator:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    basis = basis_from_descriptor(doc["basis"])
    arr = np.asarray(doc["matrix"], dtype=float)
    if arr.shape != (doc["dim"], doc["dim"], 2):
        raise InputError(f"matrix shape {arr.shape} does not match dim {doc['dim']}")
    return StateOperator(basis, arr[..., 0] + 1j * arr[..., 1])
