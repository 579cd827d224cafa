"""JSON file formats.

All floats are written with 17 significant digits and keys are sorted, so
equal inputs give byte-identical files.  Complex numbers are stored as
``[re, im]`` pairs.  Matrices are row-major nested lists.

Documents carry a ``schema`` field:

* ``qmueller.mueller/1``  ``{"mueller": 4x4}``
* ``qmueller.channel/1``  ``{"type", "params", "n_max"}``
* ``qmueller.exp/1``      experiment config (see ``polarimetry_sim``)
* ``qmueller.record/1``   experiment record
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import channels as chn
from .errors import NegativeWeightFunction, SchemaVersionError
from .fock import make_basis
from .quadrature import flat_grid, haar_grid
from .stokes import EulerAngles

MUELLER_SCHEMA = "qmueller.mueller/1"
CHANNEL_SCHEMA = "qmueller.channel/1"
EXP_SCHEMA = "qmueller.exp/1"
RECORD_SCHEMA = "qmueller.record/1"
CHANNEL_TYPES = (
    "retarder",
    "diattenuator2vac",
    "su3",
    "haar_depolarizer",
    "weighted_rotation",
    "polarizer_finite",
    "convex",
    "compose",
)


def _float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = "%.17g" % x
    # keep floats recognizable as floats on reload
    if not any(ch in s for ch in ".eEn"):
        s += ".0"
    return s


def _emit(obj, indent: int, level: int, out: list) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (np.integer,)):
        obj = int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        obj = [float(obj.real), float(obj.imag)]
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for n, key in enumerate(sorted(obj)):
            out.append(pad + json.dumps(str(key)) + ": ")
            _emit(obj[key], indent, level + 1, out)
            out.append(",\n" if n < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        # numeric rows stay on one line
        if all(isinstance(x, (int, float, np.number, bool)) or x is None for x in obj):
            out.append("[")
            for n, x in enumerate(obj):
                _emit(x, indent, level + 1, out)
                if n < len(obj) - 1:
                    out.append(", ")
            out.append("]")
            return
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for n, x in enumerate(obj):
            out.append(pad)
            _emit(x, indent, level + 1, out)
            out.append(",\n" if n < len(obj) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps17(obj, indent: int = 2) -> str:
    out: list = []
    _emit(obj, indent, 0, out)
    return "".join(out) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps17(obj))


def read_json(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return doc


def check_schema(doc: dict, expected: str) -> None:
    got = doc.get("schema")
    if got != expected:
        raise SchemaVersionError(f"expected schema {expected!r}, got {got!r}")


def complex_matrix(rows) -> np.ndarray:
    a = np.asarray(rows, dtype=float)
    if a.ndim == 3 and a.shape[-1] == 2:
        return a[..., 0] + 1j * a[..., 1]
    return a.astype(complex)


def mueller_doc(m, **extra) -> dict:
    return {"schema": MUELLER_SCHEMA, "mueller": np.asarray(m, dtype=float), **extra}


def load_mueller(path) -> np.ndarray:
    doc = read_json(path)
    check_schema(doc, MUELLER_SCHEMA)
    m = np.asarray(doc["mueller"], dtype=float)
    if m.shape != (4, 4):
        raise ValueError(f"{path}: mueller must be 4x4, got shape {m.shape}")
    return m


def _angles(p: dict) -> EulerAngles:
    return EulerAngles(float(p.get("phi", 0.0)), float(p.get("theta", 0.0)), float(p.get("psi", 0.0)))


def build_channel(doc: dict, n_max: int | None = None) -> chn.KrausChannel:
    """Construct a KrausChannel from a channel document (or a nested channel entry)."""
    if "schema" in doc:
        check_schema(doc, CHANNEL_SCHEMA)
    n_max = int(n_max if n_max is not None else doc.get("n_max", 0))
    if n_max < 1:
        raise ValueError("channel needs n_max >= 1")
    basis = make_basis(2, n_max)
    kind = doc.get("type")
    p = doc.get("params", {})
    if kind == "retarder":
        return chn.retarder_channel(_angles(p), basis)
    if kind == "diattenuator2vac":
        return chn.diattenuator_channel_two_vacuum(
            float(p["q"]), float(p["r"]), float(p.get("theta", 0.0)), float(p.get("psi", 0.0)), basis
        )
    if kind == "su3":
        if "u3" in p:
            u3 = complex_matrix(p["u3"])
        else:
            u3 = chn.random_su3(np.random.default_rng(int(p["seed"])))
        return chn.nondepolarizing_channel_su3(u3, basis)
    if kind == "haar_depolarizer":
        grid = haar_grid(*p.get("grid", (4, 3, 4)))
        return chn.haar_depolarizer(float(p["p"]), basis, grid)
    if kind == "weighted_rotation":
        spec = chn.WeightFunctionSpec(**{k: float(p[k]) for k in "abcdefghij" if k in p})
        out = chn.weighted_rotation_channel(spec, basis, flat_grid(*p.get("grid", (4, 16, 4))))
        if isinstance(out, chn.PositivityFailure):
            raise NegativeWeightFunction(out)
        return out
    if kind == "polarizer_finite":
        return chn.polarizer_channel_finite(int(p["L"]), basis, strict=bool(p.get("strict", True)))
    if kind == "convex":
        parts = [build_channel(c, n_max) for c in p["channels"]]
        return chn.convex_combine_channels(p["weights"], parts)
    if kind == "compose":
        # listed in the order they act
        parts = [build_channel(c, n_max) for c in p["channels"]]
        return chn.compose_many(*reversed(parts))
    raise ValueError(f"unknown channel type {kind!r}; expected one of {CHANNEL_TYPES}")


def channel_doc(kind: str, params: dict, n_max: int) -> dict:
    return {"schema": CHANNEL_SCHEMA, "type": kind, "params": params, "n_max": n_max}
