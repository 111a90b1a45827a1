"""Catalog files: JSON with sparse structure constants and row-major subalgebra bases."""

import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .lattice import Catalog
from .lie_core import DEFAULT_TOL, Subalgebra, validate_algebra


def _number(value):
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse numeric value {value!r}") from exc
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ValidationError(f"expected a number, got {value!r}")


def _matrix(rows, shape, what):
    try:
        M = np.array([[_number(x) for x in row] for row in rows], dtype=float)
    except TypeError as exc:
        raise ValidationError(f"{what} must be a list of rows") from exc
    if M.size == 0:
        return M.reshape(0, shape[1])
    if M.ndim != 2 or M.shape[1] != shape[1] or (shape[0] is not None and M.shape[0] != shape[0]):
        raise ValidationError(f"{what} has shape {M.shape}, expected {shape}")
    return M


def catalog_from_dict(data, tol=None):
    """Build a Catalog; [i, j, k, v] sets C[i,j,k] = v and, unless given explicitly, C[j,i,k] = -v."""
    for key in ("dim", "structure", "subalgebras"):
        if key not in data:
            raise ValidationError(f"catalog is missing {key!r}")
    n = int(data["dim"])
    tol = float(data.get("tol", DEFAULT_TOL)) if tol is None else tol
    C = np.zeros((n, n, n))
    given = set()
    for entry in data["structure"]:
        if len(entry) != 4:
            raise ValidationError(f"structure entry {entry!r} is not [i, j, k, value]")
        i, j, k = (int(x) for x in entry[:3])
        if not all(0 <= x < n for x in (i, j, k)):
            raise ValidationError(f"structure index out of range in {entry!r}")
        C[i, j, k] = _number(entry[3])
        given.add((i, j, k))
    for i, j, k in given:
        if (j, i, k) not in given:
            C[j, i, k] = -C[i, j, k]
    name = data.get("name", "")
    g = validate_algebra(C, tol=tol, name=name)
    subs = {}
    for entry in data["subalgebras"]:
        label = entry.get("name")
        if not label or label in subs:
            raise ValidationError(f"subalgebra names must be unique and nonempty (got {label!r})")
        rows = _matrix(entry.get("basis", []), (None, n), f"basis of {label}")
        subs[label] = Subalgebra.span(g, rows.T, name=label) if rows.shape[0] else g.zero(label)
    h_name = data.get("h")
    if h_name is None:
        h = g.zero("h")
    elif h_name in subs:
        h = subs[h_name]
    else:
        raise ValidationError(f"h refers to unknown subalgebra {h_name!r}")
    items = [s for key, s in subs.items() if key != h_name]
    extra = [_matrix(M, (n, n), "extra_invariance matrix") for M in data.get("extra_invariance", [])]
    labels = data.get("labels")
    if labels is not None:
        labels = [labels.get(s.name, s.name) for s in items]
    return Catalog(g, h, items, extra, labels, name=name)


def catalog_to_dict(cat):
    g = cat.algebra
    C = g.structure
    triples = [[int(i), int(j), int(k), float(C[i, j, k])]
               for i, j, k in zip(*np.nonzero(C)) if i < j]
    subs = [{"name": cat.h.name or "h", "basis": cat.h.basis.T.tolist()}]
    subs += [{"name": it.name, "basis": it.basis.T.tolist()} for it in cat.items]
    out = {
        "name": cat.name,
        "dim": g.dim,
        "tol": g.tol,
        "structure": triples,
        "subalgebras": subs,
        "h": cat.h.name or "h",
        "extra_invariance": [np.asarray(M).tolist() for M in cat.extra_generators],
    }
    if cat.labels is not None:
        out["labels"] = {it.name: lab for it, lab in zip(cat.items, cat.labels)}
    return out


def load_catalog(path, tol=None):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return catalog_from_dict(data, tol)


def save_catalog(cat, path):
    Path(path).write_text(json.dumps(catalog_to_dict(cat), indent=1))
