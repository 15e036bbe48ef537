"""
JSON encoding of state sets and POVMs.

State set document::

    {"dim": N,
     "states": [{"prior": 0.5, "density": {"re": [[...]], "im": [[...]]}}, ...]}

``density`` holds the unit-trace ``sigma_m``, not ``prior * sigma_m``.
POVM document::

    {"dim": N,
     "elements": [{"re": [[...]], "im": [[...]], "inconclusive": false}, ...]}

Numbers are written as decimal text with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import json
from numbers import Real
from pathlib import Path

import numpy as np

from .states import Povm, StateSet


class SchemaError(ValueError):
    """A document does not match the schema; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _matrix_text(a: np.ndarray, indent: str) -> str:
    rows = ("[" + ", ".join(_num(x) for x in row) + "]" for row in a)
    return "[\n" + ",\n".join(indent + "  " + r for r in rows) + "\n" + indent + "]"


def _complex_text(a: np.ndarray, indent: str) -> str:
    return (
        f'"re": {_matrix_text(a.real, indent)},\n'
        f'{indent}"im": {_matrix_text(a.imag, indent)}'
    )


def dumps_state_set(states: StateSet) -> str:
    entries = []
    for xi, sigma in zip(states.priors, states.densities):
        ind = " " * 8
        entries.append(
            "    {\n"
            f'      "prior": {_num(xi)},\n'
            '      "density": {\n'
            f"{ind}{_complex_text(sigma, ind)}\n"
            "      }\n"
            "    }"
        )
    return '{\n  "dim": %d,\n  "states": [\n%s\n  ]\n}\n' % (states.dim, ",\n".join(entries))


def dumps_povm(povm: Povm) -> str:
    entries = []
    last = len(povm) - 1
    for m, e in enumerate(povm.elements):
        ind = " " * 6
        flag = "true" if (povm.inconclusive and m == last) else "false"
        entries.append(
            "    {\n"
            f"{ind}{_complex_text(e, ind)},\n"
            f'{ind}"inconclusive": {flag}\n'
            "    }"
        )
    return '{\n  "dim": %d,\n  "elements": [\n%s\n  ]\n}\n' % (povm.dim, ",\n".join(entries))


def _require(obj, key: str, path: str):
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    if key not in obj:
        raise SchemaError(f"{path}.{key}" if path else key, "missing field")
    return obj[key]


def _real(x, path: str) -> float:
    if isinstance(x, bool) or not isinstance(x, Real):
        raise SchemaError(path, f"expected a number, got {type(x).__name__}")
    x = float(x)
    if not np.isfinite(x):
        raise SchemaError(path, "number is not finite")
    return x


def _matrix(obj, dim: int, path: str) -> np.ndarray:
    if not isinstance(obj, list):
        raise SchemaError(path, "expected a list of rows")
    if len(obj) != dim:
        raise SchemaError(path, f"expected {dim} rows (dim), got {len(obj)}")
    out = np.empty((dim, dim))
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != dim:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise SchemaError(f"{path}[{i}]", f"expected {dim} entries (dim), got {got}")
        for j, x in enumerate(row):
            out[i, j] = _real(x, f"{path}[{i}][{j}]")
    return out


def _complex_matrix(obj, dim: int, path: str) -> np.ndarray:
    re = _matrix(_require(obj, "re", path), dim, f"{path}.re")
    im = _matrix(_require(obj, "im", path), dim, f"{path}.im")
    return re + 1j * im


def _dim(doc) -> int:
    dim = _require(doc, "dim", "")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise SchemaError("dim", "expected a positive integer")
    return dim


def state_set_from_dict(doc) -> StateSet:
    dim = _dim(doc)
    states = _require(doc, "states", "")
    if not isinstance(states, list) or not states:
        raise SchemaError("states", "expected a non-empty list")
    priors, dens = [], []
    for m, entry in enumerate(states):
        path = f"states[{m}]"
        priors.append(_real(_require(entry, "prior", path), f"{path}.prior"))
        dens.append(_complex_matrix(_require(entry, "density", path), dim, f"{path}.density"))
    return StateSet(np.array(priors), np.array(dens))


def povm_from_dict(doc) -> Povm:
    dim = _dim(doc)
    elements = _require(doc, "elements", "")
    if not isinstance(elements, list) or not elements:
        raise SchemaError("elements", "expected a non-empty list")
    mats, flags = [], []
    for m, entry in enumerate(elements):
        path = f"elements[{m}]"
        mats.append(_complex_matrix(entry, dim, path))
        flag = entry.get("inconclusive", False)
        if not isinstance(flag, bool):
            raise SchemaError(f"{path}.inconclusive", "expected true or false")
        flags.append(flag)
    if any(flags[:-1]):
        raise SchemaError("elements", "only the last element may be inconclusive")
    return Povm(np.array(mats), inconclusive=flags[-1])


def loads_state_set(text: str) -> StateSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("<document>", f"invalid JSON: {exc}") from exc
    return state_set_from_dict(doc)


def loads_povm(text: str) -> Povm:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("<document>", f"invalid JSON: {exc}") from exc
    return povm_from_dict(doc)


def save_state_set(states: StateSet, path: str | Path) -> None:
    Path(path).write_text(dumps_state_set(states))


def load_state_set(path: str | Path) -> StateSet:
    return loads_state_set(Path(path).read_text())


def save_povm(povm: Povm, path: str | Path) -> None:
    Path(path).write_text(dumps_povm(povm))


def load_povm(path: str | Path) -> Povm:
    return loads_povm(Path(path).read_text())
