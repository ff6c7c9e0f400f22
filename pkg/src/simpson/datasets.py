"""Labeled contingency data, coarse-graining of B, and bundled fixtures.

JSON layout::

    {"labels": {"A1": [a1, ~a1], "A2": [a2, ~a2], "B": [level, ...]},
     "cells": [{"a1": str, "a2": str, "b": str, "p": num}, ...],
     "provenance": str}

Cells may carry ``"count"`` instead of ``"p"``.  CSV files have the header
``a1,a2,b,p`` (or ``a1,a2,b,count``); value order of first appearance fixes
the labels, so the first row names a1, a2 and the first B level.
"""
import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .contingency import JointTable
from .errors import InconsistentData, InvalidPartition, NormalizationError, ParseError, SchemaError

NORM_TOL = 1e-6
RESIDUAL_TOL = 1e-3

FIXTURES = ("covid", "smoking_full", "smoking_coarse")


@dataclass(frozen=True)
class LabeledTable:
    """Values over A1 x A2 x B with B of any arity ``m >= 2``."""

    labels: dict
    values: np.ndarray
    kind: str = "p"
    provenance: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        labels = {k: list(self.labels[k]) for k in ("A1", "A2", "B")}
        if len(labels["A1"]) != 2 or len(labels["A2"]) != 2 or len(labels["B"]) < 2:
            raise SchemaError("A1 and A2 need two labels, B at least two")
        if v.shape != (2, 2, len(labels["B"])):
            raise SchemaError(f"values have shape {v.shape}, labels imply {(2, 2, len(labels['B']))}")
        if self.kind not in ("p", "count"):
            raise SchemaError(f"unknown value kind {self.kind!r}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise SchemaError("cell values must be finite and nonnegative")
        if self.kind == "p" and abs(v.sum() - 1.0) > NORM_TOL:
            raise NormalizationError(f"probabilities sum to {v.sum()!r}")
        if self.kind == "count" and v.sum() <= 0:
            raise NormalizationError("all counts are zero")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "labels", labels)

    @property
    def probabilities(self):
        return self.values / self.values.sum()

    @property
    def b_levels(self):
        return list(self.labels["B"])

    def b_marginals(self):
        return self.probabilities.sum(axis=(0, 1))

    def to_joint(self):
        if len(self.labels["B"]) != 2:
            raise SchemaError("B has more than two levels; coarse-grain it first")
        p = self.probabilities
        p = p / p.sum()
        return JointTable(p)

    def to_dict(self):
        key = self.kind
        cells = [
            {"a1": a1, "a2": a2, "b": b, key: _plain(self.values[i, k, m])}
            for i, a1 in enumerate(self.labels["A1"])
            for k, a2 in enumerate(self.labels["A2"])
            for m, b in enumerate(self.labels["B"])
        ]
        return {"labels": self.labels, "cells": cells, "provenance": self.provenance}


def _plain(x):
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2**53 else x


def from_joint(table, labels=None, provenance=""):
    labels = labels or {"A1": ["a1", "~a1"], "A2": ["a2", "~a2"], "B": ["b", "~b"]}
    return LabeledTable(labels, table.p, "p", provenance)


def _from_cells(labels, cells, provenance=""):
    if not isinstance(cells, list) or not cells:
        raise SchemaError("'cells' must be a non-empty list")
    kinds = {("p" if "p" in c else "count" if "count" in c else None) for c in cells}
    if None in kinds or len(kinds) != 1:
        raise SchemaError("every cell needs the same value key, 'p' or 'count'")
    kind = kinds.pop()
    try:
        idx = {var: {name: j for j, name in enumerate(labels[var])} for var in ("A1", "A2", "B")}
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"labels must name A1, A2 and B: {exc}") from None
    v = np.full((2, 2, len(idx["B"])), np.nan)
    for c in cells:
        try:
            pos = (idx["A1"][c["a1"]], idx["A2"][c["a2"]], idx["B"][c["b"]])
            v[pos] = float(c[kind])
        except KeyError as exc:
            raise SchemaError(f"cell {c} refers to unknown label {exc}") from None
        except (TypeError, ValueError):
            raise SchemaError(f"cell {c} has a non-numeric value") from None
    if np.isnan(v).any():
        raise SchemaError("missing cell(s) in table")
    return LabeledTable(labels, v, kind, provenance)


def loads_json(text):
    if not text.strip():
        raise ParseError("empty input")
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from None
    if not isinstance(d, dict) or "cells" not in d or "labels" not in d:
        raise SchemaError("expected an object with 'labels' and 'cells'")
    return _from_cells(d["labels"], d["cells"], d.get("provenance", ""))


def loads_csv(text):
    if not text.strip():
        raise ParseError("empty input")
    try:
        rows = list(csv.DictReader(io.StringIO(text)))
    except csv.Error as exc:
        raise ParseError(str(exc)) from None
    if not rows:
        raise ParseError("no data rows")
    fields = set(rows[0])
    if not {"a1", "a2", "b"} <= fields or not ({"p", "count"} & fields):
        raise SchemaError("CSV header must be a1,a2,b,p or a1,a2,b,count")
    key = "p" if "p" in fields else "count"
    labels = {"A1": [], "A2": [], "B": []}
    for r in rows:
        for var, col in (("A1", "a1"), ("A2", "a2"), ("B", "b")):
            if r[col] not in labels[var]:
                labels[var].append(r[col])
    cells = [{"a1": r["a1"], "a2": r["a2"], "b": r["b"], key: r[key]} for r in rows]
    return _from_cells(labels, cells)


def load(path, format=None):
    """Read a table from ``path``; ``format`` defaults to the file suffix."""
    path = Path(path)
    fmt = format or path.suffix.lstrip(".").lower()
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    if fmt == "json":
        return loads_json(text)
    if fmt == "csv":
        return loads_csv(text)
    raise ParseError(f"unknown format {fmt!r}")


def dumps_csv(table):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a1", "a2", "b", table.kind])
    for c in table.to_dict()["cells"]:
        w.writerow([c["a1"], c["a2"], c["b"], repr(float(c[table.kind]))])
    return buf.getvalue()


def save(table, path, format=None):
    path = Path(path)
    fmt = format or path.suffix.lstrip(".").lower()
    if fmt == "json":
        # repr-precision floats round-trip exactly through json
        path.write_text(json.dumps(table.to_dict(), indent=2) + "\n")
    elif fmt == "csv":
        path.write_text(dumps_csv(table))
    else:
        raise ParseError(f"unknown format {fmt!r}")


def load_fixture(name):
    """One of the bundled fixtures: ``covid``, ``smoking_full`` or ``smoking_coarse``."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {FIXTURES}")
    text = resources.files("simpson").joinpath("data", f"{name}.json").read_text()
    return loads_json(text)


# -- coarse-graining -----------------------------------------------------------


def _level_indices(table, block):
    levels = table.b_levels
    out = set()
    for b in block:
        if isinstance(b, (int, np.integer)) and not isinstance(b, bool):
            if not 0 <= b < len(levels):
                raise InvalidPartition(f"level index {b} out of range")
            out.add(int(b))
        elif b in levels:
            out.add(levels.index(b))
        else:
            raise InvalidPartition(f"unknown B level {b!r}")
    return out


def coarse_grain(table, grouping, labels=("b", "~b")):
    """Merge B levels into two blocks ``grouping = (block_b, block_not_b)``.

    Blocks may name levels by label or by index.  The second block may be
    omitted, in which case it is the complement of the first.
    """
    if isinstance(grouping, (str, bytes)) or len(grouping) not in (1, 2):
        raise InvalidPartition("grouping must hold one or two blocks")
    first = _level_indices(table, grouping[0])
    n = len(table.b_levels)
    second = _level_indices(table, grouping[1]) if len(grouping) == 2 else set(range(n)) - first
    if not first or not second:
        raise InvalidPartition("both blocks must be non-empty")
    if first & second or first | second != set(range(n)):
        raise InvalidPartition("blocks must be disjoint and cover every B level")
    p = table.probabilities
    coarse = np.stack([p[:, :, sorted(first)].sum(axis=2), p[:, :, sorted(second)].sum(axis=2)], axis=2)
    return JointTable(coarse / coarse.sum())


def two_block_partitions(levels):
    """Every unordered split of ``levels`` into two non-empty blocks, first block holding ``levels[0]``."""
    levels = list(levels)
    first, rest = levels[0], levels[1:]
    for r in range(len(rest) + 1):
        for extra in itertools.combinations(rest, r):
            block = [first, *extra]
            other = [x for x in levels if x not in block]
            if other:
                yield block, other


# -- reconstruction from published conditionals -------------------------------


@dataclass
class Reconstruction:
    table: JointTable
    b_given_a2: tuple
    p_a2: float
    residuals: dict = field(default_factory=dict)

    @property
    def max_residual(self):
        return max((abs(v) for v in self.residuals.values()), default=0.0)


def reconstruct_joint(fine, aggregate=None, b_given_a2=None, p_b=None, p_a2=None, tol=RESIDUAL_TOL):
    """Assemble p(A1, A2, B) from published conditionals.

    ``fine`` is ``[[p(a1|a2,b), p(a1|a2,~b)], [p(a1|~a2,b), p(a1|~a2,~b)]]``.
    The mixing weights p(b|a2), p(b|~a2) come from ``b_given_a2`` or are
    solved from ``aggregate = (p(a1|a2), p(a1|~a2))`` by total probability;
    p(a2) comes from ``p_a2`` or is solved from ``p_b``.  Every constraint
    given beyond what is needed is checked and its residual reported;
    :class:`InconsistentData` is raised when one exceeds ``tol``.
    """
    fine = np.asarray(fine, dtype=float)
    if fine.shape != (2, 2) or np.any(fine < 0) or np.any(fine > 1):
        raise InconsistentData("fine conditionals must be a 2x2 array of probabilities")
    residuals = {}
    names = ("a2", "~a2")

    if b_given_a2 is not None:
        w = np.asarray(b_given_a2, dtype=float)
    elif aggregate is not None:
        agg = np.asarray(aggregate, dtype=float)
        span = fine[:, 0] - fine[:, 1]
        if np.any(np.abs(span) < 1e-12):
            raise InconsistentData("fine conditionals coincide; p(b|a2) is not identified")
        w = (agg - fine[:, 1]) / span
    else:
        raise InconsistentData("need b_given_a2 or aggregate conditionals")
    if np.any(w < -tol) or np.any(w > 1 + tol):
        raise InconsistentData(f"implied p(b|A2) = {w} outside [0, 1]")
    w = np.clip(w, 0.0, 1.0)
    if b_given_a2 is not None and aggregate is not None:
        mixed = fine[:, 0] * w + fine[:, 1] * (1.0 - w)
        for k in range(2):
            residuals[f"p(a1|{names[k]})"] = float(mixed[k] - aggregate[k])

    if p_a2 is None:
        if p_b is None:
            raise InconsistentData("need p_a2 or p_b")
        if abs(w[0] - w[1]) < 1e-12:
            raise InconsistentData("p(b|a2) = p(b|~a2); p(a2) is not identified by p(b)")
        p_a2 = (p_b - w[1]) / (w[0] - w[1])
        if not -tol <= p_a2 <= 1 + tol:
            raise InconsistentData(f"implied p(a2) = {p_a2:.4f} outside [0, 1]")
        p_a2 = min(max(p_a2, 0.0), 1.0)
    elif p_b is not None:
        residuals["p(b)"] = float(p_a2 * w[0] + (1 - p_a2) * w[1] - p_b)

    bad = {k: v for k, v in residuals.items() if abs(v) > tol}
    if bad:
        raise InconsistentData(f"published values disagree beyond {tol}: {bad}")

    pk = np.array([p_a2, 1.0 - p_a2])
    pb = np.stack([w, 1.0 - w], axis=1)          # [k, m]
    p = np.empty((2, 2, 2))
    p[0] = pk[:, None] * pb * fine
    p[1] = pk[:, None] * pb * (1.0 - fine)
    p = p / p.sum()
    return Reconstruction(JointTable(p), (float(w[0]), float(w[1])), float(p_a2), residuals)


def total_probability_residuals(fine, b_given_a2, aggregate):
    """p(a1|k) - sum_m p(a1|k,m) p(m|k) for both values of A2."""
    fine = np.asarray(fine, dtype=float)
    w = np.asarray(b_given_a2, dtype=float)
    mixed = fine[:, 0] * w + fine[:, 1] * (1.0 - w)
    return tuple(float(abs(m - a)) for m, a in zip(mixed, aggregate))

