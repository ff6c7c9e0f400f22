"""Binary joint tables p(A1, A2, B) and Simpson's paradox detection.

Cells are stored as a ``(2, 2, 2)`` array indexed ``[i, k, m]`` with
``i`` over A1 = (a1, ~a1), ``k`` over A2 = (a2, ~a2) and ``m`` over
B = (b, ~b).  Index 0 is always the "named" event (a1, a2, b).
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import AllZeroCounts, ZeroConditioningMargin

TOL = 1e-12

A1, A2, B = 0, 1, 2


class ParadoxStatus(str, Enum):
    NO_PARADOX = "NoParadox"
    AGGREGATE_LESS = "ParadoxAggregateLess"
    AGGREGATE_GREATER = "ParadoxAggregateGreater"

    @property
    def is_paradox(self):
        return self is not ParadoxStatus.NO_PARADOX


class Ordering(str, Enum):
    SD1 = "SD1"
    SD2 = "SD2"
    NONE = "None"


def sign(x, tol=TOL):
    """Three-valued sign with a dead band of width ``tol`` around zero."""
    if x > tol:
        return 1
    if x < -tol:
        return -1
    return 0


@dataclass(frozen=True)
class JointTable:
    """Exact joint distribution over three binary variables."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(2, 2, 2)
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("joint table cells must be finite and nonnegative")
        if abs(p.sum() - 1.0) > TOL:
            raise ValueError(f"joint table sums to {p.sum()!r}, expected 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_array(cls, arr, normalize=False):
        arr = np.asarray(arr, dtype=float).reshape(2, 2, 2)
        if normalize:
            total = arr.sum()
            if total <= 0:
                raise AllZeroCounts("table has no mass")
            arr = arr / total
        return cls(arr)

    def __eq__(self, other):
        return isinstance(other, JointTable) and np.array_equal(self.p, other.p)

    def __hash__(self):
        return hash(self.p.tobytes())

    def prob(self, a1=None, a2=None, b=None):
        """Marginal probability of an assignment; ``None`` marginalizes a variable."""
        idx = tuple(slice(None) if v is None else v for v in (a1, a2, b))
        return float(self.p[idx].sum())

    def conditional(self, a1=0, a2=None, b=None):
        """p(A1 = a1 | A2 = a2, B = b) for any subset of the givens."""
        denom = self.prob(None, a2, b)
        if denom <= 0:
            raise ZeroConditioningMargin(f"p(A2={a2}, B={b}) = 0")
        return self.prob(a1, a2, b) / denom

    def b_given_a2(self, b=0, a2=0):
        denom = self.prob(None, a2, None)
        if denom <= 0:
            raise ZeroConditioningMargin(f"p(A2={a2}) = 0")
        return self.prob(None, a2, b) / denom

    def fine_conditionals(self):
        """``[k, m]`` array of p(a1 | A2=k, B=m); all four margins must be positive."""
        margins = self.p.sum(axis=0)
        if np.any(margins <= 0):
            raise ZeroConditioningMargin("a (A2, B) margin has zero probability")
        return self.p[0] / margins

    def relabel(self, flip_a1=False, flip_a2=False, flip_b=False):
        """Swap the two values of any of the variables."""
        p = self.p
        if flip_a1:
            p = p[::-1, :, :]
        if flip_a2:
            p = p[:, ::-1, :]
        if flip_b:
            p = p[:, :, ::-1]
        return JointTable(p.copy())


def from_counts(counts):
    """Joint table from 8 nonnegative counts in ``[i, k, m]`` order."""
    c = np.asarray(counts, dtype=float).reshape(2, 2, 2)
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise ValueError("counts must be finite and nonnegative")
    total = c.sum()
    if total <= 0:
        raise AllZeroCounts("all counts are zero")
    p = c / total
    # absorb rounding so the unit-sum invariant holds exactly enough
    p[np.unravel_index(np.argmax(p), p.shape)] += 1.0 - p.sum()
    return JointTable(p)


def uniform_table():
    return JointTable(np.full((2, 2, 2), 0.125))


def conditional(table, a1=0, a2=None, b=None):
    return table.conditional(a1=a1, a2=a2, b=b)


@dataclass(frozen=True)
class ParadoxReport:
    status: ParadoxStatus
    aggregate_gap: float
    fine_gaps: tuple
    ordering_pattern: Ordering
    b_dependence_sign: float
    aggregate: tuple = ()
    fine: tuple = ()

    @property
    def is_paradox(self):
        return self.status.is_paradox

    def to_dict(self):
        return {
            "status": self.status.value,
            "aggregate_gap": self.aggregate_gap,
            "fine_gaps": list(self.fine_gaps),
            "ordering_pattern": self.ordering_pattern.value,
            "b_dependence_sign": self.b_dependence_sign,
            "aggregate": {"p(a1|a2)": self.aggregate[0], "p(a1|~a2)": self.aggregate[1]},
            "fine": {
                "p(a1|a2,b)": self.fine[0][0],
                "p(a1|~a2,b)": self.fine[1][0],
                "p(a1|a2,~b)": self.fine[0][1],
                "p(a1|~a2,~b)": self.fine[1][1],
            },
        }


def _ordering(fine, tol=TOL):
    # fine[k, m] = p(a1 | A2=k, B=m).  SD1/SD2 as written hold for the
    # orientation with positive fine gaps; the mirrored orientation is
    # matched by exchanging the roles of a2 and ~a2.
    g_b = fine[0, 0] - fine[1, 0]
    g_nb = fine[0, 1] - fine[1, 1]
    s = sign(g_b, tol)
    if s == 0 or sign(g_nb, tol) != s:
        return Ordering.NONE
    hi = 0 if s > 0 else 1
    lo = 1 - hi
    if fine[hi, 0] < fine[lo, 1] - tol:
        return Ordering.SD1
    if fine[hi, 1] < fine[lo, 0] - tol:
        return Ordering.SD2
    return Ordering.NONE


def classify(aggregate_gap, fine_gaps, tol=TOL):
    sa = sign(aggregate_gap, tol)
    s1, s2 = sign(fine_gaps[0], tol), sign(fine_gaps[1], tol)
    if sa < 0 and s1 > 0 and s2 > 0:
        return ParadoxStatus.AGGREGATE_LESS
    if sa > 0 and s1 < 0 and s2 < 0:
        return ParadoxStatus.AGGREGATE_GREATER
    return ParadoxStatus.NO_PARADOX


def detect_simpson(table, tol=TOL):
    """Classify a table as paradox-free or as one of the two paradox orientations.

    ``ParadoxAggregateLess`` is the orientation p(a1|a2) < p(a1|~a2) while
    a2 raises p(a1) inside both strata of B.  All inequalities are strict;
    a gap within ``tol`` of zero counts as a tie and rules out the paradox.
    """
    fine = table.fine_conditionals()
    agg = (table.conditional(0, a2=0), table.conditional(0, a2=1))
    aggregate_gap = agg[0] - agg[1]
    fine_gaps = (fine[0, 0] - fine[1, 0], fine[0, 1] - fine[1, 1])
    status = classify(aggregate_gap, fine_gaps, tol)
    dep = (table.b_given_a2(0, 0) - 0.5) * (table.b_given_a2(0, 1) - 0.5)
    return ParadoxReport(
        status=status,
        aggregate_gap=float(aggregate_gap),
        fine_gaps=(float(fine_gaps[0]), float(fine_gaps[1])),
        ordering_pattern=_ordering(fine, tol),
        b_dependence_sign=float(dep),
        aggregate=(float(agg[0]), float(agg[1])),
        fine=tuple(tuple(float(v) for v in row) for row in fine),
    )


@dataclass(frozen=True)
class Relabeling:
    flip_a1: bool = False
    flip_b: bool = False


def canonical_orientation(table, tol=TOL):
    """Relabel a paradox table into the ``AggregateLess`` orientation with
    p(a1|a2,~b) > p(a1|a2,b).

    Swapping a1 and ~a1 negates every gap; swapping b and ~b only exchanges
    the two strata.  Association signs in the returned table equal the
    original ones multiplied by ``-1`` when ``flip_a1`` is set.
    """
    report = detect_simpson(table, tol)
    if not report.is_paradox:
        raise ValueError("table does not exhibit the paradox")
    flip_a1 = report.status is ParadoxStatus.AGGREGATE_GREATER
    t = table.relabel(flip_a1=flip_a1)
    fine = t.fine_conditionals()
    flip_b = not fine[0, 1] > fine[0, 0]
    return t.relabel(flip_b=flip_b), Relabeling(flip_a1, flip_b)


@dataclass(frozen=True)
class NecessaryConditions:
    ordering: Ordering
    b_dependent: bool
    b_direction: int
    canonical_b_direction: int | None = None

    def to_dict(self):
        return {
            "ordering": self.ordering.value,
            "b_dependent": self.b_dependent,
            "b_direction": self.b_direction,
            "canonical_b_direction": self.canonical_b_direction,
        }


def necessary_conditions(table, tol=TOL):
    """Orderings of the four fine conditionals and the A2-B dependence.

    ``b_direction`` is the sign of p(b|a2) - p(b|~a2) in the table's own
    labels.  For paradox tables ``canonical_b_direction`` gives the same
    sign after :func:`canonical_orientation`; it is always +1 there.
    """
    fine = table.fine_conditionals()
    diff = table.b_given_a2(0, 0) - table.b_given_a2(0, 1)
    canonical = None
    if detect_simpson(table, tol).is_paradox:
        t, _ = canonical_orientation(table, tol)
        canonical = sign(t.b_given_a2(0, 0) - t.b_given_a2(0, 1), tol)
    return NecessaryConditions(
        ordering=_ordering(fine, tol),
        b_dependent=abs(diff) > tol,
        b_direction=sign(diff, tol),
        canonical_b_direction=canonical,
    )


@dataclass(frozen=True)
class AlternativeCriteria:
    barigelli: float
    rudas: float
    barigelli_sign: int
    rudas_sign: int

    def to_dict(self):
        return {
            "barigelli": self.barigelli,
            "barigelli_sign": self.barigelli_sign,
            "rudas": self.rudas,
            "rudas_sign": self.rudas_sign,
        }


def alternative_criteria(table, tol=TOL):
    """Retrodiction-style criteria that cannot flip under conditioning on B.

    barigelli = p(a2)p(a1|a2) - p(~a2)p(a1|~a2)
    rudas     = p(a2)[p(a1|a2) - p(~a1|a2)] - p(~a2)[p(a1|~a2) - p(~a1|~a2)]
    """
    pa2 = table.prob(a2=0)
    pna2 = table.prob(a2=1)
    c1 = table.conditional(0, a2=0)
    c0 = table.conditional(0, a2=1)
    barigelli = pa2 * c1 - pna2 * c0
    rudas = pa2 * (c1 - (1.0 - c1)) - pna2 * (c0 - (1.0 - c0))
    return AlternativeCriteria(
        barigelli=float(barigelli),
        rudas=float(rudas),
        barigelli_sign=sign(barigelli, tol),
        rudas_sign=sign(rudas, tol),
    )
