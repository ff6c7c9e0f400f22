"""Common causes C of (A1, A2) and B: inversion, composition, sign scans.

A cause C makes A = (A1, A2) and B conditionally independent, so that

    p(A1, A2, B) = sum_c p(A1, A2, c) p(B | c).

For binary C the family p(B|C) is a 2x2 column-stochastic kernel fixed by
two numbers, p(b|c) and p(~b|~c).  Given the observed table and such a
kernel the cause is unique whenever the kernel is invertible; it is only
realizable when every recovered probability lies in [0, 1].
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _rng
from .contingency import TOL, JointTable, canonical_orientation, detect_simpson, sign
from .errors import InvalidCause, NotAParadox, NotFound, SingularKernel, ZeroConditioningMargin

SINGULAR_TOL = 1e-10
COMPOSE_TOL = 1e-6

_SCAN_STREAM = 1
_SEARCH_STREAM = 2


@dataclass(frozen=True)
class BKernel:
    p_b_given_c: float
    p_bbar_given_cbar: float

    def __post_init__(self):
        for v in (self.p_b_given_c, self.p_bbar_given_cbar):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"kernel entry {v!r} outside [0, 1]")

    @property
    def det(self):
        return self.p_b_given_c + self.p_bbar_given_cbar - 1.0

    def matrix(self):
        """Rows B = (b, ~b), columns C = (c, ~c)."""
        k11, k22 = self.p_b_given_c, self.p_bbar_given_cbar
        return np.array([[k11, 1.0 - k22], [1.0 - k11, k22]])


@dataclass(frozen=True)
class CauseView:
    p_a1_given_a2c: float
    p_a1_given_a2cbar: float
    p_a1_given_abar2c: float
    p_a1_given_abar2cbar: float
    p_c_given_a2: float
    p_c_given_abar2: float

    def conditionals(self):
        """``[k, c]`` array of p(a1 | A2=k, C=c)."""
        return np.array([
            [self.p_a1_given_a2c, self.p_a1_given_a2cbar],
            [self.p_a1_given_abar2c, self.p_a1_given_abar2cbar],
        ])

    def c_given_a2(self):
        return np.array([self.p_c_given_a2, self.p_c_given_abar2])

    def fields(self):
        return (self.p_a1_given_a2c, self.p_a1_given_a2cbar, self.p_a1_given_abar2c,
                self.p_a1_given_abar2cbar, self.p_c_given_a2, self.p_c_given_abar2)

    def on_boundary(self, tol=TOL):
        return any(v <= tol or v >= 1.0 - tol for v in self.fields())

    def reconstruct(self, kernel):
        """Mix the view back through ``kernel``: ``[k, m]`` array of p(a1 | A2=k, B=m)."""
        K = kernel.matrix()
        pc = np.stack([self.c_given_a2(), 1.0 - self.c_given_a2()], axis=1)
        cond = self.conditionals()
        joint_b = (cond * pc) @ K.T
        pb = pc @ K.T
        return joint_b / pb


def _invert_arrays(cond_ikm, k11, k22):
    """Vectorized inversion over a batch of kernels.

    ``cond_ikm[i, k, m]`` is p(A1=i, B=m | A2=k).  Returns
    ``x[n, i, k, c]`` = p(A1=i, C=c | A2=k) together with the determinant.
    """
    k11 = np.asarray(k11, dtype=float)[..., None, None]
    k22 = np.asarray(k22, dtype=float)[..., None, None]
    d = k11 + k22 - 1.0
    pb, pnb = cond_ikm[..., 0], cond_ikm[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        x_c = (k22 * pb - (1.0 - k22) * pnb) / d
        x_nc = (k11 * pnb - (1.0 - k11) * pb) / d
    return np.stack([x_c, x_nc], axis=-1), d[..., 0, 0]


def _cond_given_a2(table):
    pk = table.p.sum(axis=(0, 2))
    if np.any(pk <= 0):
        raise ZeroConditioningMargin("p(a2) or p(~a2) is zero")
    return table.p / pk[None, :, None]


def _view_arrays(x):
    """From ``x[..., i, k, c]`` to p(a1|k,c) ``[..., k, c]`` and p(c|k) ``[..., k, c]``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        pc = x.sum(axis=-3)
        pa1 = x[..., 0, :, :] / pc
    return pa1, pc


def invert(table, kernel, tol=TOL):
    """Recover the binary cause implied by ``kernel`` for ``table``.

    Only p(A1, B | A2) enters, so the marginal p(A2) plays no role.  Raises
    :class:`SingularKernel` when |D| <= 1e-10 and :class:`InvalidCause` when
    any recovered probability leaves [0, 1] by more than ``tol``.
    """
    if abs(kernel.det) <= SINGULAR_TOL:
        raise SingularKernel(f"kernel determinant {kernel.det:.3g} is singular")
    x, _ = _invert_arrays(_cond_given_a2(table), kernel.p_b_given_c, kernel.p_bbar_given_cbar)
    pa1, pc = _view_arrays(x)
    if np.any(pc <= 0):
        raise InvalidCause("a cause level has zero or negative mass")
    vals = np.concatenate([pa1.ravel(), pc[:, 0]])
    if np.any(vals < -tol) or np.any(vals > 1.0 + tol):
        raise InvalidCause("kernel is not realizable for this table")
    vals = np.clip(vals, 0.0, 1.0)
    return CauseView(*(float(v) for v in vals))


def association_sign(view, tol=TOL):
    """Signs of p(a1|a2,c) - p(a1|~a2,c) for c and for ~c."""
    cond = view.conditionals()
    return sign(cond[0, 0] - cond[1, 0], tol), sign(cond[0, 1] - cond[1, 1], tol)


@dataclass(frozen=True)
class CauseModel:
    """Joint p(A1, A2, C) of shape ``(2, 2, L)`` and kernel p(B|C) of shape ``(2, L)``."""

    joint: np.ndarray
    kernel: np.ndarray

    def __post_init__(self):
        joint = np.array(self.joint, dtype=float)
        kernel = np.array(self.kernel, dtype=float)
        if joint.ndim != 3 or joint.shape[:2] != (2, 2) or joint.shape[2] < 2:
            raise ValueError(f"joint must have shape (2, 2, L>=2), got {joint.shape}")
        if kernel.shape != (2, joint.shape[2]):
            raise ValueError(f"kernel must have shape (2, {joint.shape[2]}), got {kernel.shape}")
        if np.any(joint < 0) or abs(joint.sum() - 1.0) > TOL:
            raise ValueError("joint p(A1, A2, C) is not a distribution")
        if np.any(kernel < 0) or np.any(np.abs(kernel.sum(axis=0) - 1.0) > TOL):
            raise ValueError("kernel columns are not distributions over B")
        joint.setflags(write=False)
        kernel.setflags(write=False)
        object.__setattr__(self, "joint", joint)
        object.__setattr__(self, "kernel", kernel)

    @property
    def levels(self):
        return self.joint.shape[2]

    @classmethod
    def binary(cls, joint, kernel):
        return cls(joint, kernel.matrix())

    def binary_kernel(self):
        if self.levels != 2:
            raise ValueError("only binary causes have a BKernel")
        return BKernel(float(self.kernel[0, 0]), float(self.kernel[1, 1]))

    def conditionals(self):
        """p(a1 | A2=k, C=c) as a ``(2, L)`` array."""
        pa1, _ = _view_arrays(self.joint)
        return pa1

    def c_given_a2(self):
        pkc = self.joint.sum(axis=0)
        return pkc / pkc.sum(axis=1, keepdims=True)

    def association_gaps(self):
        cond = self.conditionals()
        return cond[0] - cond[1]

    def to_dict(self):
        return {
            "levels": self.levels,
            "joint": self.joint.tolist(),
            "kernel": self.kernel.tolist(),
            "p_a1_given_a2_c": self.conditionals().tolist(),
            "association_gaps": self.association_gaps().tolist(),
        }


def compose(model):
    """Marginalize the cause out: p(A1, A2, B) = sum_c p(A1, A2, c) p(B|c)."""
    p = np.einsum("ikc,mc->ikm", model.joint, model.kernel)
    p[np.unravel_index(np.argmax(p), p.shape)] += 1.0 - p.sum()
    return JointTable(np.clip(p, 0.0, None))


# -- binary-cause scans --------------------------------------------------------


def kernel_scan(table, k11, k22, tol=TOL):
    """Evaluate many binary kernels on one table at once.

    Returns a dict of arrays: ``valid`` (every recovered field in [0, 1]
    within ``tol``), ``boundary`` (valid with some field within ``tol`` of
    0 or 1), ``singular`` and the two association gaps.
    """
    k11 = np.atleast_1d(np.asarray(k11, dtype=float))
    k22 = np.atleast_1d(np.asarray(k22, dtype=float))
    x, d = _invert_arrays(_cond_given_a2(table), k11, k22)
    pa1, pc = _view_arrays(x)
    singular = np.abs(d) <= SINGULAR_TOL
    fields = np.concatenate([pa1.reshape(len(k11), -1), pc[:, :, 0]], axis=1)
    with np.errstate(invalid="ignore"):
        inside = np.all((fields >= -tol) & (fields <= 1.0 + tol), axis=1)
        positive = np.all(pc > 0, axis=(1, 2))
        valid = ~singular & positive & inside
        boundary = valid & np.any((fields <= tol) | (fields >= 1.0 - tol), axis=1)
    with np.errstate(invalid="ignore"):
        gaps = pa1[:, 0, :] - pa1[:, 1, :]
    return {
        "k11": k11,
        "k22": k22,
        "valid": valid,
        "boundary": boundary,
        "singular": singular,
        "gap_c": gaps[:, 0],
        "gap_cbar": gaps[:, 1],
    }


@dataclass
class ScanResult:
    n_kernels: int
    n_valid: int
    n_boundary: int
    n_sign_agree: int
    fine_sign: int
    seed: int | None
    counterexamples: list = field(default_factory=list)
    boundary_counterexamples: list = field(default_factory=list)
    records: dict | None = None

    @property
    def holds(self):
        return not self.counterexamples and not self.boundary_counterexamples

    def to_dict(self):
        return {
            "n_kernels": self.n_kernels,
            "n_valid": self.n_valid,
            "n_boundary": self.n_boundary,
            "n_sign_agree": self.n_sign_agree,
            "fine_sign": self.fine_sign,
            "seed": self.seed,
            "counterexamples": self.counterexamples,
            "boundary_counterexamples": self.boundary_counterexamples,
            "all_agree": self.holds,
        }


def _require_paradox(table):
    report = detect_simpson(table)
    if not report.is_paradox:
        raise NotAParadox("table does not exhibit Simpson's paradox")
    return report


def _summarize(scan, relabel, tol=TOL):
    """Reduce a canonical-frame scan to counts, mapping kernels back to the input frame."""
    valid = scan["valid"]
    # canonical fine sign is +1 by construction
    agree = valid & (scan["gap_c"] > tol) & (scan["gap_cbar"] > tol)
    bad = valid & ~agree
    k11, k22 = scan["k11"], scan["k22"]
    if relabel.flip_b:
        k11, k22 = 1.0 - k11, 1.0 - k22
    flip = -1.0 if relabel.flip_a1 else 1.0
    cex, bcex = [], []
    for j in np.flatnonzero(bad):
        rec = {
            "p_b_given_c": float(k11[j]),
            "p_bbar_given_cbar": float(k22[j]),
            "gap_c": float(flip * scan["gap_c"][j]),
            "gap_cbar": float(flip * scan["gap_cbar"][j]),
        }
        (bcex if scan["boundary"][j] else cex).append(rec)
    return int(valid.sum()), int(scan["boundary"].sum()), int(agree.sum()), cex, bcex


def theorem1_scan(table, n_kernels, seed=0, threads=1, keep_records=False):
    """Sample kernels uniformly on [0, 1]^2 and check every realizable one.

    Each realizable binary cause must order p(a1|a2,c) and p(a1|~a2,c) the
    same way as the B-conditioned probabilities, for both values of c.
    The scan runs in the canonical orientation of the table; reported
    kernels and gaps are mapped back to the input labels.
    """
    report = _require_paradox(table)
    canon, relabel = canonical_orientation(table)
    sizes = _rng.chunk_sizes(n_kernels)

    def run(j, size):
        rng = _rng.chunk_rng(seed, j, _SCAN_STREAM)
        k = rng.random((size, 2))
        return kernel_scan(canon, k[:, 0], k[:, 1])

    parts = _rng.map_chunks(run, sizes, threads)
    if parts:
        scan = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}
    else:
        scan = kernel_scan(canon, np.empty(0), np.empty(0))
    fine_sign = sign(report.fine_gaps[0])
    n_valid, n_boundary, n_agree, cex, bcex = _summarize(scan, relabel)
    records = None
    if keep_records:
        flip = -1.0 if relabel.flip_a1 else 1.0
        k11, k22 = scan["k11"], scan["k22"]
        if relabel.flip_b:
            k11, k22 = 1.0 - k11, 1.0 - k22
        records = {
            "p_b_given_c": k11,
            "p_bbar_given_cbar": k22,
            "valid": scan["valid"],
            "boundary": scan["boundary"],
            "gap_c": flip * scan["gap_c"],
            "gap_cbar": flip * scan["gap_cbar"],
        }
    return ScanResult(int(n_kernels), n_valid, n_boundary, n_agree, fine_sign, seed, cex, bcex, records)


def theorem1_grid(table, step=0.001):
    """Deterministic grid version of :func:`theorem1_scan` over (p(b|c), p(~b|~c))."""
    report = _require_paradox(table)
    canon, relabel = canonical_orientation(table)
    n = int(round(1.0 / step))
    axis = np.linspace(0.0, 1.0, n + 1)
    k11, k22 = np.meshgrid(axis, axis, indexing="ij")
    scan = kernel_scan(canon, k11.ravel(), k22.ravel())
    n_valid, n_boundary, n_agree, cex, bcex = _summarize(scan, relabel)
    return ScanResult(k11.size, n_valid, n_boundary, n_agree, sign(report.fine_gaps[0]), None, cex, bcex)


# -- ternary search ------------------------------------------------------------


class Target(str, Enum):
    AGGREGATE = "aggregate"
    FINE = "fine"
    MIXED = "mixed"


def _fiber(mu, pik, q, lam, eps=1e-12):
    """Exact causes with kernel b-probabilities ``q`` reproducing the table.

    For fixed (i, k) the distribution w over C must have mean of ``q`` equal
    to mu[i, k] = p(b | A1=i, A2=k).  Those w form a segment whose ends are
    supported on two levels each; ``lam[i, k]`` picks a point on it.
    Returns ``x[n, i, k, c]`` = p(A1=i, A2=k, C=c), NaN where infeasible.
    """
    n, L = q.shape
    order = np.argsort(q, axis=1)
    inv = np.argsort(order, axis=1)
    qs = np.take_along_axis(q, order, axis=1)
    lo, mid, hi = qs[:, 0], qs[:, 1], qs[:, 2]
    x = np.full((n, 2, 2, L), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(2):
            for k in range(2):
                m = mu[i, k]
                ok = (lo <= m) & (m <= hi) & (hi - lo > eps)
                e1 = np.zeros((n, 3))
                t1 = (m - lo) / (hi - lo)
                e1[:, 0], e1[:, 2] = 1.0 - t1, t1
                below = m <= mid
                t2 = np.where(below, (m - lo) / (mid - lo), (m - mid) / (hi - mid))
                t2 = np.where(np.isfinite(t2), t2, t1)
                e2 = np.zeros((n, 3))
                e2[:, 0] = np.where(below, 1.0 - t2, 0.0)
                e2[:, 1] = np.where(below, t2, 1.0 - t2)
                e2[:, 2] = np.where(below, 0.0, t2)
                w = lam[:, i, k, None] * e1 + (1.0 - lam[:, i, k, None]) * e2
                w = np.clip(w, 0.0, 1.0)
                w = np.take_along_axis(w, inv, axis=1)
                x[:, i, k, :] = np.where(ok[:, None], pik[i, k] * w, np.nan)
    return x


def _score(x, target, agg_sign, fine_sign, min_mass=1e-9):
    with np.errstate(divide="ignore", invalid="ignore"):
        pkc = x.sum(axis=1)
        pa1 = x[:, 0] / pkc
        gaps = pa1[:, 0] - pa1[:, 1]
        if target is Target.AGGREGATE:
            s = np.min(agg_sign * gaps, axis=1)
        elif target is Target.FINE:
            s = np.min(fine_sign * gaps, axis=1)
        else:
            s = np.minimum(np.max(gaps, axis=1), -np.min(gaps, axis=1))
        bad = ~np.all(pkc > min_mass, axis=(1, 2)) | ~np.isfinite(s)
    return np.where(bad, -np.inf, s), gaps


@dataclass
class SearchResult:
    model: CauseModel
    gaps: np.ndarray
    target: Target
    evaluations: int
    restart: int
    seed: int
    composition_error: float

    def to_dict(self):
        d = self.model.to_dict()
        d.update({
            "target": self.target.value,
            "evaluations": self.evaluations,
            "restart": self.restart,
            "seed": self.seed,
            "composition_error": self.composition_error,
        })
        return d


def search_ternary(table, target, budget=100_000, seed=0, levels=3, margin=1e-9,
                   batch=256, steps=(0.2, 0.05, 0.01, 0.002)):
    """Random-restart local search for a three-level cause with a given sign pattern.

    Candidates are parameterized so that composition reproduces ``table``
    exactly; the search only has to move the per-level association signs
    into the ``target`` pattern with every gap clear of zero by ``margin``.
    Raises :class:`NotFound` once ``budget`` candidate evaluations are spent.
    """
    if levels != 3:
        raise ValueError("only three-level causes are searched")
    target = Target(target)
    report = _require_paradox(table)
    agg_sign = sign(report.aggregate_gap)
    fine_sign = sign(report.fine_gaps[0])
    pik = table.p.sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        mu = np.where(pik > 0, table.p[..., 0] / pik, 0.5)

    used = 0
    restart = 0
    while used < budget:
        rng = _rng.chunk_rng(seed, restart, _SEARCH_STREAM)
        size = min(batch, budget - used)
        q = rng.random((size, 3))
        lam = rng.random((size, 2, 2))
        score, _ = _score(_fiber(mu, pik, q, lam), target, agg_sign, fine_sign)
        used += size
        best = int(np.argmax(score))
        bq, blam, bs = q[best], lam[best], score[best]
        for step in steps:
            if bs > margin or used >= budget or not np.isfinite(bs):
                break
            for _ in range(8):
                size = min(batch // 4, budget - used)
                if size <= 0:
                    break
                cq = np.clip(bq + step * rng.standard_normal((size, 3)), 0.0, 1.0)
                cl = np.clip(blam + step * rng.standard_normal((size, 2, 2)), 0.0, 1.0)
                s, _ = _score(_fiber(mu, pik, cq, cl), target, agg_sign, fine_sign)
                used += size
                j = int(np.argmax(s))
                if s[j] > bs:
                    bq, blam, bs = cq[j], cl[j], s[j]
                if bs > margin:
                    break
        if bs > margin:
            x = _fiber(mu, pik, bq[None], blam[None])[0]
            x = np.clip(x, 0.0, None)
            x = x / x.sum()
            model = CauseModel(x, np.stack([bq, 1.0 - bq]))
            err = float(np.max(np.abs(compose(model).p - table.p)))
            if err <= COMPOSE_TOL:
                return SearchResult(model, model.association_gaps(), target, used, restart, seed, err)
        restart += 1
    raise NotFound(f"no {target.value} cause found within {budget} evaluations")
