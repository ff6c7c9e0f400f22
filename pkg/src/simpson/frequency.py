"""How often random binary tables show Simpson's paradox.

Tables are drawn from a symmetric Dirichlet density over the 8 cells of
p(A1, A2, B).  Dirichlet vectors are produced as normalized independent
Gamma(alpha_k, 1) variates from numpy's ``Generator.standard_gamma`` on a
PCG64 bit generator (Marsaglia-Tsang, with the ``U**(1/alpha)`` boost for
alpha < 1).  Work runs in fixed chunks of 65536 draws; chunk ``j`` uses the
stream keyed by ``(seed, j)`` so totals do not depend on thread count.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .contingency import TOL, JointTable
from .errors import BudgetExceeded

_FREQ_STREAM = 10
_SAMPLER_STREAM = 11

MAX_DRAWS = 10**9


@dataclass(frozen=True)
class DirichletSpec:
    alphas: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in self.alphas)
        if len(a) < 2:
            raise ValueError("a Dirichlet density needs at least two components")
        if any(not v > 0 for v in a):
            raise ValueError("Dirichlet weights must be positive")
        object.__setattr__(self, "alphas", a)

    @property
    def n(self):
        return len(self.alphas)

    @classmethod
    def symmetric(cls, n, alpha=None):
        """Symmetric density; ``alpha`` defaults to 1/n."""
        return cls((1.0 / n if alpha is None else alpha,) * n)


def sample(spec, rng, size=None):
    """Draw probability vectors from ``spec``; shape ``(n,)`` or ``(size, n)``."""
    shape = (spec.n,) if size is None else (size, spec.n)
    g = rng.standard_gamma(np.asarray(spec.alphas), size=shape)
    total = g.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        q = g / total
    # every gamma draw underflowed: fall back to the uniform point
    return np.where(total > 0, q, 1.0 / spec.n)


def _tables(alpha, size, rng):
    return sample(DirichletSpec.symmetric(8, alpha), rng, size).reshape(size, 2, 2, 2)


def paradox_mask(p, tol=TOL):
    """Vectorized paradox test over ``p[n, i, k, m]``.

    Returns ``(paradox, zero_margin)``.  A paradox is a strict sign reversal
    between p(a1|a2) - p(a1|~a2) and the two B-stratified differences,
    which themselves agree; both orientations count.
    """
    margins = p.sum(axis=1)                     # [n, k, m]
    zero = np.any(margins <= 0, axis=(1, 2))
    with np.errstate(invalid="ignore", divide="ignore"):
        fine = p[:, 0] / margins                # p(a1 | k, m)
        agg = p[:, 0].sum(axis=2) / margins.sum(axis=2)
    g_agg = agg[:, 0] - agg[:, 1]
    g_b = fine[:, 0, 0] - fine[:, 1, 0]
    g_nb = fine[:, 0, 1] - fine[:, 1, 1]
    less = (g_agg < -tol) & (g_b > tol) & (g_nb > tol)
    greater = (g_agg > tol) & (g_b < -tol) & (g_nb < -tol)
    return (less | greater) & ~zero, zero


@dataclass(frozen=True)
class FrequencyEstimate:
    fraction: float
    stderr: float
    n_samples: int
    seed: int
    alpha: float = float("nan")
    n_paradox: int = 0
    n_zero_margin: int = 0

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "fraction": self.fraction,
            "stderr": self.stderr,
            "n_samples": self.n_samples,
            "n_paradox": self.n_paradox,
            "n_zero_margin": self.n_zero_margin,
            "seed": self.seed,
        }


def estimate_frequency(alpha, n_samples, seed=0, threads=1):
    """Fraction of Dirichlet(alpha, ..., alpha) tables that show the paradox.

    Tables with a zero (A2, B) margin cannot show it and are tallied in
    ``n_zero_margin``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")

    def run(j, size):
        rng = _rng.chunk_rng(seed, j, _FREQ_STREAM)
        hit, zero = paradox_mask(_tables(alpha, size, rng))
        return int(hit.sum()), int(zero.sum())

    parts = _rng.map_chunks(run, _rng.chunk_sizes(n_samples), threads)
    hits = sum(h for h, _ in parts)
    zeros = sum(z for _, z in parts)
    frac = hits / n_samples
    return FrequencyEstimate(
        fraction=frac,
        stderr=math.sqrt(frac * (1.0 - frac) / n_samples),
        n_samples=int(n_samples),
        seed=int(seed),
        alpha=float(alpha),
        n_paradox=hits,
        n_zero_margin=zeros,
    )


@dataclass
class ParadoxSample:
    tables: list
    draws: int

    @property
    def acceptance_rate(self):
        return len(self.tables) / self.draws if self.draws else float("nan")


def sample_paradox_tables(alpha, n_tables, seed=0, max_draws=MAX_DRAWS, return_stats=False):
    """Rejection-sample ``n_tables`` paradox tables from the symmetric Dirichlet."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    out = []
    draws = 0
    j = 0
    while len(out) < n_tables:
        if draws >= max_draws:
            raise BudgetExceeded(f"accepted {len(out)} of {n_tables} tables in {draws} draws")
        size = min(_rng.CHUNK_SIZE, max_draws - draws)
        p = _tables(alpha, size, _rng.chunk_rng(seed, j, _SAMPLER_STREAM))
        hit, _ = paradox_mask(p)
        idx = np.flatnonzero(hit)[: n_tables - len(out)]
        # count draws up to and including the last accepted one
        draws += int(idx[-1]) + 1 if len(out) + len(idx) == n_tables and len(idx) else size
        out.extend(JointTable(p[i] / p[i].sum()) for i in idx)
        j += 1
    if return_stats:
        return ParadoxSample(out, draws)
    return out
