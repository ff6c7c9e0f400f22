"""Gaussian common-cause models and the continuous form of the paradox.

A zero-mean Gaussian cause ``x ~ N(0, covX)`` drives ``y = (a, b)`` through
``y | x ~ N(coupling @ x, Q)`` with block-diagonal ``Q = diag(covA, covB)``.
Then

    <y y^T>       = Q + coupling covX coupling^T
    cov(a | b)    = covA + J - K (covB + L)^{-1} K^T
    cov(a | x)    = covA

where J, K, L are the blocks of ``coupling covX coupling^T``.
"""
import json
from dataclasses import dataclass

import numpy as np

from . import _rng
from .contingency import TOL, ParadoxStatus, classify
from .errors import DegenerateB, DimensionMismatch, IllConditionedBlock, NotPositiveDefinite

SPD_RTOL = 1e-10
MAX_COND = 1e12
MAX_DIM = 64

_MINIMAL_STREAM = 20
_MC_STREAM = 21
_IDENTITY_STREAM = 22


def check_spd(m, name="matrix"):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(m).max())):
        raise NotPositiveDefinite(f"{name} is not symmetric")
    w = np.linalg.eigvalsh(m)
    if w[0] <= SPD_RTOL * max(w[-1], 0.0) or w[-1] <= 0:
        raise NotPositiveDefinite(f"{name} is not positive definite (eigenvalues {w})")
    return m


@dataclass(frozen=True)
class GaussianCauseModel:
    covA: np.ndarray
    covB: np.ndarray
    covX: np.ndarray
    coupling: np.ndarray

    def __post_init__(self):
        mats = {}
        for name in ("covA", "covB", "covX"):
            m = np.atleast_2d(np.array(getattr(self, name), dtype=float))
            mats[name] = check_spd(m, name)
        c = np.atleast_2d(np.array(self.coupling, dtype=float))
        nA, nB, nX = (mats[n].shape[0] for n in ("covA", "covB", "covX"))
        if c.shape != (nA + nB, nX):
            raise DimensionMismatch(f"coupling must be {(nA + nB, nX)}, got {c.shape}")
        if max(nA + nB, nX) > MAX_DIM:
            raise DimensionMismatch(f"dimensions above {MAX_DIM} are not supported")
        mats["coupling"] = c
        for name, m in mats.items():
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @property
    def nA(self):
        return self.covA.shape[0]

    @property
    def nB(self):
        return self.covB.shape[0]

    @property
    def nX(self):
        return self.covX.shape[0]

    def Q(self):
        nA, nB = self.nA, self.nB
        q = np.zeros((nA + nB, nA + nB))
        q[:nA, :nA] = self.covA
        q[nA:, nA:] = self.covB
        return q

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("covA", "covB", "covX", "coupling")}

    @classmethod
    def from_dict(cls, d):
        missing = {"covA", "covB", "covX", "coupling"} - set(d)
        if missing:
            raise DimensionMismatch(f"model is missing {sorted(missing)}")
        return cls(d["covA"], d["covB"], d["covX"], d["coupling"])

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def sample(self, n, rng):
        """Draw ``n`` rows of ``y = (a, b)`` by first drawing the cause."""
        x = rng.multivariate_normal(np.zeros(self.nX), self.covX, size=n, method="cholesky")
        noise = rng.multivariate_normal(np.zeros(self.nA + self.nB), self.Q(), size=n, method="cholesky")
        return x @ self.coupling.T + noise


def marginal_covariance(model):
    """<y y^T> = Q + coupling covX coupling^T."""
    c = model.coupling
    m = model.Q() + c @ model.covX @ c.T
    return 0.5 * (m + m.T)


def _blocks(model):
    ccc = model.coupling @ model.covX @ model.coupling.T
    nA = model.nA
    return ccc[:nA, :nA], ccc[:nA, nA:], ccc[nA:, nA:]


def conditional_cov_a_given_b(model):
    """Covariance of a given b: covA + J - K (covB + L)^{-1} K^T."""
    J, K, L = _blocks(model)
    bl = model.covB + L
    if np.linalg.cond(bl) >= MAX_COND:
        raise IllConditionedBlock("covB + L is numerically singular")
    m = model.covA + J - K @ np.linalg.solve(bl, K.T)
    return 0.5 * (m + m.T)


def schur_complement(m, n):
    """m11 - m12 m22^{-1} m21 for the leading ``n x n`` block."""
    m = np.asarray(m, dtype=float)
    return m[:n, :n] - m[:n, n:] @ np.linalg.solve(m[n:, n:], m[n:, :n])


def conditional_cov_via_precision(model):
    """Same quantity as :func:`conditional_cov_a_given_b`, read off the precision matrix.

    The leading block of the inverse of a block matrix is the inverse of its
    Schur complement, so inverting that block returns the conditional covariance.
    """
    prec = np.linalg.inv(marginal_covariance(model))
    m = np.linalg.inv(prec[: model.nA, : model.nA])
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class ContinuousReport:
    status: ParadoxStatus
    marginal: float
    conditional: float

    @property
    def is_paradox(self):
        return self.status.is_paradox

    def to_dict(self):
        return {
            "status": self.status.value,
            "paradox": self.is_paradox,
            "marginal_cov_a1a2": self.marginal,
            "b_conditional_cov_a1a2": self.conditional,
        }


def detect_continuous_simpson(cov3, tol=TOL):
    """Sign reversal between cov(a1, a2) and cov(a1, a2 | b) for a 3x3 covariance over (a1, a2, b)."""
    cov3 = np.asarray(cov3, dtype=float)
    if cov3.shape != (3, 3):
        raise DimensionMismatch(f"expected a 3x3 covariance, got {cov3.shape}")
    if cov3[2, 2] <= 1e-12 * np.trace(cov3):
        raise DegenerateB("variance of b is zero")
    check_spd(cov3, "cov3")
    marg = cov3[0, 1]
    cond = cov3[0, 1] - cov3[0, 2] * cov3[1, 2] / cov3[2, 2]
    # same orientation naming as the discrete report
    status = classify(marg, (cond, cond), tol)
    return ContinuousReport(status, float(marg), float(cond))


@dataclass(frozen=True)
class CovarianceTriple:
    marginal_a1a2: float
    b_conditional_a1a2: float
    x_conditional_a1a2: float
    epsilon: float

    @property
    def paradox(self):
        return self.marginal_a1a2 * self.b_conditional_a1a2 < 0

    @property
    def fine_sign_agrees(self):
        """True when the cause-conditioned sign matches the b-conditioned one."""
        return np.sign(self.x_conditional_a1a2) == np.sign(self.b_conditional_a1a2)

    def to_dict(self):
        return {
            "marginal_a1a2": self.marginal_a1a2,
            "b_conditional_a1a2": self.b_conditional_a1a2,
            "x_conditional_a1a2": self.x_conditional_a1a2,
            "epsilon": self.epsilon,
            "paradox": bool(self.paradox),
            "x_sign_matches_b_conditional": bool(self.fine_sign_agrees),
        }


def minimal_case(model):
    """Closed forms for two scalar a's, scalar b and scalar cause.

    With eps = covB / (covB + c31^2 covX) in (0, 1]:
    marginal = A12 + c11 c21 covX, b-conditional = A12 + c11 c21 covX eps.
    """
    if (model.nA, model.nB, model.nX) != (2, 1, 1):
        raise DimensionMismatch("minimal case needs nA=2, nB=1, nX=1")
    a12 = float(model.covA[0, 1])
    c11, c21, c31 = (float(v) for v in model.coupling[:, 0])
    s = float(model.covX[0, 0])
    b = float(model.covB[0, 0])
    eps = b / (b + c31 * c31 * s)
    shared = c11 * c21 * s
    return CovarianceTriple(a12 + shared, a12 + shared * eps, a12, float(eps))


def random_minimal_models(n, seed=0, delta=1e-3):
    """Parameters of ``n`` random minimal models as arrays.

    covA = L L^T + delta I with standard normal L; coupling entries uniform
    on [-1, 1]; covX and covB log-uniform on [1e-2, 1e2].
    """
    rng = _rng.chunk_rng(seed, 0, _MINIMAL_STREAM)
    L = rng.standard_normal((n, 2, 2))
    covA = L @ np.swapaxes(L, 1, 2) + delta * np.eye(2)
    coupling = rng.uniform(-1.0, 1.0, size=(n, 3))
    covX = 10.0 ** rng.uniform(-2.0, 2.0, size=n)
    covB = 10.0 ** rng.uniform(-2.0, 2.0, size=n)
    return {"covA": covA, "coupling": coupling, "covX": covX, "covB": covB}


def minimal_model(params, j):
    return GaussianCauseModel(
        params["covA"][j],
        [[params["covB"][j]]],
        [[params["covX"][j]]],
        params["coupling"][j][:, None],
    )


def minimal_case_arrays(params):
    """Vectorized :func:`minimal_case` over the output of :func:`random_minimal_models`."""
    a12 = params["covA"][:, 0, 1]
    c = params["coupling"]
    s, b = params["covX"], params["covB"]
    eps = b / (b + c[:, 2] ** 2 * s)
    shared = c[:, 0] * c[:, 1] * s
    return a12 + shared, a12 + shared * eps, a12, eps


@dataclass(frozen=True)
class MinimalSignCheck:
    n_models: int
    n_paradox: int
    n_agree: int
    seed: int

    @property
    def holds(self):
        return self.n_agree == self.n_paradox

    def to_dict(self):
        return {"n_models": self.n_models, "n_paradox": self.n_paradox,
                "n_agree": self.n_agree, "seed": self.seed, "signs_agree": self.holds}


def minimal_sign_check(n_models, seed=0):
    """Count paradox cases among random minimal models, and those whose cause-conditioned sign matches b."""
    marg, cond, xcond, _ = minimal_case_arrays(random_minimal_models(n_models, seed))
    paradox = ((marg > TOL) & (cond < -TOL)) | ((marg < -TOL) & (cond > TOL))
    agree = paradox & (np.sign(xcond) == np.sign(cond))
    return MinimalSignCheck(int(n_models), int(paradox.sum()), int(agree.sum()), int(seed))


def two_component_counterexample(scale=1e6, choose_sign=1, covB=1.0):
    """Two-component cause with covX = scale * I and c31 = 0.

    Coupling rows are a1: (1, 1), a2: (-1, 2), b: (0, 1), so for
    scale >> covB the marginal cov(a1, a2) is about A12 + scale and the
    b-conditional one about A12 - scale: a paradox whatever the sign of
    A12 = +-0.5.  As scale -> 0 the cause decouples and the paradox disappears.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    s = 1.0 if choose_sign >= 0 else -1.0
    covA = [[1.0, 0.5 * s], [0.5 * s, 1.0]]
    coupling = [[1.0, 1.0], [-1.0, 2.0], [0.0, 1.0]]
    return GaussianCauseModel(covA, [[covB]], np.eye(2) * scale, coupling)


def analyze(model):
    """Marginal, b-conditional and x-conditional (1, 2) entries for any nA >= 2 model."""
    marg = marginal_covariance(model)
    cond = conditional_cov_a_given_b(model)
    status = classify(marg[0, 1], (cond[0, 1], cond[0, 1]))
    return {
        "status": status.value,
        "paradox": status.is_paradox,
        "marginal_a1a2": float(marg[0, 1]),
        "b_conditional_a1a2": float(cond[0, 1]),
        "x_conditional_a1a2": float(model.covA[0, 1]),
    }


# -- matrix identities ---------------------------------------------------------


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(np.abs(a).max(), np.abs(b).max(), np.finfo(float).tiny)
    return float(np.abs(a - b).max() / scale)


def woodbury_residual(Z, U, W, V):
    """(Z + U W V)^{-1} against Z^{-1} - Z^{-1} U (W^{-1} + V Z^{-1} U)^{-1} V Z^{-1}."""
    Zi = np.linalg.inv(Z)
    lhs = np.linalg.inv(Z + U @ W @ V)
    rhs = Zi - Zi @ U @ np.linalg.inv(np.linalg.inv(W) + V @ Zi @ U) @ V @ Zi
    return _rel(lhs, rhs)


def generalized_sylvester_residual(Z, U, W, V):
    """det(Z + U W V) against det(Z) det(W) det(W^{-1} + V Z^{-1} U)."""
    lhs = np.linalg.det(Z + U @ W @ V)
    rhs = np.linalg.det(Z) * np.linalg.det(W) * np.linalg.det(np.linalg.inv(W) + V @ np.linalg.inv(Z) @ U)
    return _rel(lhs, rhs)


def sylvester_residual(K, L):
    """det(I_N - K L) against det(I_M - L K)."""
    n, m = K.shape
    return _rel(np.linalg.det(np.eye(n) - K @ L), np.linalg.det(np.eye(m) - L @ K))


def block_inverse(m, n):
    """Inverse of ``m`` assembled blockwise from the Schur complement of its lower-right block."""
    a11, a12, a21, a22 = m[:n, :n], m[:n, n:], m[n:, :n], m[n:, n:]
    a22i = np.linalg.inv(a22)
    si = np.linalg.inv(a11 - a12 @ a22i @ a21)
    top = np.hstack([si, -si @ a12 @ a22i])
    bottom = np.hstack([-a22i @ a21 @ si, a22i + a22i @ a21 @ si @ a12 @ a22i])
    return np.vstack([top, bottom])


def block_inverse_residual(m, n):
    return _rel(block_inverse(m, n), np.linalg.inv(m))


def block_determinant_residual(m, n):
    """det(m) against det(Schur complement) det(m22)."""
    rhs = np.linalg.det(schur_complement(m, n)) * np.linalg.det(m[n:, n:])
    return _rel(np.linalg.det(m), rhs)


def _well_conditioned(rng, rows, cols=None, max_cond=1e3):
    """Random matrix with condition number below ``max_cond``; square unless ``cols`` is given."""
    cols = rows if cols is None else cols
    while True:
        m = rng.standard_normal((rows, cols))
        if rows == cols:
            m = m + np.sqrt(rows) * np.eye(rows)
        if min(rows, cols) == 0 or np.linalg.cond(m) < max_cond:
            return m


@dataclass
class IdentityDiagnostics:
    n_instances: int
    residuals: dict
    threshold: float
    seed: int

    @property
    def max_residuals(self):
        return {k: float(max(v)) if v else 0.0 for k, v in self.residuals.items()}

    @property
    def passed(self):
        return all(r < self.threshold for r in self.max_residuals.values())

    def to_dict(self):
        return {
            "n_instances": self.n_instances,
            "seed": self.seed,
            "threshold": self.threshold,
            "max_residuals": self.max_residuals,
            "passed": self.passed,
        }


def matrix_identity_suite(n_instances=1000, seed=0, max_dim=8, threshold=1e-10):
    """Check the inversion and determinant identities on random well-conditioned matrices."""
    if max_dim > 8 or max_dim < 2:
        raise ValueError("max_dim must be in [2, 8]")
    rng = _rng.chunk_rng(seed, 0, _IDENTITY_STREAM)
    res = {"woodbury": [], "generalized_sylvester": [], "sylvester": [],
           "block_inverse": [], "block_determinant": []}
    for _ in range(n_instances):
        n = int(rng.integers(1, max_dim + 1))
        k = int(rng.integers(1, max_dim + 1))
        while True:
            Z = _well_conditioned(rng, n)
            W = _well_conditioned(rng, k)
            U = rng.standard_normal((n, k)) / np.sqrt(k)
            V = rng.standard_normal((k, n)) / np.sqrt(n)
            inner = np.linalg.inv(W) + V @ np.linalg.inv(Z) @ U
            if np.linalg.cond(Z + U @ W @ V) < 1e3 and np.linalg.cond(inner) < 1e3:
                break
        res["woodbury"].append(woodbury_residual(Z, U, W, V))
        res["generalized_sylvester"].append(generalized_sylvester_residual(Z, U, W, V))

        N, M = int(rng.integers(1, max_dim + 1)), int(rng.integers(1, max_dim + 1))
        while True:
            K = rng.standard_normal((N, M)) / np.sqrt(M)
            L = rng.standard_normal((M, N)) / np.sqrt(N)
            if np.linalg.cond(np.eye(N) - K @ L) < 1e3:
                break
        res["sylvester"].append(sylvester_residual(K, L))

        size = int(rng.integers(2, max_dim + 1))
        split = int(rng.integers(1, size))
        while True:
            m = _well_conditioned(rng, size)
            if (np.linalg.cond(m[split:, split:]) < 1e3
                    and np.linalg.cond(schur_complement(m, split)) < 1e3):
                break
        res["block_inverse"].append(block_inverse_residual(m, split))
        res["block_determinant"].append(block_determinant_residual(m, split))
    return IdentityDiagnostics(n_instances, res, threshold, seed)


def monte_carlo_covariances(model, n, seed=0, threads=1):
    """Sample covariance of y and residual covariance of a after regressing on b.

    Returns ``(marginal, conditional, n)``.  Draws come in chunk-seeded
    blocks; the reduction sums per-chunk moment matrices in chunk order.
    """
    nA = model.nA
    sizes = _rng.chunk_sizes(n)

    def run(j, size):
        y = model.sample(size, _rng.chunk_rng(seed, j, _MC_STREAM))
        return y.T @ y

    moments = _rng.map_chunks(run, sizes, threads)
    # zero-mean model: second moment is the covariance
    marg = sum(moments) / n
    cond = schur_complement(marg, nA)
    return marg, cond, n
