"""Correlated Gaussian linear model ``y = X beta + R z`` and exact risks.

The model is the pair ``(X, R)`` with ``X`` of shape (n, p) and ``R`` of
shape (n, n); ``z`` is standard Gaussian. Linear estimators are fixed
matrices ``Psi`` applied to the observation, ``beta_hat = Psi y``. This
module provides the dense pseudo-inverse used everywhere, the closed-form
quadratic and predictive risks, and the exact-risk oracle that serves as
the benchmark for the data-driven selector.

All matrices are dense float64; the supported envelope is n, p up to a few
thousand, where dense eigendecompositions dominate the cost.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

# Singular values sigma_i <= PINV_RTOL(shape) * sigma_max are treated as zero,
# both for pseudo-inversion and for numerical rank.
_PINV_BASE_RTOL = 1e-12


def pinv_rtol(shape):
    """Relative singular-value cutoff for a matrix of the given shape."""
    q, r = shape
    return _PINV_BASE_RTOL * max(q, r)


@dataclass(frozen=True)
class LinearModel:
    """The pair (X, R) defining ``y = X beta + R z``.

    Parameters
    ----------
    X : ndarray, shape (n, p)
        Design matrix.
    R : ndarray, shape (n, n)
        Noise-shaping matrix. Any real square matrix is accepted; no
        positive-definiteness is required.
    """

    X: np.ndarray
    R: np.ndarray
    n: int = field(init=False)
    p: int = field(init=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        R = np.asarray(self.R, dtype=float)
        if X.ndim != 2:
            raise InvalidInputError(f"X must be 2-d, got ndim {X.ndim}")
        n, p = X.shape
        if R.shape != (n, n):
            raise InvalidInputError(
                f"R must be square ({n}, {n}) to match X with {n} rows, got {R.shape}"
            )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(R))):
            raise InvalidInputError("X and R must be finite-valued")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class EstimatorMatrix:
    """One member of an estimator family: ``beta_hat = psi @ y``.

    ``id`` is an opaque, hashable model identifier; ``label`` is free-form
    provenance (builder name and parameters).
    """

    id: object
    psi: np.ndarray
    label: str = ""

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        if psi.ndim != 2:
            raise InvalidInputError(f"psi must be 2-d, got ndim {psi.ndim}")
        object.__setattr__(self, "psi", psi)


@dataclass(frozen=True)
class SpectralSummary:
    """Per-model spectral quantities feeding the penalty.

    ``s_plus``  largest positive eigenvalue of the symmetric matrix A_m
                (clamped at 0);
    ``r_star``  largest singular value of the PSD matrix B_m;
    ``frob_A``  Frobenius norm of A_m;
    ``trace_cross``  tr(R' K' Psi R);
    ``var_term``     ||Psi R||_F^2.
    """

    s_plus: float
    r_star: float
    frob_A: float
    trace_cross: float
    var_term: float

    def __post_init__(self):
        if min(self.s_plus, self.r_star, self.frob_A, self.var_term) < 0:
            raise InvalidInputError("spectral summary entries must be nonnegative")


def _as_psi(psi):
    return psi.psi if isinstance(psi, EstimatorMatrix) else np.asarray(psi, dtype=float)


def pseudo_inverse(A):
    """Moore-Penrose pseudo-inverse with a rank-revealing cutoff.

    Singular values at or below ``1e-12 * max(q, r) * sigma_max`` are treated
    as zero. Satisfies the four Moore-Penrose identities to ~1e-8 on matrices
    within the supported envelope.

    Parameters
    ----------
    A : ndarray, shape (q, r)

    Returns
    -------
    ndarray, shape (r, q)
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidInputError(f"pseudo_inverse expects a matrix, got ndim {A.ndim}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("pseudo_inverse: non-finite entries")
    if A.size == 0:
        return A.T.copy()
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    cutoff = pinv_rtol(A.shape) * (s[0] if s.size else 0.0)
    inv = np.where(s > cutoff, np.divide(1.0, s, out=np.zeros_like(s), where=s > 0), 0.0)
    return (Vt.T * inv) @ U.T


def numerical_rank(A):
    """Numerical rank under the same cutoff policy as ``pseudo_inverse``.

    Returns the pair ``(rank, smallest retained singular value)``; the second
    entry is 0.0 when the rank is 0.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0, 0.0
    s = np.linalg.svd(A, compute_uv=False)
    cutoff = pinv_rtol(A.shape) * s[0]
    kept = s[s > cutoff]
    return int(kept.size), float(kept[-1]) if kept.size else 0.0


def quadratic_risk(model, psi, beta):
    """Exact quadratic risk E||Psi y - beta||^2.

    Evaluates the bias-variance decomposition
    ``||beta||^2 + beta' X' Psi' Psi X beta - 2 beta' Psi X beta + ||Psi R||_F^2``.

    Parameters
    ----------
    model : LinearModel
    psi : EstimatorMatrix or ndarray, shape (p, n)
    beta : ndarray, shape (p,)

    Returns
    -------
    float
        Nonnegative up to floating-point slack.
    """
    P = _as_psi(psi)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if P.shape != (model.p, model.n):
        raise InvalidInputError(
            f"psi shape {P.shape} does not match (p, n) = {(model.p, model.n)}"
        )
    if beta.shape != (model.p,):
        raise InvalidInputError(f"beta length {beta.size} != p = {model.p}")
    xb = model.X @ beta
    pxb = P @ xb
    var = float(np.sum((P @ model.R) ** 2))
    return float(beta @ beta + pxb @ pxb - 2.0 * (beta @ pxb) + var)


def predictive_risk(model, psi, beta):
    """Exact predictive risk E||X Psi y - X beta||^2.

    Equals ``quadratic_risk`` applied to the composite estimator ``X Psi``
    with target ``X beta``.
    """
    P = _as_psi(psi)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if P.shape != (model.p, model.n):
        raise InvalidInputError(
            f"psi shape {P.shape} does not match (p, n) = {(model.p, model.n)}"
        )
    if beta.shape != (model.p,):
        raise InvalidInputError(f"beta length {beta.size} != p = {model.p}")
    xb = model.X @ beta
    xpxb = model.X @ (P @ xb)
    var = float(np.sum((model.X @ (P @ model.R)) ** 2))
    return float(xb @ xb + xpxb @ xpxb - 2.0 * (xb @ xpxb) + var)


def oracle_select(model, family, beta, mode="quadratic"):
    """Exact-risk oracle: the family member with the smallest risk.

    Ties are broken by the first index, so the result is deterministic for a
    fixed family order (the winning risk value itself is order invariant).

    Returns
    -------
    (id, ndarray)
        The chosen model id and the full risk vector in family order.
    """
    if not family:
        raise InvalidInputError("oracle_select: empty family")
    if mode not in ("quadratic", "predictive"):
        raise InvalidInputError(f"unknown mode {mode!r}")
    risk = quadratic_risk if mode == "quadratic" else predictive_risk
    risks = np.array([risk(model, em, beta) for em in family])
    best = int(np.argmin(risks))
    return family[best].id, risks
