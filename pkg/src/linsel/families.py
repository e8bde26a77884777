"""Constructors for families of linear estimators.

Every builder returns ``EstimatorMatrix`` values (``beta_hat = psi @ y``)
obtained as closed-form minimizers of penalized or constrained quadratic
programs: Tikhonov smoothing, basis-constrained and basis-plus-regularizer
least squares, variable selection, Gaussian filter banks, difference-operator
regularizer grids, and the (unrealizable) ideal filter that globally
minimizes the quadratic risk for a hypothesized signal.
"""

import numpy as np

from .errors import InvalidInputError
from .linmodel import EstimatorMatrix, pseudo_inverse

# Inputs declared symmetric are symmetrized silently only when the asymmetry
# is floating-point noise; anything larger is rejected as misuse.
_SYM_RTOL = 1e-12


def _sym_guard(A, name):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {A.shape}")
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.T) > _SYM_RTOL * max(scale, 1.0):
        raise InvalidInputError(f"{name} is not symmetric")
    return 0.5 * (A + A.T)


def _check_design(X, P, name="P"):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidInputError("X must be a matrix")
    P = _sym_guard(P, name)
    if P.shape[0] != X.shape[0]:
        raise InvalidInputError(
            f"{name} shape {P.shape} does not match X with {X.shape[0]} rows"
        )
    return X, P


def _projected_estimator(C, constraint, X, P):
    # Psi = C [I - G' (G C G')^+ G C] X' P  with G the constraint rows
    p = C.shape[0]
    inner = pseudo_inverse(constraint @ C @ constraint.T)
    proj = np.eye(p) - constraint.T @ inner @ constraint @ C
    return C @ proj @ X.T @ P


def build_tikhonov(X, P, H, model_id=0, label=None):
    """Minimizer of ``(y - X b)' P (y - X b) + b' H b``.

    Returns ``Psi = (X' P X + H)^+ X' P``.
    """
    X, P = _check_design(X, P)
    H = _sym_guard(H, "H")
    if H.shape[0] != X.shape[1]:
        raise InvalidInputError(f"H shape {H.shape} does not match p = {X.shape[1]}")
    psi = pseudo_inverse(X.T @ P @ X + H) @ X.T @ P
    return EstimatorMatrix(model_id, psi, label or "tikhonov")


def build_basis_constrained(X, P, phi_bar, model_id=0, label=None):
    """Minimizer of ``(y - X b)' P (y - X b)`` subject to ``phi_bar b = 0``.

    With ``C = (X' P X + phi_bar' phi_bar)^+``,
    ``Psi = C [I - phi_bar' (phi_bar C phi_bar')^+ phi_bar C] X' P``.
    The rows of ``phi_bar`` need not be orthonormal. When the inner matrix is
    full rank the constraint is respected exactly: ``phi_bar @ (Psi y) = 0``.
    """
    X, P = _check_design(X, P)
    p = X.shape[1]
    phi_bar = np.asarray(phi_bar, dtype=float).reshape(-1, p)
    if phi_bar.shape[0] == 0:
        return build_tikhonov(X, P, np.zeros((p, p)), model_id,
                              label or "basis_constrained k=0")
    C = pseudo_inverse(X.T @ P @ X + phi_bar.T @ phi_bar)
    psi = _projected_estimator(C, phi_bar, X, P)
    return EstimatorMatrix(model_id, psi, label or "basis_constrained")


def build_basis_regularized(X, P, phi_bar, H, model_id=0, label=None):
    """Basis-constrained least squares with an extra quadratic regularizer.

    Identical to ``build_basis_constrained`` except that
    ``C = (X' P X + phi_bar' phi_bar + H)^+`` with H symmetric PSD.
    Smoothing of the coefficient vector in a basis ``Phi`` is obtained by
    passing ``H = coefficient_regularizer(Phi, F)``.
    """
    X, P = _check_design(X, P)
    p = X.shape[1]
    H = _sym_guard(H, "H")
    if H.shape[0] != p:
        raise InvalidInputError(f"H shape {H.shape} does not match p = {p}")
    evals = np.linalg.eigvalsh(H)
    if evals.size and evals[0] < -1e-10 * max(np.linalg.norm(H), 1e-300):
        raise InvalidInputError(f"H must be PSD; smallest eigenvalue {evals[0]:.3e}")
    phi_bar = np.asarray(phi_bar, dtype=float).reshape(-1, p)
    if phi_bar.shape[0] == 0:
        return build_tikhonov(X, P, H, model_id, label or "basis_regularized k=0")
    C = pseudo_inverse(X.T @ P @ X + phi_bar.T @ phi_bar + H)
    psi = _projected_estimator(C, phi_bar, X, P)
    return EstimatorMatrix(model_id, psi, label or "basis_regularized")


def coefficient_regularizer(Phi, F):
    """Lift a filter F acting on basis coefficients to signal space: Phi' F Phi."""
    Phi = np.asarray(Phi, dtype=float)
    F = _sym_guard(F, "F")
    if F.shape[0] != Phi.shape[0]:
        raise InvalidInputError("F must act on the rows of Phi")
    return Phi.T @ F @ Phi


def build_variable_selection(X, P, nu, model_id=0, label=None):
    """Least squares with the coordinates flagged by ``nu`` forced to zero.

    ``nu`` is a binary vector; ``nu[k] = 1`` excludes predictor k. With
    ``N = diag(nu)`` and ``C = (X' P X + N)^+``,
    ``Psi = C [I - N (N C N)^+ N C] X' P``.
    """
    X, P = _check_design(X, P)
    p = X.shape[1]
    nu = np.asarray(nu, dtype=float).reshape(-1)
    if nu.shape != (p,):
        raise InvalidInputError(f"nu length {nu.size} != p = {p}")
    if not np.all((nu == 0.0) | (nu == 1.0)):
        raise InvalidInputError("nu entries must be 0 or 1")
    N = np.diag(nu)
    C = pseudo_inverse(X.T @ P @ X + N)
    psi = _projected_estimator(C, N, X, P)
    return EstimatorMatrix(model_id, psi, label or f"variable_selection k={int(nu.sum())}")


def gaussian_bandwidths(M):
    """Bandwidths of the length-M bank: multiples m * (10 / M), m = 1..M."""
    if M < 1:
        raise InvalidInputError("M must be >= 1")
    return (10.0 / M) * np.arange(1, M + 1)


def build_gaussian_bank(p, M, normalization="row_stochastic"):
    """Bank of M Gaussian smoothing filters on a length-p grid.

    Filter m has kernel ``exp[-(i - j)^2 / (2 sigma_m^2)]`` with bandwidth
    ``sigma_m = m * 10 / M``. ``row_stochastic`` (default) divides each row
    by its sum, so rows sum to 1; ``as_written`` divides by the row mean
    instead, so rows sum to p. Ids are the integers 1..M.
    """
    if p < 1:
        raise InvalidInputError("p must be >= 1")
    if normalization not in ("row_stochastic", "as_written"):
        raise InvalidInputError(f"unknown normalization {normalization!r}")
    idx = np.arange(p, dtype=float)
    sq = (idx[:, None] - idx[None, :]) ** 2
    bank = []
    for m, sigma in enumerate(gaussian_bandwidths(M), start=1):
        kernel = np.exp(-sq / (2.0 * sigma**2))
        rowsum = kernel.sum(axis=1, keepdims=True)
        if normalization == "as_written":
            rowsum = rowsum / p
        bank.append(EstimatorMatrix(m, kernel / rowsum, f"gaussian sigma={sigma:g}"))
    return bank


def difference_operator(p, order):
    """Forward difference operator of the given order, shape (p - order, p).

    First order maps ``v`` to ``v[1:] - v[:-1]``; higher orders compose
    first-order operators on the shrinking grid, so interior rows of the
    second order read (1, -2, 1).
    """
    if order < 1 or p <= order:
        raise InvalidInputError(f"need p > order >= 1, got p={p}, order={order}")

    def first(q):
        D = np.zeros((q - 1, q))
        np.fill_diagonal(D, -1.0)
        np.fill_diagonal(D[:, 1:], 1.0)
        return D

    D = first(p)
    for k in range(1, order):
        D = first(p - k) @ D
    return D


def default_diff_grid():
    """The 1000 regularizer triples (2^i - 1, 2^j - 1, 2^k - 1), i,j,k in 0..9."""
    return [
        (float(2**i - 1), float(2**j - 1), float(2**k - 1))
        for i in range(10)
        for j in range(10)
        for k in range(10)
    ]


def build_diff_regularizer_family(X, grid=None):
    """Inversion filters ``(X' X + H_m)^+ X'`` with difference-operator penalties.

    ``H_m = a D1' D1 + b D2' D2 + c D3' D3`` for each nonnegative triple
    (a, b, c) of the grid (default: ``default_diff_grid()``). Requires a
    square X. Ids are the 0-based grid row indices.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise InvalidInputError(f"this builder requires square X, got {X.shape}")
    p = X.shape[1]
    if grid is None:
        grid = default_diff_grid()
    grid = [tuple(float(v) for v in t) for t in grid]
    if not grid:
        raise InvalidInputError("empty regularizer grid")
    if any(len(t) != 3 or min(t) < 0 for t in grid):
        raise InvalidInputError("grid entries must be nonnegative (a, b, c) triples")
    D1 = difference_operator(p, 1)
    D2 = difference_operator(p, 2)
    D3 = difference_operator(p, 3)
    G1, G2, G3 = D1.T @ D1, D2.T @ D2, D3.T @ D3
    xtx = X.T @ X
    family = []
    for i, (a, b, c) in enumerate(grid):
        psi = pseudo_inverse(xtx + a * G1 + b * G2 + c * G3) @ X.T
        family.append(EstimatorMatrix(i, psi, f"diff a={a:g} b={b:g} c={c:g}"))
    return family


def build_ideal(beta_hypothesis, X, R, model_id=0, label=None):
    """Rank-one filter minimizing the quadratic risk for a hypothesized signal.

    ``Psi = beta (X beta)' ((X beta)(X beta)' + R R')^+``. When the hypothesis
    equals the true signal, no linear estimator has a smaller quadratic risk.
    """
    beta = np.asarray(beta_hypothesis, dtype=float).reshape(-1)
    X = np.asarray(X, dtype=float)
    R = np.asarray(R, dtype=float)
    if X.shape[1] != beta.size or R.shape != (X.shape[0], X.shape[0]):
        raise InvalidInputError("inconsistent shapes for (beta, X, R)")
    u = X @ beta
    M = pseudo_inverse(np.outer(u, u) + R @ R.T)
    psi = np.outer(beta, M @ u)
    return EstimatorMatrix(model_id, psi, label or "ideal")


def ideal_risk(beta, X, R):
    """Closed-form quadratic risk of ``build_ideal(beta, X, R)`` at the true beta.

    With ``M = ((X beta)(X beta)' + R R')^+`` and ``u = X beta``:
    ``||beta||^2 [ (u' M u)^2 - 2 u' M u + ||(M u)' R||^2 + 1 ]``.
    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    X = np.asarray(X, dtype=float)
    R = np.asarray(R, dtype=float)
    if X.shape[1] != beta.size or R.shape != (X.shape[0], X.shape[0]):
        raise InvalidInputError("inconsistent shapes for (beta, X, R)")
    u = X @ beta
    M = pseudo_inverse(np.outer(u, u) + R @ R.T)
    w = M @ u
    c = float(u @ w)
    return float(beta @ beta) * (c * c - 2.0 * c + float(np.sum((w @ R) ** 2)) + 1.0)


def merge_families(*families):
    """Concatenate families, re-assigning sequential integer ids."""
    merged = []
    for fam in families:
        for em in fam:
            merged.append(EstimatorMatrix(len(merged), em.psi, em.label))
    return merged
