"""Noiseless reconstructors certifying linear identifiability.

When X is rank-deficient the quadratic-risk selection mode needs a matrix K
with ``beta = K X beta`` on the assumed solution class. This module builds
such reconstructors (full-rank inverse, basis annihilators, quadratic
minimizers with an optional large-mu approximation) and certifies the
augmented-rank condition numerically. Pseudo-inverses are used throughout,
so a silently singular normal matrix is reported in the certificate instead
of producing garbage.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import IdentifiabilityError, InvalidInputError
from .linmodel import numerical_rank, pseudo_inverse


@dataclass(frozen=True)
class IdentifiabilityCertificate:
    """Numerical evidence recorded when a reconstructor is built."""

    augmented_rank: int
    required_rank: int
    identifiable: bool
    smallest_retained_sv: float
    worst_residual: float = float("nan")
    mu_deviation: float = float("nan")

    def as_rows(self):
        """Certificate as (key, value) pairs for the CLI report format."""
        return [
            ("augmented_rank", self.augmented_rank),
            ("required_rank", self.required_rank),
            ("identifiable", int(self.identifiable)),
            ("smallest_retained_sv", self.smallest_retained_sv),
            ("worst_residual", self.worst_residual),
            ("mu_deviation", self.mu_deviation),
        ]


@dataclass(frozen=True)
class Reconstructor:
    """A matrix K with ``K X beta = beta`` on the certified constraint set."""

    K: np.ndarray
    construction: str
    certificate: IdentifiabilityCertificate


def _stack(X, phi):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidInputError(f"X must be a matrix, got ndim {X.ndim}")
    p = X.shape[1]
    if phi is None:
        phi = np.zeros((0, p))
    phi = np.asarray(phi, dtype=float).reshape(-1, p)
    return X, phi, np.vstack([X, phi])


def check_identifiability(X, phi=None):
    """Rank certificate of the stacked matrix [X; phi].

    Identifiability of the constrained solution requires the stacked rank to
    equal p (the number of columns).
    """
    X, phi, stacked = _stack(X, phi)
    rank, smallest = numerical_rank(stacked)
    return IdentifiabilityCertificate(
        augmented_rank=rank,
        required_rank=X.shape[1],
        identifiable=rank == X.shape[1],
        smallest_retained_sv=smallest,
    )


def reconstructor_full_rank(X):
    """K = (X' X)^{-1} X' for a full-column-rank design; K X = I_p."""
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    rank, smallest = numerical_rank(X)
    if rank < p:
        raise IdentifiabilityError(
            f"X has numerical rank {rank} < p = {p}; full-rank reconstructor undefined",
            rank=rank,
            required=p,
        )
    K = pseudo_inverse(X)
    residual = float(np.linalg.norm(K @ X - np.eye(p)))
    cert = IdentifiabilityCertificate(rank, p, True, smallest, worst_residual=residual)
    return Reconstructor(K, "full_rank", cert)


def _null_space_basis(phi, p):
    if phi.shape[0] == 0:
        return np.eye(p)
    return scipy.linalg.null_space(phi)


def reconstructor_basis(X, phi):
    """K = (X' X + phi' phi)^+ X', valid on the null space of phi.

    Requires rank [X; phi] = p. The certificate records the worst relative
    residual ``||K X v - v|| / ||v||`` over an orthonormal basis of the null
    space of phi, i.e. over every solution the constraints allow.
    """
    X, phi, stacked = _stack(X, phi)
    p = X.shape[1]
    rank, smallest = numerical_rank(stacked)
    if rank < p:
        raise IdentifiabilityError(
            f"augmented matrix [X; phi] has numerical rank {rank} < p = {p}",
            rank=rank,
            required=p,
        )
    K = pseudo_inverse(X.T @ X + phi.T @ phi) @ X.T
    basis = _null_space_basis(phi, p)
    if basis.shape[1]:
        res = K @ X @ basis - basis
        worst = float(np.max(np.linalg.norm(res, axis=0)))  # basis columns are unit norm
    else:
        worst = 0.0
    cert = IdentifiabilityCertificate(rank, p, True, smallest, worst_residual=worst)
    return Reconstructor(K, "basis_annihilator", cert)


def reconstructor_quadratic(X, Pi, phi=None, mu_approx=None):
    """Reconstructor of the Pi-minimal solution of {X u = X beta, phi u = 0}.

    Requires ``(Pi + X'X + phi'phi)`` to be full rank, which makes the
    minimizer unique. The map from X beta to the minimizer is assembled by
    the null-space method: with ``C = [X; phi]`` and ``N`` an orthonormal
    basis of its null space,

        K = [I - N (N' Pi N)^+ N' Pi] C^+ [:, :n]

    When ``mu_approx`` is given, the large-weight approximation
    ``mu (Pi + mu X'X + mu phi'phi)^{-1} X'`` is returned instead and its
    Frobenius distance to the exact K is recorded in the certificate.
    """
    X, phi, stacked = _stack(X, phi)
    n, p = X.shape
    Pi = np.asarray(Pi, dtype=float)
    if Pi.shape != (p, p):
        raise InvalidInputError(f"Pi must be ({p}, {p}), got {Pi.shape}")
    xtx = X.T @ X
    ptp = phi.T @ phi
    core = Pi + xtx + ptp
    rank, smallest = numerical_rank(core)
    if rank < p:
        raise IdentifiabilityError(
            f"(Pi + X'X + phi'phi) has numerical rank {rank} < p = {p}",
            rank=rank,
            required=p,
        )
    N = scipy.linalg.null_space(stacked)
    least_sq = pseudo_inverse(stacked)[:, :n]
    if N.shape[1]:
        # full-rank precondition makes Pi definite on the constraint null
        # space, so the Gram matrix below is invertible
        K = least_sq - N @ pseudo_inverse(N.T @ Pi @ N) @ N.T @ Pi @ least_sq
    else:
        K = least_sq
    # K X acts as the identity on range(K); ||K X K - K|| certifies that
    consistency = float(
        np.linalg.norm(K @ X @ K - K) / max(np.linalg.norm(K), 1e-300)
    )
    if mu_approx is not None:
        mu = float(mu_approx)
        if mu <= 0:
            raise InvalidInputError("mu_approx must be positive")
        K_mu = mu * pseudo_inverse(Pi + mu * xtx + mu * ptp) @ X.T
        deviation = float(np.linalg.norm(K_mu - K) / max(np.linalg.norm(K), 1e-300))
        cert = IdentifiabilityCertificate(
            rank, p, True, smallest, worst_residual=consistency, mu_deviation=deviation
        )
        return Reconstructor(K_mu, "approximate_mu", cert)
    cert = IdentifiabilityCertificate(rank, p, True, smallest, worst_residual=consistency)
    return Reconstructor(K, "quadratic_minimizer", cert)


def annihilator_rows(Phi, zero_pattern):
    """Rows of Phi whose coefficients are declared zero: phi = diag(delta) Phi.

    ``zero_pattern`` is a binary vector; entry k = 1 declares that the k-th
    coefficient of the solution in the basis Phi vanishes. Zero rows are
    dropped, which leaves phi' phi unchanged. The pattern is user knowledge;
    it is never inferred from data.
    """
    Phi = np.asarray(Phi, dtype=float)
    delta = np.asarray(zero_pattern, dtype=float).reshape(-1)
    if delta.shape[0] != Phi.shape[0]:
        raise InvalidInputError("zero_pattern length must match the rows of Phi")
    if not np.all((delta == 0.0) | (delta == 1.0)):
        raise InvalidInputError("zero_pattern entries must be 0 or 1")
    return Phi[delta == 1.0, :].copy()
