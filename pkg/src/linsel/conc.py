"""Tail bounds for Gaussian quadratic forms ``T = z'Az + b'z``.

For standard Gaussian z the upper/lower tail thresholds are

    tr(A) +/- 2 sqrt(||A + A'||^2 / 4 + ||b||^2 / 2) sqrt(x) +/- 2 s^{+/-} x

with tail mass at most exp(-x), where s^+ (s^-) is the largest positive
(negative, in absolute value) eigenvalue of (A + A')/2, clamped at 0. The
diagonal specialization and the Laplace-transform-to-tail step are exposed
separately, together with a seeded Monte-Carlo verifier used by the tests.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class TailBound:
    """Threshold components: center + 2 spread sqrt(x) + slope x (sign by direction)."""

    center: float
    spread: float
    slope: float
    direction: str

    def __post_init__(self):
        if self.spread < 0 or self.slope < 0:
            raise InvalidInputError("spread and slope must be nonnegative")
        if self.direction not in ("upper", "lower"):
            raise InvalidInputError(f"direction must be upper or lower, got {self.direction}")

    def threshold(self, x):
        if x <= 0:
            raise InvalidInputError("x must be positive")
        sign = 1.0 if self.direction == "upper" else -1.0
        return self.center + sign * (2.0 * self.spread * math.sqrt(x) + self.slope * x)


def quadform_bound(A, b, direction="upper"):
    """TailBound for T = z'Az + b'z (A need not be symmetric)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != b.size:
        raise InvalidInputError(f"need square A matching b, got {A.shape} and {b.size}")
    sym = 0.5 * (A + A.T)
    eigs = np.linalg.eigvalsh(sym)
    if direction == "upper":
        slope = 2.0 * max(float(eigs[-1]), 0.0)
    else:
        slope = 2.0 * max(float(-eigs[0]), 0.0)
    spread = math.sqrt(0.25 * float(np.sum((A + A.T) ** 2)) + 0.5 * float(b @ b))
    return TailBound(float(np.trace(A)), spread, slope, direction)


def bound_quadform(A, b, x, direction="upper"):
    """Threshold with P[T >= thr] <= exp(-x) (upper) or P[T <= thr] <= exp(-x)."""
    return quadform_bound(A, b, direction).threshold(x)


def bound_diag(a, b, x, direction="upper"):
    """Diagonal case T = sum a_k z_k^2 + b_k z_k; equals bound_quadform(diag(a), b, x)."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.size != b.size:
        raise InvalidInputError("a and b must have the same length")
    if x <= 0:
        raise InvalidInputError("x must be positive")
    if direction == "upper":
        slope = 2.0 * max(float(np.max(a, initial=0.0)), 0.0)
    elif direction == "lower":
        slope = 2.0 * max(float(np.max(-a, initial=0.0)), 0.0)
    else:
        raise InvalidInputError(f"direction must be upper or lower, got {direction}")
    spread = math.sqrt(float(np.sum(a * a + 0.5 * b * b)))
    sign = 1.0 if direction == "upper" else -1.0
    return float(np.sum(a)) + sign * (2.0 * spread * math.sqrt(x) + slope * x)


def laplace_to_tail(u, v, x):
    """log E exp(y xi) <= (u y)^2 / (1 - v y) implies P[xi >= 2u sqrt(x) + v x] <= exp(-x)."""
    if u < 0 or v < 0:
        raise InvalidInputError("u and v must be nonnegative")
    if x <= 0:
        raise InvalidInputError("x must be positive")
    return 2.0 * u * math.sqrt(x) + v * x


def log_inequality_check(r, a, y_grid):
    """Check -log(1 - 2ry)/2 - ry <= r^2 y^2 / (1 - 2ay) on a grid in (0, 1/(2a)).

    Valid regimes: a >= r > 0, or r <= 0 with a > 0. Returns True when the
    inequality holds at every grid point.
    """
    if a <= 0:
        raise InvalidInputError("a must be positive")
    if r > a:
        raise InvalidInputError("regime requires r <= a")
    y = np.asarray(y_grid, dtype=float).reshape(-1)
    if y.size == 0:
        raise InvalidInputError("empty grid")
    if np.any(y <= 0) or np.any(y >= 1.0 / (2.0 * a)):
        raise InvalidInputError("grid points must lie strictly inside (0, 1/(2a))")
    lhs = -0.5 * np.log1p(-2.0 * r * y) - r * y
    rhs = (r * y) ** 2 / (1.0 - 2.0 * a * y)
    return bool(np.all(lhs <= rhs + 1e-15 * np.abs(rhs)))


def empirical_exceedance(A, b, x, direction="upper", samples=1_000_000, seed=0,
                         block=100_000, threads=1):
    """Seeded Monte-Carlo exceedance frequency of the quadform threshold.

    Samples are drawn in fixed-size blocks with per-block substreams, so the
    estimate is independent of evaluation order and can run in parallel.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    thr = bound_quadform(A, b, x, direction)
    sym = 0.5 * (A + A.T)
    nblocks = (samples + block - 1) // block
    sizes = [min(block, samples - i * block) for i in range(nblocks)]
    children = np.random.SeedSequence(seed).spawn(nblocks)

    def count(i):
        z = np.random.default_rng(children[i]).standard_normal((sizes[i], b.size))
        T = np.einsum("ij,jk,ik->i", z, sym, z) + z @ b
        if direction == "upper":
            return int(np.count_nonzero(T >= thr))
        return int(np.count_nonzero(T <= thr))

    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(count, range(nblocks)))
    else:
        hits = sum(count(i) for i in range(nblocks))
    return hits / samples
