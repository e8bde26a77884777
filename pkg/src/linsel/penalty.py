"""Penalty calibration for the data-driven selection criterion.

For every family member the calibration computes the matrices

    A_m = R' (-theta Psi'Psi + K'Psi + Psi'K) R
    B_m = (theta Psi - K) R R' (theta Psi - K)'

(their X-composed forms in predictive mode), the spectral summaries
(s_m+, r_m*, ||A_m||), model complexities Delta_m, kernel-diffusion weights
ell_m, the constants L_m = Delta_m ell_m, t_m and h_m, the global lambda and
Sigma = sum exp(-L_m), and finally

    pen(m) = Q_m = 2 tr(R'K'Psi R) - theta ||Psi R||^2 + 2 (r*/theta + s+) L_m
             + 2 ||A_m|| sqrt(L_m + h_m)
             + lambda (||A_m||/(sqrt(L_m) + sqrt(L_m + h_m)) + r*/theta + s+)^2

The printed definitions are circular (Delta_m contains h_m, which needs t_m,
which needs ell_m, which needs Delta_m); ``calibrate`` resolves them in the
unique order that leaves every displayed formula true afterwards:

    (1) spectral summaries; (2) provisional Delta0 with h = 0; (3) weights
    ell from Delta0; (4) t = Delta0 * ell; (5) h via the epsilon indicator;
    (6) final Delta with h, L = Delta * ell; (7) Sigma, lambda, Gamma;
    (8) Q and pen = Q.

Two distinct per-model rate constants enter the construction and are not
interchangeable: ``2 r*/theta + s+`` inside Delta_m, t_m and h_m, and
``r*/theta + s+`` inside Q_m and lambda.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, InvalidInputError
from .identify import Reconstructor
from .linmodel import EstimatorMatrix, SpectralSummary

_DELTA_AUTO_GRID = [2.0**k for k in range(-6, 7)]


@dataclass(frozen=True)
class PenaltyConfig:
    """Tuning constants of the penalty.

    theta in (0,1) balances bias against variance (default 3/4); alpha in
    (0,1] scales the ||A_m||-vs-variance trade in the weights (default 1);
    epsilon > 0 controls when the h_m guard activates (default 1); kernel_mu
    sets the kernel bandwidth sigma = tau / (kernel_mu * p) (default 3).
    ``delta`` is the additive weight constant: a positive number, or "auto"
    to search for the smallest delta with Gamma <= target_c (target "auto"
    means 0.01 * max_m ||Psi_m R||^2).
    """

    theta: float = 0.75
    alpha: float = 1.0
    epsilon: float = 1.0
    kernel_mu: float = 3.0
    delta: object = "auto"
    target_c: object = "auto"
    mode: str = "quadratic"

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise InvalidInputError(f"theta must be in (0, 1), got {self.theta}")
        if not 0.0 < self.alpha <= 1.0:
            raise InvalidInputError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.epsilon <= 0.0:
            raise InvalidInputError(f"epsilon must be positive, got {self.epsilon}")
        if self.kernel_mu <= 0.0:
            raise InvalidInputError(f"kernel_mu must be positive, got {self.kernel_mu}")
        if self.delta != "auto" and not float(self.delta) > 0.0:
            raise InvalidInputError(f"delta must be positive or 'auto', got {self.delta}")
        if self.target_c != "auto" and not float(self.target_c) > 0.0:
            raise InvalidInputError("target_c must be positive or 'auto'")
        if self.mode not in ("quadratic", "predictive"):
            raise InvalidInputError(f"mode must be quadratic or predictive, got {self.mode}")


@dataclass(frozen=True)
class PenaltyTable:
    """Calibrated per-model quantities plus the global constants."""

    ids: tuple
    spectral: tuple
    delta_m: np.ndarray
    ell_m: np.ndarray
    t_m: np.ndarray
    h_m: np.ndarray
    L_m: np.ndarray
    Q_m: np.ndarray
    pen_m: np.ndarray
    lam: float
    Sigma: float
    Gamma: float
    tau: float
    sigma_kernel: float
    delta: float
    config: PenaltyConfig
    warnings: tuple = ()

    def index_of(self, model_id):
        try:
            return self.ids.index(model_id)
        except ValueError:
            raise KeyError(f"model id {model_id!r} not in table") from None


def _k_matrix(K):
    if K is None:
        return None
    if isinstance(K, Reconstructor):
        if not K.certificate.identifiable:
            raise ConfigurationError("reconstructor certificate reports non-identifiable")
        return K.K
    return np.asarray(K, dtype=float)


def _effective(model, psi, K, config):
    """(Psi_eff, K_eff): the pair the criterion machinery actually sees.

    Predictive mode selects among the composites X Psi_m targeting X beta,
    which is the quadratic machinery with K the identity.
    """
    P = psi.psi if isinstance(psi, EstimatorMatrix) else np.asarray(psi, dtype=float)
    if P.shape != (model.p, model.n):
        raise InvalidInputError(
            f"psi shape {P.shape} does not match (p, n) = {(model.p, model.n)}"
        )
    if config.mode == "predictive":
        return model.X @ P, np.eye(model.n)
    Km = _k_matrix(K)
    if Km is None:
        raise ConfigurationError("quadratic mode requires a reconstructor K")
    if Km.shape != (model.p, model.n):
        raise InvalidInputError(
            f"K shape {Km.shape} does not match (p, n) = {(model.p, model.n)}"
        )
    return P, Km


def per_model_matrices(model, psi, K, config):
    """The matrices (A_m, B_m) for one family member.

    A_m is assembled from its definition and then symmetrized (the assembly
    is already symmetric up to roundoff); B_m is PSD by construction.
    """
    psi_eff, k_eff = _effective(model, psi, K, config)
    PR = psi_eff @ model.R
    KR = k_eff @ model.R
    A = -config.theta * PR.T @ PR + KR.T @ PR + PR.T @ KR
    A = 0.5 * (A + A.T)
    M = config.theta * PR - KR
    return A, M @ M.T


def spectral_summary(model, psi, K, config):
    """SpectralSummary of one family member under the given mode."""
    psi_eff, k_eff = _effective(model, psi, K, config)
    PR = psi_eff @ model.R
    KR = k_eff @ model.R
    A = -config.theta * PR.T @ PR + KR.T @ PR + PR.T @ KR
    A = 0.5 * (A + A.T)
    M = config.theta * PR - KR
    B = M @ M.T
    eig_a = np.linalg.eigvalsh(A)
    eig_b = np.linalg.eigvalsh(B)
    return SpectralSummary(
        s_plus=float(max(eig_a[-1], 0.0)) if eig_a.size else 0.0,
        r_star=float(np.max(np.abs(eig_b))) if eig_b.size else 0.0,
        frob_A=float(np.linalg.norm(A)),
        trace_cross=float(np.sum(KR * PR)),
        var_term=float(np.sum(PR * PR)),
    )


def model_complexity(spectral, h_m, config, floor=1e-12):
    """Complexity Delta_m (no ell factor), so that L_m = Delta_m * ell_m.

    Delta_m = v^3 / ((2 r*/theta + s+) v^2 + 4 alpha^2 ||A||^2 (v + h_m))
    with v = ||Psi R||^2. A degenerate model (v = 0) gets the floor value.
    """
    v = spectral.var_term
    if v <= 0.0:
        return float(floor)
    rate = 2.0 * spectral.r_star / config.theta + spectral.s_plus
    denom = rate * v * v + 4.0 * config.alpha**2 * spectral.frob_A**2 * (v + h_m)
    if denom <= 0.0:
        return float(floor)
    return float(v**3 / denom)


def kernel_weights(deltas, config, p, delta=None):
    """Kernel-diffusion model weights from the complexities.

    ell_m = delta + log[sum_m' exp(-(Delta_m' - Delta_m)^2 / (2 sigma^2))] / Delta_m,
    sigma = tau / (kernel_mu * p) and tau^2 the sum of all squared pairwise
    complexity differences divided by the family size (not the pair count).
    The self term makes every kernel sum >= 1, hence ell_m >= delta. When
    every complexity coincides, tau = 0 and sigma falls back to a positive
    floor.

    Returns (ell, sigma, tau).
    """
    d = np.asarray(deltas, dtype=float).reshape(-1)
    if d.size == 0:
        raise InvalidInputError("kernel_weights: empty complexity list")
    if np.any(d <= 0.0):
        raise InvalidInputError("kernel_weights: complexities must be positive")
    if p < 1:
        raise InvalidInputError("kernel_weights: p must be >= 1")
    if delta is None:
        delta = config.delta
    if delta == "auto":
        raise InvalidInputError("kernel_weights needs a numeric delta (resolve 'auto' first)")
    delta = float(delta)
    m = d.size
    # sum_{m,m'} (d_m - d_m')^2 / m  ==  2 (sum d^2 - (sum d)^2 / m)
    tau = math.sqrt(max(2.0 * (float(np.sum(d * d)) - float(np.sum(d)) ** 2 / m), 0.0))
    sigma = max(tau / (config.kernel_mu * p), 1e-12 * (1.0 + float(np.mean(d))))
    diff = d[:, None] - d[None, :]
    kernel_sums = np.exp(-(diff**2) / (2.0 * sigma**2)).sum(axis=1)
    ell = delta + np.log(kernel_sums) / d
    return ell, float(sigma), tau


def _assemble(summaries, delta0, log_over_delta, delta_value, config, floor):
    """Steps (4)-(8) of the pipeline for a fixed numeric delta."""
    v = np.array([s.var_term for s in summaries])
    fa = np.array([s.frob_A for s in summaries])
    tc = np.array([s.trace_cross for s in summaries])
    rate2 = np.array([2.0 * s.r_star / config.theta + s.s_plus for s in summaries])
    rate1 = np.array([s.r_star / config.theta + s.s_plus for s in summaries])

    ell = delta_value + log_over_delta
    t = delta0 * ell
    with np.errstate(divide="ignore", invalid="ignore"):
        indicator = fa / (2.0 * np.sqrt(t)) >= config.epsilon * rate2
        h = np.where(
            (fa > 0.0) & indicator,
            fa**2 / (config.epsilon**2 * np.where(rate2 > 0.0, rate2, 1.0) ** 2),
            0.0,
        )
    delta_final = np.array(
        [model_complexity(s, h[i], config, floor=floor) for i, s in enumerate(summaries)]
    )
    L = delta_final * ell
    Sigma = float(np.sum(np.exp(-L)))
    base = fa / (2.0 * np.sqrt(L)) + rate1
    sup_base = float(np.max(base))
    lam = math.sqrt(2.0) * math.sqrt(Sigma) / sup_base if sup_base > 0.0 else math.inf
    Gamma = (2.0 * math.sqrt(2.0) / (1.0 - config.theta)) * sup_base * math.sqrt(Sigma)
    qbase = fa / (np.sqrt(L) + np.sqrt(L + h)) + rate1
    with np.errstate(invalid="ignore"):  # lam = inf only when every qbase is 0
        lam_term = np.where(qbase > 0.0, lam * qbase**2, 0.0)
    Q = 2.0 * tc - config.theta * v + 2.0 * rate1 * L + 2.0 * fa * np.sqrt(L + h) + lam_term
    return ell, t, h, delta_final, L, Sigma, lam, Gamma, Q


def calibrate(model, family, K=None, config=None):
    """Build the full PenaltyTable for a family.

    Quadratic mode requires a reconstructor K with a valid certificate;
    predictive mode needs none. With ``delta = "auto"`` the smallest delta in
    [2^-6, 2^6] achieving Gamma <= target_c is found by bisection on the
    decreasing map delta -> Gamma; if even 2^6 misses the target, that value
    is used and a warning is attached to the table (escalated only by the
    CLI's --strict).
    """
    if config is None:
        config = PenaltyConfig()
    if not family:
        raise InvalidInputError("calibrate: empty family")
    ids = tuple(em.id for em in family)
    if len(set(ids)) != len(ids):
        raise InvalidInputError("calibrate: family ids must be unique")

    summaries = tuple(spectral_summary(model, em, K, config) for em in family)
    v = np.array([s.var_term for s in summaries])

    nondeg = [model_complexity(s, 0.0, config, floor=np.nan) for s in summaries if s.var_term > 0.0]
    floor = 1e-12 * float(np.median(nondeg)) if nondeg else 1e-12
    delta0 = np.array([model_complexity(s, 0.0, config, floor=floor) for s in summaries])

    p_dim = model.p if config.mode == "quadratic" else model.n
    # ell(delta) = delta + log_over_delta: only the additive constant moves
    # during the auto search, so the kernel part is computed once.
    ell_probe, sigma, tau = kernel_weights(delta0, config, p_dim, delta=1.0)
    log_over_delta = ell_probe - 1.0

    warnings_out = []
    if config.delta == "auto":
        target = config.target_c
        if target == "auto":
            target = 0.01 * float(np.max(v))
            if target <= 0.0:
                target = 0.01  # fully noiseless family: any positive target
        target = float(target)

        def gamma_of(d):
            return _assemble(summaries, delta0, log_over_delta, d, config, floor)[7]

        lo, hi = _DELTA_AUTO_GRID[0], _DELTA_AUTO_GRID[-1]
        if gamma_of(lo) <= target:
            delta_value = lo
        elif gamma_of(hi) > target:
            delta_value = hi
            warnings_out.append(
                f"Gamma target {target:g} unreachable within delta <= {hi:g} "
                f"(Gamma = {gamma_of(hi):g})"
            )
        else:
            for d in _DELTA_AUTO_GRID[1:]:
                if gamma_of(d) <= target:
                    lo, hi = d / 2.0, d
                    break
            while hi - lo > 1e-3 * hi:
                mid = 0.5 * (lo + hi)
                if gamma_of(mid) <= target:
                    hi = mid
                else:
                    lo = mid
            delta_value = hi
    else:
        delta_value = float(config.delta)

    ell, t, h, delta_final, L, Sigma, lam, Gamma, Q = _assemble(
        summaries, delta0, log_over_delta, delta_value, config, floor
    )
    return PenaltyTable(
        ids=ids,
        spectral=summaries,
        delta_m=delta_final,
        ell_m=ell,
        t_m=t,
        h_m=h,
        L_m=L,
        Q_m=Q,
        pen_m=Q.copy(),
        lam=lam,
        Sigma=Sigma,
        Gamma=Gamma,
        tau=tau,
        sigma_kernel=sigma,
        delta=delta_value,
        config=replace(config, delta=delta_value),
        warnings=tuple(warnings_out),
    )


def penalty_value(table, model_id):
    """The stored pen(m) for one model id (KeyError on unknown ids)."""
    return float(table.pen_m[table.index_of(model_id)])


def write_penalty_table(table, path):
    """CSV export: one row per model, global constants in a # header block."""
    cfg = table.config
    header = [
        ("lambda", table.lam),
        ("Sigma", table.Sigma),
        ("Gamma", table.Gamma),
        ("delta", table.delta),
        ("sigma", table.sigma_kernel),
        ("tau", table.tau),
        ("theta", cfg.theta),
        ("alpha", cfg.alpha),
        ("epsilon", cfg.epsilon),
        ("mode", cfg.mode),
    ]
    with open(path, "w", encoding="ascii") as fh:
        for key, value in header:
            fh.write(f"# {key} = {value!r}\n")
        fh.write("id,s_plus,r_star,frob_A,var_term,delta_m,ell_m,L_m,h_m,Q_m,pen_m\n")
        for i, mid in enumerate(table.ids):
            s = table.spectral[i]
            cells = [
                str(mid),
                repr(s.s_plus),
                repr(s.r_star),
                repr(s.frob_A),
                repr(s.var_term),
                repr(float(table.delta_m[i])),
                repr(float(table.ell_m[i])),
                repr(float(table.L_m[i])),
                repr(float(table.h_m[i])),
                repr(float(table.Q_m[i])),
                repr(float(table.pen_m[i])),
            ]
            fh.write(",".join(cells) + "\n")
