"""Data-driven selection of the penalized estimator.

The criterion for a family member is the observable quadratic form plus its
calibrated penalty,

    Crit(m) = y' (Psi_m'Psi_m - 2 K'Psi_m) y + pen(m)

(in predictive mode Psi_m is replaced by X Psi_m and K by the identity), and
the penalized estimator is ``Psi_mtilde y`` for the minimizing model. The
quadratic form is evaluated with two matrix-vector products per model, never
by materializing Psi'Psi.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InvalidInputError
from .identify import Reconstructor
from .linmodel import EstimatorMatrix, oracle_select, predictive_risk, quadratic_risk


@dataclass(frozen=True)
class SelectionResult:
    """Chosen model, per-model criterion values, and the estimate vector."""

    chosen: object
    criterion: np.ndarray
    estimate: np.ndarray
    table: object
    mode: str


@dataclass(frozen=True)
class RiskReport:
    """Monte-Carlo performance of the selector against the exact-risk oracle."""

    ids: tuple
    exact_risk: np.ndarray
    oracle: object
    oracle_risk: float
    penalized_risk_estimate: float
    rho: float
    relative_error: float
    criterion_mean: np.ndarray
    chosen_per_trial: tuple
    sq_error_per_trial: np.ndarray
    trials: int
    seed: int


def _as_matrix(obj):
    if isinstance(obj, Reconstructor):
        return obj.K
    if isinstance(obj, EstimatorMatrix):
        return obj.psi
    return np.asarray(obj, dtype=float)


def criterion(y, psi, K, pen):
    """Crit = y'(Psi'Psi - 2 K'Psi) y + pen via matrix-vector products."""
    y = np.asarray(y, dtype=float).reshape(-1)
    P = _as_matrix(psi)
    Km = _as_matrix(K)
    if P.shape[1] != y.size or Km.shape != P.shape:
        raise InvalidInputError(
            f"criterion: psi {P.shape}, K {Km.shape} inconsistent with y of length {y.size}"
        )
    u = P @ y
    return float(u @ u - 2.0 * (Km @ y) @ u + pen)


def _effective_stack(model, family, K, mode):
    """Stacked effective estimator matrices and the effective K."""
    psis = np.stack([em.psi for em in family])
    for em in family:
        if em.psi.shape != (model.p, model.n):
            raise InvalidInputError(
                f"family member {em.id!r} has shape {em.psi.shape}, "
                f"expected {(model.p, model.n)}"
            )
    if mode == "predictive":
        return np.einsum("ij,mjk->mik", model.X, psis), np.eye(model.n)
    Km = _as_matrix(K)
    if Km is None or Km.shape != (model.p, model.n):
        raise ConfigurationError("quadratic mode requires K of shape (p, n)")
    return psis, Km


def _criteria_for(y, eff_psis, K_eff, pens):
    U = eff_psis @ y
    return np.einsum("mi,mi->m", U, U) - 2.0 * (U @ (K_eff @ y)) + pens


def select(y, model, family, K, table):
    """Minimize the penalized criterion over the family.

    The table must have been calibrated for this family (ids must agree, in
    order). Ties go to the first index. The returned estimate is always
    ``Psi_chosen @ y`` in solution space, whichever mode was used.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape != (model.n,):
        raise InvalidInputError(f"y length {y.size} != n = {model.n}")
    if not family:
        raise InvalidInputError("select: empty family")
    if tuple(em.id for em in family) != tuple(table.ids):
        raise ConfigurationError("table was calibrated for a different family (ids differ)")
    mode = table.config.mode
    eff_psis, K_eff = _effective_stack(model, family, K, mode)
    crit = _criteria_for(y, eff_psis, K_eff, table.pen_m)
    best = int(np.argmin(crit))
    estimate = family[best].psi @ y
    return SelectionResult(
        chosen=family[best].id, criterion=crit, estimate=estimate, table=table, mode=mode
    )


def risk_report(model, family, K, table, beta_true, trials, seed, threads=1):
    """Run seeded selection trials and compare with the exact-risk oracle.

    Each trial draws z from its own substream (root seed split by trial
    index, so the trial set is order independent), forms y = X beta + R z,
    selects, and records the squared error of the penalized estimate in the
    table's mode. rho is the mean squared error over the oracle's exact risk.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    beta = np.asarray(beta_true, dtype=float).reshape(-1)
    mode = table.config.mode
    risk_fn = quadratic_risk if mode == "quadratic" else predictive_risk
    if tuple(em.id for em in family) != tuple(table.ids):
        raise ConfigurationError("table was calibrated for a different family (ids differ)")
    oracle_id, risks = oracle_select(model, family, beta, mode)
    oracle_risk = float(np.min(risks))
    eff_psis, K_eff = _effective_stack(model, family, K, mode)

    children = np.random.SeedSequence(seed).spawn(trials)
    xb = model.X @ beta
    target = xb if mode == "predictive" else beta

    def one_trial(i):
        z = np.random.default_rng(children[i]).standard_normal(model.n)
        y = xb + model.R @ z
        crit = _criteria_for(y, eff_psis, K_eff, table.pen_m)
        best = int(np.argmin(crit))
        est = family[best].psi @ y
        if mode == "predictive":
            est = model.X @ est
        return crit, best, float(np.sum((est - target) ** 2))

    crit_sum = np.zeros(len(family))
    chosen = [None] * trials
    sq_err = np.zeros(trials)
    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_trial, range(trials)))
    else:
        results = [one_trial(i) for i in range(trials)]
    for i, (crit, best, err) in enumerate(results):
        crit_sum += crit
        chosen[i] = family[best].id
        sq_err[i] = err

    mean_err = float(np.mean(sq_err))
    norm_target = float(target @ target)
    return RiskReport(
        ids=tuple(em.id for em in family),
        exact_risk=risks,
        oracle=oracle_id,
        oracle_risk=oracle_risk,
        penalized_risk_estimate=mean_err,
        rho=mean_err / oracle_risk if oracle_risk > 0 else float("inf"),
        relative_error=mean_err / norm_target if norm_target > 0 else float("inf"),
        criterion_mean=crit_sum / trials,
        chosen_per_trial=tuple(chosen),
        sq_error_per_trial=sq_err,
        trials=trials,
        seed=seed,
    )


def write_selection(result, path):
    """SelectionResult as CSV: one row per model, chosen flag in last column."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# chosen = {result.chosen}\n# mode = {result.mode}\n")
        fh.write("id,criterion,pen,chosen\n")
        for i, mid in enumerate(result.table.ids):
            fh.write(
                f"{mid},{float(result.criterion[i])!r},"
                f"{float(result.table.pen_m[i])!r},{int(mid == result.chosen)}\n"
            )


def write_risk_report(report, path, table=None):
    """RiskReport as CSV: per-model exact risk, penalty (when a table is
    supplied) and mean criterion, with the summary figures in a # header."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(
            f"# oracle = {report.oracle}\n"
            f"# oracle_risk = {report.oracle_risk!r}\n"
            f"# penalized_risk_estimate = {report.penalized_risk_estimate!r}\n"
            f"# rho = {report.rho!r}\n"
            f"# relative_error = {report.relative_error!r}\n"
            f"# trials = {report.trials}\n# seed = {report.seed}\n"
        )
        if table is None:
            fh.write("id,exact_risk,criterion_mean\n")
        else:
            fh.write("id,exact_risk,pen,criterion_mean\n")
        for i, mid in enumerate(report.ids):
            cells = [str(mid), repr(float(report.exact_risk[i]))]
            if table is not None:
                cells.append(repr(float(table.pen_m[i])))
            cells.append(repr(float(report.criterion_mean[i])))
            fh.write(",".join(cells) + "\n")


def write_trace(report, path):
    """Per-trial trace as CSV: trial index, chosen model id, squared error."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("trial,chosen,sq_error\n")
        for i, mid in enumerate(report.chosen_per_trial):
            fh.write(f"{i},{mid},{float(report.sq_error_per_trial[i])!r}\n")
