"""Command-line entry point.

Subcommands: ``select`` (penalized selection on data files), ``penalty-table``
(calibration export), ``experiment`` (the smoothing / inverse studies),
``check-identifiability`` (augmented-rank certificate), and ``conc-verify``
(Monte-Carlo audit of the tail bounds). Exit codes: 0 success, 2 input error,
3 identifiability error, 4 calibration warning escalated by ``--strict``
(1 for a failed conc-verify audit). ``LINSEL_SEED`` is the seed fallback.

Matrix files carry a ``rows cols`` header line followed by row-major entries
(see linsel.matio); family files are flat ``key = value`` blocks under
``[kind]`` headers (see linsel.famconfig for the key reference).
"""

import argparse
import os
import sys

import numpy as np

from . import conc, famconfig, harness, identify, matio, penalty
from .errors import ConfigurationError, IdentifiabilityError, InvalidInputError
from .linmodel import LinearModel
from .select import select as run_selection
from .select import write_selection


def _delta_arg(value):
    return value if value == "auto" else float(value)


def _add_penalty_flags(sub):
    sub.add_argument("--mode", choices=["quadratic", "predictive"], default="quadratic")
    sub.add_argument("--theta", type=float, default=0.75)
    sub.add_argument("--alpha", type=float, default=1.0)
    sub.add_argument("--epsilon", type=float, default=1.0)
    sub.add_argument("--delta", type=_delta_arg, default="auto",
                     help="model-weight constant, a positive number or 'auto'")
    sub.add_argument("--target-C", dest="target_c", type=_delta_arg, default="auto",
                     help="Gamma target for --delta auto")
    sub.add_argument("--strict", action="store_true",
                     help="escalate calibration warnings to exit code 4")


def _add_common_flags(sub):
    sub.add_argument("--output-dir", default=".")
    sub.add_argument("--threads", type=int, default=1)


def _penalty_config(args):
    return penalty.PenaltyConfig(
        theta=args.theta,
        alpha=args.alpha,
        epsilon=args.epsilon,
        delta=args.delta,
        target_c=args.target_c,
        mode=args.mode,
    )


def _seed(args):
    if getattr(args, "seed", None) is not None:
        return args.seed
    return int(os.environ.get("LINSEL_SEED", "0"))


def _load_model(args):
    X = matio.read_matrix(args.X)
    R = matio.read_matrix(args.R) if args.R else np.eye(X.shape[0])
    return LinearModel(X, R)


def _reconstructor(spec, model):
    if spec is None:
        return None
    if spec == "full-rank":
        return identify.reconstructor_full_rank(model.X)
    if spec == "identity":
        if model.p != model.n:
            raise InvalidInputError("--K identity requires a square design")
        return np.eye(model.p)
    if spec.startswith("basis:"):
        phi = matio.read_matrix(spec[len("basis:"):])
        return identify.reconstructor_basis(model.X, phi)
    return matio.read_matrix(spec)


def _check_table_warnings(table, strict):
    for msg in table.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    if strict and table.warnings:
        return 4
    return 0


def cmd_select(args):
    model = _load_model(args)
    y = matio.read_vector(args.y)
    config = _penalty_config(args)
    K = _reconstructor(args.K, model)
    if config.mode == "quadratic" and K is None:
        raise InvalidInputError("quadratic mode requires --K")
    blocks = famconfig.parse_family_config(args.family)
    family = famconfig.build_family_from_config(
        model, blocks, base_dir=os.path.dirname(os.path.abspath(args.family))
    )
    table = penalty.calibrate(model, family, K, config)
    rc = _check_table_warnings(table, args.strict)
    if rc:
        return rc
    result = run_selection(y, model, family, K, table)
    os.makedirs(args.output_dir, exist_ok=True)
    write_selection(result, os.path.join(args.output_dir, "result.csv"))
    matio.write_matrix(os.path.join(args.output_dir, "estimate.txt"), result.estimate)
    print(f"chosen model: {result.chosen}")
    return 0


def cmd_penalty_table(args):
    model = _load_model(args)
    config = _penalty_config(args)
    K = _reconstructor(args.K, model)
    if config.mode == "quadratic" and K is None:
        raise InvalidInputError("quadratic mode requires --K")
    blocks = famconfig.parse_family_config(args.family)
    family = famconfig.build_family_from_config(
        model, blocks, base_dir=os.path.dirname(os.path.abspath(args.family))
    )
    table = penalty.calibrate(model, family, K, config)
    rc = _check_table_warnings(table, args.strict)
    if rc:
        return rc
    os.makedirs(args.output_dir, exist_ok=True)
    out = os.path.join(args.output_dir, "penalty_table.csv")
    penalty.write_penalty_table(table, out)
    print(f"penalty table written to {out}")
    return 0


def cmd_experiment(args):
    if args.which == "smoothing" and args.models < 1:
        raise InvalidInputError("--models must be >= 1")
    config = harness.ExperimentConfig(
        experiment=args.which,
        p=args.p,
        models=args.models,
        trials=args.trials,
        seed=_seed(args),
        noise_scale=args.noise_scale,
        normalization=args.normalization,
        penalty=_penalty_config(args),
        output_dir=args.output_dir,
        threads=args.threads,
    )
    outcome = harness.run_experiment(config)
    rc = _check_table_warnings(outcome.table, args.strict)
    report = outcome.report
    if args.which == "smoothing":
        print(
            f"rho = {report.rho:.4f} (M = {args.models}, trials = {args.trials}, "
            f"seed = {config.seed}, oracle sigma = {outcome.oracle_sigma:g})"
        )
    else:
        print(
            f"rho = {report.rho:.4f} (trials = {args.trials}, seed = {config.seed}, "
            f"condition = {outcome.condition:.1f}); relative errors: "
            f"oracle = {outcome.oracle_relative_error:.4%}, "
            f"penalized = {outcome.penalized_relative_error:.4%}, "
            f"direct inversion = {outcome.direct_relative_error:.1%}"
        )
    return rc


def cmd_check_identifiability(args):
    X = matio.read_matrix(args.X)
    phi = matio.read_matrix(args.phi) if args.phi else None
    cert = identify.check_identifiability(X, phi)
    for key, value in cert.as_rows():
        print(f"{key} = {value}")
    if args.output_dir:
        os.makedirs(args.output_dir, exist_ok=True)
        out = os.path.join(args.output_dir, "identifiability.csv")
        with open(out, "w", encoding="ascii") as fh:
            fh.write("key,value\n")
            for key, value in cert.as_rows():
                fh.write(f"{key},{value}\n")
    return 0


def cmd_conc_verify(args):
    seed = _seed(args)
    xs = [float(tok) for tok in args.x.split(",")]
    rng = np.random.default_rng(seed)
    failures = 0
    for inst in range(args.instances):
        A = rng.standard_normal((args.p, args.p))
        b = rng.standard_normal(args.p)
        for x in xs:
            freq = conc.empirical_exceedance(
                A, b, x, "upper", samples=args.samples,
                seed=seed + 1000 + inst, threads=args.threads,
            )
            bound = float(np.exp(-x))
            se = float(np.sqrt(bound * (1.0 - bound) / args.samples))
            ok = freq <= bound + 3.0 * se
            failures += 0 if ok else 1
            print(
                f"instance {inst} x={x:g}: exceedance {freq:.6f} "
                f"<= exp(-x) + 3se = {bound + 3.0 * se:.6f} [{'ok' if ok else 'VIOLATED'}]"
            )
    return 0 if failures == 0 else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="linsel",
        description="Penalized selection among arbitrary linear estimators "
        "of a vector observed through a correlated Gaussian linear model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sel = sub.add_parser("select", help="select an estimator for observed data")
    p_sel.add_argument("--y", required=True, help="observation vector file")
    p_sel.add_argument("--X", required=True, help="design matrix file")
    p_sel.add_argument("--R", help="noise-shaping matrix file (default: identity)")
    p_sel.add_argument("--family", required=True, help="family config file")
    p_sel.add_argument("--K", help="reconstructor: full-rank | identity | "
                                   "basis:<phi file> | <matrix file>")
    _add_penalty_flags(p_sel)
    _add_common_flags(p_sel)
    p_sel.set_defaults(func=cmd_select)

    p_tab = sub.add_parser("penalty-table", help="calibrate and export the penalty table")
    p_tab.add_argument("--X", required=True)
    p_tab.add_argument("--R")
    p_tab.add_argument("--family", required=True)
    p_tab.add_argument("--K")
    _add_penalty_flags(p_tab)
    _add_common_flags(p_tab)
    p_tab.set_defaults(func=cmd_penalty_table)

    p_exp = sub.add_parser("experiment", help="run a simulation study")
    p_exp.add_argument("which", choices=["smoothing", "inverse"])
    p_exp.add_argument("--p", type=int, default=100)
    p_exp.add_argument("--models", type=int, default=100,
                       help="bank size M (smoothing only)")
    p_exp.add_argument("--trials", type=int, default=50)
    p_exp.add_argument("--seed", type=int, default=None)
    p_exp.add_argument("--noise-scale", type=float, default=1.0)
    p_exp.add_argument("--normalization",
                       choices=["row_stochastic", "as_written"],
                       default="row_stochastic")
    _add_penalty_flags(p_exp)
    _add_common_flags(p_exp)
    p_exp.set_defaults(func=cmd_experiment)

    p_chk = sub.add_parser("check-identifiability",
                           help="rank certificate of the stacked [X; phi]")
    p_chk.add_argument("--X", required=True)
    p_chk.add_argument("--phi")
    p_chk.add_argument("--output-dir", default=None)
    p_chk.set_defaults(func=cmd_check_identifiability)

    p_cv = sub.add_parser("conc-verify",
                          help="Monte-Carlo audit of the quadratic-form tail bound")
    p_cv.add_argument("--p", type=int, default=20)
    p_cv.add_argument("--instances", type=int, default=5)
    p_cv.add_argument("--samples", type=int, default=1_000_000)
    p_cv.add_argument("--x", default="0.5,1,2,3", help="comma list of tail levels")
    p_cv.add_argument("--seed", type=int, default=None)
    p_cv.add_argument("--threads", type=int, default=1)
    p_cv.set_defaults(func=cmd_conc_verify)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IdentifiabilityError as exc:
        print(f"identifiability error: {exc}", file=sys.stderr)
        return 3
    except (InvalidInputError, ConfigurationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
