"""Estimator-family definition files.

Flat ``key = value`` blocks under ``[kind]`` headers, one block per family
member (or per generator for banks and grids). ``#`` starts a comment.
Section names may repeat. Recognized kinds and keys:

    [tikhonov]            P, H
    [basis_constrained]   P, phi_bar
    [basis_regularized]   P, phi_bar, H
    [variable_selection]  P, nu            (path or comma list of 0/1)
    [gaussian_bank]       models, normalization
    [diff_regularized]    grid = default | a, b, c comma lists (product)
    [ideal]               beta             (path to the hypothesized signal)

Matrix-valued keys (P, H, phi_bar) accept ``identity``, ``zero``, a number
(that multiple of the identity), or a path to a matrix file, resolved
relative to the config file. Members are merged in file order with
sequential integer ids.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from . import families
from .errors import InvalidInputError
from .matio import read_matrix, read_vector

_KINDS = (
    "tikhonov",
    "basis_constrained",
    "basis_regularized",
    "variable_selection",
    "gaussian_bank",
    "diff_regularized",
    "ideal",
)


@dataclass(frozen=True)
class FamilySpec:
    """One config block: the builder kind plus its raw parameter record."""

    kind: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidInputError(f"unknown family kind {self.kind!r}")


def parse_family_config(path):
    """Parse the file into a list of FamilySpec blocks."""
    blocks = []
    params = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                kind = line[1:-1].strip()
                if kind not in _KINDS:
                    raise InvalidInputError(
                        f"{path}: line {lineno}: unknown family kind [{kind}]"
                    )
                params = {}
                blocks.append(FamilySpec(kind, params))
                continue
            if "=" not in line:
                raise InvalidInputError(f"{path}: line {lineno}: expected 'key = value'")
            if params is None:
                raise InvalidInputError(f"{path}: line {lineno}: key before any [section]")
            key, value = (s.strip() for s in line.split("=", 1))
            params[key.lower()] = value
    if not blocks:
        raise InvalidInputError(f"{path}: no family blocks found")
    return blocks


def _square_matrix(value, size, base_dir, key):
    if value is None or value == "identity":
        return np.eye(size)
    if value == "zero":
        return np.zeros((size, size))
    try:
        return float(value) * np.eye(size)
    except ValueError:
        pass
    mat = read_matrix(os.path.join(base_dir, value))
    if mat.shape != (size, size):
        raise InvalidInputError(f"{key}: expected shape ({size}, {size}), got {mat.shape}")
    return mat


def _float_list(value, key):
    try:
        return [float(tok) for tok in value.split(",")]
    except ValueError:
        raise InvalidInputError(f"{key}: expected a comma list of numbers, got {value!r}") from None


def build_family_from_config(model, blocks, base_dir="."):
    """Instantiate every FamilySpec against the model; merge with sequential ids."""
    built = []
    n, p = model.n, model.p
    try:
        _build_blocks(model, blocks, base_dir, built, n, p)
    except KeyError as exc:  # missing required option
        raise InvalidInputError(f"family config: missing key {exc}") from exc
    return families.merge_families(*built)


def _build_blocks(model, blocks, base_dir, built, n, p):
    for spec in blocks:
        kind, opts = spec.kind, spec.parameters
        if kind == "tikhonov":
            P = _square_matrix(opts.get("p"), n, base_dir, "P")
            H = _square_matrix(opts.get("h", "zero"), p, base_dir, "H")
            built.append([families.build_tikhonov(model.X, P, H)])
        elif kind == "basis_constrained":
            P = _square_matrix(opts.get("p"), n, base_dir, "P")
            phi = read_matrix(os.path.join(base_dir, opts["phi_bar"]))
            built.append([families.build_basis_constrained(model.X, P, phi)])
        elif kind == "basis_regularized":
            P = _square_matrix(opts.get("p"), n, base_dir, "P")
            phi = read_matrix(os.path.join(base_dir, opts["phi_bar"]))
            H = _square_matrix(opts.get("h", "zero"), p, base_dir, "H")
            built.append([families.build_basis_regularized(model.X, P, phi, H)])
        elif kind == "variable_selection":
            P = _square_matrix(opts.get("p"), n, base_dir, "P")
            nu_val = opts["nu"]
            if "," in nu_val:
                nu = np.asarray(_float_list(nu_val, "nu"))
            else:
                nu = read_vector(os.path.join(base_dir, nu_val))
            built.append([families.build_variable_selection(model.X, P, nu)])
        elif kind == "gaussian_bank":
            M = int(opts.get("models", "100"))
            norm = opts.get("normalization", "row_stochastic")
            built.append(families.build_gaussian_bank(p, M, norm))
        elif kind == "diff_regularized":
            if opts.get("grid", "").strip() == "default" or not opts:
                grid = families.default_diff_grid()
            elif "grid" in opts:
                raise InvalidInputError(f"diff_regularized: unknown grid {opts['grid']!r}")
            else:
                a = _float_list(opts.get("a", "0"), "a")
                b = _float_list(opts.get("b", "0"), "b")
                c = _float_list(opts.get("c", "0"), "c")
                grid = [(x, y, z) for x in a for y in b for z in c]
            built.append(families.build_diff_regularizer_family(model.X, grid))
        elif kind == "ideal":
            beta = read_vector(os.path.join(base_dir, opts["beta"]))
            built.append([families.build_ideal(beta, model.X, model.R)])
