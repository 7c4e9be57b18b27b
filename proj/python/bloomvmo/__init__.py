"""Dyadic-grid diagnostics for Bloom-weighted fractional commutators."""

import json as _json

from . import _core
from ._core import (
    DomainError,
    InvariantViolation,
    PreconditionError,
    UnknownNameError,
    ap_characteristic,
    bmo_norm,
    boyd_matrix,
    frac_maximal,
    frac_maximal_commutator,
    maximal_commutator_norm,
    riesz_commutator,
    riesz_potential,
    signed_norm,
    vmo_moduli,
    weighted_norm,
)


def _spec(spec):
    return spec if isinstance(spec, str) else _json.dumps(spec)


def make_symbol(n, depth, spec):
    return _core.make_symbol(n, depth, _spec(spec))


def make_weight(n, depth, spec):
    return _core.make_weight(n, depth, _spec(spec))


def build_sparse_cz(f, n=1, shift=0, lam=2.0):
    """CZ stopping family of |f| as a dict in the sparse-family JSON schema."""
    return _json.loads(_core.build_sparse_cz(f, n, shift, lam))


def verify_sparse(family):
    return _core.verify_sparse(_spec(family))


def apply_sparse(op, f, family, alpha=0.0, b=None, n=1):
    return _core.apply_sparse(op, f, _spec(family), alpha, b, n)


def run_experiment(config, out_dir=""):
    """Runs one diagnostic; returns (exit_code, summary dict)."""
    code, summary = _core.run_experiment(_spec(config), out_dir)
    return code, _json.loads(summary)
