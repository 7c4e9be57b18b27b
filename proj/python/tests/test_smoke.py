import math

import numpy as np
import pytest

import bloomvmo as bv


def test_unit_weight_is_a1():
    w = bv.make_weight(1, 6, {"kind": "constant", "c": 1})
    assert bv.ap_characteristic(w, 2.0) == pytest.approx(1.0, abs=1e-12)


def test_constant_symbol_has_zero_bmo():
    b = bv.make_symbol(1, 6, {"kind": "constant", "c": 3})
    assert bv.bmo_norm(b, np.ones_like(b)) == 0.0


def test_weighted_norm_matches_direct_sum():
    rng = np.random.default_rng(3)
    f = rng.normal(size=64)
    lam = rng.uniform(0.5, 2.0, size=64)
    p = 1.7
    direct = (np.sum(np.abs(f * lam) ** p) / 64) ** (1 / p)
    assert bv.weighted_norm(f, lam, p) == pytest.approx(direct, rel=1e-12)


def test_sparse_round_trip():
    f = bv.make_symbol(1, 7, {"kind": "indicator", "lo": 0.3125, "hi": 0.328125})
    fam = bv.build_sparse_cz(f, lam=2.0)
    ok, message, ratio = bv.verify_sparse(fam)
    assert ok, message
    assert ratio >= fam["eta"] - 1e-12
    out = bv.apply_sparse("T_S", f, fam)
    assert out.shape == f.shape
    assert np.all(out >= 0)


def test_frac_maximal_of_constant():
    f = np.ones(32)
    out = bv.frac_maximal(f, 0.0)
    assert np.allclose(out, 1.0)


def test_boyd_identity():
    lower, upper = bv.boyd_matrix(np.eye(6), 2.0, 2.0)
    assert lower == pytest.approx(1.0, abs=1e-9)
    assert upper == pytest.approx(1.0, abs=1e-9)


def test_signed_norm_against_svd():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(8, 8))
    lower, upper = bv.signed_norm(a, 2.0, 2.0)
    exact = np.linalg.svd(a, compute_uv=False)[0]
    assert lower <= upper + 1e-12
    assert lower == pytest.approx(exact, rel=1e-6)


def test_maximal_commutator_norm_bracket():
    b = bv.make_symbol(1, 5, {"kind": "step", "breakpoint": 0.5, "low": 0, "high": 1})
    ones = np.ones_like(b)
    lower, upper = bv.maximal_commutator_norm(b, 0.5, 4 / 3, ones, ones)
    assert 0 < lower <= upper


def test_unknown_symbol_kind():
    with pytest.raises(bv.UnknownNameError):
        bv.make_symbol(1, 4, {"kind": "nope"})


def test_run_experiment_bmo(tmp_path):
    code, summary = bv.run_experiment(
        {"grid": {"n": 1, "L": 6}, "symbol": {"kind": "constant", "c": 2}, "diagnostic": "bmo"}, str(tmp_path))
    assert code == 0
    assert summary["bmo_norm"] == 0.0
    assert summary["grid"] == {"n": 1, "L": 6}
    assert (tmp_path / "config.replay.json").exists()


def test_supplied_q_is_rejected(tmp_path):
    with pytest.raises(bv.PreconditionError):
        bv.run_experiment({"triple": {"alpha": 0.5, "p": 1.5, "q": 3}, "diagnostic": "bmo"}, str(tmp_path))
