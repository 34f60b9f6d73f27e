import math

import numpy as np
import pytest

from sc3sim import verify
from sc3sim.adversary import AttackPattern, corrupt_batch
from sc3sim.field import matvec, uniform_residues
from sc3sim.hashcore import hash_vector, params_for_q
from sc3sim.verify import (CheckBatch, Checker, CostModel, Verdict, alpha_beta, choose_checker,
                           detect_two_phase, hw_check, lw_check, lw_rounds, lw_threshold,
                           multiround_lw, recover)


def honest_batch(params, z, rng, cols=4):
    q = params.q
    payloads = uniform_residues(z * cols, q, rng).reshape(z, cols)
    x = uniform_residues(cols, q, rng)
    return CheckBatch(0, tuple(range(z)), payloads, matvec(payloads, x, q), hash_vector(x, params))


def with_values(batch, values):
    return CheckBatch(batch.worker_id, batch.ids, batch.payloads, np.asarray(values, dtype=np.int64),
                      batch.x_digests)


def rate(trials, fn):
    return sum(fn() for _ in range(trials)) / trials


def binom_tol(p, n, k=3.0):
    return k * math.sqrt(p * (1 - p) / n)


def test_batch_validation(big, rng):
    b = honest_batch(big, 4, rng)
    with pytest.raises(ValueError):
        CheckBatch(0, (), b.payloads[:0], b.values[:0], b.x_digests)
    with pytest.raises(ValueError):
        CheckBatch(0, (0, 1), b.payloads, b.values, b.x_digests)
    with pytest.raises(ValueError):
        CheckBatch(0, b.ids, b.payloads, b.values, b.x_digests[:2])
    assert len(b.subset([1, 3])) == 2 and b.subset([1, 3]).ids == (1, 3)


@pytest.mark.parametrize("z", [1, 2, 7, 64])
def test_honest_batches_pass(big, rng, z):
    for _ in range(20):
        b = honest_batch(big, z, rng)
        assert not lw_check(b, big, rng).detected
        assert not hw_check(b, big, rng).detected
        out = multiround_lw(b, 5, big, rng)
        assert not out.detected and out.rounds_used == 5
        assert detect_two_phase(b, big, rng) is Verdict.ALL_VERIFIED


def test_alpha_beta_agree_on_honest(big, rng):
    b = honest_batch(big, 5, rng)
    a, bb = alpha_beta(b, np.array([3, -2, 0, 7, 1]), big)
    assert a == bb


def test_symmetric_pair_half_detected(big, rng):
    n = 20_000
    b = honest_batch(big, 8, rng)
    pat = AttackPattern("sym-general", n_corrupt=2)
    p = rate(n, lambda: lw_check(with_values(b, corrupt_batch(b.values, pat, big.q, rng)[0]), big, rng).detected)
    assert abs(p - 0.5) < binom_tol(0.5, n)


def test_asymmetric_pair_always_detected(big, rng):
    b = honest_batch(big, 6, rng)
    q = big.q
    for _ in range(2000):
        d1, d2 = (int(v) for v in rng.integers(1, q, 2))
        if d1 in (d2, q - d2):
            continue
        v = b.values.copy()
        v[1] = (v[1] + d1) % q
        v[4] = (v[4] + d2) % q
        assert lw_check(with_values(b, v), big, rng).detected


def test_hw_single_corruption_exhaustive_q11(rng):
    params = params_for_q(11, seed=3)
    b = honest_batch(params, 5, rng)
    v = b.values.copy()
    v[2] = (v[2] + 4) % 11
    bad = with_values(b, v)
    base = rng.integers(0, 11, 5)
    hits = 0
    for c in range(11):
        coeffs = base.copy()
        coeffs[2] = c
        a, bb = alpha_beta(bad, coeffs, params)
        hits += a != bb
    assert hits == 10


def test_hw_detects_any_pattern_q251(rng):
    params = params_for_q(251, seed=1)
    b = honest_batch(params, 6, rng)
    n = 20_000
    for pat in (AttackPattern("sym-general", n_corrupt=2), AttackPattern("triple")):
        p = rate(n, lambda: hw_check(with_values(b, corrupt_batch(b.values, pat, 251, rng)[0]),
                                     params, rng).detected)
        assert p >= 0.99 - binom_tol(0.99, n)


def test_one_round_equals_lw(big):
    b = honest_batch(big, 6, np.random.default_rng(0))
    v = b.values.copy()
    v[0] = (v[0] + 9) % big.q
    v[3] = (v[3] - 9) % big.q
    bad = with_values(b, v)
    for s in range(50):
        one = multiround_lw(bad, 1, big, np.random.default_rng(s))
        ref = lw_check(bad, big, np.random.default_rng(s))
        assert (one.detected, one.alpha, one.beta) == (ref.detected, ref.alpha, ref.beta)


def test_multiround_ten_rounds(big, rng):
    b = honest_batch(big, 8, rng)
    pat = AttackPattern("sym-general", n_corrupt=2)
    n = 20_000
    p = rate(n, lambda: multiround_lw(with_values(b, corrupt_batch(b.values, pat, big.q, rng)[0]),
                                      10, big, rng).detected)
    assert abs(p - (1 - 2**-10)) < 0.01


def test_multiround_rejects_zero_rounds(big, rng):
    with pytest.raises(ValueError):
        multiround_lw(honest_batch(big, 2, rng), 0, big, rng)


def test_choose_checker(big):
    cost = CostModel(1.0, 1.0)
    q = 2**31 - 1
    params = params_for_q(q, seed=0)
    t = lw_threshold(cost, q)
    assert t == pytest.approx(961, abs=0.1)
    assert choose_checker(1, CostModel.schoolbook(big), big) == Checker("hw")
    assert choose_checker(2000, cost, params) == Checker("lw", 31)
    assert choose_checker(math.ceil(t), cost, params).kind == "lw"
    assert choose_checker(math.ceil(t) - 1, cost, params).kind == "hw"
    assert lw_rounds(q) == 31
    with pytest.raises(ValueError):
        choose_checker(5, CostModel(0.0, 1.0), params)


def test_threshold_is_inclusive(big, monkeypatch):
    monkeypatch.setattr(verify, "lw_threshold", lambda cost, q: 100.0)
    cost = CostModel(1.0, 1.0)
    assert choose_checker(100, cost, big).kind == "lw"
    assert choose_checker(99, cost, big).kind == "hw"


def test_default_cost_ratio(big):
    # schoolbook cost of 62-bit vs 31-bit multiplication
    assert CostModel.schoolbook(big).ratio == pytest.approx((62 / 31) ** 2)


@pytest.mark.parametrize("z", [16, 32, 64])
def test_fully_corrupted_batches_discarded(big, rng, z):
    b = honest_batch(big, z, rng)
    pat = AttackPattern("random", rho_c=1.0)
    n = 2000
    p = rate(n, lambda: detect_two_phase(with_values(b, corrupt_batch(b.values, pat, big.q, rng)[0]),
                                         big, rng) is Verdict.DISCARD_ALL)
    assert p >= 0.99


def test_single_corruption_never_survives_the_screen(big, rng):
    # c * delta is never 0 for c = +-1 and delta != 0, so one corrupted
    # result cannot slip past LW into recovery
    b = honest_batch(big, 64, rng)
    for _ in range(500):
        v = b.values.copy()
        i = int(rng.integers(64))
        v[i] = (v[i] + int(rng.integers(1, big.q))) % big.q
        assert detect_two_phase(with_values(b, v), big, rng) is Verdict.DISCARD_ALL


def test_recover_single_in_eight(big, rng):
    for i in range(8):
        b = honest_batch(big, 8, rng)
        v = b.values.copy()
        v[i] = (v[i] + 5) % big.q
        out = recover(with_values(b, v), big, rng)
        assert out.corrupted_ids == {i}
        assert out.verified_ids == set(range(8)) - {i}
        assert out.checks_performed <= 7


def test_recover_all_corrupted(big, rng):
    pat = AttackPattern("random", rho_c=1.0)
    for _ in range(50):
        b = honest_batch(big, 16, rng)
        out = recover(with_values(b, corrupt_batch(b.values, pat, big.q, rng)[0]), big, rng)
        assert out.verified_ids == set() and out.corrupted_ids == set(range(16))


def test_recover_clean(big, rng):
    b = honest_batch(big, 10, rng)
    out = recover(b, big, rng)
    assert out.corrupted_ids == set() and out.verified_ids == set(range(10))
    assert out.checks_performed == 2


def test_recover_singleton(big, rng):
    b = honest_batch(big, 1, rng)
    bad = with_values(b, (b.values + 1) % big.q)
    assert recover(bad, big, rng).corrupted_ids == {0}
