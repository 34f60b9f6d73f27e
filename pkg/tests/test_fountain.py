import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sc3sim.fountain import (CodedPacket, DegreeDist, Decoder, Encoder, InconsistentSystem,
                             InsufficientRank, compute, decode, realized_overhead,
                             robust_soliton)


def direct_product(A, x, q):
    return [sum(int(a) * int(b) for a, b in zip(row, x)) % q for row in A]


def test_robust_soliton_is_a_pmf():
    for k in (1, 2, 10, 1000):
        mu = robust_soliton(k)
        assert mu.shape == (k + 1,)
        assert mu[0] == 0 and np.all(mu >= 0)
        assert mu.sum() == pytest.approx(1.0)


def test_single_row_code(rng):
    A = np.array([[7, 1, 2]])
    pkt = Encoder(A, 11, rng).encode_next()
    assert pkt.gamma.tolist() == [1] and pkt.payload.tolist() == [7, 1, 2]


def test_forced_gamma_payload(rng):
    enc = Encoder(np.array([[1, 2], [3, 4]]), 5, rng)
    pkt = enc.encode_next(np.array([1, 1]))
    assert pkt.payload.tolist() == [4, 1]
    assert pkt.degree == 2 and pkt.id == 0
    assert enc.encode_next().id == 1


def test_forced_gamma_must_be_nonzero(rng):
    enc = Encoder(np.array([[1, 2], [3, 4]]), 5, rng)
    with pytest.raises(ValueError):
        enc.encode_next(np.array([0, 0]))
    with pytest.raises(ValueError):
        Encoder(np.zeros((0, 3)), 5, rng)


@pytest.mark.parametrize("kind", ["robust", "dense"])
def test_encoder_gammas_nonzero(rng, kind):
    enc = Encoder(np.ones((50, 2), dtype=np.int64), 11, rng, DegreeDist(kind))
    for _ in range(200):
        assert enc.next_gamma().any()


def test_compute_examples():
    assert compute(np.array([1, 2]), np.array([3, 4]), 5) == 1
    assert compute(np.zeros(3, dtype=np.int64), np.array([1, 2, 3]), 5) == 0
    assert compute(np.array([1, 2, 3]), np.zeros(3, dtype=np.int64), 5) == 0
    pkt = CodedPacket(0, np.array([1], dtype=np.uint8), np.array([1, 2]))
    assert compute(pkt, np.array([3, 4]), 5) == 1
    with pytest.raises(ValueError):
        compute(np.array([1, 2]), np.array([1, 2, 3]), 5)


def test_decode_examples():
    assert decode([([1, 0], 3), ([0, 1], 4)], 2, 5).tolist() == [3, 4]
    a, b = 3, 1
    assert decode([([1, 0], a), ([1, 1], b)], 2, 5).tolist() == [a, (b - a) % 5]
    with pytest.raises(InsufficientRank):
        decode([([1, 0], 2), ([1, 0], 2)], 2, 5)


def test_inconsistent_system_detected():
    dec = Decoder(2, 5)
    dec.add([1, 0], 1)
    dec.add([0, 1], 2)
    assert not dec.add([1, 1], 4)
    with pytest.raises(InconsistentSystem):
        dec.solution()


def test_redundant_consistent_row_is_fine():
    dec = Decoder(2, 5)
    assert dec.add([1, 1], 3)
    assert not dec.add([1, 1], 3)
    assert dec.add([0, 1], 1)
    assert dec.solution().tolist() == [2, 1]
    assert dec.full_rank_at == 3


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 24), st.integers(1, 8), st.sampled_from([11, 257, 2**31 - 1, 2**61 - 1]),
       st.integers(0, 2**32))
def test_round_trip(R, C, q, seed):
    rng = np.random.default_rng(seed)
    A = rng.integers(0, min(q, 2**62), size=(R, C), dtype=np.int64)
    x = rng.integers(0, min(q, 2**62), size=C, dtype=np.int64)
    enc = Encoder(A, q, rng)
    dec = Decoder(R, q)
    for _ in range(50 * R):
        pkt = enc.encode_next()
        dec.add(pkt.gamma, compute(pkt, x, q))
        if dec.complete:
            break
    assert dec.complete
    assert [int(v) for v in dec.solution()] == direct_product(A, x, q)


def test_realized_overhead_small(rng):
    enc = Encoder(np.zeros((100, 1), dtype=np.int64), 2**31 - 1, rng)
    ov = realized_overhead((enc.next_gamma() for _ in range(10_000)), 100, 2**31 - 1)
    assert 0.0 <= ov < 0.5
