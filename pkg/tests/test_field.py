import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sc3sim import field as ff


def pydot(a, b, q):
    return sum(int(x) * int(y) for x, y in zip(a, b)) % q


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 300), st.integers(1, 6), st.sampled_from([11, 2**31 - 1, 2**61 - 1]),
       st.integers(0, 2**32))
def test_vecmat_against_python_ints(k, n, q, seed):
    rng = np.random.default_rng(seed)
    c = ff.uniform_residues(k, q, rng)
    m = ff.uniform_residues(k * n, q, rng).reshape(k, n)
    got = ff.vecmat(c, m, q)
    assert got.shape == (n,)
    assert [int(v) for v in got] == [pydot(c, m[:, j], q) for j in range(n)]


def test_signed_coefficients():
    q = 2**31 - 1
    c = np.array([-1, 1, -1], dtype=np.int64)
    m = np.array([[5], [q - 1], [3]], dtype=np.int64)
    assert int(ff.vecmat(c, m, q)[0]) == (-5 + q - 1 - 3) % q


def test_matvec_and_dot():
    q = 5
    m = np.array([[1, 2], [3, 4]])
    assert ff.matvec(m, np.array([3, 4]), q).tolist() == [1, 0]
    assert ff.dot([1, 2], [3, 4], q) == 1


def test_inverse():
    assert ff.inverse(3, 11) * 3 % 11 == 1
    with pytest.raises(ValueError):
        ff.inverse(0, 11)


def test_uniform_residues_range(rng):
    v = ff.uniform_residues(10_000, 11, rng)
    assert v.min() >= 0 and v.max() < 11
    assert set(np.unique(v)) == set(range(11))
