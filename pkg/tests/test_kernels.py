import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cocycle_lab import _pykernels as py
from cocycle_lab import kernels

compiled = pytest.mark.skipif(kernels.COMPILED is None, reason="compiled kernels not built")


def _nodes(rng, n):
    a = rng.normal(size=(n, 3))
    b = rng.normal(size=(n, 3))
    hs = np.full(n, 0.01) * rng.choice([1.0, -1.0])
    return a, b, hs


@compiled
@settings(max_examples=30, deadline=None)
@given(st.integers(1, 400), st.integers(0, 2 ** 31))
def test_matrix_blocks_parity(n, seed):
    rng = np.random.default_rng(seed)
    a, b, hs = _nodes(rng, n)
    cuts = np.unique(np.concatenate([rng.integers(1, n + 1, size=3), [n]])).astype(np.int64)
    m1, f1 = kernels.COMPILED.matrix_blocks(a, b, hs, cuts, 1e12)
    m2, f2 = py.matrix_blocks(a, b, hs, cuts, 1e12)
    assert f1 == f2
    assert np.array_equal(np.asarray(m1), np.asarray(m2))


@compiled
def test_vector_and_rotation_parity():
    rng = np.random.default_rng(3)
    a, b, hs = _nodes(rng, 500)
    ends = np.array([100, 250, 500], dtype=np.int64)
    v0 = np.array([0.6, 0.8])
    r1 = kernels.COMPILED.vector_blocks(a, b, hs, ends, v0, 1e12)
    r2 = py.vector_blocks(a, b, hs, ends, v0, 1e12)
    assert r1[2] == r2[2]
    # log/hypot may differ in the last bit between libm and Python's math
    assert np.allclose(np.asarray(r1[0]), np.asarray(r2[0]), rtol=1e-14, atol=1e-15)
    assert np.allclose(np.asarray(r1[1]), np.asarray(r2[1]), rtol=1e-14, atol=1e-15)
    q1 = kernels.COMPILED.rotation(a, b, hs, 0.3, 1e12)
    q2 = py.rotation(a, b, hs, 0.3, 1e12)
    for x, y in zip(q1[:2], q2[:2]):
        assert np.allclose(np.asarray(x), np.asarray(y), rtol=1e-13, atol=1e-15)


@compiled
def test_blowup_index_parity():
    n = 3000
    a = np.zeros((n, 3))
    b = np.full((n, 3), -400.0)
    hs = np.full(n, 1e-3)
    ends = np.array([n], dtype=np.int64)
    assert kernels.COMPILED.matrix_blocks(a, b, hs, ends, 1e12)[1] == py.matrix_blocks(a, b, hs, ends, 1e12)[1] > 0


def test_backend_named():
    assert kernels.BACKEND in ("cython", "python")
