import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpcfl import _kernels

MODULI = [97, 4294967291, (1 << 61) - 1, (1 << 62) - 57, (1 << 63) - 25]


def _py(arr):
    return [int(v) for v in np.ravel(arr)]


@pytest.mark.parametrize("q", MODULI)
def test_elementwise_ops_match_python_ints(kern, q):
    rng = np.random.default_rng(q % 1000)
    a = [int(v) % q for v in rng.integers(0, 2**63, 500, dtype=np.uint64)] + [q - 1, 0, q - 1]
    b = [int(v) % q for v in rng.integers(0, 2**63, 500, dtype=np.uint64)] + [q - 1, q - 1, 0]
    A, B = np.array(a, dtype=np.uint64), np.array(b, dtype=np.uint64)
    assert _py(kern.addmod(A, B, q)) == [(x + y) % q for x, y in zip(a, b)]
    assert _py(kern.submod(A, B, q)) == [(x - y) % q for x, y in zip(a, b)]
    assert _py(kern.mulmod(A, B, q)) == [x * y % q for x, y in zip(a, b)]


@pytest.mark.parametrize("q", MODULI)
def test_sum_rows_and_matmul(kern, q):
    rng = np.random.default_rng(7)
    m = [[int(v) % q for v in rng.integers(0, 2**63, 40, dtype=np.uint64)] for _ in range(9)]
    lam = [[int(v) % q for v in rng.integers(0, 2**63, 9, dtype=np.uint64)] for _ in range(3)]
    M = np.array(m, dtype=np.uint64)
    L = np.array(lam, dtype=np.uint64)
    assert _py(kern.sum_rows(M, q)) == [sum(col) % q for col in zip(*m)]
    want = [[sum(l * row[c] for l, row in zip(lr, m)) % q for c in range(40)] for lr in lam]
    assert kern.matmul_mod(L, M, q).tolist() == want


@settings(max_examples=200, deadline=None)
@given(st.integers(0, (1 << 61) - 2), st.integers(0, (1 << 61) - 2))
def test_mersenne_mul_property(a, b):
    q = (1 << 61) - 1
    for kern in (_kernels.numpy_backend, _kernels.numba_backend):
        got = kern.mulmod(np.array([a], dtype=np.uint64), np.array([b], dtype=np.uint64), q)
        assert int(got[0]) == a * b % q


def test_backends_agree_on_broadcast_shapes():
    q = (1 << 61) - 1
    a = np.arange(12, dtype=np.uint64).reshape(3, 4) * np.uint64(10**15)
    b = np.uint64(q - 2)
    np.testing.assert_array_equal(
        _kernels.numpy_backend.mulmod(a, b, q), _kernels.numba_backend.mulmod(a, b, q)
    )


def test_modulus_too_wide_is_rejected():
    with pytest.raises(ValueError):
        _kernels.mul_mode(1 << 63)


def test_env_flag_selects_numpy_backend():
    code = "from mpcfl import _kernels; print(_kernels.backend.name)"
    env = dict(os.environ, MPCFL_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
