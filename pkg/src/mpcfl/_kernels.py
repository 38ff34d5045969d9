"""Modular arithmetic kernels over uint64 arrays.

Two interchangeable backends implement the same functions:

* ``numba``: ``@njit`` loops, used by default when numba imports cleanly.
* ``numpy``: vectorised pure-numpy code.

Set ``MPCFL_DISABLE_NUMBA=1`` to force the numpy path. Both backends are
importable directly (``numpy_backend`` / ``numba_backend``) so tests and the
benchmark can compare them.

Every modulus must satisfy ``q < 2**63`` so that ``a + b`` of two reduced
values fits in a uint64. Multiplication picks one of three reductions:

    MODE_SMALL     q < 2**32, the product fits in 64 bits
    MODE_MERSENNE  q == 2**61 - 1, limb split with 2**61 = 1 folding
    MODE_GENERIC   any other q, double-and-add
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

MERSENNE_61 = (1 << 61) - 1
MAX_MODULUS = 1 << 63

MODE_SMALL = 0
MODE_MERSENNE = 1
MODE_GENERIC = 2

_U32 = np.uint64(0xFFFFFFFF)
_M61 = np.uint64(MERSENNE_61)
_M29 = np.uint64((1 << 29) - 1)


def mul_mode(q: int) -> int:
    if q >= MAX_MODULUS:
        raise ValueError(f"modulus {q} does not fit the 63-bit kernels")
    if q < (1 << 32):
        return MODE_SMALL
    if q == MERSENNE_61:
        return MODE_MERSENNE
    return MODE_GENERIC


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------


def _np_addmod(a, b, q):
    qq = np.uint64(q)
    s = np.add(a, b, dtype=np.uint64)
    return np.where(s >= qq, s - qq, s)


def _np_submod(a, b, q):
    qq = np.uint64(q)
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    return np.where(a >= b, a - b, a + (qq - b))


def _np_mul_m61(a, b):
    a1, a0 = a >> np.uint64(32), a & _U32
    b1, b0 = b >> np.uint64(32), b & _U32
    hi = (a1 * b1) << np.uint64(3)
    mid = a1 * b0 + a0 * b1
    lo = a0 * b0
    x = (
        hi
        + (mid >> np.uint64(29))
        + ((mid & _M29) << np.uint64(32))
        + (lo & _M61)
        + (lo >> np.uint64(61))
    )
    r = (x & _M61) + (x >> np.uint64(61))
    return np.where(r >= _M61, r - _M61, r)


def _np_mul_generic(a, b, q):
    qq = np.uint64(q)
    a, b = np.broadcast_arrays(a % qq, b % qq)
    acc = np.zeros(a.shape, dtype=np.uint64)
    bits = int(q).bit_length()
    for k in range(bits - 1, -1, -1):
        acc = _np_addmod(acc, acc, q)
        bit = ((b >> np.uint64(k)) & np.uint64(1)).astype(bool)
        acc = np.where(bit, _np_addmod(acc, a, q), acc)
    return acc


def _np_mulmod(a, b, q):
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    mode = mul_mode(q)
    if mode == MODE_SMALL:
        return (a * b) % np.uint64(q)
    if mode == MODE_MERSENNE:
        return _np_mul_m61(*np.broadcast_arrays(a, b))
    return _np_mul_generic(a, b, q)


def _np_sum_rows(m, q):
    m = np.asarray(m, dtype=np.uint64)
    acc = np.zeros(m.shape[1:], dtype=np.uint64)
    for row in m:
        acc = _np_addmod(acc, row, q)
    return acc


def _np_matmul_mod(a, b, q):
    """(a @ b) mod q for a of shape (r, k) and b of shape (k, s)."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.uint64)
    for j in range(a.shape[1]):
        out = _np_addmod(out, _np_mulmod(a[:, j, None], b[None, j, :], q), q)
    return out


numpy_backend = SimpleNamespace(
    name="numpy",
    addmod=_np_addmod,
    submod=_np_submod,
    mulmod=_np_mulmod,
    sum_rows=_np_sum_rows,
    matmul_mod=_np_matmul_mod,
)


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------


def _build_numba_backend():
    from numba import njit

    one = np.uint64(1)
    s3 = np.uint64(3)
    s29 = np.uint64(29)
    s32 = np.uint64(32)
    s61 = np.uint64(61)

    @njit(cache=True, inline="always")
    def _add(a, b, q):
        s = a + b
        if s >= q:
            s -= q
        return s

    @njit(cache=True)
    def _mul(a, b, q, mode):
        if mode == 0:
            return (a * b) % q
        if mode == 1:
            a1 = a >> s32
            a0 = a & _U32
            b1 = b >> s32
            b0 = b & _U32
            mid = a1 * b0 + a0 * b1
            lo = a0 * b0
            x = ((a1 * b1) << s3) + (mid >> s29) + ((mid & _M29) << s32)
            x += (lo & _M61) + (lo >> s61)
            r = (x & _M61) + (x >> s61)
            if r >= _M61:
                r -= _M61
            return r
        acc = np.uint64(0)
        a = a % q
        k = 63
        while k >= 0:
            acc = _add(acc, acc, q)
            if (b >> np.uint64(k)) & one:
                acc = _add(acc, a, q)
            k -= 1
        return acc

    @njit(cache=True)
    def _addmod_flat(a, b, q):
        out = np.empty_like(a)
        for i in range(a.size):
            out[i] = _add(a[i], b[i], q)
        return out

    @njit(cache=True)
    def _submod_flat(a, b, q):
        out = np.empty_like(a)
        for i in range(a.size):
            if a[i] >= b[i]:
                out[i] = a[i] - b[i]
            else:
                out[i] = a[i] + (q - b[i])
        return out

    @njit(cache=True)
    def _mulmod_flat(a, b, q, mode):
        out = np.empty_like(a)
        for i in range(a.size):
            out[i] = _mul(a[i], b[i], q, mode)
        return out

    @njit(cache=True)
    def _sum_rows2(m, q):
        out = np.zeros(m.shape[1], dtype=np.uint64)
        for r in range(m.shape[0]):
            for c in range(m.shape[1]):
                out[c] = _add(out[c], m[r, c], q)
        return out

    @njit(cache=True)
    def _matmul(a, b, q, mode):
        out = np.zeros((a.shape[0], b.shape[1]), dtype=np.uint64)
        for r in range(a.shape[0]):
            for j in range(a.shape[1]):
                coef = a[r, j]
                if coef == 0:
                    continue
                for c in range(b.shape[1]):
                    out[r, c] = _add(out[r, c], _mul(coef, b[j, c], q, mode), q)
        return out

    def _flat_pair(a, b):
        a, b = np.broadcast_arrays(
            np.asarray(a, dtype=np.uint64), np.asarray(b, dtype=np.uint64)
        )
        shape = a.shape
        return np.ascontiguousarray(a).ravel(), np.ascontiguousarray(b).ravel(), shape

    def addmod(a, b, q):
        fa, fb, shape = _flat_pair(a, b)
        return _addmod_flat(fa, fb, np.uint64(q)).reshape(shape)

    def submod(a, b, q):
        fa, fb, shape = _flat_pair(a, b)
        return _submod_flat(fa, fb, np.uint64(q)).reshape(shape)

    def mulmod(a, b, q):
        fa, fb, shape = _flat_pair(a, b)
        return _mulmod_flat(fa, fb, np.uint64(q), mul_mode(q)).reshape(shape)

    def sum_rows(m, q):
        m = np.ascontiguousarray(m, dtype=np.uint64)
        tail = m.shape[1:]
        flat = m.reshape(m.shape[0], -1)
        return _sum_rows2(flat, np.uint64(q)).reshape(tail)

    def matmul_mod(a, b, q):
        a = np.ascontiguousarray(a, dtype=np.uint64)
        b = np.ascontiguousarray(b, dtype=np.uint64)
        return _matmul(a, b, np.uint64(q), mul_mode(q))

    return SimpleNamespace(
        name="numba",
        addmod=addmod,
        submod=submod,
        mulmod=mulmod,
        sum_rows=sum_rows,
        matmul_mod=matmul_mod,
    )


try:
    numba_backend = _build_numba_backend()
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_backend = None


def _select():
    flag = os.environ.get("MPCFL_DISABLE_NUMBA", "").strip().lower()
    if flag in ("1", "true", "yes") or numba_backend is None:
        return numpy_backend
    return numba_backend


backend = _select()

addmod = backend.addmod
submod = backend.submod
mulmod = backend.mulmod
sum_rows = backend.sum_rows
matmul_mod = backend.matmul_mod
