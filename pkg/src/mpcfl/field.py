"""Prime-field arithmetic and the fixed-point codec for model weights.

Scalars are plain Python ints in ``[0, q)``; tensors are ``uint64`` numpy
arrays. Negative reals live in the upper half of the field.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import EncodingOverflowError, FieldParamsError, ZeroInverseError

DEFAULT_Q = _kernels.MERSENNE_61


def is_prime(v: int) -> bool:
    from sympy import isprime

    return bool(isprime(v))


@dataclass(frozen=True)
class FieldParams:
    """Public modulus plus the fixed-point format used to embed reals."""

    q_prime: int = DEFAULT_Q
    frac_bits: int = 16
    int_bits: int = 24
    max_terms: int = 1024

    def __post_init__(self):
        q = self.q_prime
        if q < 2 or q >= _kernels.MAX_MODULUS:
            raise FieldParamsError(f"modulus must lie in [2, 2**63), got {q}")
        if not is_prime(q):
            raise FieldParamsError(f"modulus {q} is not prime")
        if self.frac_bits < 0 or self.int_bits < 1 or self.max_terms < 1:
            raise FieldParamsError("need frac_bits >= 0, int_bits >= 1, max_terms >= 1")
        if self.max_terms * (1 << (self.int_bits + self.frac_bits + 1)) >= q:
            raise FieldParamsError(
                f"max_terms * 2**(int_bits + frac_bits + 1) must stay below q={q}"
            )

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @cached_property
    def half(self) -> int:
        return self.q_prime // 2

    def check(self, v: int) -> int:
        if not 0 <= v < self.q_prime:
            raise FieldParamsError(f"{v} is not an element of GF({self.q_prime})")
        return v


DEFAULT_PARAMS = FieldParams()


# ---------------------------------------------------------------------------
# scalar arithmetic
# ---------------------------------------------------------------------------


def field_add(a: int, b: int, p: FieldParams) -> int:
    return (a + b) % p.q_prime


def field_sub(a: int, b: int, p: FieldParams) -> int:
    return (a - b) % p.q_prime


def field_neg(a: int, p: FieldParams) -> int:
    return (-a) % p.q_prime


def field_mul(a: int, b: int, p: FieldParams) -> int:
    return (a * b) % p.q_prime


def field_inv(a: int, p: FieldParams) -> int:
    if a % p.q_prime == 0:
        raise ZeroInverseError("zero has no multiplicative inverse")
    return pow(a, -1, p.q_prime)


# ---------------------------------------------------------------------------
# tensor arithmetic (uint64 arrays)
# ---------------------------------------------------------------------------


def as_field_array(values, p: FieldParams) -> np.ndarray:
    """Validate and convert a sequence of ints into a uint64 field array."""
    arr = np.asarray(values)
    if arr.dtype == object or arr.dtype.kind == "i":
        if arr.size and (int(arr.min()) < 0 or int(arr.max()) >= p.q_prime):
            raise FieldParamsError("values outside [0, q)")
        arr = arr.astype(np.uint64)
    elif arr.dtype != np.uint64:
        raise FieldParamsError(f"field arrays must be integer typed, got {arr.dtype}")
    elif arr.size and int(arr.max()) >= p.q_prime:
        raise FieldParamsError("values outside [0, q)")
    return np.ascontiguousarray(arr)


def vec_add(a: np.ndarray, b: np.ndarray, p: FieldParams) -> np.ndarray:
    return _kernels.addmod(a, b, p.q_prime)


def vec_sub(a: np.ndarray, b: np.ndarray, p: FieldParams) -> np.ndarray:
    return _kernels.submod(a, b, p.q_prime)


def vec_mul(a: np.ndarray, b: np.ndarray, p: FieldParams) -> np.ndarray:
    return _kernels.mulmod(a, b, p.q_prime)


def vec_sum(rows: np.ndarray, p: FieldParams) -> np.ndarray:
    """Sum along the first axis, reducing after every addition."""
    return _kernels.sum_rows(rows, p.q_prime)


# ---------------------------------------------------------------------------
# fixed-point codec
# ---------------------------------------------------------------------------


def encode_fixed(x, p: FieldParams = DEFAULT_PARAMS):
    """Map real(s) onto the field: ``round(x * 2**frac_bits)``, negatives wrap to ``q - |v|``.

    Scalars give an int, arrays give a uint64 array.
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise EncodingOverflowError("cannot encode non-finite values")
    limit = float(1 << p.int_bits)
    if arr.size and float(np.max(np.abs(arr))) >= limit:
        raise EncodingOverflowError(f"|x| must stay below 2**{p.int_bits}")
    ints = np.rint(arr * p.scale).astype(np.int64)
    mag = np.abs(ints).astype(np.uint64)
    out = np.where(ints < 0, np.uint64(p.q_prime) - mag, mag)
    if out.ndim == 0:
        return int(out)
    return out


def decode_fixed(v, p: FieldParams = DEFAULT_PARAMS, divisor: int = 1):
    """Signed interpretation of field value(s) divided by ``divisor * 2**frac_bits``."""
    if divisor < 1:
        raise ValueError("divisor must be a positive integer")
    arr = np.asarray(v, dtype=np.uint64)
    q = np.uint64(p.q_prime)
    neg = arr > np.uint64(p.half)
    mag = np.where(neg, q - arr, arr)
    bound = divisor * (1 << (p.int_bits + p.frac_bits))
    if mag.size and int(mag.max()) >= bound:
        raise EncodingOverflowError("decoded magnitude exceeds the representable range")
    signed = np.where(neg, -mag.astype(np.float64), mag.astype(np.float64))
    out = signed / (float(divisor) * p.scale)
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# randomness
# ---------------------------------------------------------------------------


def _tag(t) -> int:
    if isinstance(t, str):
        return zlib.crc32(t.encode())
    return int(t)


def party_stream(master_seed, party_id: int, phase_tag, *extra) -> np.random.Generator:
    """Independent Philox stream keyed by (master_seed, party_id, phase_tag, *extra).

    ``master_seed`` may be an int or a tuple of ints (e.g. a derived sub-seed).
    """
    entropy = [int(v) for v in master_seed] if isinstance(master_seed, (tuple, list)) else int(master_seed)
    ss = np.random.SeedSequence(entropy=entropy, spawn_key=(int(party_id), _tag(phase_tag), *map(_tag, extra)))
    return np.random.Generator(np.random.Philox(ss))


def sample_uniform(rng: np.random.Generator, p: FieldParams, size=None):
    """Uniform draw(s) from ``[0, q)`` by masked rejection on raw 64-bit output."""
    q = p.q_prime
    mask = np.uint64((1 << q.bit_length()) - 1)
    n = 1 if size is None else int(np.prod(size))
    out = np.empty(n, dtype=np.uint64)
    filled = 0
    while filled < n:
        raw = rng.bit_generator.random_raw(n - filled) & mask
        keep = raw[raw < np.uint64(q)]
        out[filled : filled + keep.size] = keep
        filled += keep.size
    if size is None:
        return int(out[0])
    return out.reshape(size)
