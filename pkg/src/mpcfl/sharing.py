"""Additive and Shamir secret sharing of whole tensors.

A sharing of a length-``s`` secret is a list of :class:`ShareVector`, one per
slot. Both schemes are linear, so shares with equal slots can be added
pointwise to obtain a sharing of the sum.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import (
    BadCountError,
    BadDegreeError,
    DuplicateSlotError,
    InsufficientSharesError,
    LengthMismatchError,
    SlotMismatchError,
)
from .field import DEFAULT_PARAMS, FieldParams, as_field_array, sample_uniform, vec_add, vec_sub, vec_sum


class SchemeKind(str, enum.Enum):
    ADDITIVE = "additive"
    SHAMIR = "shamir"


@dataclass(frozen=True)
class ShareVector:
    """One slot of a sharing. ``values`` is a read-only uint64 array."""

    owner: int
    slot: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.uint64)
        if vals.flags.writeable:
            vals = vals.copy()
            vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class SharingScheme:
    kind: SchemeKind
    n_shares: int
    degree: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if self.n_shares < 2:
            raise BadCountError(f"need at least 2 shares, got {self.n_shares}")
        if self.kind is SchemeKind.SHAMIR:
            if self.degree is None:
                object.__setattr__(self, "degree", self.n_shares - 1)
            if not 1 <= self.degree <= self.n_shares - 1:
                raise BadDegreeError(f"degree must be in [1, {self.n_shares - 1}], got {self.degree}")

    @classmethod
    def additive(cls, n: int) -> "SharingScheme":
        return cls(SchemeKind.ADDITIVE, n)

    @classmethod
    def shamir(cls, n: int, degree: int | None = None) -> "SharingScheme":
        return cls(SchemeKind.SHAMIR, n, degree)

    def share(self, secret, rng, p: FieldParams = DEFAULT_PARAMS, owner: int = 0) -> list[ShareVector]:
        if self.kind is SchemeKind.ADDITIVE:
            return additive_share(secret, self.n_shares, rng, p, owner=owner)
        return shamir_share(secret, self.n_shares, self.degree, rng, p, owner=owner)

    def reconstruct(self, shares: Sequence[ShareVector], p: FieldParams = DEFAULT_PARAMS) -> np.ndarray:
        if self.kind is SchemeKind.ADDITIVE:
            if len(shares) != self.n_shares:
                raise InsufficientSharesError(
                    f"additive reconstruction needs all {self.n_shares} shares, got {len(shares)}"
                )
            return additive_reconstruct(shares, p)
        return shamir_reconstruct(shares, self.degree, p)


def _check_shares(shares: Sequence[ShareVector]) -> None:
    if not shares:
        raise InsufficientSharesError("no shares given")
    length = len(shares[0])
    if any(len(sh) != length for sh in shares):
        raise LengthMismatchError("shares have different lengths")
    slots = [sh.slot for sh in shares]
    if len(set(slots)) != len(slots):
        raise DuplicateSlotError(f"duplicate slots in {slots}")


# ---------------------------------------------------------------------------
# additive
# ---------------------------------------------------------------------------


def additive_share(secret, n: int, rng, p: FieldParams = DEFAULT_PARAMS, owner: int = 0) -> list[ShareVector]:
    """Split ``secret`` into ``n`` addends mod q.

    Shares ``1..n-1`` come straight from ``rng``; share ``n`` closes the sum.
    """
    if n < 2:
        raise BadCountError(f"need at least 2 shares, got {n}")
    sec = as_field_array(secret, p)
    if sec.ndim != 1 or sec.size == 0:
        raise LengthMismatchError("secret must be a nonempty 1-d sequence")
    rand = sample_uniform(rng, p, (n - 1, sec.size))
    last = vec_sub(sec, vec_sum(rand, p), p)
    rows = list(rand) + [last]
    return [ShareVector(owner, k + 1, row) for k, row in enumerate(rows)]


def additive_reconstruct(shares: Sequence[ShareVector], p: FieldParams = DEFAULT_PARAMS) -> np.ndarray:
    _check_shares(shares)
    return vec_sum(np.stack([sh.values for sh in shares]), p)


# ---------------------------------------------------------------------------
# Shamir
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _vandermonde(xs: tuple[int, ...], degree: int, q: int) -> np.ndarray:
    return np.array([[pow(x, k, q) for k in range(degree + 1)] for x in xs], dtype=np.uint64)


@lru_cache(maxsize=1024)
def _lagrange_cached(slots: tuple[int, ...], q: int) -> tuple[int, ...]:
    lams = []
    for i, xi in enumerate(slots):
        num, den = 1, 1
        for j, xj in enumerate(slots):
            if i != j:
                num = num * xj % q
                den = den * (xj - xi) % q
        lams.append(num * pow(den, -1, q) % q)
    return tuple(lams)


def lagrange_at_zero(slots: Sequence[int], p: FieldParams = DEFAULT_PARAMS) -> tuple[int, ...]:
    """Coefficients ``l_x`` with ``q(0) = sum_x l_x * q(x)`` for any polynomial of degree < len(slots)."""
    slots = tuple(int(x) for x in slots)
    if len(set(slots)) != len(slots):
        raise DuplicateSlotError(f"duplicate slots in {slots}")
    if any(x % p.q_prime == 0 for x in slots):
        raise SlotMismatchError("slot 0 is reserved for the secret")
    return _lagrange_cached(slots, p.q_prime)


def shamir_evaluate(coefficients: np.ndarray, xs: Sequence[int], p: FieldParams = DEFAULT_PARAMS) -> np.ndarray:
    """Evaluate per-coordinate polynomials at ``xs``.

    ``coefficients`` has shape ``(d + 1, s)``; row ``k`` holds the ``x**k`` coefficients.
    Returns shape ``(len(xs), s)``.
    """
    coeffs = np.asarray(coefficients, dtype=np.uint64)
    vander = _vandermonde(tuple(int(x) for x in xs), coeffs.shape[0] - 1, p.q_prime)
    return _kernels.matmul_mod(vander, coeffs, p.q_prime)


def shamir_share(secret, n: int, d: int, rng, p: FieldParams = DEFAULT_PARAMS, owner: int = 0) -> list[ShareVector]:
    if n < 2:
        raise BadCountError(f"need at least 2 shares, got {n}")
    if not 1 <= d <= n - 1:
        raise BadDegreeError(f"degree must be in [1, {n - 1}], got {d}")
    sec = as_field_array(secret, p)
    if sec.ndim != 1 or sec.size == 0:
        raise LengthMismatchError("secret must be a nonempty 1-d sequence")
    coeffs = np.empty((d + 1, sec.size), dtype=np.uint64)
    coeffs[0] = sec
    coeffs[1:] = sample_uniform(rng, p, (d, sec.size))
    evals = shamir_evaluate(coeffs, range(1, n + 1), p)
    return [ShareVector(owner, x, evals[x - 1]) for x in range(1, n + 1)]


def shamir_reconstruct(shares: Sequence[ShareVector], d: int, p: FieldParams = DEFAULT_PARAMS) -> np.ndarray:
    if len(shares) < d + 1:
        raise InsufficientSharesError(f"degree {d} needs {d + 1} shares, got {len(shares)}")
    _check_shares(shares)
    lams = lagrange_at_zero([sh.slot for sh in shares], p)
    lam_row = np.array([lams], dtype=np.uint64)
    stacked = np.stack([sh.values for sh in shares])
    return _kernels.matmul_mod(lam_row, stacked, p.q_prime)[0]


# ---------------------------------------------------------------------------
# homomorphic addition
# ---------------------------------------------------------------------------


def share_pointwise_add(a: ShareVector, b: ShareVector, p: FieldParams = DEFAULT_PARAMS) -> ShareVector:
    if a.slot != b.slot:
        raise SlotMismatchError(f"cannot add slot {a.slot} to slot {b.slot}")
    if len(a) != len(b):
        raise LengthMismatchError(f"lengths {len(a)} and {len(b)} differ")
    owner = a.owner if a.owner == b.owner else 0
    return ShareVector(owner, a.slot, vec_add(a.values, b.values, p))


def share_sum(shares: Sequence[ShareVector], p: FieldParams = DEFAULT_PARAMS) -> ShareVector:
    """Fold :func:`share_pointwise_add` over shares that all sit in one slot."""
    slots = {sh.slot for sh in shares}
    if len(slots) != 1:
        raise SlotMismatchError(f"expected a single slot, got {sorted(slots)}")
    lengths = {len(sh) for sh in shares}
    if len(lengths) != 1:
        raise LengthMismatchError("shares have different lengths")
    return ShareVector(0, shares[0].slot, vec_sum(np.stack([sh.values for sh in shares]), p))
