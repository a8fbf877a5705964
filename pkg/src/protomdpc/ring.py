"""Arithmetic in the ring of Q x Q binary circulants.

The ring of binary circulant matrices is isomorphic to F2[X]/(X^Q - 1), so
every circulant is represented here by its first-row polynomial.  Private-key
material is very sparse (weights up to ~45 against Q ~ 4800), hence the main
representation stores only the support (sorted exponent list).  Public-key
polynomials have weight around Q/2 and use a dense bit-vector representation
backed by a Python integer (bit i = coefficient of X^i).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NonInvertibleError(ValueError):
    """Raised when a polynomial has no inverse modulo X^Q - 1.

    Key generation treats this as a signal to resample.
    """


@dataclass(frozen=True)
class SparsePolynomial:
    """Element of F2[X]/(X^Q - 1) stored by its support.

    The support is a strictly increasing tuple of exponents in [0, Q).
    The zero polynomial has an empty support.
    """

    Q: int
    support: tuple[int, ...]

    def __post_init__(self):
        if self.Q <= 0:
            raise ValueError(f"modulus size must be positive, got {self.Q}")
        sup = tuple(int(e) for e in self.support)
        object.__setattr__(self, "support", sup)
        if any(e < 0 or e >= self.Q for e in sup):
            raise ValueError(f"exponent out of range [0, {self.Q})")
        if any(sup[i] >= sup[i + 1] for i in range(len(sup) - 1)):
            raise ValueError("support must be strictly increasing")

    @property
    def weight(self) -> int:
        return len(self.support)

    def is_zero(self) -> bool:
        return not self.support

    def to_int(self) -> int:
        """Dense bit-vector encoding (bit i = coefficient of X^i)."""
        v = 0
        for e in self.support:
            v |= 1 << e
        return v

    @classmethod
    def from_int(cls, Q: int, value: int) -> SparsePolynomial:
        if value < 0 or value >> Q:
            raise ValueError("value does not fit in Q coefficients")
        return cls(Q, tuple(e for e in range(value.bit_length()) if (value >> e) & 1))

    @classmethod
    def zero(cls, Q: int) -> SparsePolynomial:
        return cls(Q, ())

    @classmethod
    def one(cls, Q: int) -> SparsePolynomial:
        return cls(Q, (0,))

    def __add__(self, other: SparsePolynomial) -> SparsePolynomial:
        return add(self, other)

    def __mul__(self, other: SparsePolynomial) -> SparsePolynomial:
        return mul_mod(self, other)


@dataclass(frozen=True)
class DensePolynomial:
    """Element of F2[X]/(X^Q - 1) stored as a length-Q coefficient bit-vector.

    Used where weights approach Q/2 (public keys). ``value`` packs
    coefficients into a Python int, bit i = coefficient of X^i.
    """

    Q: int
    value: int

    def __post_init__(self):
        if self.Q <= 0:
            raise ValueError(f"modulus size must be positive, got {self.Q}")
        if self.value < 0 or self.value >> self.Q:
            raise ValueError("coefficient vector longer than Q")

    @property
    def weight(self) -> int:
        return bin(self.value).count("1")

    def to_sparse(self) -> SparsePolynomial:
        return SparsePolynomial.from_int(self.Q, self.value)

    @classmethod
    def from_sparse(cls, p: SparsePolynomial) -> DensePolynomial:
        return cls(p.Q, p.to_int())

    def to_bits(self) -> np.ndarray:
        """Coefficients as a uint8 array of length Q (index i = coeff of X^i)."""
        raw = self.value.to_bytes((self.Q + 7) // 8, "little")
        return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[: self.Q]

    @classmethod
    def from_bits(cls, bits: np.ndarray) -> DensePolynomial:
        bits = np.asarray(bits, dtype=np.uint8)
        raw = np.packbits(bits, bitorder="little").tobytes()
        return cls(len(bits), int.from_bytes(raw, "little"))

    def to_hex(self) -> str:
        """Lowercase hex, least-significant coefficient first."""
        return self.value.to_bytes((self.Q + 7) // 8, "little").hex()

    @classmethod
    def from_hex(cls, Q: int, text: str) -> DensePolynomial:
        raw = bytes.fromhex(text)
        if len(raw) != (Q + 7) // 8:
            raise ValueError(f"hex string encodes {len(raw)} bytes, expected {(Q + 7) // 8}")
        return cls(Q, int.from_bytes(raw, "little"))


def _require_same_ring(a, b):
    if a.Q != b.Q:
        raise ValueError(f"mismatched modulus sizes: {a.Q} != {b.Q}")


def add(a: SparsePolynomial, b: SparsePolynomial) -> SparsePolynomial:
    """GF(2) addition: the support of the sum is the symmetric difference."""
    _require_same_ring(a, b)
    return SparsePolynomial(a.Q, tuple(sorted(set(a.support) ^ set(b.support))))


def mul_mod(a: SparsePolynomial, b: SparsePolynomial) -> SparsePolynomial:
    """Product modulo X^Q - 1 (cyclic convolution of the supports)."""
    _require_same_ring(a, b)
    if not a.support or not b.support:
        return SparsePolynomial.zero(a.Q)
    ea = np.asarray(a.support, dtype=np.int64)
    eb = np.asarray(b.support, dtype=np.int64)
    exps = (ea[:, None] + eb[None, :]).ravel() % a.Q
    parity = np.bincount(exps, minlength=a.Q) & 1
    return SparsePolynomial(a.Q, tuple(np.nonzero(parity)[0].tolist()))


def transpose(a: SparsePolynomial) -> SparsePolynomial:
    """First row of the transposed circulant: exponent map e -> (Q - e) mod Q."""
    return SparsePolynomial(a.Q, tuple(sorted((a.Q - e) % a.Q for e in a.support)))


def sample_sparse(Q: int, w: int, rng: np.random.Generator) -> SparsePolynomial:
    """Uniformly random weight-w polynomial, deterministic for a seeded rng."""
    if w < 0 or w > Q:
        raise ValueError(f"weight {w} out of range [0, {Q}]")
    support = np.sort(rng.choice(Q, size=w, replace=False))
    return SparsePolynomial(Q, tuple(int(e) for e in support))


# -- dense-representation arithmetic ----------------------------------------
#
# These back the two weight regimes that occur in practice: sparse-by-dense
# products (key derivation) and dense-by-dense products (encryption).


def _fold(v: int, Q: int) -> int:
    """Reduce a raw carry-less product modulo X^Q - 1."""
    mask = (1 << Q) - 1
    while v >> Q:
        v = (v & mask) ^ (v >> Q)
    return v


def mul_sparse_dense(a: SparsePolynomial, b: DensePolynomial) -> DensePolynomial:
    """a(X) * b(X) mod X^Q - 1 via shift-XOR accumulation over a's support."""
    _require_same_ring(a, b)
    acc = 0
    for e in a.support:
        acc ^= b.value << e
    return DensePolynomial(a.Q, _fold(acc, a.Q))


def mul_dense(a: DensePolynomial, b: DensePolynomial) -> DensePolynomial:
    """Dense product mod X^Q - 1, iterating over set bits of the lighter factor."""
    _require_same_ring(a, b)
    x, y = a.value, b.value
    if bin(x).count("1") > bin(y).count("1"):
        x, y = y, x
    acc = 0
    e = 0
    while x:
        if x & 1:
            acc ^= y << e
        x >>= 1
        e += 1
    return DensePolynomial(a.Q, _fold(acc, a.Q))


def dense_transpose(a: DensePolynomial) -> DensePolynomial:
    return DensePolynomial.from_sparse(transpose(a.to_sparse()))


# -- inversion ----------------------------------------------------------------


def _degree(v: int) -> int:
    return v.bit_length() - 1


def _carryless_mul(a: int, b: int) -> int:
    if a.bit_length() > b.bit_length():
        a, b = b, a
    acc = 0
    e = 0
    while a:
        if a & 1:
            acc ^= b << e
        a >>= 1
        e += 1
    return acc


def _poly_divmod(a: int, b: int) -> tuple[int, int]:
    db = _degree(b)
    q = 0
    while a and _degree(a) >= db:
        shift = _degree(a) - db
        a ^= b << shift
        q |= 1 << shift
    return q, a


def invert(a: SparsePolynomial) -> SparsePolynomial:
    """Inverse of a(X) modulo X^Q - 1 by the extended Euclidean algorithm.

    Raises :class:`NonInvertibleError` iff gcd(a(X), X^Q - 1) != 1; in
    particular every even-weight polynomial is non-invertible because
    (X + 1) divides both it and X^Q - 1.
    """
    if a.is_zero():
        raise NonInvertibleError("zero polynomial has no inverse")
    Q = a.Q
    modulus = (1 << Q) | 1
    r0, r1 = modulus, a.to_int()
    # invariant: s_i * a == r_i (mod X^Q - 1)
    s0, s1 = 0, 1
    while r1:
        q, r = _poly_divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, s0 ^ _carryless_mul(q, s1)
    if r0 != 1:
        raise NonInvertibleError(f"gcd(a, X^{Q}-1) has degree {_degree(r0)}")
    _, inv = _poly_divmod(s0, modulus)
    return SparsePolynomial.from_int(Q, inv)
