"""Base-matrix ensembles and their structured expansion to polynomial matrices.

A base matrix B holds edge multiplicities b_ij of a small template graph;
column j flagged as a *state* column produces punctured variable nodes that
never map to ciphertext bits.  The built-in ensembles are the rate-1/2
reference family (a single row, no state column) and two state-column
families of the shape

    ( 1    b01  b02 )
    ( b10  b11  b12 )

with the leftmost column punctured.  Expansion replaces each entry by a
uniformly random weight-b_ij polynomial, giving the extended description
Gamma(X); eliminating the state column yields the actual moderate-density
parity-check matrix H(X) = (h00 h01) with

    h00 = gamma11 + gamma01 * gamma10      (mod X^Q - 1)
    h01 = gamma12 + gamma02 * gamma10      (mod X^Q - 1)

whose row weight is at most b11 + b01*b10 + b12 + b02*b10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from protomdpc import ring
from protomdpc.ring import SparsePolynomial


@dataclass(frozen=True)
class BaseMatrix:
    """Protograph in matrix form: entries are edge multiplicities."""

    entries: tuple[tuple[int, ...], ...]
    state_columns: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        rows = tuple(tuple(int(b) for b in row) for row in self.entries)
        object.__setattr__(self, "entries", rows)
        object.__setattr__(self, "state_columns", frozenset(int(c) for c in self.state_columns))
        if not rows or not rows[0]:
            raise ValueError("base matrix must be non-empty")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("ragged base matrix")
        if any(b < 0 for r in rows for b in r):
            raise ValueError("entries must be non-negative")
        if any(c < 0 or c >= len(rows[0]) for c in self.state_columns):
            raise ValueError("state column index out of range")

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    def is_state_shape(self) -> bool:
        """True for the two-row, three-column family with a fixed weight-1 corner."""
        return (
            self.rows == 2
            and self.cols == 3
            and self.state_columns == frozenset({0})
            and self.entries[0][0] == 1
        )

    def is_reference_shape(self) -> bool:
        """True for a single-row base with no state columns."""
        return self.rows == 1 and not self.state_columns


@dataclass(frozen=True)
class EnsembleSpec:
    """A base matrix together with the circulant lifting size Q."""

    name: str
    base: BaseMatrix
    Q: int

    def __post_init__(self):
        if self.Q <= 0:
            raise ValueError("Q must be positive")
        if any(b > self.Q for row in self.base.entries for b in row):
            raise ValueError("entry exceeds lifting size Q")

    @property
    def block_length(self) -> int:
        """Codeword length n = (N0 - #state columns) * Q."""
        return (self.base.cols - len(self.base.state_columns)) * self.Q

    @property
    def extended_vn_count(self) -> int:
        """Variable nodes of the extended graph, n0 = N0 * Q."""
        return self.base.cols * self.Q


@dataclass(frozen=True)
class PolyMatrix:
    """Small matrix of sparse polynomials sharing one modulus size."""

    entries: tuple[tuple[SparsePolynomial, ...], ...]

    def __post_init__(self):
        if not self.entries or not self.entries[0]:
            raise ValueError("polynomial matrix must be non-empty")
        qs = {p.Q for row in self.entries for p in row}
        if len(qs) != 1:
            raise ValueError(f"entries disagree on modulus size: {sorted(qs)}")
        if any(len(r) != len(self.entries[0]) for r in self.entries):
            raise ValueError("ragged polynomial matrix")

    @property
    def Q(self) -> int:
        return self.entries[0][0].Q

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    def __getitem__(self, ij: tuple[int, int]) -> SparsePolynomial:
        return self.entries[ij[0]][ij[1]]


# Entry order validated two ways: the row-weight-90 constraint
# b01*b10 + b11 + b02*b10 + b12 = 90 and the key-space sizes 2^328 / 2^446
# both hold only for this assignment.
_BUILTIN_BASES = {
    "A": BaseMatrix(((45, 45),)),
    "B": BaseMatrix(((1, 8, 8), (5, 5, 5)), frozenset({0})),
    "C": BaseMatrix(((1, 22, 22), (2, 1, 1)), frozenset({0})),
}


def ensemble(name: str, Q: int) -> EnsembleSpec:
    """Built-in ensemble by name (A = reference, B/C = state-column families)."""
    try:
        base = _BUILTIN_BASES[name]
    except KeyError:
        raise ValueError(f"unknown ensemble {name!r}; choose from {sorted(_BUILTIN_BASES)}") from None
    return EnsembleSpec(name, base, Q)


def custom_ensemble(entries, state_columns, Q: int, name: str = "custom") -> EnsembleSpec:
    return EnsembleSpec(name, BaseMatrix(tuple(map(tuple, entries)), frozenset(state_columns)), Q)


def key_space_bits(spec: EnsembleSpec) -> float:
    """log2 of the number of distinct private keys in the ensemble.

    Counts weight-constrained polynomial matrices up to the cyclic-shift
    equivalence that the fixed weight-1 entry absorbs: the total is
    prod C(Q, b_ij) / Q whenever some entry admits more than one shift
    orbit (i.e. has weight strictly between 0 and Q), and 1 otherwise.
    """
    total = sum(
        math.log2(math.comb(spec.Q, b)) for row in spec.base.entries for b in row
    )
    if any(0 < b < spec.Q for row in spec.base.entries for b in row):
        total -= math.log2(spec.Q)
    return total


def weight_bound(base: BaseMatrix) -> int:
    """Upper bound on the row weight of the derived parity-check matrix.

    For the state-column family this is b11 + b01*b10 + b12 + b02*b10
    (triangle inequality applied to the elimination products); for the
    single-row reference family the row weight is exactly the entry sum.
    """
    if base.is_state_shape():
        b = base.entries
        return b[1][1] + b[0][1] * b[1][0] + b[1][2] + b[0][2] * b[1][0]
    if base.is_reference_shape():
        return sum(base.entries[0])
    raise ValueError("weight bound defined only for the state-column and reference shapes")


def sample_gamma(spec: EnsembleSpec, rng: np.random.Generator) -> PolyMatrix:
    """Random extended description: entry (i,j) uniform over weight-b_ij supports.

    The fixed weight-1 corner of the state-column family is pinned to the
    constant polynomial 1, selecting one representative per cyclic-shift
    equivalence class of keys.
    """
    pinned = spec.base.is_state_shape()
    rows = []
    for i, row in enumerate(spec.base.entries):
        out = []
        for j, b in enumerate(row):
            if pinned and (i, j) == (0, 0):
                out.append(SparsePolynomial.one(spec.Q))
            else:
                out.append(ring.sample_sparse(spec.Q, b, rng))
        rows.append(tuple(out))
    return PolyMatrix(tuple(rows))


def derive_H(gamma: PolyMatrix) -> PolyMatrix:
    """Eliminate the state column of a state-family Gamma(X), yielding H(X)."""
    if gamma.rows != 2 or gamma.cols != 3:
        raise ValueError("expected a 2x3 polynomial matrix")
    if gamma[0, 0] != SparsePolynomial.one(gamma.Q):
        raise ValueError("corner entry must be the constant polynomial 1")
    g01, g02 = gamma[0, 1], gamma[0, 2]
    g10, g11, g12 = gamma[1, 0], gamma[1, 1], gamma[1, 2]
    h00 = ring.add(g11, ring.mul_mod(g01, g10))
    h01 = ring.add(g12, ring.mul_mod(g02, g10))
    return PolyMatrix(((h00, h01),))
