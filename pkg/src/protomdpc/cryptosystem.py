"""McEliece-like key generation, encryption and decryption for QC-MDPC codes.

Key generation samples the sparse parity-check description (directly for the
reference family, via the extended polynomial matrix Gamma for the
state-column families), then derives the systematic public key: with
H = (h00 h01) the generator is G = (I | P) where P is the circulant of

    p = transpose(h00 * h01^{-1})   (mod X^Q - 1)

so that G * H^T = 0.  Non-invertible h01 triggers resampling.  The plaintext
occupies the first Q codeword positions.

Decryption runs an iterative decoder over the private graph: the plain graph
of H for the reference family, the sparser extended graph of Gamma (whose Q
state VNs start erased) otherwise.  A decoder that exhausts its iteration
budget without reaching a zero syndrome raises :class:`DecodingFailure`;
callers measuring error rates must treat that event as data, not as a bug.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from protomdpc import ring
from protomdpc.decoders import Algorithm, DecodeResult, DecoderConfig, decode_e, decode_spa
from protomdpc.protograph import (
    BaseMatrix,
    EnsembleSpec,
    PolyMatrix,
    derive_H,
    sample_gamma,
    weight_bound,
)
from protomdpc.ring import DensePolynomial, NonInvertibleError, SparsePolynomial
from protomdpc.tanner import TannerGraph, expand

KEY_FILE_VERSION = 1
KEYGEN_RETRY_CAP = 100
# reference operating point for the study case; override per use
DEFAULT_ERROR_WEIGHT = 84


class KeyFileError(ValueError):
    """Base class for key (de)serialization problems."""


class MalformedKeyError(KeyFileError):
    pass


class KeyVersionError(KeyFileError):
    pass


class KeyInvariantError(KeyFileError):
    """A loaded key violates a structural invariant (e.g. the row-weight bound)."""


class KeyGenerationError(RuntimeError):
    pass


class DecodingFailure(Exception):
    """Decoder exhausted its iteration budget without a zero syndrome."""

    def __init__(self, result: DecodeResult):
        super().__init__(f"no zero syndrome after {result.iterations_used} iterations")
        self.result = result


@dataclass(frozen=True)
class PrivateKey:
    spec: EnsembleSpec
    gamma: PolyMatrix | None  # extended description; absent for the reference family
    h: PolyMatrix  # 1x2 moderate-density parity check
    graph: TannerGraph  # decoding graph (extended when gamma is present)

    @property
    def Q(self) -> int:
        return self.spec.Q

    def row_weight(self) -> int:
        return self.h[0, 0].weight + self.h[0, 1].weight


@dataclass(frozen=True)
class PublicKey:
    Q: int
    p: DensePolynomial  # G = (I | circulant(p))
    spec_name: str
    error_weight: int

    def with_error_weight(self, e: int) -> PublicKey:
        return replace(self, error_weight=e)


def _sample_reference_h(spec: EnsembleSpec, rng: np.random.Generator) -> PolyMatrix:
    row = tuple(ring.sample_sparse(spec.Q, b, rng) for b in spec.base.entries[0])
    return PolyMatrix((row,))


def _public_polynomial(h: PolyMatrix) -> DensePolynomial:
    inv = ring.invert(h[0, 1])  # raises NonInvertibleError -> resample
    p_tilde = ring.mul_mod(h[0, 0], inv)
    return DensePolynomial.from_sparse(ring.transpose(p_tilde))


def _decoding_graph(spec: EnsembleSpec, gamma: PolyMatrix | None, h: PolyMatrix) -> TannerGraph:
    if gamma is not None:
        return expand(gamma, spec.base.state_columns)
    return expand(h)


def keygen(
    spec: EnsembleSpec,
    rng: np.random.Generator,
    error_weight: int = DEFAULT_ERROR_WEIGHT,
) -> tuple[PrivateKey, PublicKey]:
    """Sample a key pair, resampling until the systematic form exists."""
    if not (spec.base.is_state_shape() or spec.base.is_reference_shape()):
        raise ValueError("key generation requires the state-column or reference base shape")
    for _ in range(KEYGEN_RETRY_CAP):
        if spec.base.is_state_shape():
            gamma = sample_gamma(spec, rng)
            h = derive_H(gamma)
        else:
            gamma = None
            h = _sample_reference_h(spec, rng)
        try:
            p = _public_polynomial(h)
        except NonInvertibleError:
            continue
        priv = PrivateKey(spec, gamma, h, _decoding_graph(spec, gamma, h))
        pub = PublicKey(spec.Q, p, spec.name, error_weight)
        return priv, pub
    raise KeyGenerationError(
        f"no invertible h01 in {KEYGEN_RETRY_CAP} samples; "
        f"the ensemble {spec.name!r} likely forces even-weight h01 at Q={spec.Q}"
    )


def public_from_private(
    priv: PrivateKey, error_weight: int = DEFAULT_ERROR_WEIGHT
) -> PublicKey:
    """Recompute the systematic public key from a private key."""
    return PublicKey(priv.Q, _public_polynomial(priv.h), priv.spec.name, error_weight)


def _as_bits(u, length: int, what: str) -> np.ndarray:
    u = np.asarray(u, dtype=np.uint8)
    if u.shape != (length,):
        raise ValueError(f"{what} must be a bit-vector of length {length}")
    if np.any(u > 1):
        raise ValueError(f"{what} must contain only bits")
    return u


def encrypt(
    pub: PublicKey,
    plaintext,
    rng: np.random.Generator,
    error_weight: int | None = None,
) -> np.ndarray:
    """c = u*G + e with e uniform over weight-e vectors of length 2Q."""
    Q = pub.Q
    u = _as_bits(plaintext, Q, "plaintext")
    e = pub.error_weight if error_weight is None else error_weight
    n = 2 * Q
    if not 0 <= e <= n:
        raise ValueError(f"error weight {e} out of range [0, {n}]")
    redundancy = ring.mul_dense(DensePolynomial.from_bits(u), pub.p)
    c = np.concatenate([u, redundancy.to_bits()])
    flips = rng.choice(n, size=e, replace=False)
    c[flips] ^= 1
    return c


def decrypt(
    priv: PrivateKey,
    ciphertext,
    cfg: DecoderConfig,
    error_weight: int | None = None,
) -> np.ndarray:
    """Recover the first Q bits of the decoded word; raise on decoder failure.

    ``error_weight`` feeds the sum-product channel initialization and is
    required for SPA decoding; the ternary decoder ignores it.
    """
    Q = priv.Q
    c = _as_bits(ciphertext, 2 * Q, "ciphertext")
    signs = 1.0 - 2.0 * c.astype(np.float64)
    if cfg.algorithm is Algorithm.SPA:
        if error_weight is None:
            raise ValueError("SPA decoding needs the error weight for its channel LLR")
        result = decode_spa(priv.graph, signs, error_weight, cfg)
    else:
        result = decode_e(priv.graph, signs, cfg)
    if not result.syndrome_zero:
        raise DecodingFailure(result)
    return result.estimate[:Q]


# -- key persistence ----------------------------------------------------------


def _spec_record(spec: EnsembleSpec) -> dict:
    return {
        "name": spec.name,
        "base": [list(row) for row in spec.base.entries],
        "state_columns": sorted(spec.base.state_columns),
    }


def _spec_from_record(rec: dict, Q: int) -> EnsembleSpec:
    base = BaseMatrix(tuple(tuple(row) for row in rec["base"]), frozenset(rec["state_columns"]))
    return EnsembleSpec(rec["name"], base, Q)


def save_key(key: PrivateKey | PublicKey, path) -> None:
    """Write a self-describing JSON key record (stable bytes for fixed inputs)."""
    if isinstance(key, PrivateKey):
        if key.gamma is not None:
            payload = {"gamma": [[list(p.support) for p in row] for row in key.gamma.entries]}
        else:
            payload = {"h": [list(p.support) for p in key.h.entries[0]]}
        record = {
            "format": "protomdpc-key",
            "version": KEY_FILE_VERSION,
            "role": "private",
            "Q": key.Q,
            "spec": _spec_record(key.spec),
            "payload": payload,
        }
    elif isinstance(key, PublicKey):
        record = {
            "format": "protomdpc-key",
            "version": KEY_FILE_VERSION,
            "role": "public",
            "Q": key.Q,
            "spec": {"name": key.spec_name},
            "payload": {"p_hex": key.p.to_hex(), "error_weight": key.error_weight},
        }
    else:
        raise TypeError(f"not a key: {type(key).__name__}")
    with open(path, "w") as fh:
        json.dump(record, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _load_record(path) -> dict:
    try:
        with open(path) as fh:
            record = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as ex:
        raise MalformedKeyError(f"{path}: not a key file ({ex})") from ex
    if not isinstance(record, dict) or record.get("format") != "protomdpc-key":
        raise MalformedKeyError(f"{path}: missing protomdpc-key header")
    if record.get("version") != KEY_FILE_VERSION:
        raise KeyVersionError(
            f"{path}: key file version {record.get('version')!r}, expected {KEY_FILE_VERSION}"
        )
    return record


def load_key(path) -> PrivateKey | PublicKey:
    """Load and validate a key file; every type invariant is re-checked."""
    record = _load_record(path)
    try:
        role = record["role"]
        Q = int(record["Q"])
        payload = record["payload"]
    except (KeyError, TypeError, ValueError) as ex:
        raise MalformedKeyError(f"{path}: incomplete record ({ex})") from ex

    if role == "public":
        try:
            p = DensePolynomial.from_hex(Q, payload["p_hex"])
            e = int(payload["error_weight"])
            name = record["spec"]["name"]
        except (KeyError, TypeError, ValueError) as ex:
            raise MalformedKeyError(f"{path}: bad public payload ({ex})") from ex
        if not 0 <= e <= 2 * Q:
            raise KeyInvariantError(f"{path}: error weight {e} out of range")
        return PublicKey(Q, p, name, e)

    if role != "private":
        raise MalformedKeyError(f"{path}: unknown role {role!r}")
    try:
        spec = _spec_from_record(record["spec"], Q)
    except (KeyError, TypeError, ValueError) as ex:
        raise MalformedKeyError(f"{path}: bad spec record ({ex})") from ex

    try:
        if "gamma" in payload:
            rows = tuple(
                tuple(SparsePolynomial(Q, tuple(sup)) for sup in row) for row in payload["gamma"]
            )
            gamma = PolyMatrix(rows)
        else:
            gamma = None
            row = tuple(SparsePolynomial(Q, tuple(sup)) for sup in payload["h"])
            h = PolyMatrix((row,))
    except (KeyError, TypeError, ValueError) as ex:
        raise MalformedKeyError(f"{path}: bad private payload ({ex})") from ex

    if gamma is not None:
        if gamma.rows != spec.base.rows or gamma.cols != spec.base.cols:
            raise KeyInvariantError(f"{path}: gamma shape disagrees with the base matrix")
        for i, row in enumerate(spec.base.entries):
            for j, b in enumerate(row):
                if gamma[i, j].weight != b:
                    raise KeyInvariantError(
                        f"{path}: entry ({i},{j}) has weight {gamma[i, j].weight}, base says {b}"
                    )
        try:
            h = derive_H(gamma)
        except ValueError as ex:
            raise KeyInvariantError(f"{path}: {ex}") from ex
    else:
        if not spec.base.is_reference_shape() or len(h.entries[0]) != spec.base.cols:
            raise KeyInvariantError(f"{path}: direct-h payload requires a reference-shape base")
        for j, b in enumerate(spec.base.entries[0]):
            if h[0, j].weight != b:
                raise KeyInvariantError(
                    f"{path}: h_{j} has weight {h[0, j].weight}, base says {b}"
                )
    try:
        bound = weight_bound(spec.base)
    except ValueError as ex:
        raise KeyInvariantError(f"{path}: {ex}") from ex
    actual = h[0, 0].weight + h[0, 1].weight
    if actual > bound:
        raise KeyInvariantError(f"{path}: row weight {actual} exceeds the bound {bound}")
    return PrivateKey(spec, gamma, h, _decoding_graph(spec, gamma, h))
