"""Workbench for protograph-based QC-MDPC McEliece cryptosystems.

The package is organized around the lifecycle of a QC-MDPC scheme:

- :mod:`protomdpc.ring` -- arithmetic in F2[X]/(X^Q - 1), the circulant ring
  all key material lives in.
- :mod:`protomdpc.protograph` -- base-matrix ensembles, structured expansion
  to polynomial matrices, and key-space accounting.
- :mod:`protomdpc.tanner` -- expansion of polynomial matrices into Tanner
  graphs with punctured (state) variable nodes.
- :mod:`protomdpc.decoders` -- scaled sum-product and ternary error/erasure
  message-passing decoders.
- :mod:`protomdpc.cryptosystem` -- key generation, encryption, decryption,
  key persistence.
- :mod:`protomdpc.density_evolution` -- asymptotic threshold analysis for
  both decoders on the BSC.
- :mod:`protomdpc.simulation` -- seeded Monte Carlo block-error-rate
  measurement.
- :mod:`protomdpc.security` -- ISD work-factor estimation (Prange, Stern,
  MMT) for key-distinguishing and decoding attacks.
- :mod:`protomdpc.cli` -- command-line front end.
"""

from protomdpc.ring import DensePolynomial, NonInvertibleError, SparsePolynomial
from protomdpc.protograph import BaseMatrix, EnsembleSpec, PolyMatrix, ensemble
from protomdpc.tanner import TannerGraph, expand
from protomdpc.decoders import Algorithm, DecodeResult, DecoderConfig, decode_e, decode_spa
from protomdpc.cryptosystem import (
    DecodingFailure,
    PrivateKey,
    PublicKey,
    decrypt,
    encrypt,
    keygen,
    load_key,
    save_key,
)

__version__ = "0.1.0"

__all__ = [
    "Algorithm",
    "BaseMatrix",
    "DecodeResult",
    "DecoderConfig",
    "DecodingFailure",
    "DensePolynomial",
    "EnsembleSpec",
    "NonInvertibleError",
    "PolyMatrix",
    "PrivateKey",
    "PublicKey",
    "SparsePolynomial",
    "TannerGraph",
    "decode_e",
    "decode_spa",
    "decrypt",
    "encrypt",
    "ensemble",
    "expand",
    "keygen",
    "load_key",
    "save_key",
]
