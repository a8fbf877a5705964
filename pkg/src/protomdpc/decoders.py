"""Finite-length message-passing decoders over Tanner graphs with state VNs.

Two algorithms, both with a flooding schedule (all check nodes, then all
variable nodes) and a scaling parameter omega:

- scaled sum-product: real-valued log-likelihood messages; the check-node
  output ``2*atanh(prod tanh(m/2))`` is multiplied by omega.
- ternary error/erasure decoding: messages confined to {-1, 0, +1}; omega
  amplifies the channel term inside the variable-node sign rule and is
  de-activated (set to 1) in the final decision.

Bits map to the +-1 alphabet as 0 -> +1, 1 -> -1.  State (punctured) VNs
have no channel observation: their channel message is 0 (an erasure).

All per-iteration work is expressed as vectorized gather / scatter-add
passes over the flat edge arrays of the graph, with leave-one-out
aggregates formed by subtracting each edge's own contribution from its
node total (zero factors are excluded by counting them instead of
multiplying, which keeps the check-node product exact).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from protomdpc.tanner import TannerGraph

# tanh/atanh saturation guard for sum-product messages
_LLR_CLIP = 30.0
_ATANH_GUARD = 1.0 - 1e-14


class Algorithm(enum.Enum):
    SPA = "SPA"
    E = "E"

    @classmethod
    def parse(cls, text: str) -> Algorithm:
        key = text.strip().upper()
        if key in ("SPA", "SUM-PRODUCT"):
            return cls.SPA
        if key in ("E", "ALGE", "ALG-E"):
            return cls.E
        raise ValueError(f"unknown algorithm {text!r}")


@dataclass(frozen=True)
class DecoderConfig:
    algorithm: Algorithm
    omega: float = 1.0
    max_iterations: int = 100
    early_stop: bool = True

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be non-negative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass
class DecodeResult:
    """Hard decisions (bits) over the non-punctured VNs plus decoder status.

    ``syndrome_zero`` guarantees the full estimate, state-VN decisions
    included, satisfied every parity check of the decoding graph.
    """

    estimate: np.ndarray
    syndrome_zero: bool
    iterations_used: int


def _channel_values(g: TannerGraph, ciphertext: np.ndarray) -> np.ndarray:
    """Spread the +-1 ciphertext onto the observed VNs; state VNs get 0."""
    ciphertext = np.asarray(ciphertext, dtype=np.float64)
    if ciphertext.shape != (g.observed_count,):
        raise ValueError(
            f"ciphertext length {ciphertext.shape} does not match {g.observed_count} observed VNs"
        )
    if not np.all(np.abs(ciphertext) == 1.0):
        raise ValueError("ciphertext must be a +-1 vector")
    ch = np.zeros(g.vn_count)
    ch[~g.punctured] = ciphertext
    return ch


def _decide(app: np.ndarray, chan: np.ndarray, punctured: np.ndarray) -> np.ndarray:
    """Sign decision with ties resolved to the channel value (bit 0 for state VNs)."""
    x = np.sign(app)
    ties = x == 0
    if ties.any():
        x[ties & ~punctured] = chan[ties & ~punctured]
        x[ties & punctured] = 1.0
    return x


def _syndrome_ok(g: TannerGraph, hard: np.ndarray) -> bool:
    bits = (hard < 0).astype(np.float64)
    parity = np.bincount(g.edge_cn, weights=bits[g.edge_vn], minlength=g.cn_count)
    return not (parity.astype(np.int64) & 1).any()


def decode_e(g: TannerGraph, ciphertext: np.ndarray, cfg: DecoderConfig) -> DecodeResult:
    """Ternary error/erasure message passing.

    VN rule: sign(omega * m_ch + sum of other CN messages); a zero total
    emits the erasure message 0.  CN rule: product of the other incoming
    messages.  The final decision re-weights the channel with omega = 1.
    """
    if cfg.algorithm is not Algorithm.E:
        raise ValueError("config selects a different algorithm")
    chan = _channel_values(g, ciphertext)
    ev, ec = g.edge_vn, g.edge_cn
    c2v = np.zeros(g.edge_count)

    hard = _decide(chan.copy(), chan, g.punctured)
    if cfg.early_stop and _syndrome_ok(g, hard):
        return DecodeResult((hard[~g.punctured] < 0).astype(np.uint8), True, 0)

    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        # VN -> CN
        tot = cfg.omega * chan + np.bincount(ev, weights=c2v, minlength=g.vn_count)
        v2c = np.sign(tot[ev] - c2v)
        if np.abs(v2c).max(initial=0.0) > 1.0:
            raise RuntimeError("ternary message outside {-1,0,+1}")
        # CN -> VN: zero if any other input is erased, else the sign product
        is_zero = v2c == 0
        is_neg = v2c < 0
        zeros_at_cn = np.bincount(ec, weights=is_zero, minlength=g.cn_count)
        negs_at_cn = np.bincount(ec, weights=is_neg, minlength=g.cn_count)
        other_zeros = zeros_at_cn[ec] - is_zero
        other_negs = (negs_at_cn[ec] - is_neg).astype(np.int64)
        c2v = np.where(other_zeros > 0, 0.0, 1.0 - 2.0 * (other_negs & 1))
        # final decision (omega de-activated on the channel term)
        app = chan + np.bincount(ev, weights=c2v, minlength=g.vn_count)
        hard = _decide(app, chan, g.punctured)
        if cfg.early_stop and _syndrome_ok(g, hard):
            return DecodeResult((hard[~g.punctured] < 0).astype(np.uint8), True, iterations)

    return DecodeResult(
        (hard[~g.punctured] < 0).astype(np.uint8), _syndrome_ok(g, hard), iterations
    )


def decode_spa(
    g: TannerGraph, ciphertext: np.ndarray, error_weight: int, cfg: DecoderConfig
) -> DecodeResult:
    """Scaled sum-product decoding over the BSC with crossover e/n.

    The channel LLR is c * ln((n - e)/e) for the n observed VNs and 0 for
    state VNs.  Check-node outputs are scaled by omega.  Messages are
    clipped to +-30 before the tanh transform; the product over the other
    edges is evaluated in the log domain with explicit zero-factor counts,
    so exact zero messages (erasures) propagate without dividing by zero.
    """
    if cfg.algorithm is not Algorithm.SPA:
        raise ValueError("config selects a different algorithm")
    chan_sign = _channel_values(g, ciphertext)
    n = g.observed_count
    if not 0 <= error_weight <= n:
        raise ValueError(f"error weight {error_weight} out of range [0, {n}]")
    if error_weight == 0:
        llr0 = _LLR_CLIP
    else:
        llr0 = min(max(math.log((n - error_weight) / error_weight), -_LLR_CLIP), _LLR_CLIP)
    chan = chan_sign * llr0
    ev, ec = g.edge_vn, g.edge_cn

    hard = _decide(chan.copy(), chan_sign, g.punctured)
    if cfg.early_stop and _syndrome_ok(g, hard):
        return DecodeResult((hard[~g.punctured] < 0).astype(np.uint8), True, 0)

    v2c = chan[ev]
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        # CN -> VN
        t = np.tanh(np.clip(v2c, -_LLR_CLIP, _LLR_CLIP) / 2.0)
        is_zero = t == 0.0
        is_neg = t < 0.0
        log_abs = np.where(is_zero, 0.0, np.log(np.abs(np.where(is_zero, 1.0, t))))
        log_sum = np.bincount(ec, weights=log_abs, minlength=g.cn_count)
        zeros_at_cn = np.bincount(ec, weights=is_zero, minlength=g.cn_count)
        negs_at_cn = np.bincount(ec, weights=is_neg, minlength=g.cn_count)
        other_zeros = zeros_at_cn[ec] - is_zero
        other_negs = (negs_at_cn[ec] - is_neg).astype(np.int64)
        prod = np.exp(log_sum[ec] - log_abs) * (1.0 - 2.0 * (other_negs & 1))
        prod = np.where(other_zeros > 0, 0.0, prod)
        c2v = cfg.omega * 2.0 * np.arctanh(np.clip(prod, -_ATANH_GUARD, _ATANH_GUARD))
        # VN -> CN and final decision
        tot = chan + np.bincount(ev, weights=c2v, minlength=g.vn_count)
        v2c = tot[ev] - c2v
        hard = _decide(tot, chan_sign, g.punctured)
        if cfg.early_stop and _syndrome_ok(g, hard):
            return DecodeResult((hard[~g.punctured] < 0).astype(np.uint8), True, iterations)

    return DecodeResult(
        (hard[~g.punctured] < 0).astype(np.uint8), _syndrome_ok(g, hard), iterations
    )
