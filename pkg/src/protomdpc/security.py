"""Non-asymptotic information-set-decoding work factors.

Costs are expected bit-operation counts on a log2 scale, minimized over each
algorithm's internal parameters by grid search.  Binomials are evaluated in
exact integer arithmetic and only converted to log2 at the end, so C(9602, w)
never touches floating point on the way up.

Variants:

- ``prange``: re-randomize an information set until the error avoids it;
  expected iterations C(n,w)/C(n-k,w), each costing one Gaussian elimination.
- ``stern``: split information set + l-bit collision window.
- ``mmt``: two-level representation merge; the weight-p error over k+l
  positions is written as a sum of two weight-p/2 halves, whose
  C(p, p/2) representations pay for a free l1-bit filter.

The quasi-cyclic attacks divide by the DOOM factors: a key distinguisher
recovers any of the m sparse rows (divide by m), a decoder may target any of
m equivalent syndromes (divide by sqrt(m)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb, log2

import numpy as np

from protomdpc.protograph import EnsembleSpec, key_space_bits, weight_bound

_VARIANTS = ("prange", "stern", "mmt")


class InfeasibleParametersError(ValueError):
    """No internal parameter choice makes the attack well defined."""


@dataclass(frozen=True)
class WorkFactor:
    log2_cost: float
    variant: str = ""
    params: tuple = ()

    def __post_init__(self):
        if not (math.isfinite(self.log2_cost) and self.log2_cost >= 0):
            raise ValueError(f"work factor must be finite and non-negative: {self.log2_cost}")


def _log2_comb(n: int, k: int) -> float:
    if k < 0 or k > n:
        return float("-inf")
    return log2(comb(n, k))


def _gauss_ops(n: int, k: int) -> int:
    """Bit operations of one Gaussian elimination, order n * k * (n - k)."""
    return n * k * (n - k)


def prange_success_probability_log2(n: int, k: int, w: int) -> float:
    """log2 P[one random information set avoids the weight-w error]."""
    return _log2_comb(n - k, w) - _log2_comb(n, w)


def _wf_prange(n: int, k: int, w: int) -> WorkFactor:
    succ = prange_success_probability_log2(n, k, w)
    if succ == float("-inf"):
        raise InfeasibleParametersError(
            f"prange: weight {w} cannot sit inside {n - k} redundancy positions"
        )
    return WorkFactor(log2(_gauss_ops(n, k)) - min(succ, 0.0), "prange")


def _wf_stern(n: int, k: int, w: int, max_p: int = 12, max_ell: int = 160) -> WorkFactor:
    best = None
    for p in range(0, min(w // 2, max_p) + 1):
        half = comb(k // 2, p)
        if half == 0:
            continue
        for ell in range(0, max_ell + 1, 2):
            if n - k - ell <= 0 or w - 2 * p > n - k - ell:
                continue
            succ = 2 * _log2_comb(k // 2, p) + _log2_comb(n - k - ell, w - 2 * p) - _log2_comb(n, w)
            if succ == float("-inf"):
                continue
            cost_iter = _gauss_ops(n, k) + 2 * half + half * half / 2.0 ** ell
            wf = log2(cost_iter) - min(succ, 0.0)
            if best is None or wf < best[0]:
                best = (wf, (p, ell))
    if best is None:
        raise InfeasibleParametersError(f"stern: no feasible (p, l) for w={w}, (n,k)=({n},{k})")
    return WorkFactor(best[0], "stern", best[1])


def _wf_mmt(n: int, k: int, w: int, max_p: int = 40, max_ell: int = 400) -> WorkFactor:
    best = None
    for p in range(0, min(w, max_p) + 1, 4):
        reps = comb(p, p // 2) if p else 1
        ell1 = log2(reps) if reps > 1 else 0.0
        for ell in range(max(0, math.ceil(ell1)), max_ell + 1, 2):
            if n - k - ell <= 0 or w - p > n - k - ell:
                continue
            succ = _log2_comb(k + ell, p) + _log2_comb(n - k - ell, w - p) - _log2_comb(n, w)
            if succ == float("-inf"):
                continue
            base = comb((k + ell) // 2, p // 4) if p else 1
            level1 = base * base / 2.0 ** ell1
            level0 = level1 * level1 / 2.0 ** max(ell - ell1, 0.0)
            cost_iter = _gauss_ops(n, k) + 2 * base + 2 * level1 + level0
            wf = log2(cost_iter) - min(succ, 0.0)
            if best is None or wf < best[0]:
                best = (wf, (p, ell))
    if best is None:
        raise InfeasibleParametersError(f"mmt: no feasible (p, l) for w={w}, (n,k)=({n},{k})")
    return WorkFactor(best[0], "mmt", best[1])


def wf_isd(n: int, k: int, w: int, variant: str = "mmt", **grid) -> WorkFactor:
    """Cost of finding one weight-w codeword / error in an (n, k) code.

    ``grid`` may restrict the internal parameter search (``max_p``,
    ``max_ell``); widening the grid can only lower the returned minimum.
    """
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got k={k}, n={n}")
    if not 0 <= w <= n:
        raise ValueError(f"weight {w} out of range [0, {n}]")
    if variant == "prange":
        if grid:
            raise ValueError("prange has no internal parameters")
        return _wf_prange(n, k, w)
    if variant == "stern":
        return _wf_stern(n, k, w, **grid)
    if variant == "mmt":
        return _wf_mmt(n, k, w, **grid)
    raise ValueError(f"unknown variant {variant!r}; choose from {_VARIANTS}")


def wf_dist(n: int, m: int, dc: int, variant: str = "mmt") -> WorkFactor:
    """Key distinguishing: find a weight-dc dual word, DOOM-divided by m."""
    if dc > n:
        raise ValueError("row weight exceeds the block length")
    base = wf_isd(n, n - m, dc, variant)
    return WorkFactor(base.log2_cost - log2(m), base.variant, base.params)


def wf_dec(n: int, m: int, e: int, variant: str = "mmt") -> WorkFactor:
    """Decoding attack on a weight-e error, DOOM-divided by sqrt(m).

    The code parameters follow the quasi-cyclic usage: dimension k = n - m.
    """
    if e > n:
        raise ValueError("error weight exceeds the block length")
    base = wf_isd(n, n - m, e, variant)
    return WorkFactor(base.log2_cost - 0.5 * log2(m), base.variant, base.params)


# -- report -------------------------------------------------------------------


@dataclass(frozen=True)
class SecurityReport:
    ensemble: str
    n: int
    m: int
    row_weight: int
    error_weight: int
    wf_dist_bits: float
    wf_dec_bits: float
    key_space_bits: float

    def rows(self) -> list[tuple[str, str, float]]:
        return [
            ("key distinguishing", f"n={self.n} m={self.m} dc={self.row_weight}", self.wf_dist_bits),
            ("decoding", f"n={self.n} m={self.m} e={self.error_weight}", self.wf_dec_bits),
            ("key space", f"Q={self.m}", self.key_space_bits),
        ]


def operating_weight_from_curve(curve: list[dict], target_bler: float) -> int:
    """Largest measured weight whose block error rate stays at/below target.

    ``curve`` rows need ``e`` and ``bler`` keys (as read back from a
    simulation results file).  Raises when even the smallest weight exceeds
    the target, i.e. the measurement never reaches the requested depth.
    """
    pts = sorted((int(r["e"]), float(r["bler"])) for r in curve)
    if not pts:
        raise ValueError("empty curve")
    ok = [e for e, bler in pts if bler <= target_bler]
    if not ok:
        raise ValueError(
            f"measured curve never reaches bler <= {target_bler}; pass the error weight explicitly"
        )
    return max(ok)


def security_report(
    spec: EnsembleSpec,
    curve: list[dict] | None = None,
    target_bler: float = 1e-6,
    error_weight: int | None = None,
    variant: str = "mmt",
) -> SecurityReport:
    """Attack costs and key-space size at an operating point.

    The decoding-attack weight comes from ``error_weight`` when given,
    otherwise it is read off the measured block-error-rate curve at
    ``target_bler``.
    """
    if error_weight is None:
        if curve is None:
            raise ValueError("need a measured curve or an explicit error weight")
        error_weight = operating_weight_from_curve(curve, target_bler)
    n = spec.block_length
    m = spec.Q  # the derived parity-check matrix is a single circulant row block
    dc = weight_bound(spec.base)
    return SecurityReport(
        ensemble=spec.name,
        n=n,
        m=m,
        row_weight=dc,
        error_weight=error_weight,
        wf_dist_bits=wf_dist(n, m, dc, variant).log2_cost,
        wf_dec_bits=wf_dec(n, m, error_weight, variant).log2_cost,
        key_space_bits=key_space_bits(spec),
    )


# -- toy-scale validation helpers ----------------------------------------------


def prange_trial_simulator(
    n: int, k: int, w: int, runs: int, rng: np.random.Generator
) -> float:
    """Literal Prange loop at toy scale; returns the mean iteration count.

    Each run draws a fresh weight-w error and counts how many uniformly
    random information sets it takes until one avoids the error support.
    """
    total = 0
    for _ in range(runs):
        err = set(rng.choice(n, size=w, replace=False).tolist())
        while True:
            total += 1
            info = rng.choice(n, size=k, replace=False)
            if not err.intersection(info.tolist()):
                break
    return total / runs
