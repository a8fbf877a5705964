"""Asymptotic decoding analysis on the BSC via protograph density evolution.

Two trackers, matching the two finite-length decoders:

**Ternary (error/erasure) decoding.**  Message distributions are vectors
(p_-1, p_0, p_+1).  A degree-d check node maps the other d-1 inputs through

    p_-1 = (prod(q_+1 + q_-1) - prod(q_+1 - q_-1)) / 2
    p_0  = 1 - prod(1 - q_0)
    p_+1 = (prod(q_+1 + q_-1) + prod(q_+1 - q_-1)) / 2

and a variable node convolves the other incoming vectors on the integer
lattice together with the channel vector (point masses delta at -omega and
1-delta at +omega; a single point mass at 0 for state VNs), then bins the
result by sign.  The final estimate uses all inputs and a channel re-weighted
to support {-1, 0, +1} (scaling de-activated).  Convergence means the
negative-plus-erasure mass of that estimate vanishes for every VN type.

**Scaled sum-product.**  Quantized density evolution over the LLR lattice
{-L, ..., -step, 0, step, ..., L}: variable nodes convolve pmfs (mass beyond
the saturation bound folds into the end bins), check nodes apply the pairwise
"boxplus" 2*atanh(tanh(x/2)*tanh(y/2)) through a precomputed quantization
table, and the omega scaling acts as an index map on the lattice.

Every pmf produced during an iteration is checked for conservation and
renormalized; the fixed-point maps amplify even 1e-8 mass deficits into
runaway divergence within a handful of iterations, so this is load-bearing,
not cosmetic.

Parallel protograph edges are distinct edge types.  Their distributions
coincide at every iteration because they start equal and receive identical
updates, which is what lets the sum-product tracker evaluate one
representative per edge bundle and raise it to the bundle multiplicity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from protomdpc.protograph import EnsembleSpec

_PMF_TOL_TERNARY = 1e-12
_PMF_TOL_QUANTIZED = 1e-9
DEFAULT_EPS = 1e-9
DEFAULT_MAX_ITER = 2000
_STALL_WINDOW = 50
_STALL_DELTA = 1e-12


class BracketError(RuntimeError):
    """The bisection endpoints do not straddle a convergence transition."""


class PMFConservationError(RuntimeError):
    """A pmf update lost or gained probability mass beyond tolerance."""


class ResidualIncreaseWarning(UserWarning):
    """Residual trace increased after its initial transient."""


@dataclass(frozen=True)
class TernaryPMF:
    """Distribution of a message over {-1, 0, +1}."""

    p_minus: float
    p_zero: float
    p_plus: float

    def __post_init__(self):
        v = (self.p_minus, self.p_zero, self.p_plus)
        if min(v) < -_PMF_TOL_TERNARY or max(v) > 1 + _PMF_TOL_TERNARY:
            raise ValueError(f"probabilities out of [0,1]: {v}")
        if abs(sum(v) - 1.0) > _PMF_TOL_TERNARY:
            raise ValueError(f"probabilities sum to {sum(v)}, not 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.p_minus, self.p_zero, self.p_plus])

    @classmethod
    def from_array(cls, a) -> TernaryPMF:
        a = _renormalize(np.asarray(a, dtype=float), _PMF_TOL_TERNARY)
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class LatticePMF:
    """Pmf over consecutive integers [lo, lo + len(probs) - 1]."""

    lo: int
    probs: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(x) for x in self.probs)
        object.__setattr__(self, "probs", p)
        if not p:
            raise ValueError("empty lattice pmf")
        if min(p) < -_PMF_TOL_TERNARY:
            raise ValueError("negative probability")
        if abs(sum(p) - 1.0) > _PMF_TOL_TERNARY:
            raise ValueError(f"probabilities sum to {sum(p)}, not 1")

    @property
    def hi(self) -> int:
        return self.lo + len(self.probs) - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs)


@dataclass(frozen=True)
class QuantizedLLRPMF:
    """Pmf over the quantized LLR lattice {-L, ..., -step, 0, step, ..., L}."""

    step: float
    bound: float
    probs: tuple[float, ...]

    def __post_init__(self):
        n = int(round(self.bound / self.step))
        if abs(n * self.step - self.bound) > 1e-12 or n < 1:
            raise ValueError("bound must be a positive multiple of step")
        p = tuple(float(x) for x in self.probs)
        object.__setattr__(self, "probs", p)
        if len(p) != 2 * n + 1:
            raise ValueError(f"expected {2 * n + 1} lattice points, got {len(p)}")
        if min(p) < -_PMF_TOL_QUANTIZED:
            raise ValueError("negative probability")
        if abs(sum(p) - 1.0) > _PMF_TOL_QUANTIZED:
            raise ValueError(f"probabilities sum to {sum(p)}, not 1")

    def error_probability(self) -> float:
        """Mass on negative LLRs plus half the mass at zero."""
        n = (len(self.probs) - 1) // 2
        return float(sum(self.probs[:n]) + 0.5 * self.probs[n])


@dataclass(frozen=True)
class QuantizationParams:
    """Lattice geometry for quantized sum-product density evolution."""

    step: float = 2.0 ** -4
    bound: float = 32.0

    @property
    def half_points(self) -> int:
        return int(round(self.bound / self.step))


@dataclass
class DEState:
    """One pmf per directed edge type (a type per parallel protograph edge)."""

    edge_types: tuple[tuple[int, int, int], ...]  # (cn type, vn type, parallel index)
    vn_to_cn: list
    cn_to_vn: list
    iteration: int = 0


@dataclass
class DERunResult:
    converged: bool
    iterations: int
    residuals: list[float] = field(default_factory=list)

    @property
    def final_residual(self) -> float:
        return self.residuals[-1] if self.residuals else float("nan")


@dataclass(frozen=True)
class ThresholdResult:
    delta_star: float
    n_delta_star: float
    bracket: tuple[float, float]
    iterations: int  # iterations used by the last converging probe
    residual: float


def _renormalize(v: np.ndarray, tol: float) -> np.ndarray:
    """Clamp negatives and rescale to total mass one; reject real leaks."""
    s = v.sum()
    if not np.isfinite(s) or abs(s - 1.0) > 1e-6:
        raise PMFConservationError(f"pmf mass {s} drifted from 1")
    if v.min() < -tol * max(1.0, abs(s)):
        # convolution roundoff dips this low only through a genuine bug
        if v.min() < -1e-6:
            raise PMFConservationError(f"pmf entry {v.min()} below zero")
    v = np.maximum(v, 0.0)
    return v / v.sum()


# -- ternary (error/erasure) density evolution -------------------------------


def cn_update_e(inputs: list[TernaryPMF]) -> TernaryPMF:
    """Check-node map applied to the d-1 extrinsic inputs."""
    if not inputs:
        raise ValueError("check-node update needs at least one input")
    pa = pb = 1.0
    for q in inputs:
        pa *= q.p_plus + q.p_minus
        pb *= q.p_plus - q.p_minus
    return TernaryPMF.from_array([0.5 * (pa - pb), 1.0 - pa, 0.5 * (pa + pb)])


def channel_pmf_e(delta: float, omega: int, state: bool) -> LatticePMF:
    """Channel vector on {-omega, ..., +omega}; a point erasure for state VNs."""
    if state:
        return LatticePMF(0, (1.0,))
    probs = [0.0] * (2 * omega + 1)
    probs[0] = delta
    probs[-1] = 1.0 - delta
    return LatticePMF(-omega, tuple(probs))


def _sign_bin(z: np.ndarray, zero_index: int) -> TernaryPMF:
    return TernaryPMF.from_array(
        [z[:zero_index].sum(), z[zero_index], z[zero_index + 1 :].sum()]
    )


def _validate_channel(channel: LatticePMF) -> None:
    if channel.lo == channel.hi == 0:
        return  # state-VN erasure
    omega = channel.hi
    nonzero = {channel.lo + i for i, p in enumerate(channel.probs) if p > 0}
    if channel.lo != -omega or not nonzero <= {-omega, 0, omega}:
        raise ValueError(f"channel support must sit on {{-w, 0, +w}}, got {sorted(nonzero)}")


def vn_update_e(inputs: list[TernaryPMF], channel: LatticePMF) -> TernaryPMF:
    """Variable-node map: lattice convolution of the extrinsic inputs and the
    channel vector, then binning by sign."""
    _validate_channel(channel)
    z = channel.as_array()
    lo = channel.lo
    for q in inputs:
        z = np.convolve(z, q.as_array())
        lo -= 1
    return _sign_bin(z, -lo)


def app_e(inputs: list[TernaryPMF], channel_prime: TernaryPMF) -> TernaryPMF:
    """Final estimate: all inputs convolved with the de-scaled channel vector."""
    z = channel_prime.as_array()
    lo = -1
    for q in inputs:
        z = np.convolve(z, q.as_array())
        lo -= 1
    return _sign_bin(z, -lo)


def app_channel_e(delta: float, state: bool) -> TernaryPMF:
    return TernaryPMF(0.0, 1.0, 0.0) if state else TernaryPMF(delta, 0.0, 1.0 - delta)


class _ProtoStructure:
    """Directed edge types of a protograph, grouped by CN and VN type."""

    def __init__(self, spec: EnsembleSpec):
        b = spec.base.entries
        self.edge_types = tuple(
            (i, j, k)
            for i in range(spec.base.rows)
            for j in range(spec.base.cols)
            for k in range(b[i][j])
        )
        self.cn_groups = [
            [t for t, (i, _, _) in enumerate(self.edge_types) if i == ii]
            for ii in range(spec.base.rows)
        ]
        self.vn_groups = [
            [t for t, (_, j, _) in enumerate(self.edge_types) if j == jj]
            for jj in range(spec.base.cols)
        ]
        self.state = [j in spec.base.state_columns for j in range(spec.base.cols)]


def _check_trace(residuals: list[float]) -> None:
    """Warn when a converging trace bounces back after its decisive descent.

    The transient ends once the residual has halved; hovering before that
    point (typical close to threshold) is not flagged.
    """
    if len(residuals) < 3:
        return
    r = np.asarray(residuals)
    below = np.nonzero(r < 0.5 * r[0])[0]
    if below.size == 0:
        return
    transient = int(below[0])
    inc = np.nonzero(np.diff(r[transient:]) > 1e-12)[0]
    if inc.size:
        warnings.warn(
            f"residual increased at iteration {transient + int(inc[0]) + 1}",
            ResidualIncreaseWarning,
            stacklevel=3,
        )


def de_run_e(
    spec: EnsembleSpec,
    delta: float,
    omega: int,
    max_iter: int = DEFAULT_MAX_ITER,
    eps: float = DEFAULT_EPS,
    state: DEState | None = None,
) -> DERunResult:
    """Track the ternary message distributions; converged when the final
    estimate's negative-plus-erasure mass drops below eps for all VN types.

    ``omega`` must be a positive integer so the channel support stays on the
    message lattice.  Pass a :class:`DEState` to expose the per-edge-type
    pmfs after the run.
    """
    if not 0.0 <= delta <= 0.5:
        raise ValueError("delta must lie in [0, 1/2]")
    if omega != int(omega) or omega < 1:
        raise ValueError("ternary-decoder density evolution needs integer omega >= 1")
    omega = int(omega)
    st = _ProtoStructure(spec)
    E = len(st.edge_types)

    chan = [channel_pmf_e(delta, omega, s).as_array() for s in st.state]
    chan_lo = [0 if s else -omega for s in st.state]
    chanp = [app_channel_e(delta, s).as_array() for s in st.state]

    # q[t]: VN->CN pmf for edge type t; initial messages see only the channel
    q = np.empty((E, 3))
    for j, ts in enumerate(st.vn_groups):
        init = (
            np.array([0.0, 1.0, 0.0])
            if st.state[j]
            else np.array([delta, 0.0, 1.0 - delta])
        )
        q[ts] = init
    p = np.empty((E, 3))

    residuals: list[float] = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        # CN side: leave-one-out products via prefix/suffix (division-free)
        a_all = q[:, 0] + q[:, 2]
        b_all = q[:, 2] - q[:, 0]
        for ts in st.cn_groups:
            if not ts:
                continue
            a, b = a_all[ts], b_all[ts]
            pa = _loo_prod(a)
            pb = _loo_prod(b)
            loc = np.stack([0.5 * (pa - pb), 1.0 - pa, 0.5 * (pa + pb)], axis=1)
            loc = np.maximum(loc, 0.0)
            p[ts] = loc / loc.sum(axis=1, keepdims=True)
        # VN side: leave-one-out convolutions via prefix/suffix
        resid = 0.0
        for j, ts in enumerate(st.vn_groups):
            d = len(ts)
            pref = [np.array([1.0])]
            for t in ts:
                pref.append(np.convolve(pref[-1], p[t]))
            suf = [np.array([1.0])]
            for t in reversed(ts):
                suf.insert(0, np.convolve(suf[0], p[t]))
            for x, t in enumerate(ts):
                z = np.convolve(np.convolve(pref[x], suf[x + 1]), chan[j])
                zero = (d - 1) - chan_lo[j]
                q[t] = _bin3(z, zero)
            z = np.convolve(pref[d], chanp[j])
            f = _bin3(z, d + 1)
            resid = max(resid, f[0] + f[1])
        residuals.append(resid)
        if resid < eps:
            converged = True
            break
        if (
            it > _STALL_WINDOW
            and abs(residuals[-1] - residuals[-1 - _STALL_WINDOW]) < _STALL_DELTA
        ):
            break
    if converged:
        _check_trace(residuals)
    if state is not None:
        state.edge_types = st.edge_types
        state.vn_to_cn = [TernaryPMF.from_array(q[t]) for t in range(E)]
        state.cn_to_vn = [TernaryPMF.from_array(p[t]) for t in range(E)]
        state.iteration = it
    return DERunResult(converged, it, residuals)


def _loo_prod(v: np.ndarray) -> np.ndarray:
    """Products of all entries except each one, without division."""
    d = len(v)
    pref = np.empty(d + 1)
    pref[0] = 1.0
    np.cumprod(v, out=pref[1:])
    suf = np.empty(d + 1)
    suf[d] = 1.0
    suf[:d] = np.cumprod(v[::-1])[::-1]
    return pref[:d] * suf[1:]


def _bin3(z: np.ndarray, zero: int) -> np.ndarray:
    v = np.array([z[:zero].sum(), z[zero], z[zero + 1 :].sum()])
    return _renormalize(v, _PMF_TOL_TERNARY)


# -- quantized sum-product density evolution ----------------------------------


class _QuantizedOps:
    """Boxplus table, saturating convolution and scaling on the LLR lattice."""

    _cache: dict[tuple[float, float], "_QuantizedOps"] = {}

    def __init__(self, params: QuantizationParams):
        self.params = params
        self.n = params.half_points
        self.nb = 2 * self.n + 1
        idx = np.arange(-self.n, self.n + 1) * params.step
        t = np.tanh(idx / 2.0)
        prod = np.clip(np.outer(t, t), -1 + 1e-16, 1 - 1e-16)
        out = np.rint(2.0 * np.arctanh(prod) / params.step).astype(np.int64)
        self.table = (np.clip(out, -self.n, self.n) + self.n).ravel()

    @classmethod
    def get(cls, params: QuantizationParams) -> "_QuantizedOps":
        key = (params.step, params.bound)
        if key not in cls._cache:
            cls._cache[key] = cls(params)
        return cls._cache[key]

    def boxplus(self, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
        return np.bincount(self.table, weights=np.outer(p1, p2).ravel(), minlength=self.nb)

    def boxplus_power(self, p: np.ndarray, m: int) -> np.ndarray:
        assert m >= 1
        r = None
        b = p
        while m:
            if m & 1:
                r = b if r is None else self.boxplus(r, b)
            m >>= 1
            if m:
                b = self.boxplus(b, b)
        return r

    def conv(self, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
        """Lattice addition with tail mass folded into the saturation bins."""
        full = np.convolve(p1, p2)
        n = self.n
        out = np.empty(self.nb)
        out[0] = full[: n + 1].sum()
        out[1:-1] = full[n + 1 : 3 * n]
        out[-1] = full[3 * n :].sum()
        return out

    def conv_power(self, p: np.ndarray, m: int) -> np.ndarray:
        assert m >= 1
        r = None
        b = p
        while m:
            if m & 1:
                r = b if r is None else self.conv(r, b)
            m >>= 1
            if m:
                b = self.conv(b, b)
        return r

    def scale_map(self, omega: float) -> np.ndarray:
        src = np.arange(-self.n, self.n + 1)
        return np.clip(np.rint(omega * src).astype(np.int64), -self.n, self.n) + self.n

    def channel(self, delta: float, state: bool) -> np.ndarray:
        p = np.zeros(self.nb)
        if state:
            p[self.n] = 1.0
            return p
        if delta <= 0.0:
            p[-1] = 1.0
            return p
        llr = math.log((1.0 - delta) / delta)
        ci = int(np.clip(np.rint(llr / self.params.step), -self.n, self.n))
        p[self.n + ci] += 1.0 - delta
        p[self.n - ci] += delta
        return p

    def wrap(self, probs: np.ndarray) -> QuantizedLLRPMF:
        return QuantizedLLRPMF(self.params.step, self.params.bound, tuple(probs))


def de_run_spa(
    spec: EnsembleSpec,
    delta: float,
    omega: float,
    quantization: QuantizationParams = QuantizationParams(),
    max_iter: int = DEFAULT_MAX_ITER,
    eps: float = DEFAULT_EPS,
    state: DEState | None = None,
) -> DERunResult:
    """Quantized density evolution for the scaled sum-product decoder.

    Converged when the error-probability functional of the final-estimate
    pmf (negative mass plus half the zero mass) drops below eps for all VN
    types.  One pmf is evolved per edge bundle and raised to the bundle
    multiplicity, which equals the per-edge-type evolution because parallel
    edges carry identical distributions.
    """
    if not 0.0 <= delta <= 0.5:
        raise ValueError("delta must lie in [0, 1/2]")
    if omega <= 0:
        raise ValueError("omega must be positive")
    ops = _QuantizedOps.get(quantization)
    smap = ops.scale_map(omega)
    b = spec.base.entries
    bundles = [
        (i, j)
        for i in range(spec.base.rows)
        for j in range(spec.base.cols)
        if b[i][j] > 0
    ]
    is_state = [j in spec.base.state_columns for j in range(spec.base.cols)]
    chan = {j: ops.channel(delta, is_state[j]) for j in range(spec.base.cols)}

    q = {bd: chan[bd[1]].copy() for bd in bundles}
    residuals: list[float] = []
    converged = False
    it = 0
    neutral = np.zeros(ops.nb)
    neutral[-1] = 1.0  # boxplus identity ~ the +L point mass
    for it in range(1, max_iter + 1):
        p = {}
        for (i, j) in bundles:
            acc = None
            for (i2, j2) in bundles:
                if i2 != i:
                    continue
                m = b[i2][j2] - (1 if j2 == j else 0)
                if m == 0:
                    continue
                pw = ops.boxplus_power(q[(i2, j2)], m)
                acc = pw if acc is None else ops.boxplus(acc, pw)
            if acc is None:  # degree-1 CN emits an erasure
                acc = np.zeros(ops.nb)
                acc[ops.n] = 1.0
            acc = np.bincount(smap, weights=acc, minlength=ops.nb)
            p[(i, j)] = _renormalize(acc, _PMF_TOL_QUANTIZED)
        resid = 0.0
        qn = {}
        for j in range(spec.base.cols):
            inb = [bd for bd in bundles if bd[1] == j]
            for (i, _) in inb:
                acc = chan[j]
                for (i3, j3) in inb:
                    m = b[i3][j3] - (1 if i3 == i else 0)
                    if m == 0:
                        continue
                    acc = ops.conv(acc, ops.conv_power(p[(i3, j3)], m))
                qn[(i, j)] = _renormalize(acc, _PMF_TOL_QUANTIZED)
            acc = chan[j]
            for (i3, j3) in inb:
                acc = ops.conv(acc, ops.conv_power(p[(i3, j3)], b[i3][j3]))
            acc = _renormalize(acc, _PMF_TOL_QUANTIZED)
            resid = max(resid, acc[: ops.n].sum() + 0.5 * acc[ops.n])
        q = qn
        residuals.append(resid)
        if resid < eps:
            converged = True
            break
        if (
            it > _STALL_WINDOW
            and abs(residuals[-1] - residuals[-1 - _STALL_WINDOW]) < _STALL_DELTA
        ):
            break
    if state is not None:
        # expand bundle pmfs to the per-edge-type contract
        ets = []
        v2c = []
        c2v = []
        for i in range(spec.base.rows):
            for j in range(spec.base.cols):
                for k in range(b[i][j]):
                    ets.append((i, j, k))
                    v2c.append(ops.wrap(q[(i, j)]))
                    c2v.append(ops.wrap(p[(i, j)]))
        state.edge_types = tuple(ets)
        state.vn_to_cn = v2c
        state.cn_to_vn = c2v
        state.iteration = it
    return DERunResult(converged, it, residuals)


# -- threshold search ----------------------------------------------------------


def _bisect_threshold(run, spec: EnsembleSpec, tol: float | None) -> ThresholdResult:
    n = spec.block_length
    if tol is None:
        tol = 1.0 / (2 * n)
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = 0.0, 0.5
    res_lo = run(lo)
    if not res_lo.converged:
        raise BracketError("density evolution fails even on a noiseless channel")
    res_hi = run(hi)
    if res_hi.converged:
        raise BracketError("density evolution converges at delta = 1/2; no transition to bracket")
    best = res_lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        res = run(mid)
        if res.converged:
            lo, best = mid, res
        else:
            hi = mid
    delta_star = 0.5 * (lo + hi)
    return ThresholdResult(delta_star, n * delta_star, (lo, hi), best.iterations, best.final_residual)


def threshold_e(
    spec: EnsembleSpec,
    omega: int,
    tol: float | None = None,
    max_iter: int = DEFAULT_MAX_ITER,
    eps: float = DEFAULT_EPS,
) -> ThresholdResult:
    """Bisect the largest crossover delta the ternary decoder tolerates."""
    return _bisect_threshold(
        lambda d: de_run_e(spec, d, omega, max_iter=max_iter, eps=eps), spec, tol
    )


def threshold_spa(
    spec: EnsembleSpec,
    omega: float,
    tol: float | None = None,
    quantization: QuantizationParams = QuantizationParams(),
    max_iter: int = DEFAULT_MAX_ITER,
    eps: float = DEFAULT_EPS,
) -> ThresholdResult:
    """Bisect the largest crossover delta the scaled sum-product tolerates."""
    return _bisect_threshold(
        lambda d: de_run_spa(spec, d, omega, quantization, max_iter=max_iter, eps=eps),
        spec,
        tol,
    )
