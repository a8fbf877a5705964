"""Seeded Monte Carlo measurement of block error rate vs error-pattern weight.

Every trial derives its own random stream from the master seed and the
(weight index, trial index) pair, so results are bit-identical no matter how
many workers execute them.  Trials run in fixed-size blocks consumed in
order; the early-stop rule (enough failures collected) fires only on block
boundaries, which keeps the set of evaluated trials independent of the
worker count as well.

A decode that ends with a zero syndrome but the wrong plaintext is an
undetected error: it counts as a failure and is tallied separately.

Key policy: by default each trial samples a fresh key (ensemble-average
semantics, the regime density evolution predicts); fixed-key mode measures
one concrete code, as in waterfall plots of a single sampled code.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from protomdpc.cryptosystem import (
    DecodingFailure,
    PrivateKey,
    decrypt,
    encrypt,
    keygen,
    load_key,
    public_from_private,
)
from protomdpc.decoders import DecoderConfig
from protomdpc.protograph import EnsembleSpec

# tag separating the fixed-key stream from per-trial streams
_KEY_STREAM = 0xCE

DEFAULT_MAX_FAILURES = 100
_BLOCK_SIZE = 32


@dataclass(frozen=True)
class SimPlan:
    spec: EnsembleSpec | None
    decoder: DecoderConfig
    error_weights: tuple[int, ...]
    trials: int
    seed: int
    max_failures: int = DEFAULT_MAX_FAILURES
    key_per_trial: bool = True
    key_path: str | None = None  # fixed-key mode may load the key from disk
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.spec is None and self.key_path is None:
            raise ValueError("plan needs an ensemble spec or a key file")
        if self.key_per_trial and self.key_path is not None:
            raise ValueError("key-per-trial mode cannot use a fixed key file")
        object.__setattr__(self, "error_weights", tuple(int(e) for e in self.error_weights))


@dataclass
class SimPoint:
    e: int
    trials: int
    failures: int
    undetected: int
    bler: float
    ci_lo: float
    ci_hi: float


def wilson_interval(failures: int, trials: int, z: float = 1.959964) -> tuple[float, float]:
    """95% Wilson score interval; well behaved at zero failures."""
    if trials == 0:
        return 0.0, 1.0
    phat = failures / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


def sample_error_vector(n: int, e: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random weight-e bit-vector of length n."""
    if not 0 <= e <= n:
        raise ValueError(f"error weight {e} out of range [0, {n}]")
    v = np.zeros(n, dtype=np.uint8)
    v[rng.choice(n, size=e, replace=False)] = 1
    return v


def _trial_rng(seed: int, weight_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(weight_index, trial)))


_FIXED_KEY_CACHE: dict = {}


def _fixed_key(plan: SimPlan):
    """Fixed-key mode: load from disk or derive deterministically from the seed."""
    token = (plan.seed, plan.key_path, plan.spec)
    if token not in _FIXED_KEY_CACHE:
        if plan.key_path is not None:
            priv = load_key(plan.key_path)
            if not isinstance(priv, PrivateKey):
                raise ValueError(f"{plan.key_path} holds a public key; simulation needs the private one")
            pub = public_from_private(priv)
        else:
            rng = np.random.default_rng(np.random.SeedSequence(plan.seed, spawn_key=(_KEY_STREAM,)))
            priv, pub = keygen(plan.spec, rng)
        _FIXED_KEY_CACHE.clear()
        _FIXED_KEY_CACHE[token] = (priv, pub)
    return _FIXED_KEY_CACHE[token]


def _run_trial(plan: SimPlan, weight_index: int, e: int, trial: int) -> tuple[bool, bool]:
    """One encrypt/decrypt trial; returns (failure, undetected)."""
    rng = _trial_rng(plan.seed, weight_index, trial)
    if plan.key_per_trial:
        priv, pub = keygen(plan.spec, rng)
    else:
        priv, pub = _fixed_key(plan)
    Q = priv.Q
    u = rng.integers(0, 2, size=Q, dtype=np.uint8)
    c = encrypt(pub, u, rng, error_weight=e)
    try:
        u_hat = decrypt(priv, c, plan.decoder, error_weight=e)
    except DecodingFailure:
        return True, False
    wrong = bool(np.any(u_hat != u))
    return wrong, wrong


def _run_block(args) -> tuple[int, int, int]:
    plan, weight_index, e, start, stop = args
    failures = undetected = 0
    for trial in range(start, stop):
        bad, silent = _run_trial(plan, weight_index, e, trial)
        failures += bad
        undetected += silent
    return failures, undetected, stop - start


def run_bler(plan: SimPlan, progress=None) -> list[SimPoint]:
    """Measure one SimPoint per error weight, deterministically in plan.seed."""
    points = []
    pool = ProcessPoolExecutor(max_workers=plan.workers) if plan.workers > 1 else None
    try:
        for wi, e in enumerate(plan.error_weights):
            blocks = [
                (plan, wi, e, start, min(start + _BLOCK_SIZE, plan.trials))
                for start in range(0, plan.trials, _BLOCK_SIZE)
            ]
            failures = undetected = done = 0
            results = pool.map(_run_block, blocks) if pool else map(_run_block, blocks)
            for bf, bu, bt in results:
                failures += bf
                undetected += bu
                done += bt
                if failures >= plan.max_failures:
                    break
            lo, hi = wilson_interval(failures, done)
            points.append(SimPoint(e, done, failures, undetected, failures / done, lo, hi))
            if progress is not None:
                progress(points[-1])
    finally:
        if pool:
            pool.shutdown(cancel_futures=True)
    return points


# -- result persistence --------------------------------------------------------

_CSV_COLUMNS = [
    "ensemble",
    "algorithm",
    "omega",
    "Q",
    "e",
    "trials",
    "failures",
    "bler",
    "ci_lo",
    "ci_hi",
    "seed",
    "undetected",
]


def plan_metadata(plan: SimPlan) -> dict:
    spec = plan.spec
    return {
        "ensemble": spec.name if spec else "",
        "algorithm": plan.decoder.algorithm.value,
        "omega": plan.decoder.omega,
        "Q": spec.Q if spec else "",
        "seed": plan.seed,
    }


def write_results(points: list[SimPoint], path, fmt: str = "csv", meta: dict | None = None) -> None:
    """Persist measured points; numeric fields survive a read-back losslessly."""
    meta = meta or {}
    rows = []
    for pt in points:
        row = {k: meta.get(k, "") for k in ("ensemble", "algorithm", "omega", "Q", "seed")}
        row.update(
            e=pt.e,
            trials=pt.trials,
            failures=pt.failures,
            bler=repr(pt.bler),
            ci_lo=repr(pt.ci_lo),
            ci_hi=repr(pt.ci_hi),
            undetected=pt.undetected,
        )
        rows.append(row)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=_CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
    elif fmt == "json":
        for row in rows:
            for k in ("bler", "ci_lo", "ci_hi"):
                row[k] = float(row[k])
        with open(path, "w") as fh:
            json.dump(rows, fh, indent=2)
            fh.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_results(path) -> list[dict]:
    """Read back rows written by :func:`write_results` (csv or json)."""
    text = open(path).read()
    if text.lstrip().startswith("["):
        rows = json.loads(text)
    else:
        rows = list(csv.DictReader(text.splitlines()))
    out = []
    for row in rows:
        parsed = dict(row)
        for k in ("e", "trials", "failures", "undetected"):
            if row.get(k) not in (None, ""):
                parsed[k] = int(row[k])
        for k in ("bler", "ci_lo", "ci_hi", "omega"):
            if row.get(k) not in (None, ""):
                parsed[k] = float(row[k])
        out.append(parsed)
    return out
