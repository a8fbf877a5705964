"""Command-line front end.

Subcommands map one-to-one onto module operations: ``keygen``, ``encrypt``,
``decrypt``, ``simulate``, ``threshold``, ``security`` and ``inspect``.  No
numeric logic lives here; every handler parses arguments, calls exactly one
library entry point and formats the result.

Exit codes: 0 success, 1 usage error, 2 decoding failure (``decrypt``),
3 I/O error.

A config file (INI, single ``[protomdpc]`` section) can pre-set any long
option; command-line flags override it.  The default config path comes from
``$PROTOMDPC_CONFIG``.  ``--seed`` is accepted everywhere randomness is
used; omitting it draws a seed from system entropy and prints it so the run
can be reproduced.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import secrets
import sys

import numpy as np

from protomdpc import density_evolution as de
from protomdpc import security as sec
from protomdpc import simulation as sim
from protomdpc.cryptosystem import (
    DecodingFailure,
    KeyFileError,
    PrivateKey,
    decrypt,
    encrypt,
    keygen,
    load_key,
    public_from_private,
    save_key,
)
from protomdpc.decoders import Algorithm, DecoderConfig
from protomdpc.protograph import custom_ensemble, ensemble, key_space_bits, weight_bound
from protomdpc.tanner import degree_profile

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DECODING = 2
EXIT_IO = 3

CONFIG_ENV = "PROTOMDPC_CONFIG"
_CONFIG_SECTION = "protomdpc"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    if not os.path.exists(path):
        raise UsageError(f"config file {path} does not exist")
    cp = configparser.ConfigParser()
    cp.optionxform = str  # option names are case-sensitive (Q vs q)
    cp.read(path)
    if _CONFIG_SECTION not in cp:
        raise UsageError(f"config file {path} has no [{_CONFIG_SECTION}] section")
    return dict(cp[_CONFIG_SECTION])


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = secrets.randbits(63)
    print(f"seed: {seed} (drawn from system entropy)", file=sys.stderr)
    return seed


def _spec_from_args(args):
    if getattr(args, "base", None):
        try:
            rows = json.loads(args.base)
        except json.JSONDecodeError as ex:
            raise UsageError(f"--base must be a JSON matrix: {ex}")
        state = [int(c) for c in str(getattr(args, "state_columns", "") or "").split(",") if c != ""]
        return custom_ensemble(rows, state, args.Q)
    if getattr(args, "ensemble", None):
        return ensemble(args.ensemble, args.Q)
    raise UsageError("need --ensemble or --base")


def _decoder_from_args(args) -> DecoderConfig:
    return DecoderConfig(
        algorithm=Algorithm.parse(args.algorithm),
        omega=args.omega,
        max_iterations=args.max_iterations,
        early_stop=not args.no_early_stop,
    )


def _read_bits(path: str, nbits: int, hex_mode: bool) -> np.ndarray:
    data = open(path, "rb").read()
    if hex_mode:
        data = bytes.fromhex(data.decode().strip())
    need = (nbits + 7) // 8
    if len(data) != need:
        raise UsageError(f"{path}: got {len(data)} bytes, expected {need} for {nbits} bits")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")[:nbits]
    return bits.astype(np.uint8)


def _write_bits(path: str, bits: np.ndarray, hex_mode: bool) -> None:
    raw = np.packbits(bits.astype(np.uint8), bitorder="little").tobytes()
    with open(path, "wb") as fh:
        fh.write(raw.hex().encode() + b"\n" if hex_mode else raw)


def _emit_table(rows: list[dict], columns: list[str], args) -> None:
    if getattr(args, "json", False):
        text = json.dumps(rows, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommand handlers -------------------------------------------------------


def _cmd_keygen(args) -> int:
    seed = _resolve_seed(args)
    spec = _spec_from_args(args)
    rng = np.random.default_rng(seed)
    priv, pub = keygen(spec, rng, error_weight=args.error_weight)
    save_key(priv, args.out_prefix + ".priv.json")
    save_key(pub, args.out_prefix + ".pub.json")
    print(f"wrote {args.out_prefix}.priv.json (row weight {priv.row_weight()})")
    print(f"wrote {args.out_prefix}.pub.json (Q={pub.Q}, e={pub.error_weight})")
    return EXIT_OK


def _cmd_encrypt(args) -> int:
    seed = _resolve_seed(args)
    pub = load_key(args.key)
    if isinstance(pub, PrivateKey):
        pub = public_from_private(pub)
    u = _read_bits(args.input, pub.Q, args.hex)
    rng = np.random.default_rng(seed)
    c = encrypt(pub, u, rng, error_weight=args.error_weight)
    _write_bits(args.out, c, args.hex)
    return EXIT_OK


def _cmd_decrypt(args) -> int:
    priv = load_key(args.key)
    if not isinstance(priv, PrivateKey):
        raise UsageError(f"{args.key} holds a public key; decryption needs the private one")
    c = _read_bits(args.input, 2 * priv.Q, args.hex)
    cfg = _decoder_from_args(args)
    try:
        u = decrypt(priv, c, cfg, error_weight=args.error_weight)
    except DecodingFailure as ex:
        print(f"decoding failure: {ex}", file=sys.stderr)
        return EXIT_DECODING
    _write_bits(args.out, u, args.hex)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    spec = None if args.key else _spec_from_args(args)
    if not args.weights:
        raise UsageError("need --weights (or a weights entry in the config file)")
    weights = [int(w) for w in str(args.weights).split(",")]
    plan = sim.SimPlan(
        spec=spec,
        decoder=_decoder_from_args(args),
        error_weights=tuple(weights),
        trials=args.trials,
        seed=seed,
        max_failures=args.max_failures,
        key_per_trial=not (args.fixed_key or args.key),
        key_path=args.key,
        workers=args.workers,
    )
    points = sim.run_bler(
        plan,
        progress=lambda pt: print(
            f"e={pt.e}: {pt.failures}/{pt.trials} failures, bler={pt.bler:.3g} "
            f"[{pt.ci_lo:.3g}, {pt.ci_hi:.3g}]",
            file=sys.stderr,
        ),
    )
    fmt = "json" if args.json else "csv"
    if args.out:
        sim.write_results(points, args.out, fmt, sim.plan_metadata(plan))
    else:
        rows = []
        meta = sim.plan_metadata(plan)
        for pt in points:
            row = dict(meta)
            row.update(
                e=pt.e, trials=pt.trials, failures=pt.failures, bler=pt.bler,
                ci_lo=pt.ci_lo, ci_hi=pt.ci_hi, undetected=pt.undetected,
            )
            rows.append(row)
        _emit_table(rows, sim._CSV_COLUMNS, args)
    return EXIT_OK


def _cmd_threshold(args) -> int:
    spec = _spec_from_args(args)
    algo = Algorithm.parse(args.algorithm)
    if algo is Algorithm.E:
        res = de.threshold_e(spec, int(args.omega), tol=args.tol)
    else:
        res = de.threshold_spa(spec, args.omega, tol=args.tol)
    rows = [
        {
            "ensemble": spec.name,
            "algorithm": algo.value,
            "omega": args.omega,
            "delta_star": repr(res.delta_star),
            "n_delta_star": f"{res.n_delta_star:.3f}",
            "iterations": res.iterations,
            "residual": f"{res.residual:.3e}",
        }
    ]
    _emit_table(rows, list(rows[0]), args)
    return EXIT_OK


def _cmd_security(args) -> int:
    spec = _spec_from_args(args)
    curve = sim.read_results(args.curve) if args.curve else None
    report = sec.security_report(
        spec,
        curve=curve,
        target_bler=args.target_bler,
        error_weight=args.error_weight,
        variant=args.variant,
    )
    rows = [
        {"ensemble": report.ensemble, "attack": attack, "parameters": params, "bits": f"{bits:.1f}"}
        for attack, params, bits in report.rows()
    ]
    _emit_table(rows, ["ensemble", "attack", "parameters", "bits"], args)
    return EXIT_OK


def _cmd_inspect(args) -> int:
    if args.key:
        key = load_key(args.key)
        if isinstance(key, PrivateKey):
            vn, cn = degree_profile(key.graph)
            print(f"private key: ensemble {key.spec.name}, Q={key.Q}")
            print(f"row weight: {key.row_weight()} (bound {weight_bound(key.spec.base)})")
            print(f"decoding graph: {key.graph.vn_count} VNs ({int(key.graph.punctured.sum())} punctured), "
                  f"{key.graph.cn_count} CNs, {key.graph.edge_count} edges")
            print(f"VN degree profile: {vn}")
            print(f"CN degree profile: {cn}")
        else:
            print(f"public key: ensemble {key.spec_name}, Q={key.Q}, error weight {key.error_weight}")
            print(f"p weight: {key.p.weight} (density {key.p.weight / key.Q:.3f})")
        return EXIT_OK
    spec = _spec_from_args(args)
    print(f"ensemble {spec.name}: Q={spec.Q}, n={spec.block_length}, "
          f"extended VNs {spec.extended_vn_count}")
    print(f"base matrix: {[list(r) for r in spec.base.entries]}, "
          f"state columns {sorted(spec.base.state_columns)}")
    print(f"row-weight bound: {weight_bound(spec.base)}")
    print(f"key space: 2^{key_space_bits(spec):.1f}")
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def _add_spec_opts(p, q_default=4801):
    p.add_argument("--ensemble", choices=["A", "B", "C"], help="built-in ensemble")
    p.add_argument("--base", help="custom base matrix as JSON rows, e.g. [[1,3,3],[2,1,1]]")
    p.add_argument("--state-columns", default="0", help="comma-separated punctured columns for --base")
    p.add_argument("--Q", type=int, default=q_default, help="circulant size")


def _add_decoder_opts(p):
    p.add_argument("--algorithm", default="E", help="decoder: SPA or E")
    p.add_argument("--omega", type=float, default=1.0, help="scaling parameter")
    p.add_argument("--max-iterations", type=int, default=100)
    p.add_argument("--no-early-stop", action="store_true")


def build_parser() -> tuple[_Parser, dict[str, argparse.ArgumentParser]]:
    top = _Parser(prog="protomdpc", description=__doc__.splitlines()[0])
    top.add_argument("--config", help=f"INI config file (default ${CONFIG_ENV})")
    top.add_argument(
        "--json-errors", action="store_true", help="emit errors as JSON records on stderr"
    )
    subs = top.add_subparsers(dest="command", required=True)

    p = subs.add_parser("keygen", help="sample a key pair and write key files")
    _add_spec_opts(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--error-weight", type=int, default=84)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(fn=_cmd_keygen)

    p = subs.add_parser("encrypt", help="encrypt a plaintext bit-vector")
    p.add_argument("--key", required=True, help="public (or private) key file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--error-weight", type=int, help="override the key's error weight")
    p.add_argument("--hex", action="store_true", help="read/write hex instead of raw bits")
    p.set_defaults(fn=_cmd_encrypt)

    p = subs.add_parser("decrypt", help="decrypt a ciphertext (exit 2 on failure)")
    p.add_argument("--key", required=True, help="private key file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    _add_decoder_opts(p)
    p.add_argument("--error-weight", type=int, help="needed by the SPA channel LLR")
    p.add_argument("--hex", action="store_true")
    p.set_defaults(fn=_cmd_decrypt)

    p = subs.add_parser("simulate", help="Monte Carlo block error rate vs error weight")
    _add_spec_opts(p)
    _add_decoder_opts(p)
    p.add_argument("--key", help="fixed private key file (implies fixed-key mode)")
    p.add_argument("--fixed-key", action="store_true", help="one key for all trials")
    p.add_argument("--weights", help="comma-separated error weights")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--max-failures", type=int, default=sim.DEFAULT_MAX_FAILURES)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="results file (default: stdout)")
    p.add_argument("--json", action="store_true", help="JSON instead of CSV")
    p.set_defaults(fn=_cmd_simulate)

    p = subs.add_parser("threshold", help="density-evolution decoding threshold")
    _add_spec_opts(p)
    p.add_argument("--algorithm", default="E", help="SPA or E")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--tol", type=float, help="bisection tolerance on delta (default 1/(2n))")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_threshold)

    p = subs.add_parser("security", help="ISD work factors and key-space size")
    _add_spec_opts(p)
    p.add_argument("--error-weight", type=int, help="decoding-attack weight")
    p.add_argument("--curve", help="simulation CSV/JSON to read the weight from")
    p.add_argument("--target-bler", type=float, default=1e-6)
    p.add_argument("--variant", choices=["prange", "stern", "mmt"], default="mmt")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_security)

    p = subs.add_parser("inspect", help="describe a key file or an ensemble")
    _add_spec_opts(p)
    p.add_argument("--key", help="key file to describe")
    p.set_defaults(fn=_cmd_inspect)

    return top, dict(subs.choices)


def _apply_config_defaults(subparsers: dict, values: dict) -> None:
    """Install config-file values as typed defaults; flags still override."""
    for sub in subparsers.values():
        coerced = {}
        for action in sub._actions:
            for key in (action.dest, action.dest.replace("_", "-")):
                if key not in values:
                    continue
                raw = values[key]
                if isinstance(action, argparse._StoreTrueAction):
                    coerced[action.dest] = str(raw).strip().lower() in ("1", "true", "yes", "on")
                elif action.type is not None:
                    try:
                        coerced[action.dest] = action.type(raw)
                    except (TypeError, ValueError) as ex:
                        raise UsageError(f"config value {key}={raw!r}: {ex}")
                else:
                    coerced[action.dest] = raw
        sub.set_defaults(**coerced)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, subparsers = build_parser()
    json_errors = "--json-errors" in argv

    def fail(kind: str, ex: Exception, code: int) -> int:
        if json_errors:
            record = {"error": str(ex), "kind": kind, "type": type(ex).__name__, "exit_code": code}
            print(json.dumps(record), file=sys.stderr)
        else:
            print(f"{kind}: {ex}", file=sys.stderr)
        return code

    try:
        # locate --config before the real parse so its values become defaults
        config_path = None
        for i, a in enumerate(argv):
            if a == "--config" and i + 1 < len(argv):
                config_path = argv[i + 1]
            elif a.startswith("--config="):
                config_path = a.split("=", 1)[1]
        defaults = _load_config(config_path)
        if defaults:
            _apply_config_defaults(subparsers, defaults)
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as ex:
        return fail("usage error", ex, EXIT_USAGE)
    except KeyFileError as ex:
        return fail("key file error", ex, EXIT_IO)
    except OSError as ex:
        return fail("i/o error", ex, EXIT_IO)
    except ValueError as ex:
        return fail("error", ex, EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
