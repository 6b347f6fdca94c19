"""Command-line front end.

Everything prints deterministic JSON (or CSV for traces): floats are
rendered with 17 significant digits so equal runs are byte-identical and
values round-trip exactly.  Stochastic subcommands require an explicit
seed.  Exit codes: 0 success, 1 usage/validation problem, 2 a `verify`
suite failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .channel import (
    Channel,
    bec,
    bsc,
    channel_from_dict,
    channel_to_dict,
    flatten,
    random_channel,
    symmetrize,
    zchannel,
)
from .codec import (
    codespec_from_dict,
    codespec_to_dict,
    construct,
    decode,
    encode,
    simulate,
    simulate_counts,
    summarize_counts,
)
from .ftpc import (
    coset_enumerator,
    dual_coset_enumerator,
    verify_ftpcs,
    verify_ftpcz,
)
from .gf import Kernel, arikan_kernel, field_make, mat_invert, sample_invertible
from .kernsearch import FixedKernel, SearchKernels, certify_ldp, search
from .params import holder_report, param_vector, quadratic_check
from .procsim import (
    check_local,
    gadget_bound,
    polarization_stats,
    sample_path,
    trace_rows,
)
from .transform import transform, transform_all

__all__ = ["main", "render_json"]


# ------------------------------------------------------------- rendering

def _fmt_float(x: float) -> str:
    return f"{float(x):.17g}"


def render_json(obj, _ind: int = 0) -> str:
    """Deterministic JSON: insertion-ordered keys, 17-digit floats."""
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    pad, inner_pad = "  " * _ind, "  " * (_ind + 1)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        body = ",\n".join(inner_pad + render_json(v, _ind + 1) for v in obj)
        return "[\n" + body + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(
            f"{inner_pad}{json.dumps(str(k))}: {render_json(v, _ind + 1)}" for k, v in obj.items()
        )
        return "{\n" + body + "\n" + pad + "}"
    raise TypeError(f"cannot render {type(obj)!r}")


def _emit(obj) -> None:
    sys.stdout.write(render_json(obj) + "\n")


# ---------------------------------------------------------- arg plumbing

class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # default argparse would sys.exit(2)
        raise _CliError(message)


def _add_channel_opts(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--channel", metavar="FILE", help="channel description JSON")
    g.add_argument("--bec", type=float, metavar="EPS", help="binary erasure channel")
    g.add_argument("--bsc", type=float, metavar="DELTA", help="binary symmetric channel")
    g.add_argument("--zchan", type=float, metavar="EPS", help="binary Z channel")


def _resolve_channel(args) -> Channel:
    if args.channel is not None:
        with open(args.channel) as fh:
            return channel_from_dict(json.load(fh))
    if args.bec is not None:
        return bec(args.bec)
    if args.bsc is not None:
        return bsc(args.bsc)
    if args.zchan is not None:
        return zchannel(args.zchan)
    raise _CliError("a channel is required (--channel/--bec/--bsc/--zchan)")


def _add_kernel_opts(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--kernel", metavar="FILE", help="kernel JSON with p, m, matrix")
    g.add_argument("--arikan", action="store_true", help="the [[1,0],[1,1]] kernel")


def _load_kernel(path: str) -> Kernel:
    with open(path) as fh:
        doc = json.load(fh)
    f = field_make(int(doc["p"]), int(doc.get("m", 1)))
    return mat_invert(f, doc["matrix"])


def _resolve_kernel(args, default_field=None) -> Kernel:
    if args.kernel is not None:
        return _load_kernel(args.kernel)
    if args.arikan or default_field is not None:
        f = default_field if default_field is not None else field_make(2)
        return arikan_kernel(f)
    raise _CliError("a kernel is required (--kernel FILE or --arikan)")


def _kernel_doc(kern: Kernel) -> dict:
    return {
        "p": kern.field.p,
        "m": kern.field.m,
        "ell": kern.ell,
        "matrix": kern.entries.tolist(),
    }


def _parse_symbols(text: str) -> np.ndarray:
    try:
        return np.array([int(t) for t in text.split(",") if t.strip() != ""], dtype=np.int64)
    except ValueError as exc:
        raise _CliError(f"bad symbol list {text!r}") from exc


def _load_spec(path: str):
    with open(path) as fh:
        return codespec_from_dict(json.load(fh))


# ------------------------------------------------------------- handlers

def _cmd_params(args) -> int:
    W = _resolve_channel(args)
    out = {"params": param_vector(W).as_dict()}
    if args.holder:
        out["holder"] = holder_report(W)
    _emit(out)
    return 0


def _cmd_transform(args) -> int:
    W = _resolve_channel(args)
    kern = _resolve_kernel(args, default_field=W.field if args.arikan else None)
    if kern.field.q != W.q:
        raise _CliError("kernel field does not match the channel")
    merge = not args.no_merge
    if args.index is not None:
        node = transform(W, kern, args.index, merge=merge)
        _emit(
            {
                "index": args.index,
                "output_size": node.channel.output_size,
                "params": param_vector(node.channel).as_dict(),
            }
        )
        return 0
    kids = transform_all(W, kern, merge=merge)
    _emit(
        {
            "parent": param_vector(W).as_dict(),
            "children": [
                {
                    "index": i + 1,
                    "output_size": sc.channel.output_size,
                    "params": param_vector(sc.channel).as_dict(),
                }
                for i, sc in enumerate(kids)
            ],
        }
    )
    return 0


def _cmd_kernel(args) -> int:
    if args.search:
        if args.seed is None:
            raise _CliError("--search needs --seed")
        W = _resolve_channel(args)
        kern = search(
            W, flatten(W), args.ell, args.budget, np.random.default_rng(args.seed)
        )
        _emit(_kernel_doc(kern))
        return 0
    if args.certify is not None:
        kern = _resolve_kernel(args)
        z, s = args.certify
        _emit(certify_ldp(kern, z, s))
        return 0
    kern = _resolve_kernel(args)
    rows = []
    for i in range(1, kern.ell + 1):
        rows.append(
            {
                "position": i,
                "min_weight": coset_enumerator(kern, i).min_weight,
                "dual_min_weight": dual_coset_enumerator(kern, i).min_weight,
            }
        )
    _emit({"ell": kern.ell, "q": kern.field.q, "positions": rows})
    return 0


def _cmd_construct(args) -> int:
    W = _resolve_channel(args)
    if args.search_budget is not None:
        policy = SearchKernels(ell=args.ell, budget=args.search_budget)
    else:
        kern = _resolve_kernel(args, default_field=W.field)
        policy = FixedKernel(kern)
    spec = construct(W, args.ell, args.depth, args.pi, policy, args.seed)
    doc = codespec_to_dict(spec)
    if args.summary:
        info = [spec.leaf_stats[p] for p in spec.info_set]
        _emit(
            {
                "block_length": spec.block_length,
                "dimension": spec.dimension,
                "rate": spec.rate,
                "theta": spec.theta,
                "union_bound": sum(s.Pe_w + s.T_v for s in info),
                "shaping_leaves": sum(1 for c in spec.frozen_class.values() if c == "C"),
            }
        )
        return 0
    _emit(doc)
    return 0


def _cmd_encode(args) -> int:
    spec = _load_spec(args.spec)
    msg = _parse_symbols(args.message)
    _emit({"codeword": encode(spec, msg, args.seed).tolist()})
    return 0


def _cmd_decode(args) -> int:
    spec = _load_spec(args.spec)
    if args.posteriors is not None:
        with open(args.posteriors) as fh:
            received = np.array(json.load(fh), dtype=float)
        res = decode(spec, received, args.seed)
    else:
        if args.received is None:
            raise _CliError("provide --received with a channel, or --posteriors FILE")
        W = _resolve_channel(args)
        res = decode(spec, _parse_symbols(args.received), args.seed, channel=W)
    _emit(
        {
            "message": res.message.tolist(),
            "failed": res.failed,
            "du_activations": res.du_activations,
        }
    )
    return 0


def _simulate_shard(spec_doc, chan_doc, seed, trials, lo, hi):
    spec = codespec_from_dict(spec_doc)
    W = channel_from_dict(chan_doc)
    streams = np.random.SeedSequence(seed).spawn(trials)[lo:hi]
    return simulate_counts(spec, W, streams)


def _cmd_simulate(args) -> int:
    spec = _load_spec(args.spec)
    W = _resolve_channel(args)
    if args.jobs <= 1:
        _emit(simulate(spec, W, args.trials, args.seed))
        return 0
    # Shard the trial range; per-trial streams come from the same master
    # sequence, so the merged tallies match a sequential run bit for bit.
    spec_doc = codespec_to_dict(spec)
    chan_doc = channel_to_dict(W)
    bounds = [args.trials * j // args.jobs for j in range(args.jobs + 1)]
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        parts = list(
            pool.map(
                _simulate_shard,
                *zip(
                    *[
                        (spec_doc, chan_doc, args.seed, args.trials, lo, hi)
                        for lo, hi in zip(bounds, bounds[1:])
                        if hi > lo
                    ]
                ),
            )
        )
    merged = {
        "blocks": sum(p["blocks"] for p in parts),
        "block_errs": sum(p["block_errs"] for p in parts),
        "sym_errs": sum(p["sym_errs"] for p in parts),
        "failures": sum(p["failures"] for p in parts),
        "du": max(p["du"] for p in parts),
    }
    _emit(summarize_counts(spec, W, args.trials, merged))
    return 0


def _cmd_process(args) -> int:
    W = _resolve_channel(args)
    if args.search_budget is not None:
        if args.ell is None:
            raise _CliError("--search-budget needs --ell")
        policy = SearchKernels(ell=args.ell, budget=args.search_budget)
    else:
        policy = FixedKernel(_resolve_kernel(args, default_field=W.field))
    rng = np.random.default_rng(args.seed)
    if args.trace:
        trace = sample_path(
            W, policy, args.depth, rng, quantize_resolution=args.quantize
        )
        cols = ["depth", "position", "H", "Zmad", "Smax", "output_size", "exact"]
        lines = [",".join(cols)]
        for row in trace_rows(trace):
            lines.append(
                ",".join(
                    [
                        str(row["depth"]),
                        str(row["position"]),
                        _fmt_float(row["H"]),
                        _fmt_float(row["Zmad"]),
                        _fmt_float(row["Smax"]),
                        str(row["output_size"]),
                        str(int(row["exact"])),
                    ]
                )
            )
        sys.stdout.write("\n".join(lines) + "\n")
        return 0
    stats = polarization_stats(
        W,
        policy,
        args.depth,
        args.paths,
        rng,
        thresholds=(args.low, args.high),
        quantize_resolution=args.quantize,
    )
    if not args.full:
        stats.pop("final_entropies")
    _emit(stats)
    return 0


# ----------------------------------------------------------- verify mode

def _suite_conservation(seed: int) -> bool:
    rng = np.random.default_rng([seed, 1])
    for _ in range(30):
        q, ell = [(2, 2), (2, 3), (3, 2)][int(rng.integers(3))]
        f = field_make(q)
        W = random_channel(f, int(rng.integers(2, 6)), rng)
        kern = sample_invertible(f, ell, rng)
        kids = transform_all(W, kern)
        mean_h = float(np.mean([param_vector(sc.channel).H for sc in kids]))
        if abs(mean_h - param_vector(W).H) > 1e-9:
            return False
    return True


def _suite_ftpc(seed: int) -> bool:
    rng = np.random.default_rng([seed, 2])
    f2 = field_make(2)
    tight = verify_ftpcz(bec(0.5), arikan_kernel(f2), 2)
    if not (tight["pass"] and abs(tight["lhs"] - tight["rhs"]) <= 1e-9):
        return False
    for _ in range(12):
        q, ell = [(2, 2), (2, 3), (3, 2)][int(rng.integers(3))]
        f = field_make(q)
        W = random_channel(f, int(rng.integers(2, 5)), rng)
        kern = sample_invertible(f, ell, rng)
        i = int(rng.integers(1, ell + 1))
        if not verify_ftpcz(W, kern, i)["pass"]:
            return False
        if not verify_ftpcs(W, kern, i)["pass"]:
            return False
    return True


def _suite_holder(seed: int) -> bool:
    rng = np.random.default_rng([seed, 3])
    for _ in range(30):
        q = int(rng.choice([2, 3, 5]))
        W = random_channel(field_make(q), int(rng.integers(2, 7)), rng)
        if not holder_report(W)["ok"]:
            return False
    return True


def _suite_quadratic(seed: int) -> bool:
    rng = np.random.default_rng([seed, 4])
    channels = [bec(0.5), bsc(0.25)]
    for q in (2, 3):
        channels.append(random_channel(field_make(q), int(rng.integers(2, 5)), rng))
    return all(quadratic_check(W)["ok"] for W in channels)


def _suite_symmetrization(seed: int) -> bool:
    rng = np.random.default_rng([seed, 5])
    for _ in range(10):
        q = int(rng.choice([2, 3]))
        f = field_make(q)
        W = random_channel(f, int(rng.integers(2, 5)), rng, random_input=True)
        Wb = symmetrize(W)
        if abs(param_vector(Wb).H - param_vector(W).H) > 1e-9:
            return False
        kern = arikan_kernel(f)
        for i in (1, 2):
            hw = param_vector(transform(W, kern, i).channel).H
            hb = param_vector(transform(Wb, kern, i).channel).H
            if abs(hw - hb) > 1e-9:
                return False
    return True


def _suite_local(seed: int) -> bool:
    rng = np.random.default_rng([seed, 6])
    for _ in range(12):
        q, ell = [(2, 2), (2, 3), (3, 2)][int(rng.integers(3))]
        f = field_make(q)
        W = random_channel(f, int(rng.integers(2, 6)), rng)
        if not check_local(W, sample_invertible(f, ell, rng))["ok"]:
            return False
    return True


def _suite_gadget(seed: int) -> bool:
    return all(gadget_bound(ell)["pass"] for ell in range(55, 257))


def _cmd_verify(args) -> int:
    suites = [
        ("conservation", _suite_conservation),
        ("coset-identities", _suite_ftpc),
        ("parameter-inequalities", _suite_holder),
        ("exponent-curvature", _suite_quadratic),
        ("symmetrization-identities", _suite_symmetrization),
        ("one-step-laws", _suite_local),
        ("distance-average-bound", _suite_gadget),
    ]
    failed = 0
    for name, fn in suites:
        try:
            ok = bool(fn(args.seed))
        except Exception:
            ok = False
        print(("PASS " if ok else "FAIL ") + name)
        failed += 0 if ok else 1
    return 2 if failed else 0


# ----------------------------------------------------------------- main

def _build_parser() -> _Parser:
    p = _Parser(prog="qpolar", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("params", help="channel parameter vector")
    _add_channel_opts(sp)
    sp.add_argument("--holder", action="store_true", help="include the inequality report")
    sp.set_defaults(fn=_cmd_params)

    sp = sub.add_parser("transform", help="one-step synthesized children")
    _add_channel_opts(sp)
    _add_kernel_opts(sp)
    sp.add_argument("--index", type=int, help="single child (1-based); default all")
    sp.add_argument("--no-merge", action="store_true", help="skip lossless output merging")
    sp.set_defaults(fn=_cmd_transform)

    sp = sub.add_parser("kernel", help="kernel weights, certification, or search")
    _add_kernel_opts(sp)
    sp.add_argument("--certify", nargs=2, type=float, metavar=("Z", "S"))
    sp.add_argument("--search", action="store_true")
    sp.add_argument("--channel", metavar="FILE")
    sp.add_argument("--bec", type=float, metavar="EPS")
    sp.add_argument("--bsc", type=float, metavar="DELTA")
    sp.add_argument("--zchan", type=float, metavar="EPS")
    sp.add_argument("--ell", type=int, default=2)
    sp.add_argument("--budget", type=int, default=200)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(fn=_cmd_kernel)

    sp = sub.add_parser("construct", help="design a code for a channel")
    _add_channel_opts(sp)
    _add_kernel_opts(sp)
    sp.add_argument("--ell", type=int, required=True)
    sp.add_argument("--depth", type=int, required=True, metavar="N")
    sp.add_argument("--pi", type=float, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--search-budget", type=int)
    sp.add_argument("--summary", action="store_true", help="print summary, not the full spec")
    sp.set_defaults(fn=_cmd_construct)

    sp = sub.add_parser("encode", help="message to codeword")
    sp.add_argument("--spec", required=True, metavar="FILE")
    sp.add_argument("--message", required=True, help="comma-separated symbols")
    sp.add_argument("--seed", type=int, required=True)
    sp.set_defaults(fn=_cmd_encode)

    sp = sub.add_parser("decode", help="received symbols or posteriors to message")
    sp.add_argument("--spec", required=True, metavar="FILE")
    sp.add_argument("--received", help="comma-separated output symbols")
    sp.add_argument("--posteriors", metavar="FILE", help="JSON (N, q) posterior array")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--channel", metavar="FILE")
    sp.add_argument("--bec", type=float, metavar="EPS")
    sp.add_argument("--bsc", type=float, metavar="DELTA")
    sp.add_argument("--zchan", type=float, metavar="EPS")
    sp.set_defaults(fn=_cmd_decode)

    sp = sub.add_parser("simulate", help="Monte Carlo error rates")
    _add_channel_opts(sp)
    sp.add_argument("--spec", required=True, metavar="FILE")
    sp.add_argument("--trials", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(fn=_cmd_simulate)

    sp = sub.add_parser("process", help="polarization-process sampling")
    _add_channel_opts(sp)
    _add_kernel_opts(sp)
    sp.add_argument("--depth", type=int, required=True, metavar="N")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--paths", type=int, default=1000)
    sp.add_argument("--low", type=float, default=0.01)
    sp.add_argument("--high", type=float, default=0.99)
    sp.add_argument("--trace", action="store_true", help="CSV of a single sampled path")
    sp.add_argument("--full", action="store_true", help="include every final entropy")
    sp.add_argument("--quantize", type=int, help="lossy resolution for huge alphabets")
    sp.add_argument("--ell", type=int)
    sp.add_argument("--search-budget", type=int)
    sp.set_defaults(fn=_cmd_process)

    sp = sub.add_parser("verify", help="run the internal consistency battery")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=_cmd_verify)

    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
