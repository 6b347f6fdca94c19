"""Successive-cancellation encoder/decoder over a dynamic kernel tree.

A code is a depth-n tree of one-step transforms: every internal node owns an
invertible ell x ell kernel, and the ell^n leaves are the synthesized
channels.  Construction walks the data channel and a pure-noise companion
(same input law, blank output) down the tree together, classifies each leaf
by its endpoint entropies, and keeps the clean-and-free leaves for message
symbols.  Every other leaf is frozen: it draws a symbol from the successive
conditional input law through a variate stream shared with the decoder
(randomized rounding), so both ends settle on the same frozen chain.  The
"B"/"C" split among frozen leaves records whether the draw is essentially
free randomness or essentially forced shaping; it is bookkeeping for rate
and shared-randomness accounting, not a different sampling rule.

Encoding and decoding run the same recursive engine.  It threads two pin
streams — posteriors from the channel observations and replicas driven by
the prior alone — and makes hard leaf decisions that both passes share, so
the decoder reproduces the encoder's frozen chain exactly whenever its
message decisions are right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import Channel, derived_distributions, flatten
from .gf import FieldSpec, Kernel, field_make, field_matmul, mat_invert
from .kernsearch import FixedKernel, SearchKernels, search
from .params import param_vector
from .transform import DEFAULT_GUARD, _digit_matrix, quantize_merge, transform

__all__ = [
    "LeafStat",
    "CodeSpec",
    "DecodeResult",
    "construct",
    "node_posterior",
    "encode",
    "decode",
    "simulate",
    "simulate_counts",
    "summarize_counts",
    "codespec_to_dict",
    "codespec_from_dict",
]


@dataclass(frozen=True)
class LeafStat:
    """Endpoint parameters of one leaf pair (data tree, noise tree)."""

    H_w: float
    H_v: float
    Pe_w: float
    T_v: float
    exact: bool


@dataclass(frozen=True, eq=False)
class CodeSpec:
    field: FieldSpec
    ell: int
    n: int
    pi: float
    theta: float
    seed: int
    input_dist: np.ndarray
    kernels: dict[tuple[int, ...], Kernel]
    info_set: frozenset[tuple[int, ...]]
    frozen_class: dict[tuple[int, ...], str]
    leaf_stats: dict[tuple[int, ...], LeafStat]

    @property
    def block_length(self) -> int:
        return self.ell**self.n

    @property
    def dimension(self) -> int:
        return len(self.info_set)

    @property
    def rate(self) -> float:
        return self.dimension / self.block_length

    def leaf_paths(self) -> list[tuple[int, ...]]:
        """All leaf paths in lexicographic order."""
        out = [()]
        for _ in range(self.n):
            out = [p + (k,) for p in out for k in range(1, self.ell + 1)]
        return out


def construct(
    W: Channel,
    ell: int,
    n: int,
    pi: float,
    kernel_policy: FixedKernel | SearchKernels,
    seed: int,
    *,
    guard: int = DEFAULT_GUARD,
    fallback_resolution: int = 2048,
) -> CodeSpec:
    """Design a blocklength ell^n code for W.

    Walks the synthesis tree breadth-first in lexicographic order, choosing
    one kernel per internal node (fixed, or searched against the node's data
    and noise channels with a per-node deterministic generator).  The leaf
    threshold is theta = exp(-ell^(pi*n)).  A leaf joins the message set
    when its data entropy is below theta while its noise entropy stays
    within theta of full; non-message leaves with both entropies below
    theta are tagged shaping ("C"), everything else shared randomness
    ("B") — a rate-accounting label, since every frozen leaf samples the
    same way at run time.  When an intermediate alphabet would overrun the
    enumeration guard, the node is quantized first and the whole subtree is
    marked inexact.
    """
    if isinstance(kernel_policy, FixedKernel) and kernel_policy.kernel.ell != ell:
        raise ValueError("fixed kernel size disagrees with ell")
    if n < 1 or ell < 2:
        raise ValueError("need n >= 1 and ell >= 2")
    theta = math.exp(-(ell ** (pi * n)))
    q = W.q
    kernels: dict[tuple[int, ...], Kernel] = {}
    info: set[tuple[int, ...]] = set()
    fclass: dict[tuple[int, ...], str] = {}
    stats: dict[tuple[int, ...], LeafStat] = {}

    def visit(path: tuple[int, ...], Wn: Channel, Vn: Channel, exact: bool) -> None:
        if len(path) == n:
            pw = param_vector(Wn)
            pv = param_vector(Vn)
            stats[path] = LeafStat(H_w=pw.H, H_v=pv.H, Pe_w=pw.Pe, T_v=pv.T, exact=exact)
            if pw.H < theta and 1.0 - pv.H < theta:
                info.add(path)
            elif pv.H < theta and pw.H < theta:
                fclass[path] = "C"
            else:
                fclass[path] = "B"
            return
        if isinstance(kernel_policy, FixedKernel):
            kern = kernel_policy.kernel
        else:
            rng = np.random.default_rng([seed] + list(path))
            kern = search(Wn, Vn, ell, kernel_policy.budget, rng, guard=guard)
        kernels[path] = kern
        # Pre-shrink rather than letting the child transforms trip the guard.
        # Binning at a fixed pitch only merges outputs whose posteriors
        # collide, so a single pass may not shrink enough; coarsen until the
        # child syntheses fit.
        res = fallback_resolution
        while q ** (ell - 1) * Wn.output_size**ell > guard and res >= 1:
            Wn = quantize_merge(Wn, res)
            exact = False
            res //= 2
        res = fallback_resolution
        while q ** (ell - 1) * Vn.output_size**ell > guard and res >= 1:
            Vn = quantize_merge(Vn, res)
            exact = False
            res //= 2
        for k in range(1, ell + 1):
            cw = transform(Wn, kern, k, guard=guard).channel
            cv = transform(Vn, kern, k, guard=guard).channel
            visit(path + (k,), cw, cv, exact)

    visit((), W, flatten(W), True)
    return CodeSpec(
        field=W.field,
        ell=ell,
        n=n,
        pi=pi,
        theta=theta,
        seed=seed,
        input_dist=W.input_dist,
        kernels=kernels,
        info_set=frozenset(info),
        frozen_class=fclass,
        leaf_stats=stats,
    )


# ------------------------------------------------------------ pin calculus

def node_posterior(
    kernel: Kernel,
    pins: np.ndarray,
    decided: np.ndarray,
    i: int,
) -> tuple[np.ndarray, bool]:
    """Posterior of source symbol i of one kernel group.

    ``pins`` is an (ell, q) array whose rows are the per-instance posteriors
    of the group's channel inputs x_j; ``decided`` holds the i-1 already
    fixed source symbols.  Sums the pin products over every completion of
    the source row through x = u G.  A zero total (contradictory pins)
    yields the uniform distribution and ok=False so a decoder can keep
    going while flagging the block.
    """
    f = kernel.field
    q, ell = f.q, kernel.ell
    if not 1 <= i <= ell:
        raise ValueError("position out of range")
    pins = np.asarray(pins, dtype=float)
    if pins.shape != (ell, q):
        raise ValueError(f"pins must be ({ell}, {q})")
    decided = np.asarray(decided, dtype=np.int64).reshape(-1)
    if decided.shape[0] != i - 1:
        raise ValueError("decided prefix length must be i-1")
    tails = _digit_matrix(q, ell - i + 1)  # (candidate symbol, free suffix)
    U = np.empty((tails.shape[0], ell), dtype=np.int64)
    U[:, : i - 1] = decided
    U[:, i - 1 :] = tails
    X = field_matmul(f, U, kernel.entries)
    w = np.ones(U.shape[0])
    for j in range(ell):
        w *= pins[j, X[:, j]]
    gamma = w.reshape(q, -1).sum(axis=1)
    total = gamma.sum()
    if total <= 0.0:
        return np.full(q, 1.0 / q), False
    return gamma / total, True


# ------------------------------------------------------------- SC engine

class _Engine:
    """One pass of the shared encode/decode recursion."""

    def __init__(
        self,
        spec: CodeSpec,
        mode: str,
        variates: np.ndarray,
        message: np.ndarray | None = None,
    ) -> None:
        self.spec = spec
        self.mode = mode
        self.variates = variates
        self.message = message
        self.msg_pos = 0
        self.frozen_pos = 0
        self.decoded: list[int] = []
        self.du_activations = 0
        self.failed = False

    def run(self, pins_ch: np.ndarray, pins_pr: np.ndarray) -> np.ndarray:
        return self._rec((), pins_ch, pins_pr)

    def _rec(self, path: tuple[int, ...], pins_ch: np.ndarray, pins_pr: np.ndarray) -> np.ndarray:
        spec = self.spec
        if len(path) == spec.n:
            return np.array([self._leaf(path, pins_ch[0], pins_pr[0])], dtype=np.int64)
        kern = spec.kernels[path]
        ell, q = kern.ell, spec.field.q
        groups = pins_ch.shape[0] // ell
        decided = np.zeros((groups, ell), dtype=np.int64)
        for k in range(1, ell + 1):
            ch_k = np.empty((groups, q))
            pr_k = np.empty((groups, q))
            for t in range(groups):
                rows = slice(t * ell, (t + 1) * ell)
                prefix = decided[t, : k - 1]
                post_ch, ok_ch = node_posterior(kern, pins_ch[rows], prefix, k)
                post_pr, ok_pr = node_posterior(kern, pins_pr[rows], prefix, k)
                if k == 1:
                    self.du_activations += 1
                if not (ok_ch and ok_pr):
                    self.failed = True
                ch_k[t] = post_ch
                pr_k[t] = post_pr
            decided[:, k - 1] = self._rec(path + (k,), ch_k, pr_k)
        return kern.apply_rows(decided).reshape(-1)

    def _leaf(self, path: tuple[int, ...], pc: np.ndarray, pp: np.ndarray) -> int:
        q = self.spec.field.q
        if path in self.spec.info_set:
            if self.mode == "encode":
                u = int(self.message[self.msg_pos])
                self.msg_pos += 1
                return u
            u = int(np.argmax(pc))  # first max wins on exact ties
            self.decoded.append(u)
            return u
        # Randomized rounding: every frozen leaf draws from the successive
        # conditional carried by the prior stream, using a variate shared
        # with its twin on the other end, so both ends settle on one symbol.
        # The B/C split is rate bookkeeping and does not alter the draw.
        v = self.variates[self.frozen_pos]
        self.frozen_pos += 1
        cdf = np.cumsum(pp)
        return min(int(np.searchsorted(cdf, v * cdf[-1], side="right")), q - 1)


@dataclass(frozen=True, eq=False)
class DecodeResult:
    message: np.ndarray
    failed: bool
    du_activations: int


def _frozen_variates(spec: CodeSpec, seed: int) -> np.ndarray:
    n_frozen = spec.block_length - spec.dimension
    return np.random.default_rng(seed).random(n_frozen)


def _prior_pins(spec: CodeSpec) -> np.ndarray:
    return np.tile(spec.input_dist, (spec.block_length, 1))


def encode(spec: CodeSpec, message: np.ndarray, seed: int) -> np.ndarray:
    """Map a message (one symbol per info leaf, in leaf order) to a codeword.

    The frozen chain is derived from ``seed``; the decoder must be handed
    the same seed to reproduce it.
    """
    message = np.asarray(message, dtype=np.int64).reshape(-1)
    if message.shape[0] != spec.dimension:
        raise ValueError(f"message must have {spec.dimension} symbols")
    if message.size and (message.min() < 0 or message.max() >= spec.field.q):
        raise ValueError("message symbols outside the field")
    prior = _prior_pins(spec)
    eng = _Engine(spec, "encode", _frozen_variates(spec, seed), message)
    return eng.run(prior, prior.copy())


def decode(
    spec: CodeSpec,
    received: np.ndarray,
    seed: int,
    channel: Channel | None = None,
) -> DecodeResult:
    """Successive decode from per-use posteriors or raw output symbols.

    ``received`` is either an (N, q) array of channel-input posteriors or a
    length-N symbol vector (then ``channel`` supplies the posterior map).
    ``seed`` must match the encoder's.  ``failed`` reports contradictory
    pins somewhere in the pass; decoding still completes on uniform
    substitutes.
    """
    received = np.asarray(received)
    N, q = spec.block_length, spec.field.q
    if received.ndim == 2:
        if received.shape != (N, q):
            raise ValueError(f"posterior array must be ({N}, {q})")
        pins_ch = np.asarray(received, dtype=float)
    elif received.ndim == 1:
        if channel is None:
            raise ValueError("symbol input needs the channel")
        if received.shape[0] != N:
            raise ValueError(f"expected {N} output symbols")
        post = derived_distributions(channel).posterior  # (q, M)
        pins_ch = post[:, received.astype(np.int64)].T
    else:
        raise ValueError("received must be 1-D symbols or an (N, q) posterior array")
    eng = _Engine(spec, "decode", _frozen_variates(spec, seed))
    eng.run(pins_ch, _prior_pins(spec))
    return DecodeResult(
        message=np.array(eng.decoded, dtype=np.int64),
        failed=eng.failed,
        du_activations=eng.du_activations,
    )


# ------------------------------------------------------------- simulation

def _sample_outputs(W: Channel, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(W.transition, axis=1)
    r = rng.random(x.shape[0])
    y = (r[:, None] >= cdf[x]).sum(axis=1)
    return np.minimum(y, W.output_size - 1)


def simulate_counts(spec: CodeSpec, W: Channel, streams: list) -> dict:
    """Raw error tallies over the given per-trial seed-sequence streams.

    Factored out so trial ranges can be sharded across workers: tallies
    over a partition of the streams merge to exactly the sequential run.
    """
    q, k = spec.field.q, spec.dimension
    block_errs = sym_errs = failures = du = 0
    for ss in streams:
        rng_t = np.random.default_rng(ss)
        inner = int(ss.generate_state(1)[0])
        msg = rng_t.integers(0, q, size=k)
        x = encode(spec, msg, inner)
        y = _sample_outputs(W, x, rng_t)
        res = decode(spec, y, inner, channel=W)
        wrong = res.message != msg
        block_errs += int(wrong.any())
        sym_errs += int(wrong.sum())
        failures += int(res.failed)
        du = res.du_activations
    return {
        "blocks": len(streams),
        "block_errs": block_errs,
        "sym_errs": sym_errs,
        "failures": failures,
        "du": du,
    }


def summarize_counts(spec: CodeSpec, W: Channel, trials: int, counts: dict) -> dict:
    """Turn merged tallies into the rate/bound summary reported by simulate."""
    k, N = spec.dimension, spec.block_length
    bler = counts["block_errs"] / trials
    ber = counts["sym_errs"] / (k * trials) if k else 0.0
    info_stats = [spec.leaf_stats[p] for p in spec.info_set]
    union = sum(s.Pe_w + s.T_v for s in info_stats)
    I = param_vector(W).I
    R = spec.rate
    mdp = N * (I - R) ** 2 / abs(math.log(bler)) if bler > 0 else 0.0
    return {
        "trials": trials,
        "bler": bler,
        "ber": ber,
        "rate": R,
        "union_bound": union,
        "union_bound_exact": all(s.exact for s in info_stats),
        "mdp_ratio": mdp,
        "pin_failures": counts["failures"],
        "du_per_block": counts["du"],
    }


def simulate(spec: CodeSpec, W: Channel, trials: int, seed: int) -> dict:
    """Monte Carlo block/symbol error rates plus the design-side bound.

    Every trial derives its own generator and a shared encode/decode seed
    from one seed sequence, so runs are reproducible and trials are
    independent.  ``union_bound`` adds, over the message leaves, the data
    leaf's decision-error parameter and the noise leaf's distance from its
    design law; ``union_bound_exact`` is False when any contributing leaf
    was computed through quantization.  ``mdp_ratio`` is the finite-length
    figure N (I - R)^2 / |ln BLER| (zero when no errors were seen).
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    streams = np.random.SeedSequence(seed).spawn(trials)
    return summarize_counts(spec, W, trials, simulate_counts(spec, W, streams))


# ---------------------------------------------------------- serialization

def _path_key(path: tuple[int, ...]) -> str:
    return ",".join(str(p) for p in path)


def codespec_to_dict(spec: CodeSpec) -> dict:
    return {
        "p": spec.field.p,
        "m": spec.field.m,
        "ell": spec.ell,
        "n": spec.n,
        "pi": spec.pi,
        "theta": spec.theta,
        "seed": spec.seed,
        "input_dist": spec.input_dist.tolist(),
        "kernels": [
            {"path": list(path), "matrix": kern.entries.tolist()}
            for path, kern in sorted(spec.kernels.items())
        ],
        "info_set": sorted(list(p) for p in spec.info_set),
        "frozen_class": {_path_key(p): c for p, c in sorted(spec.frozen_class.items())},
        "leaf_stats": [
            {
                "path": list(path),
                "H_w": s.H_w,
                "H_v": s.H_v,
                "Pe_w": s.Pe_w,
                "T_v": s.T_v,
                "exact": s.exact,
            }
            for path, s in sorted(spec.leaf_stats.items())
        ],
    }


def codespec_from_dict(doc: dict) -> CodeSpec:
    f = field_make(int(doc["p"]), int(doc.get("m", 1)))
    input_dist = np.array(doc["input_dist"], dtype=float)
    input_dist.setflags(write=False)
    kernels = {
        tuple(entry["path"]): mat_invert(f, entry["matrix"]) for entry in doc["kernels"]
    }
    stats = {
        tuple(entry["path"]): LeafStat(
            H_w=float(entry["H_w"]),
            H_v=float(entry["H_v"]),
            Pe_w=float(entry["Pe_w"]),
            T_v=float(entry["T_v"]),
            exact=bool(entry["exact"]),
        )
        for entry in doc["leaf_stats"]
    }
    return CodeSpec(
        field=f,
        ell=int(doc["ell"]),
        n=int(doc["n"]),
        pi=float(doc["pi"]),
        theta=float(doc["theta"]),
        seed=int(doc["seed"]),
        input_dist=input_dist,
        kernels=kernels,
        info_set=frozenset(
            tuple(p) for p in doc["info_set"]
        ),
        frozen_class={
            tuple(int(x) for x in key.split(",")): cls
            for key, cls in doc["frozen_class"].items()
        },
        leaf_stats=stats,
    )
