"""Polarization-process simulation along random kernel-tree paths.

The process tracks a channel under repeated one-step synthesis at uniformly
random positions: conditional entropy is a martingale of the process, and
the whole construction story is the claim that it splits to the endpoints.
This module samples such paths (with optional lossy quantization to keep
alphabets bounded), aggregates endpoint statistics, and checks the one-step
laws that drive the limiting split: conservation, the expansion bound, the
entropy-spread contraction, and the overlap supermartingale condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import Channel, flatten
from .gf import Kernel
from .kernsearch import FixedKernel, SearchKernels, search
from .params import param_vector
from .transform import DEFAULT_GUARD, SynthChannel, quantize_merge, transform, transform_all

__all__ = [
    "StepRecord",
    "ProcessTrace",
    "sample_path",
    "polarization_stats",
    "check_local",
    "gadget_bound",
    "trace_rows",
]


@dataclass(frozen=True)
class StepRecord:
    depth: int
    position: int  # 1-based child index taken at this step; 0 for the root
    H: float
    Zmad: float
    Smax: float
    output_size: int
    exact: bool


@dataclass(frozen=True)
class ProcessTrace:
    steps: tuple[StepRecord, ...]

    @property
    def path(self) -> tuple[int, ...]:
        return tuple(s.position for s in self.steps[1:])

    @property
    def final(self) -> StepRecord:
        return self.steps[-1]


def _record(depth: int, position: int, ch: Channel, exact: bool) -> StepRecord:
    pv = param_vector(ch)
    return StepRecord(
        depth=depth,
        position=position,
        H=pv.H,
        Zmad=pv.Zmad,
        Smax=pv.Smax,
        output_size=ch.output_size,
        exact=exact,
    )


def sample_path(
    W: Channel,
    kernel_policy: FixedKernel | SearchKernels,
    n: int,
    rng: np.random.Generator,
    *,
    guard: int = DEFAULT_GUARD,
    quantize_resolution: int | None = None,
    quantize_trigger: int = 4096,
) -> ProcessTrace:
    """Walk n random one-step synthesis steps from W, recording parameters.

    Positions are uniform on 1..ell.  Lossless merging always applies (it is
    part of synthesis); when ``quantize_resolution`` is set and an alphabet
    outgrows ``quantize_trigger``, the channel is additionally quantized and
    everything downstream is flagged exact=False.  With a search policy the
    pure-noise companion channel is tracked alongside, since certification
    needs both.
    """
    cur: Channel = W
    cur_v: Channel | None = None
    if isinstance(kernel_policy, SearchKernels):
        cur_v = flatten(W)
    exact = True
    steps = [_record(0, 0, cur, exact)]
    for depth in range(1, n + 1):
        if isinstance(kernel_policy, FixedKernel):
            kern = kernel_policy.kernel
        else:
            kern = search(cur, cur_v, kernel_policy.ell, kernel_policy.budget, rng, guard=guard)
        k = int(rng.integers(1, kern.ell + 1))
        cur = transform(cur, kern, k, guard=guard).channel
        if cur_v is not None:
            cur_v = transform(cur_v, kern, k, guard=guard).channel
        if quantize_resolution is not None and cur.output_size > quantize_trigger:
            cur = quantize_merge(cur, quantize_resolution)
            exact = False
            if cur_v is not None and cur_v.output_size > quantize_trigger:
                cur_v = quantize_merge(cur_v, quantize_resolution)
        steps.append(_record(depth, k, cur, exact))
    return ProcessTrace(steps=tuple(steps))


def polarization_stats(
    W: Channel,
    kernel_policy: FixedKernel | SearchKernels,
    n: int,
    paths: int,
    rng: np.random.Generator,
    *,
    thresholds: tuple[float, float] = (0.01, 0.99),
    guard: int = DEFAULT_GUARD,
    quantize_resolution: int | None = None,
) -> dict:
    """Endpoint-entropy statistics over many sampled process paths."""
    lo, hi = thresholds
    finals = np.empty(paths)
    all_exact = True
    for t in range(paths):
        trace = sample_path(
            W, kernel_policy, n, rng, guard=guard, quantize_resolution=quantize_resolution
        )
        finals[t] = trace.final.H
        all_exact = all_exact and trace.final.exact
    return {
        "paths": paths,
        "depth": n,
        "frac_low": float(np.mean(finals <= lo)),
        "frac_high": float(np.mean(finals >= hi)),
        "frac_middle": float(np.mean((finals > lo) & (finals < hi))),
        "final_entropies": finals.tolist(),
        "exact": all_exact,
    }


# ----------------------------------------------------------- local checks

def check_local(W: Channel | SynthChannel, kernel: Kernel, *, guard: int = DEFAULT_GUARD) -> dict:
    """One-step law report for a (channel, kernel) pair.

    Always-binding checks: conservation of conditional entropy across the
    children (residual <= 1e-9) and the per-child expansion bound
    1 - H(child) <= ell (1 - H(parent)).  The entropy-spread contraction
    and the overlap supermartingale step are evaluated whenever they are
    defined, but only marked as required when their size/strength
    preconditions hold; ``cl_satisfied`` records the former's precondition.
    """
    base = W.channel if isinstance(W, SynthChannel) else W
    ell, q = kernel.ell, base.q
    parent = param_vector(base)
    kids = [param_vector(sc.channel) for sc in transform_all(W, kernel, guard=guard)]
    hs = np.array([k.H for k in kids])
    zs = np.array([k.Zmad for k in kids])

    residual = float(abs(hs.mean() - parent.H))
    expansion_slacks = [ell * (1 - parent.H) - (1 - k.H) for k in kids]
    expansion_ok = all(sl >= -1e-12 for sl in expansion_slacks)

    report: dict = {
        "ell": ell,
        "q": q,
        "martingale_residual": residual,
        "martingale_ok": residual <= 1e-9,
        "expansion_min_slack": float(min(expansion_slacks)),
        "expansion_ok": bool(expansion_ok),
    }

    if ell >= 3:
        alpha = math.log(math.log(ell)) / math.log(ell)
        h_parent = max(min(parent.H, 1 - parent.H), 0.0) ** alpha
        lhs = float(np.mean(np.clip(np.minimum(hs, 1 - hs), 0.0, None) ** alpha))
        rhs = 4.0 * ell ** (-0.5 + 3 * alpha) * h_parent
        required = ell >= max(math.e**4, q**5, 3**q)
        report["spread"] = {
            "alpha": alpha,
            "lhs": lhs,
            "rhs": rhs,
            "required": bool(required),
            "ok": bool(lhs <= rhs + 1e-12),
        }
        report["cl_satisfied"] = bool(required)
    else:
        report["spread"] = None
        report["cl_satisfied"] = False

    cap = ell**-2
    sm_lhs = float(np.mean(np.minimum(cap, zs**0.25)))
    sm_rhs = float(min(cap, parent.Zmad**0.25))
    sm_required = parent.Zmad < ell**-8 and ell >= max(50, q**5)
    report["supermartingale"] = {
        "lhs": sm_lhs,
        "rhs": sm_rhs,
        "required": bool(sm_required),
        "ok": bool(sm_lhs <= sm_rhs + 1e-12),
    }

    ok = report["martingale_ok"] and report["expansion_ok"]
    if report["spread"] is not None and report["spread"]["required"]:
        ok = ok and report["spread"]["ok"]
    if sm_required:
        ok = ok and report["supermartingale"]["ok"]
    report["ok"] = bool(ok)
    return report


def gadget_bound(ell: int) -> dict:
    """Average inverse-sqrt of the distance targets versus the size bound.

    lhs = (1/ell) sum_k (ceil(k^2/3ell) * 3/4)^(-1/2) must fall below
    rhs = ell^(-1/2 + 2 alpha); the comparison is only binding once
    ell >= e^4, and both sides are exact arithmetic here.
    """
    if ell < 3:
        raise ValueError("bound needs ell >= 3")
    alpha = math.log(math.log(ell)) / math.log(ell)
    targets = [-((-k * k) // (3 * ell)) for k in range(1, ell + 1)]
    lhs = sum((d * 0.75) ** -0.5 for d in targets) / ell
    rhs = ell ** (-0.5 + 2 * alpha)
    required = ell >= math.e**4
    return {
        "ell": ell,
        "alpha": alpha,
        "lhs": float(lhs),
        "rhs": float(rhs),
        "required": bool(required),
        "pass": bool(lhs < rhs),
    }


def trace_rows(trace: ProcessTrace) -> list[dict]:
    """Flatten a trace into CSV-ready dict rows."""
    return [
        {
            "depth": s.depth,
            "position": s.position,
            "H": s.H,
            "Zmad": s.Zmad,
            "Smax": s.Smax,
            "output_size": s.output_size,
            "exact": s.exact,
        }
        for s in trace.steps
    ]
