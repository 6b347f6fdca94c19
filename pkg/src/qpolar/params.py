"""Reliability/noisiness functionals of a channel and relations among them.

For a channel W used at input distribution P the module computes, from the
joint law J(x,y) = P(x) W(y|x):

==========  ==============================================================
H           conditional input entropy H(X|Y), base-q symbols
I           mutual information I(X;Y), base-q symbols (computed separately
            from H so conservation checks are honest)
Pe          error probability of the MAP symbol guess
Z           average over ordered symbol pairs of the Bhattacharyya overlap
Zmad        the worst single-difference Bhattacharyya overlap
T           mean total variation between the posterior and uniform
S           average absolute correlation of the posterior with the
            nontrivial additive characters
Smax        the worst single-character correlation
==========  ==============================================================

plus an inequality report tying them together, Gallager-type exponent
functions with their source-coding duals, and exponential tilting of the
joint law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import Channel, derived_distributions

__all__ = [
    "ParamVector",
    "param_vector",
    "conditional_entropy",
    "holder_report",
    "gallager_e0",
    "tilted",
    "second_moment",
    "quadratic_check",
]


@dataclass(frozen=True)
class ParamVector:
    q: int
    H: float
    I: float
    Pe: float
    Z: float
    Zmad: float
    T: float
    S: float
    Smax: float

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "H": self.H,
            "I": self.I,
            "Pe": self.Pe,
            "Z": self.Z,
            "Zmad": self.Zmad,
            "T": self.T,
            "S": self.S,
            "Smax": self.Smax,
        }


def _xlogy(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """x*log(y) with the 0*log(0) = 0 convention."""
    mask = x > 0
    return np.where(mask, x * np.log(np.where(mask, y, 1.0)), 0.0)


def conditional_entropy(W: Channel, unit: str = "symbols") -> float:
    """H(X|Y); ``unit`` is 'symbols' (base q) or 'nats'."""
    d = derived_distributions(W)
    h = float(-_xlogy(d.joint, d.posterior).sum())
    if unit == "nats":
        return h
    if unit == "symbols":
        return h / math.log(W.q)
    raise ValueError(f"unknown unit {unit!r}")


def param_vector(W: Channel) -> ParamVector:
    q = W.q
    f = W.field
    d = derived_distributions(W)
    joint, out, post = d.joint, d.output, d.posterior
    lnq = math.log(q)

    H = float(-_xlogy(joint, post).sum()) / lnq

    prod = W.input_dist[:, None] * out[None, :]
    I = float(_xlogy(joint, np.where(joint > 0, joint / np.where(joint > 0, prod, 1.0), 1.0)).sum()) / lnq

    Pe = float((out * (1.0 - post.max(axis=0))).sum())

    R = np.sqrt(joint)
    xs = np.arange(q)
    overlaps = np.empty(q - 1)
    for k, dsym in enumerate(range(1, q)):
        overlaps[k] = float((R * R[f.add(xs, dsym), :]).sum())
    Z = float(overlaps.sum() / (q - 1))
    Zmad = float(overlaps.max())

    T = float(np.abs(joint - out[None, :] / q).sum())

    chi = f.char(f.mul(xs[:, None], xs[None, :]))  # chi[w, z]
    corr = np.abs(chi @ post)                      # (q, M)
    weights = corr @ out
    S = float(weights[1:].mean())
    Smax = float(weights[1:].max())

    return ParamVector(q=q, H=H, I=I, Pe=Pe, Z=Z, Zmad=Zmad, T=T, S=S, Smax=Smax)


# ------------------------------------------------------ inequality report

def _h2_bits(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return float(-x * math.log2(x) - (1 - x) * math.log2(1 - x))


def holder_report(W: Channel, tol: float = 1e-9) -> dict:
    """Check the full web of pairwise parameter inequalities on one channel.

    Every entry is {"lhs", "rhs", "ok"} with ok testing lhs <= rhs + tol.
    Entropies are compared in bits where the classic guessing bounds are
    stated in bits; H itself is base q.
    """
    pv = param_vector(W)
    q, H, Pe, Z, Zmad, T, S, Smax = (
        pv.q, pv.H, pv.Pe, pv.Z, pv.Zmad, pv.T, pv.S, pv.Smax,
    )
    lgq = math.log2(q)
    lnq = math.log(q)
    H_bits = H * lgq

    checks: dict[str, dict] = {}

    def rec(name: str, lhs: float, rhs: float) -> None:
        checks[name] = {"lhs": float(lhs), "rhs": float(rhs), "ok": bool(lhs <= rhs + tol)}

    root = math.sqrt(max(1 + (q - 1) * Z, 0.0)) - math.sqrt(max(1 - Z, 0.0))
    rec("pe_lower_vs_z", (q - 1) / q**2 * root**2, Pe)
    rec("pe_upper_vs_z", Pe, (q - 1) * Z / 2)

    rec("tv_lower_vs_pe", (q - 1) / q - Pe, T / 2)
    rec("tv_upper_vs_pe", T / 2, (q - 1) / q - ((q - 1) * q * Pe - (q - 1) * (q - 2)) / q)

    rec("corr_lower_vs_pe", 1 - q * Pe / (q - 1), S)
    inner = max(1 - (q / (q - 1)) * ((q - 2) / (q - 1)), 0.0)
    rec("corr_upper_vs_pe", S, (q - 1) * q * ((q - 1) / q - Pe) * math.sqrt(inner))

    rec("entropy_upper_fano", H_bits, _h2_bits(Pe) + Pe * math.log2(q - 1))
    rec("entropy_lower_small_pe", 2 * Pe, H_bits)
    lg_ratio = math.log2(q / (q - 1))
    rec(
        "entropy_lower_large_pe",
        (q - 1) * q * lg_ratio * (Pe - (q - 2) / (q - 1)) + math.log2(q - 1),
        H_bits,
    )

    rec("overlap_vs_entropy", Zmad, q * math.sqrt(max(H, 0.0) * lnq / math.log(4)))
    rec("entropy_vs_overlap", H, math.sqrt(math.e * (q - 1) * Zmad / 2))
    rec("corr_vs_entropy_gap", Smax, (q - 1) * q * math.sqrt(max(1 - H, 0.0) * lnq / 2))
    rec("entropy_gap_vs_corr", 1 - H, (q - 1) * Smax / lnq)

    return {"params": pv.as_dict(), "checks": checks, "ok": all(c["ok"] for c in checks.values())}


# ------------------------------------------------- exponent functionals

def _require_uniform(W: Channel, what: str) -> None:
    if np.max(np.abs(W.input_dist - 1.0 / W.q)) > 1e-12:
        raise ValueError(f"{what} requires a uniform input distribution; symmetrize first")


def gallager_e0(W: Channel, t: float) -> dict:
    """Gallager exponent function and its fixed-composition dual, in nats.

    e0(t)      = -ln sum_y (sum_x P(x) W(y|x)^(1/(1+t)))^(1+t)
    e0_dual(t) =  ln sum_y (sum_x J(x,y)^(1/(1+t)))^(1+t)

    Under uniform input the two add up to t*ln(q) identically.  The t = 0
    values are the exact limit 0 for any channel, so they are returned as
    literal zeros rather than round-off.
    """
    _require_uniform(W, "gallager_e0")
    if not -0.4 <= t <= 1.0:
        raise ValueError(f"tilt parameter {t} outside [-2/5, 1]")
    if t == 0.0:
        return {"e0": 0.0, "e0_dual": 0.0, "t": 0.0}
    a = 1.0 / (1.0 + t)
    T = W.transition
    inner = (W.input_dist[:, None] * np.power(T, a)).sum(axis=0)
    e0 = -math.log(float(np.power(inner, 1.0 + t).sum()))
    joint = W.input_dist[:, None] * T
    inner_d = np.power(joint, a).sum(axis=0)
    e0_dual = math.log(float(np.power(inner_d, 1.0 + t).sum()))
    return {"e0": e0, "e0_dual": e0_dual, "t": float(t)}


def tilted(W: Channel, t: float) -> Channel:
    """Exponentially tilt the joint law by 1/(1+t) and renormalise.

    Returns a channel whose joint distribution is

        J_t(x,y) = A(y)^(1+t)/Z * J(x,y)^(1/(1+t))/A(y),
        A(y) = sum_x J(x,y)^(1/(1+t)),

    i.e. the output law is reweighted by A(y)^(1+t) and each posterior is
    power-tilted.  t = 0 returns W itself.
    """
    if not -0.4 <= t <= 1.0:
        raise ValueError(f"tilt parameter {t} outside [-2/5, 1]")
    if np.any(W.input_dist <= 0):
        raise ValueError("tilting needs a full-support input distribution")
    if t == 0.0:
        return W
    a = 1.0 / (1.0 + t)
    joint = derived_distributions(W).joint
    powered = np.power(joint, a)
    A = powered.sum(axis=0)
    out_t = np.power(A, 1.0 + t)
    out_t /= out_t.sum()
    post_t = powered / np.where(A > 0, A, 1.0)[None, :]
    joint_t = post_t * out_t[None, :]
    marg = joint_t.sum(axis=1)
    trans = joint_t / marg[:, None]
    return Channel(W.field, trans, marg)


def second_moment(weights) -> float:
    """Second log-moment sum_i w_i (ln w_i)^2 of a probability vector."""
    w = np.asarray(weights, dtype=np.float64)
    if w.min() < -1e-15 or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must form a probability vector")
    mask = w > 0
    return float(np.sum(np.where(mask, w * np.log(np.where(mask, w, 1.0)) ** 2, 0.0)))


def quadratic_check(W: Channel, grid: np.ndarray | None = None) -> dict:
    """Quadratic lower bound and curvature floor for the exponent function.

    On a uniform grid in [-2/5, 1] verifies e0(t) >= I*t*ln(q) - t^2 (ln q)^2
    (slack >= -1e-9) and that discrete second differences never drop below
    -2 (ln q)^2 - 1e-6.
    """
    _require_uniform(W, "quadratic_check")
    if grid is None:
        grid = np.linspace(-0.4, 1.0, 29)
    ts = np.asarray(grid, dtype=np.float64)
    lnq = math.log(W.q)
    I_nats = param_vector(W).I * lnq
    e0s = np.array([gallager_e0(W, float(t))["e0"] for t in ts])
    slacks = e0s - (I_nats * ts - ts**2 * lnq**2)
    h = np.diff(ts)
    curv = (e0s[2:] - 2 * e0s[1:-1] + e0s[:-2]) / (h[1:] * h[:-1])
    min_curv = float(curv.min()) if curv.size else 0.0
    report = {
        "ts": ts.tolist(),
        "e0": e0s.tolist(),
        "min_slack": float(slacks.min()),
        "min_curvature": min_curv,
        "slack_ok": bool(slacks.min() >= -1e-9),
        "curvature_ok": bool(min_curv >= -2 * lnq**2 - 1e-6),
    }
    report["ok"] = report["slack_ok"] and report["curvature_ok"]
    return report
