"""Discrete memoryless channels with q-ary input and finite output alphabet.

A channel is a row-stochastic (q x M) matrix over an opaque integer output
alphabet, paired with the input distribution it is operated at.  Output
labels carry no meaning beyond indexing, which is what makes output merging
and the synthesized-channel machinery legitimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gf import FieldSpec, field_make

#: tolerance for "rows sum to one" validation
ROW_TOL = 1e-12

__all__ = [
    "Channel",
    "DerivedDists",
    "make_channel",
    "derived_distributions",
    "capacity_input",
    "extend_input",
    "flatten",
    "symmetrize",
    "merge_outputs",
    "bec",
    "bsc",
    "zchannel",
    "random_channel",
    "channel_to_dict",
    "channel_from_dict",
]


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic transition matrix plus the input distribution in use."""

    field: FieldSpec
    transition: np.ndarray
    input_dist: np.ndarray

    def __post_init__(self) -> None:
        trans = np.array(self.transition, dtype=np.float64)
        dist = np.array(self.input_dist, dtype=np.float64)
        if trans.ndim != 2 or trans.shape[0] != self.field.q:
            raise ValueError(
                f"transition must be (q, M) with q={self.field.q}, got {trans.shape}"
            )
        if trans.shape[1] < 1:
            raise ValueError("channel needs at least one output")
        if trans.min() < -1e-15:
            bad = np.unravel_index(int(np.argmin(trans)), trans.shape)
            raise ValueError(f"negative transition probability at {bad}")
        trans = np.maximum(trans, 0.0)
        sums = trans.sum(axis=1)
        off = np.abs(sums - 1.0)
        if off.max() > ROW_TOL:
            row = int(np.argmax(off))
            raise ValueError(
                f"transition row {row} sums to {sums[row]!r}, outside {ROW_TOL} of 1"
            )
        if dist.shape != (self.field.q,):
            raise ValueError(f"input_dist must have length q={self.field.q}")
        if dist.min() < -1e-15 or abs(dist.sum() - 1.0) > ROW_TOL:
            raise ValueError("input_dist is not a probability vector")
        dist = np.maximum(dist, 0.0)
        trans.setflags(write=False)
        dist.setflags(write=False)
        object.__setattr__(self, "transition", trans)
        object.__setattr__(self, "input_dist", dist)

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def output_size(self) -> int:
        return int(self.transition.shape[1])

    def with_input(self, input_dist) -> "Channel":
        """Same transition law operated at a different input distribution."""
        return Channel(self.field, self.transition, np.asarray(input_dist))


def make_channel(field: FieldSpec, transition, input_dist=None) -> Channel:
    """Build a channel; ``input_dist=None`` means uniform."""
    transition = np.asarray(transition, dtype=np.float64)
    if input_dist is None:
        input_dist = np.full(field.q, 1.0 / field.q)
    return Channel(field, transition, input_dist)


# ---------------------------------------------------------- derived laws

@dataclass(frozen=True)
class DerivedDists:
    """Joint P(x,y), output marginal P(y) and posterior P(x|y) arrays."""

    joint: np.ndarray      # (q, M)
    output: np.ndarray     # (M,)
    posterior: np.ndarray  # (q, M), uniform on zero-mass outputs


def derived_distributions(W: Channel) -> DerivedDists:
    joint = W.input_dist[:, None] * W.transition
    output = joint.sum(axis=0)
    q = W.q
    with np.errstate(invalid="ignore", divide="ignore"):
        posterior = joint / output[None, :]
    dead = output <= 0.0
    if np.any(dead):
        posterior = posterior.copy()
        posterior[:, dead] = 1.0 / q
    for arr in (joint, output, posterior):
        arr.setflags(write=False)
    return DerivedDists(joint=joint, output=output, posterior=posterior)


# ------------------------------------------------------- capacity search

def capacity_input(W: Channel, tol: float = 1e-9, max_iter: int = 10**5) -> np.ndarray:
    """Capacity-achieving input distribution via alternating maximisation.

    Iterates the classic update r(x) <- r(x) exp(D(W(.|x) || out)) / Z and
    stops once the optimality-gap certificate max_x D_x - I drops below
    ``tol`` (everything in nats internally).  Raises ``ValueError`` if the
    gap has not closed after ``max_iter`` rounds.
    """
    T = W.transition
    q = W.q
    r = np.full(q, 1.0 / q)
    logT = np.where(T > 0, np.log(np.where(T > 0, T, 1.0)), 0.0)
    for _ in range(max_iter):
        out = r @ T
        with np.errstate(invalid="ignore", divide="ignore"):
            log_out = np.where(out > 0, np.log(np.where(out > 0, out, 1.0)), 0.0)
        D = np.sum(np.where(T > 0, T * (logT - log_out[None, :]), 0.0), axis=1)
        I = float(r @ D)
        if float(D.max()) - I <= tol:
            return r / r.sum()
        r = r * np.exp(D - D.max())
        r /= r.sum()
    raise ValueError(f"capacity search did not converge within {max_iter} iterations")


# ------------------------------------------------- alphabet manipulation

def extend_input(W: Channel, target: FieldSpec) -> Channel:
    """Embed an s-ary channel into a larger q-ary input alphabet.

    The first s input symbols keep their rows; every new symbol behaves
    exactly like symbol s-1, so the extra inputs are informationless clones:
    the carried input distribution (original padded with zeros) achieves the
    same mutual information as before, and the capacity is unchanged.
    """
    s = W.q
    if target.q < s:
        raise ValueError(f"target field size {target.q} smaller than source {s}")
    extra = target.q - s
    trans = np.vstack([W.transition, np.tile(W.transition[s - 1], (extra, 1))])
    dist = np.concatenate([W.input_dist, np.zeros(extra)])
    return Channel(target, trans, dist)


def flatten(W: Channel) -> Channel:
    """Collapse the output alphabet to a single symbol (pure-noise channel)."""
    return Channel(W.field, np.ones((W.q, 1)), W.input_dist)


def symmetrize(W: Channel) -> Channel:
    """Uniform-input symmetric wrap of an arbitrary channel.

    A uniform dither v is added to the source symbol before transmission
    and revealed alongside the channel output: the wrapped channel maps
    input u to output pair (v, y) with probability P_in(u-v) W(y | u-v).
    Every row is a permutation of the same joint array, the input is
    uniform, and both the conditional input entropy and all synthesized
    conditional entropies coincide with those of the original channel.
    """
    q, M = W.q, W.output_size
    joint = derived_distributions(W).joint
    u = np.arange(q)
    diff = W.field.sub(u[:, None], u[None, :])  # (u, v) -> u - v
    trans = joint[diff, :].reshape(q, q * M)    # output index = v*M + y
    return Channel(W.field, trans, np.full(q, 1.0 / q))


def merge_outputs(W: Channel, tol: float = 1e-12) -> Channel:
    """Merge output symbols whose posteriors agree within ``tol`` (sup norm).

    Columns are sorted lexicographically by posterior vector, then grouped
    against the first member of each run, so the result is deterministic.
    Merging is information-lossless at ``tol = 1e-12`` and a degradation for
    coarser tolerances.  Zero-mass outputs share a uniform posterior and
    collapse together.
    """
    d = derived_distributions(W)
    post = d.posterior
    M = W.output_size
    order = np.lexsort(post[::-1, :])
    groups: list[list[int]] = []
    rep: np.ndarray | None = None
    for col in order:
        if rep is not None and float(np.max(np.abs(post[:, col] - rep))) <= tol:
            groups[-1].append(int(col))
        else:
            groups.append([int(col)])
            rep = post[:, col]
    new_trans = np.empty((W.q, len(groups)))
    for j, cols in enumerate(groups):
        new_trans[:, j] = W.transition[:, cols].sum(axis=1)
    if len(groups) == M:
        # nothing merged; keep the original column order
        return W
    return Channel(W.field, new_trans, W.input_dist)


# ------------------------------------------------------- stock channels

def bec(eps: float, input_dist=None) -> Channel:
    """Binary erasure channel; outputs are (0, 1, erasure)."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("erasure probability must lie in [0, 1]")
    trans = [[1 - eps, 0.0, eps], [0.0, 1 - eps, eps]]
    return make_channel(field_make(2), trans, input_dist)


def bsc(delta: float, input_dist=None) -> Channel:
    """Binary symmetric channel with flip probability delta."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError("flip probability must lie in [0, 1]")
    trans = [[1 - delta, delta], [delta, 1 - delta]]
    return make_channel(field_make(2), trans, input_dist)


def zchannel(eps: float, input_dist=None) -> Channel:
    """Z-channel: 0 passes clean, 1 flips to 0 with probability eps."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("crossover probability must lie in [0, 1]")
    trans = [[1.0, 0.0], [eps, 1 - eps]]
    return make_channel(field_make(2), trans, input_dist)


def random_channel(
    field: FieldSpec,
    output_size: int,
    rng: np.random.Generator,
    random_input: bool = False,
    concentration: float = 1.0,
) -> Channel:
    """Dirichlet-random transition rows, optionally a random input simplex."""
    trans = rng.dirichlet(np.full(output_size, concentration), size=field.q)
    dist = rng.dirichlet(np.full(field.q, 1.0)) if random_input else None
    return make_channel(field, trans, dist)


# ---------------------------------------------------------------- JSON

def channel_to_dict(W: Channel) -> dict:
    return {
        "p": W.field.p,
        "m": W.field.m,
        "output_size": W.output_size,
        "transition": [[float(v) for v in row] for row in W.transition],
        "input_dist": [float(v) for v in W.input_dist],
    }


def channel_from_dict(doc: dict, capacity_tol: float = 1e-9) -> Channel:
    field = field_make(int(doc["p"]), int(doc.get("m", 1)))
    trans = np.asarray(doc["transition"], dtype=np.float64)
    if "output_size" in doc and int(doc["output_size"]) != trans.shape[1]:
        raise ValueError(
            f"output_size {doc['output_size']} does not match transition width "
            f"{trans.shape[1]}"
        )
    dist = doc.get("input_dist")
    if isinstance(dist, str):
        if dist != "capacity":
            raise ValueError(f"unknown input_dist keyword {dist!r}")
        W0 = make_channel(field, trans)
        return W0.with_input(capacity_input(W0, tol=capacity_tol))
    return make_channel(field, trans, dist)
