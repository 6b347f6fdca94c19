"""Parameter calculus: frozen values, invariants, inequality web, exponents."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpolar.channel import (
    bec,
    bsc,
    flatten,
    make_channel,
    random_channel,
    symmetrize,
    zchannel,
)
from qpolar.gf import field_make
from qpolar.params import (
    conditional_entropy,
    gallager_e0,
    holder_report,
    param_vector,
    quadratic_check,
    second_moment,
    tilted,
)

LN2SQ = math.log(2) ** 2


def _entropy_base_q(dist, q):
    d = np.asarray(dist)
    mask = d > 0
    return float(-np.sum(np.where(mask, d * np.log(np.where(mask, d, 1.0)), 0.0)) / np.log(q))


def _random_uniform_channel(seed):
    rng = np.random.default_rng(seed)
    p, m = [(2, 1), (3, 1), (2, 2), (5, 1)][int(rng.integers(0, 4))]
    return random_channel(field_make(p, m), int(rng.integers(2, 6)), rng)


# ------------------------------------------------------------ frozen values

def test_param_vector_bec_half():
    pv = param_vector(bec(0.5))
    assert pv.H == pytest.approx(0.5, abs=1e-12)
    assert pv.I == pytest.approx(0.5, abs=1e-12)
    assert pv.Pe == pytest.approx(0.25, abs=1e-12)
    assert pv.Z == pytest.approx(0.5, abs=1e-12)
    assert pv.Zmad == pytest.approx(0.5, abs=1e-12)
    assert pv.T == pytest.approx(0.5, abs=1e-12)
    assert pv.S == pytest.approx(0.5, abs=1e-12)
    assert pv.Smax == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("eps", [0.1, 0.35, 0.8])
def test_bec_family_closed_forms(eps):
    pv = param_vector(bec(eps))
    assert pv.H == pytest.approx(eps, abs=1e-12)
    assert pv.Z == pytest.approx(eps, abs=1e-12)
    assert pv.Pe == pytest.approx(eps / 2, abs=1e-12)
    assert pv.S == pytest.approx(1 - eps, abs=1e-12)


@pytest.mark.parametrize("delta", [0.05, 0.11, 0.4])
def test_bsc_closed_forms(delta):
    pv = param_vector(bsc(delta))
    assert pv.Z == pytest.approx(2 * math.sqrt(delta * (1 - delta)), abs=1e-12)
    assert pv.Pe == pytest.approx(delta, abs=1e-12)
    assert pv.Zmad == pv.Z and pv.Smax == pv.S


def test_noiseless_channel_extremes():
    q = 3
    W = make_channel(field_make(q), np.eye(q))
    pv = param_vector(W)
    assert pv.H == pytest.approx(0.0, abs=1e-12)
    assert pv.Pe == pytest.approx(0.0, abs=1e-12)
    assert pv.Z == pytest.approx(0.0, abs=1e-12)
    assert pv.T == pytest.approx(2 * (q - 1) / q, abs=1e-12)
    assert pv.S == pytest.approx(1.0, abs=1e-12)
    assert pv.Smax == pytest.approx(1.0, abs=1e-12)


def test_useless_channel_extremes():
    q = 4
    W = flatten(make_channel(field_make(2, 2), np.eye(q)))
    pv = param_vector(W)
    assert pv.H == pytest.approx(1.0, abs=1e-12)
    assert pv.I == pytest.approx(0.0, abs=1e-12)
    assert pv.Z == pytest.approx(1.0, abs=1e-12)
    assert pv.Zmad == pytest.approx(1.0, abs=1e-12)
    assert pv.T == pytest.approx(0.0, abs=1e-12)
    assert pv.S == pytest.approx(0.0, abs=1e-12)
    assert pv.Pe == pytest.approx(1 - 1 / q, abs=1e-12)


# -------------------------------------------------------------- invariants

@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_param_invariants_random_channels(seed):
    W = _random_uniform_channel(seed)
    pv = param_vector(W)
    q = pv.q
    for val in (pv.H, pv.Pe, pv.Z, pv.Zmad, pv.T, pv.S, pv.Smax):
        assert val >= -1e-12
    assert pv.H <= 1 + 1e-12
    assert pv.Pe <= 1 - 1 / q + 1e-12
    assert pv.Z <= pv.Zmad + 1e-12
    assert pv.Zmad <= (q - 1) * pv.Z + 1e-9
    assert pv.Zmad <= q - 1 + 1e-9
    assert pv.S <= pv.Smax + 1e-12
    assert pv.Smax <= (q - 1) * pv.S + 1e-9
    # H and I are computed independently; together they tile the input entropy
    h_in = _entropy_base_q(W.input_dist, q)
    assert pv.H + pv.I == pytest.approx(h_in, abs=1e-9)


def test_binary_collapse_is_exact():
    rng = np.random.default_rng(77)
    for _ in range(20):
        W = random_channel(field_make(2), int(rng.integers(2, 7)), rng)
        pv = param_vector(W)
        assert pv.Z == pv.Zmad
        assert pv.S == pv.Smax


def test_conditional_entropy_units():
    W = bec(0.5)
    assert conditional_entropy(W, "symbols") == pytest.approx(0.5, abs=1e-12)
    assert conditional_entropy(W, "nats") == pytest.approx(0.5 * math.log(2), abs=1e-12)
    with pytest.raises(ValueError):
        conditional_entropy(W, "furlongs")


# --------------------------------------------------------- inequality web

@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_holder_report_random_channels(seed):
    rep = holder_report(_random_uniform_channel(seed))
    assert rep["ok"], {k: v for k, v in rep["checks"].items() if not v["ok"]}


@pytest.mark.parametrize(
    "W", [bec(0.0), bec(1.0), bsc(0.5), bec(0.5), bsc(0.0)], ids=lambda w: "edge"
)
def test_holder_report_edge_channels(W):
    rep = holder_report(W)
    assert rep["ok"], rep["checks"]


def test_holder_report_structure():
    rep = holder_report(bec(0.3))
    assert set(rep) == {"params", "checks", "ok"}
    for entry in rep["checks"].values():
        assert set(entry) == {"lhs", "rhs", "ok"}
        assert entry["lhs"] <= entry["rhs"] + 1e-9


# ---------------------------------------------------------------- exponents

def test_gallager_e0_bec_frozen():
    out = gallager_e0(bec(0.5), 1.0)
    assert out["e0"] == pytest.approx(math.log(4 / 3), abs=1e-12)


def test_gallager_e0_zero_is_exact_zero():
    for W in (bec(0.3), bsc(0.12), symmetrize(zchannel(0.4))):
        out = gallager_e0(W, 0.0)
        assert out["e0"] == 0.0 and out["e0_dual"] == 0.0


def test_gallager_duality_uniform_input():
    rng = np.random.default_rng(5)
    for _ in range(15):
        W = random_channel(field_make(3), 4, rng)
        t = float(rng.uniform(-0.4, 1.0))
        out = gallager_e0(W, t)
        assert out["e0"] + out["e0_dual"] == pytest.approx(t * math.log(3), abs=1e-12)


def test_gallager_rejects_nonuniform_and_bad_t():
    W = bsc(0.2, input_dist=[0.3, 0.7])
    with pytest.raises(ValueError, match="uniform"):
        gallager_e0(W, 0.5)
    with pytest.raises(ValueError):
        gallager_e0(bsc(0.2), 1.5)
    with pytest.raises(ValueError):
        gallager_e0(bsc(0.2), -0.5)


def test_gallager_derivative_at_zero_is_mutual_info():
    h = 1e-5
    for W in (bec(0.5), bsc(0.11), random_channel(field_make(2, 2), 5, np.random.default_rng(3))):
        pv = param_vector(W)
        fd = (gallager_e0(W, h)["e0"] - gallager_e0(W, -h)["e0"]) / (2 * h)
        assert abs(fd - pv.I * math.log(W.q)) <= 1e-4


# ------------------------------------------------------------------ tilting

def test_tilted_identity_at_zero():
    W = bsc(0.2)
    assert tilted(W, 0.0) is W


def test_tilted_matches_direct_formula():
    W = random_channel(field_make(3), 4, np.random.default_rng(8))
    t = 0.6
    V = tilted(W, t)
    a = 1 / (1 + t)
    J = W.input_dist[:, None] * W.transition
    A = (J**a).sum(axis=0)
    expect = (A ** (1 + t) / (A ** (1 + t)).sum())[None, :] * (J**a) / A[None, :]
    got = V.input_dist[:, None] * V.transition
    np.testing.assert_allclose(got, expect, atol=1e-14)


def test_tilted_derivative_matches_conditional_entropy():
    # d/dt of the dual exponent equals the tilted conditional entropy (nats)
    h = 1e-5
    rng = np.random.default_rng(13)
    for t in (-0.2, 0.0, 0.3, 0.8):
        W = random_channel(field_make(2), 4, rng)
        fd = (
            gallager_e0(W, t + h)["e0_dual"] - gallager_e0(W, t - h)["e0_dual"]
        ) / (2 * h)
        assert abs(fd - conditional_entropy(tilted(W, t), "nats")) <= 1e-4


def test_tilted_validates():
    with pytest.raises(ValueError):
        tilted(bsc(0.2), 1.2)
    with pytest.raises(ValueError):
        tilted(bsc(0.2, input_dist=[1.0, 0.0]), 0.5)


# ------------------------------------------------------------ second moment

def test_second_moment_frozen_and_bounds():
    assert second_moment([0.5, 0.5]) == pytest.approx(LN2SQ, abs=1e-12)
    assert LN2SQ <= 0.563
    # sweep the binary simplex: the maximum sits near w = 0.161, below 0.563
    xs = np.linspace(1e-12, 1 - 1e-12, 20001)
    vals = [second_moment([x, 1 - x]) for x in xs[:: len(xs) // 200]]
    assert max(vals) <= 0.563


@pytest.mark.parametrize("q", [3, 4, 5, 9])
def test_second_moment_q_bounds(q):
    lnq2 = math.log(q) ** 2
    assert second_moment([1.0 / q] * q) == pytest.approx(lnq2, abs=1e-12)
    rng = np.random.default_rng(q)
    for _ in range(200):
        w = rng.dirichlet(np.full(q, 0.4))
        sm = second_moment(w)
        assert sm <= 1.2 * lnq2 + 1e-12


def test_second_moment_validates():
    with pytest.raises(ValueError):
        second_moment([0.7, 0.7])
    with pytest.raises(ValueError):
        second_moment([1.2, -0.2])


# ------------------------------------------------------------- quadratic

def test_quadratic_check_bec_and_random():
    rep = quadratic_check(bec(0.5))
    assert rep["ok"], rep
    rng = np.random.default_rng(31)
    for q in (2, 3):
        W = random_channel(field_make(q), 4, rng)
        rep = quadratic_check(W)
        assert rep["slack_ok"] and rep["curvature_ok"]
