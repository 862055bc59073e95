import csv
import io
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from nilsoliton.algebra import abelian, heisenberg
from nilsoliton.corpus import named_algebras, table_entries, twelve_dim_example
from nilsoliton.flow import (
    FlowOptions,
    FlowState,
    Tag,
    act,
    bracket_norm_sq,
    flow_step,
    gphi_decompose,
    nilsoliton_metric_from_flow,
    ricci_standard,
    run_flow,
    verify_flow_metric,
)
from nilsoliton.preeinstein import pre_einstein_diagonal
from nilsoliton.ricci import ricci_operator, structure_tensor

H3_PHI = [F(2, 3), F(2, 3), F(4, 3)]


def test_gphi_decompose_basic():
    phi = [float(x) for x in H3_PHI]
    p = gphi_decompose(np.eye(3), H3_PHI)
    assert (p.c, p.a) == pytest.approx((1, 0)) and np.allclose(p.R, 0)
    p = gphi_decompose(np.diag(phi), H3_PHI)
    assert (p.c, p.a) == pytest.approx((0, 1)) and np.allclose(p.R, 0)
    p = gphi_decompose(ricci_standard(structure_tensor(heisenberg())), H3_PHI)
    assert (p.c, p.a) == pytest.approx((-1.5, 1.5)) and np.allclose(p.R, 0, atol=1e-15)


def test_decomposition_lies_in_g_phi():
    L = named_algebras()["78"]
    phi = pre_einstein_diagonal(L).phi
    p = gphi_decompose(ricci_standard(structure_tensor(L)), phi)
    f = np.array([float(x) for x in phi])
    assert abs(np.trace(p.R)) < 1e-14 and abs(np.diag(p.R) @ f) < 1e-14
    # R commutes with phi
    assert np.allclose(p.R @ np.diag(f), np.diag(f) @ p.R)


def test_ricci_standard_matches_module():
    L = named_algebras()["26*"]
    assert np.allclose(ricci_standard(structure_tensor(L)), ricci_operator(L).basis, atol=1e-13)


def test_gradient_identity():
    """``d/dt f(exp(tA).mu) = 8 Tr(ric A)`` at t = 0."""
    L = named_algebras()["72"]
    T = structure_tensor(L)
    rng = np.random.default_rng(11)
    ric = ricci_standard(T)
    for _ in range(5):
        A = rng.standard_normal((L.dim, L.dim))
        A = (A + A.T) / 2
        h = 1e-6
        fp = bracket_norm_sq(act(expm(h * A), expm(-h * A), T))
        fm = bracket_norm_sq(act(expm(-h * A), expm(h * A), T))
        assert (fp - fm) / (2 * h) == pytest.approx(8 * np.trace(ric @ A), rel=1e-6)


def test_critical_point_is_fixed():
    T = structure_tensor(heisenberg())
    st0 = FlowState(T, np.eye(3), bracket_norm_sq(T), 0.0)
    nxt = flow_step(st0, H3_PHI)
    assert nxt.last_step == 0.0 and np.array_equal(nxt.mu, T)


def test_step_decreases_f_and_keeps_determinants():
    L = named_algebras()["78"]
    phi = pre_einstein_diagonal(L).phi
    T = structure_tensor(L)
    state = FlowState(T, np.eye(L.dim), bracket_norm_sq(T), 1.0)
    f = np.array([float(x) for x in phi])
    for _ in range(5):
        nxt = flow_step(state, phi)
        assert nxt.f_value < state.f_value
        h = nxt.g @ np.linalg.inv(state.g)
        assert np.linalg.det(h) == pytest.approx(1, abs=1e-12)
        # h = exp(-eta R) with Tr(R phi) = 0
        assert abs(np.trace(np.diag(f) @ _logm_sym(h))) < 1e-10
        state = nxt


def _logm_sym(h):
    w, V = np.linalg.eigh((h + h.T) / 2)
    return (V * np.log(w)) @ V.T


def test_h3_converges_immediately():
    out = run_flow(heisenberg())
    assert out.tag == Tag.CONVERGED and out.state.iteration == 0
    assert out.c == pytest.approx(-1.5)
    assert np.allclose(nilsoliton_metric_from_flow(out), np.eye(3))


def test_78_converges_to_a_verified_metric():
    L = named_algebras()["78"]
    out = run_flow(L)
    assert out.converged and out.state.residual < 1e-8
    rep = verify_flow_metric(L, out)
    assert rep.passed and rep.residual_rel < 1e-8


def test_twelve_dim_rejected_then_degenerates():
    L = twelve_dim_example()
    out = run_flow(L)
    assert out.tag == Tag.REJECTED and "-1/55" in out.reason
    forced = run_flow(L, opts=FlowOptions(check_necessary=False))
    assert forced.tag == Tag.DEGENERATED
    assert forced.state.f_true < 16.0 and forced.state.residual > 1e-4
    assert forced.direction is not None


def test_abelian_is_flat():
    out = run_flow(abelian(3))
    assert out.converged and out.c == 0
    assert np.array_equal(nilsoliton_metric_from_flow(out), np.eye(3))


def test_max_iterations_and_trace():
    L = named_algebras()["28*"]
    buf = io.StringIO()
    out = run_flow(L, opts=FlowOptions(max_iter=5, trace=buf))
    assert out.tag == Tag.MAX_ITERATIONS
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ["iteration", "f", "residual"] and len(rows) == 7
    fs = [float(r[1]) for r in rows[1:]]
    assert all(b <= a for a, b in zip(fs, fs[1:]))


def test_monotone_on_printed_entries():
    for e in table_entries()[:6]:
        buf = io.StringIO()
        run_flow(e.algebra, opts=FlowOptions(trace=buf))
        fs = [float(r[1]) for r in list(csv.reader(io.StringIO(buf.getvalue())))[1:]]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(fs, fs[1:]))


def _block_rotation(phi, rng):
    n = len(phi)
    K = np.zeros((n, n))
    for lam in set(phi):
        idx = [i for i in range(n) if phi[i] == lam]
        Q, _ = np.linalg.qr(rng.standard_normal((len(idx), len(idx))))
        K[np.ix_(idx, idx)] = Q
    return K


@settings(max_examples=6, deadline=None)
@given(st.sampled_from(["26", "45", "60*", "72"]), st.integers(0, 10**6))
def test_orthogonal_gauge_invariance(name, seed):
    """Starting from ``k.mu`` with ``k`` orthogonal in ``G_phi`` gives the same values of f."""
    L = named_algebras()[name]
    phi = pre_einstein_diagonal(L).phi
    K = _block_rotation(phi, np.random.default_rng(seed))
    T = structure_tensor(L)
    a = run_flow(L, phi)
    b = run_flow(L, phi, start=act(K, K.T, T))
    assert b.converged
    assert b.state.f_true == pytest.approx(a.state.f_true, rel=1e-9)


@pytest.mark.parametrize("t", [0.25, 3.0])
def test_scale_invariance(t):
    L = named_algebras()["44"]
    phi = pre_einstein_diagonal(L).phi
    base = run_flow(L, phi)
    scaled = run_flow(L, phi, start=t * structure_tensor(L))
    assert scaled.converged
    assert scaled.state.f_true == pytest.approx(t * t * base.state.f_true, rel=1e-8)
    assert scaled.c == pytest.approx(t * t * base.c, rel=1e-8)
