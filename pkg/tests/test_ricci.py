from fractions import Fraction as F

import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilsoliton.algebra import abelian, derivation_algebra, heisenberg
from nilsoliton.corpus import named_algebras, table_entries
from nilsoliton.preeinstein import pre_einstein_diagonal
from nilsoliton.ricci import (
    MetricError,
    bracket_norm_sq,
    derivation_trace_pairing,
    nilsoliton_verify,
    orthonormal_frame,
    ricci_operator,
    scalar_curvature,
    structure_tensor,
)
from oracles import frame_constants, koszul_ricci
from strategies import rational_metrics

H3_PHI = [F(2, 3), F(2, 3), F(4, 3)]


def random_spd(rng, n):
    A = rng.standard_normal((n, n))
    return A @ A.T + 0.5 * np.eye(n)


def test_h3_standard_is_exact():
    ric = ricci_operator(heisenberg(), [[1, 0, 0], [0, 1, 0], [0, 0, 1]]).basis
    assert ric.tolist() == [[F(-1, 2), 0, 0], [0, F(-1, 2), 0], [0, 0, F(1, 2)]]
    assert scalar_curvature(heisenberg()) == pytest.approx(-0.5)
    assert bracket_norm_sq(heisenberg()) == pytest.approx(2.0)


def test_abelian_is_flat():
    rng = np.random.default_rng(1)
    assert np.all(ricci_operator(abelian(3), random_spd(rng, 3)).basis == 0)
    assert scalar_curvature(abelian(4)) == 0


def test_scalar_curvature_scales_quadratically():
    L = named_algebras()["78"]
    G = random_spd(np.random.default_rng(3), L.dim)
    assert scalar_curvature(L.scaled(3), G) == pytest.approx(9 * scalar_curvature(L, G))


@pytest.mark.parametrize("name", ["h3", "h5", "f(3,2)", "twelve-dim", "78", "26*", "72*"])
def test_matches_koszul_oracle(name):
    L = named_algebras()[name]
    rng = np.random.default_rng(zlib.crc32(name.encode()))
    for _ in range(3):
        G = random_spd(rng, L.dim)
        res = ricci_operator(L, G)
        P = res.frame_vectors
        oracle = koszul_ricci(frame_constants(structure_tensor(L), P))
        assert np.allclose(res.frame, oracle, atol=1e-11 * max(1, np.abs(oracle).max()))
        # the frame is orthonormal for G
        assert np.allclose(P.T @ G @ P, np.eye(L.dim))


def test_exact_and_float_modes_agree():
    L = named_algebras()["26"]
    rng = np.random.default_rng(7)
    A = rng.integers(-2, 3, (L.dim, L.dim))
    G = [[int(v) for v in row] for row in (A @ A.T + np.eye(L.dim, dtype=int))]
    exact_ric = ricci_operator(L, G).basis
    float_ric = ricci_operator(L, np.array(G, dtype=float)).basis
    assert np.allclose(np.array(exact_ric, dtype=float), float_ric, atol=1e-12)


def test_metric_errors():
    with pytest.raises(MetricError):
        ricci_operator(heisenberg(), [[1, 0, 0], [0, -1, 0], [0, 0, 1]])
    with pytest.raises(MetricError):
        ricci_operator(heisenberg(), np.array([[1.0, 0.2, 0], [0, 1, 0], [0, 0, 1]]))


def test_verify_h3():
    rep = nilsoliton_verify(heisenberg(), [[1, 0, 0], [0, 1, 0], [0, 0, 1]], H3_PHI)
    assert rep.passed and rep.c == -1.5 and rep.residual_rel == 0
    # every metric on h3 is a nilsoliton: diag(1,1,10) gives ric = -5 (1,1,-1) = -15 (id - phi)
    stretched = nilsoliton_verify(heisenberg(), [[1, 0, 0], [0, 1, 0], [0, 0, 10]], H3_PHI)
    assert stretched.passed and stretched.c == -15
    L = named_algebras()["78"]
    bad = nilsoliton_verify(L, np.eye(L.dim), pre_einstein_diagonal(L).phi)
    assert not bad.passed and bad.residual_rel > 0.1


def test_verify_abelian_reports_flat():
    rep = nilsoliton_verify(abelian(2), np.eye(2), [1, 1])
    assert rep.flat and rep.c == 0


def test_verify_rejects_non_orthogonal_eigenspaces():
    G = np.array([[1.0, 0, 0.3], [0, 1, 0], [0.3, 0, 1]])
    with pytest.raises(MetricError):
        nilsoliton_verify(heisenberg(), G, H3_PHI)


def test_table_78():
    e = next(t for t in table_entries() if t.id == "78")
    rep = nilsoliton_verify(e.algebra, e.gram(), pre_einstein_diagonal(e.algebra).phi)
    assert rep.passed and rep.c < 0


def test_trace_pairing():
    h = heisenberg()
    assert derivation_trace_pairing(h, np.eye(3), np.diag([2 / 3, 2 / 3, 4 / 3])) == pytest.approx(0)
    I3 = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    # E_33 is not a derivation of h3; E_12 is one, so it pairs to zero
    assert derivation_trace_pairing(h, I3, [[0, 0, 0], [0, 0, 0], [0, 0, 1]]) == F(1, 2)
    assert derivation_trace_pairing(h, I3, [[0, 1, 0], [0, 0, 0], [0, 0, 0]]) == 0
    rng = np.random.default_rng(5)
    for _ in range(5):
        G = random_spd(rng, 3)
        A = rng.standard_normal((3, 3))
        ric = ricci_operator(h, G).basis
        assert derivation_trace_pairing(h, G, A) == pytest.approx(np.trace(ric @ A))


def test_orthonormal_frame_is_gram_schmidt():
    G = random_spd(np.random.default_rng(2), 4)
    P = orthonormal_frame(G)
    assert np.allclose(np.triu(P), P)  # triangular: e_1 is a multiple of X_1, etc.


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["h3", "h5", "f(3,2)", "102", "78", "60"]), st.data())
def test_trace_of_ric_against_derivations_vanishes(name, data):
    L = named_algebras()[name]
    G = data.draw(rational_metrics(L.dim))
    ric = ricci_operator(L, G).basis
    n = L.dim
    for d in derivation_algebra(L):
        assert sum(ric[i, j] * d.matrix[j][i] for i in range(n) for j in range(n)) == 0
