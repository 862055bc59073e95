"""Ricci operator of a metric nilpotent Lie algebra, in exact or floating mode.

A metric is a Gram matrix ``G`` on the working basis.  Sums over an
orthonormal frame are written with ``H = G^-1`` (``sum_i E_i (x) E_i = H``),
so rational Gram matrices give exact rational answers.  Arrays of
``Fraction`` use numpy ``object`` dtype.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import exact
from .algebra import LieAlgebra


class MetricError(ValueError):
    pass


def structure_tensor(L: LieAlgebra, exact_mode: bool = False) -> np.ndarray:
    n = L.dim
    if exact_mode:
        T = np.full((n, n, n), Fraction(0), dtype=object)
    else:
        T = np.zeros((n, n, n))
    for (i, j, k), c in L.structure.items():
        T[i, j, k] = c if exact_mode else float(c)
        T[j, i, k] = -c if exact_mode else -float(c)
    return T


def as_gram(G, n: int) -> tuple[np.ndarray, bool]:
    """Normalise a Gram matrix to float64 or an object array of Fractions."""
    if G is None:
        return np.eye(n), False
    if np.shape(G) != (n, n):
        raise MetricError(f"expected a {n}x{n} Gram matrix, got shape {np.shape(G)}")
    if isinstance(G, np.ndarray) and G.dtype != object:
        return G.astype(float), False
    arr = np.asarray(G, dtype=object)
    if all(isinstance(x, (Fraction, int)) for x in arr.flat):
        return np.vectorize(Fraction, otypes=[object])(arr), True
    return arr.astype(float), False


def _inverse(G: np.ndarray, exact_mode: bool) -> np.ndarray:
    if exact_mode:
        return np.array(exact.inverse(G.tolist()), dtype=object)
    return np.linalg.inv(G)


def check_positive_definite(G: np.ndarray, exact_mode: bool) -> None:
    n = G.shape[0]
    if exact_mode:
        if any(G[i, j] != G[j, i] for i in range(n) for j in range(n)):
            raise MetricError("Gram matrix is not symmetric")
        # leading principal minors via exact elimination
        M = [list(r) for r in G]
        for k in range(n):
            piv = M[k][k]
            if piv <= 0:
                raise MetricError("Gram matrix is not positive definite")
            for i in range(k + 1, n):
                f = M[i][k] / piv
                for j in range(k, n):
                    M[i][j] -= f * M[k][j]
        return
    if not np.allclose(G, G.T, rtol=0, atol=1e-12 * max(1.0, np.abs(G).max())):
        raise MetricError("Gram matrix is not symmetric")
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise MetricError("Gram matrix is not positive definite") from None


@dataclass
class RicciResult:
    basis: np.ndarray  # operator matrix in the working basis
    frame: np.ndarray | None  # symmetric matrix in the Gram-Schmidt orthonormal frame (floating)
    frame_vectors: np.ndarray | None  # columns: the orthonormal frame in working coordinates


def orthonormal_frame(G: np.ndarray) -> np.ndarray:
    """Gram-Schmidt of the working basis against ``G``; columns are the frame vectors."""
    C = np.linalg.cholesky(np.asarray(G, dtype=float))
    return np.linalg.inv(C).T


def _ricci_form(T: np.ndarray, G: np.ndarray, H: np.ndarray) -> np.ndarray:
    """The bilinear form ``<ric X, Y>`` in working coordinates."""
    W = np.einsum("abk,kx->abx", T, G)
    A = np.einsum("ac,cdy->ady", H, W)
    B = np.einsum("bd,ady->aby", H, A)
    q1 = np.einsum("abx,aby->xy", W, B)
    TG = np.einsum("xak,kl->xal", T, G)
    HT = np.einsum("ac,ycl->yal", H, T)
    q2 = np.einsum("xal,yal->xy", TG, HT)
    return q1 / 4 - q2 / 2


def _ricci_form_sparse(L: LieAlgebra, G: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Same form as :func:`_ricci_form`, looping only over nonzero brackets.

    Rational arithmetic on dense object arrays is dominated by products with
    zero, so the exact path works with the ordered pairs ``(a, b)`` whose
    bracket is nonzero.
    """
    n = L.dim
    zero = Fraction(0)
    br: dict[tuple[int, int], dict[int, Fraction]] = {}
    for (i, j, k), c in L.structure.items():
        br.setdefault((i, j), {})[k] = c
        br.setdefault((j, i), {})[k] = -c
    pairs = list(br)
    # W[(a,b)][x] = <[e_a, e_b], e_x>
    W = [[sum((c * G[k, x] for k, c in br[p].items()), zero) for x in range(n)] for p in pairs]
    q = np.full((n, n), zero, dtype=object)
    for cd_idx, (c, d) in enumerate(pairs):
        S = [zero] * n
        for ab_idx, (a, b) in enumerate(pairs):
            K = H[a, c] * H[b, d]
            if K:
                w = W[ab_idx]
                for x in range(n):
                    if w[x]:
                        S[x] += K * w[x]
        wcd = W[cd_idx]
        for x in range(n):
            if S[x]:
                for y in range(n):
                    if wcd[y]:
                        q[x, y] += S[x] * wcd[y] / 4
    # q2[x,y] = sum_{a,c} H[a,c] <[e_x, e_a], [e_y, e_c]>
    for (x, a), wa in zip(pairs, W):
        for (y, c) in pairs:
            h = H[a, c]
            if h:
                inner = sum((v * wa[l] for l, v in br[(y, c)].items()), zero)
                if inner:
                    q[x, y] -= h * inner / 2
    return q


def ricci_operator(L: LieAlgebra, G=None, *, check: bool = True) -> RicciResult:
    n = L.dim
    G, ex = as_gram(G, n)
    if check:
        check_positive_definite(G, ex)
    H = _inverse(G, ex)
    if ex:
        return RicciResult(H.dot(_ricci_form_sparse(L, G, H)), None, None)
    T = structure_tensor(L, ex)
    q = _ricci_form(T, G, H)
    ric = H.dot(q)
    P = orthonormal_frame(G)
    S = np.linalg.solve(P, ric @ P)
    return RicciResult(ric, (S + S.T) / 2, P)


def bracket_norm_sq(L: LieAlgebra, G=None):
    """``||mu||^2 = sum_{i,j} |mu(E_i, E_j)|^2`` over ordered pairs of an orthonormal frame."""
    G, ex = as_gram(G, L.dim)
    T = structure_tensor(L, ex)
    H = _inverse(G, ex)
    W = np.einsum("abk,kx->abx", T, G)
    A = np.einsum("ac,cdy->ady", H, T)
    B = np.einsum("bd,ady->aby", H, A)
    return np.einsum("abx,abx->", W, B)


def scalar_curvature(L: LieAlgebra, G=None):
    ric = ricci_operator(L, G).basis
    return np.trace(ric)


def derivation_trace_pairing(L: LieAlgebra, G, A) -> Fraction | float:
    """``Tr(ric A)`` evaluated from ``1/4 sum <A[Ei,Ej] - [AEi,Ej] - [Ei,AEj], [Ei,Ej]>``."""
    n = L.dim
    G, ex = as_gram(G, n)
    T = structure_tensor(L, ex)
    H = _inverse(G, ex)
    A = np.asarray(A, dtype=object if ex else float)
    if ex:
        A = np.vectorize(Fraction, otypes=[object])(A)
    # U[a,b,:] = A T[a,b,:] - T[A e_a, e_b] - T[e_a, A e_b]
    U = np.einsum("kl,abl->abk", A, T) - np.einsum("pa,pbk->abk", A, T) - np.einsum("pb,apk->abk", A, T)
    W = np.einsum("abk,kx->abx", U, G)
    Ht = np.einsum("ac,cdy->ady", H, T)
    B = np.einsum("bd,ady->aby", H, Ht)
    return np.einsum("abx,abx->", W, B) / 4


@dataclass
class NilsolitonReport:
    c: float
    residual_rel: float
    phi_used: list
    passed: bool
    flat: bool = False
    tol: float = 1e-9

    def as_dict(self) -> dict:
        return {
            "c": self.c,
            "residual_rel": self.residual_rel,
            "phi_used": [str(x) for x in self.phi_used],
            "pass": self.passed,
            "flat": self.flat,
            "tol": self.tol,
        }


def eigenspaces_orthogonal(G: np.ndarray, phi: Sequence, ex: bool) -> bool:
    n = len(phi)
    scale = 1.0 if ex else max(1.0, float(np.abs(G).max()))
    for i in range(n):
        for j in range(n):
            if phi[i] != phi[j]:
                g = G[i, j]
                if (g != 0) if ex else abs(g) > 1e-12 * scale:
                    return False
    return True


def nilsoliton_verify(L: LieAlgebra, G, phi: Sequence, tol: float = 1e-9) -> NilsolitonReport:
    """Least-squares fit of ``ric = c (id - phi)``; ``phi`` is given by its diagonal entries.

    The fit uses the trace form ``Tr(XY)``, which on self-adjoint operators is
    the Frobenius inner product in any orthonormal frame.
    """
    n = L.dim
    G, ex = as_gram(G, n)
    if not eigenspaces_orthogonal(G, phi, ex):
        raise MetricError("eigenspaces of phi are not orthogonal for this metric")
    ric = ricci_operator(L, G).basis
    if ex:
        K = np.array([[Fraction(int(i == j)) - (phi[i] if i == j else 0) for j in range(n)] for i in range(n)], dtype=object)
    else:
        ric = np.asarray(ric, dtype=float)
        K = np.eye(n) - np.diag([float(x) for x in phi])
    rr = np.trace(ric.dot(ric))
    kk = np.trace(K.dot(K))
    if rr == 0:
        return NilsolitonReport(0.0, 0.0, list(phi), False, flat=True, tol=tol)
    if kk == 0:
        return NilsolitonReport(0.0, 1.0, list(phi), False, tol=tol)
    c = np.trace(ric.dot(K)) / kk
    E = ric - K * c
    res2 = np.trace(E.dot(E)) / rr
    res = float(max(res2, 0)) ** 0.5
    c = float(c)
    return NilsolitonReport(c, res, list(phi), bool(res <= tol and c < 0), tol=tol)
