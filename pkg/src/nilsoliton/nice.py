"""Algebras with a nice basis: the ``YY^t alpha = 1`` test and its convex-hull twin.

A basis is *nice* when every bracket ``[X_i, X_j]`` is a multiple of a single
basis vector and, for fixed ``i`` and ``k``, at most one ``j`` has
``c_ij^k != 0``.  On such a basis the Ricci operator of a diagonal metric is
diagonal, and the Einstein-nilradical question reduces to linear algebra
over the point set ``F = {f_i + f_j - f_k}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from . import exact
from .algebra import LieAlgebra
from .exact import Matrix, Vector


class Verdict(str, Enum):
    EINSTEIN = "EinsteinNilradical"
    NOT_EINSTEIN = "NotEinsteinNilradical"
    NOT_NICE = "NotNice"
    UNDECIDED = "Undecided"


class NotApplicable(Exception):
    pass


@dataclass
class NiceVerdict:
    nice: bool
    offending: tuple | None = None  # ("ij", i, j, ks) or ("ik", i, k, js)
    reason: str = ""

    def __bool__(self) -> bool:
        return self.nice


def is_nice(L: LieAlgebra) -> NiceVerdict:
    targets: dict[tuple[int, int], list[int]] = {}
    partners: dict[tuple[int, int], list[int]] = {}
    for (i, j, k) in L.structure:
        targets.setdefault((i, j), []).append(k)
        # ordered pairs: (i, k) sees j and (j, k) sees i
        partners.setdefault((i, k), []).append(j)
        partners.setdefault((j, k), []).append(i)
    for (i, j), ks in sorted(targets.items()):
        if len(ks) > 1:
            return NiceVerdict(False, ("ij", i, j, tuple(sorted(ks))),
                               f"[{L.labels[i]},{L.labels[j]}] has {len(ks)} components")
    for (i, k), js in sorted(partners.items()):
        if len(js) > 1:
            return NiceVerdict(False, ("ik", i, k, tuple(sorted(js))),
                               f"{L.labels[i]} brackets into {L.labels[k]} with {len(js)} partners")
    for (i, j, k) in L.structure:
        if k in (i, j):
            return NiceVerdict(False, ("ij", i, j, (k,)), "bracket lands on one of its arguments")
    return NiceVerdict(True)


@dataclass
class NiceCertificate:
    lambda_set: list[tuple[int, int, int]]
    Y: Matrix
    alpha: Vector | None = None
    verdict: Verdict = Verdict.UNDECIDED
    phi: Vector | None = None
    certificate: Vector | None = None  # Farkas-type vector when alpha is absent
    rank_Y: int = 0

    @property
    def m(self) -> int:
        return len(self.lambda_set)

    def as_dict(self) -> dict:
        fmt = lambda v: None if v is None else [str(x) for x in v]  # noqa: E731
        return {
            "nice": self.verdict != Verdict.NOT_NICE,
            "m": self.m,
            "rankY": self.rank_Y,
            "verdict": self.verdict.value,
            "alpha": fmt(self.alpha),
            "phi": fmt(self.phi),
            "certificate": fmt(self.certificate),
        }


def build_Y(L: LieAlgebra) -> NiceCertificate:
    v = is_nice(L)
    if not v:
        raise NotApplicable(f"basis is not nice: {v.reason}")
    if L.is_abelian:
        raise NotApplicable("abelian algebra has no brackets (m = 0)")
    triples = sorted(L.structure)
    Y = []
    for (i, j, k) in triples:
        row = [Fraction(0)] * L.dim
        row[i] += 1
        row[j] += 1
        row[k] -= 1
        Y.append(row)
    return NiceCertificate(triples, Y, rank_Y=exact.rank(Y))


def _gram(Y: Matrix) -> Matrix:
    return [[exact.dot(a, b) for b in Y] for a in Y]


def nice_test(L: LieAlgebra) -> NiceCertificate:
    if not is_nice(L):
        return NiceCertificate([], [], verdict=Verdict.NOT_NICE)
    cert = build_Y(L)
    m = cert.m
    sol = exact.positive_solution(_gram(cert.Y), [Fraction(1)] * m)
    n = L.dim
    if sol:
        cert.alpha = sol.alpha
        cert.verdict = Verdict.EINSTEIN
        yt_alpha = exact.matvec(exact.transpose(cert.Y), sol.alpha)
    else:
        cert.verdict = Verdict.NOT_EINSTEIN
        cert.certificate = sol.certificate
        # any solution of the (always consistent) system gives the same Y^t alpha
        affine = exact.solve_affine(_gram(cert.Y), [Fraction(1)] * m)
        yt_alpha = exact.matvec(exact.transpose(cert.Y), affine.particular)
    cert.phi = [1 - yt_alpha[i] for i in range(n)]
    return cert


def affine_projection_of_origin(points: Matrix) -> Vector:
    """Closest point to the origin in the affine span of ``points``."""
    base = points[0]
    dirs = [[p[i] - base[i] for i in range(len(base))] for p in points[1:]]
    pivots, _ = exact.rref(dirs, len(base)) if dirs else ({}, len(base))
    basis = [[row.get(c, Fraction(0)) for c in range(len(base))] for _, row in sorted(pivots.items())]
    shift = exact.project_onto_subspace(base, basis)
    return [base[i] - shift[i] for i in range(len(base))]


@dataclass
class HullVerdict:
    interior: bool
    P: Vector
    weights: Vector | None = None

    @property
    def verdict(self) -> Verdict:
        return Verdict.EINSTEIN if self.interior else Verdict.NOT_EINSTEIN


def convex_hull_test(L: LieAlgebra) -> HullVerdict:
    """Whether ``P`` lies in the relative interior of ``Conv(F)``."""
    cert = build_Y(L)
    P = affine_projection_of_origin(cert.Y)
    m, n = cert.m, L.dim
    A = [[cert.Y[a][i] for a in range(m)] for i in range(n)] + [[Fraction(1)] * m]
    sol = exact.positive_solution(A, P + [Fraction(1)])
    return HullVerdict(bool(sol), P, sol.alpha)


def closed_form_nilsoliton(L: LieAlgebra, cert: NiceCertificate | None = None) -> list[float]:
    """Diagonal nilsoliton ``r`` with ``X_i / r_i`` orthonormal.

    Solves ``(Y s)_a = log(|c_a| / sqrt(alpha_a))`` and returns ``r = exp(s)``;
    the resulting metric satisfies ``ric = -1/2 (id - phi)``.
    """
    if L.is_abelian:
        raise NotApplicable("abelian algebra (m = 0)")
    if cert is None:
        cert = nice_test(L)
    if cert.verdict != Verdict.EINSTEIN:
        raise NotApplicable(f"verdict is {cert.verdict.value}")
    if cert.rank_Y != cert.m:
        raise NotApplicable("Y is rank deficient")
    rhs = np.array([
        math.log(abs(float(L.structure[t]))) - 0.5 * math.log(float(a))
        for t, a in zip(cert.lambda_set, cert.alpha)
    ])
    Y = np.array(cert.Y, dtype=float)
    s, *_ = np.linalg.lstsq(Y, rhs, rcond=None)
    return list(np.exp(s))


def diagonal_gram(r) -> np.ndarray | list:
    """Gram matrix ``diag(r_i^2)`` of the metric with ``X_i / r_i`` orthonormal."""
    if all(isinstance(x, (Fraction, int)) for x in r):
        n = len(r)
        return [[Fraction(r[i]) ** 2 if i == j else Fraction(0) for j in range(n)] for i in range(n)]
    return np.diag(np.asarray(r, dtype=float) ** 2)


def diagonal_ricci(L: LieAlgebra, r) -> list:
    """Diagonal entries of ``ric`` for ``X_i / r_i`` orthonormal: ``-1/2 Y^t beta``."""
    if any(x == 0 for x in r):
        raise ValueError("r has a zero entry")
    if L.is_abelian:
        return [0] * L.dim
    cert = build_Y(L)
    exact_mode = all(isinstance(x, (Fraction, int)) for x in r)
    if exact_mode:
        r = [Fraction(x) for x in r]
    else:
        r = [float(x) for x in r]
    out = [Fraction(0) if exact_mode else 0.0] * L.dim
    for (i, j, k), row in zip(cert.lambda_set, cert.Y):
        c = L.structure[(i, j, k)]
        c = c if exact_mode else float(c)
        beta = (c * r[k] / (r[i] * r[j])) ** 2
        for col in (i, j, k):
            out[col] -= beta * row[col] / 2
    return out
