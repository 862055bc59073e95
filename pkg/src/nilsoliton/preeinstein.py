"""Pre-Einstein derivations and the necessary conditions ``phi > 0``, ``ad_phi >= 0``."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import exact
from .algebra import Derivation, LieAlgebra, Subspace, derivation_algebra, direct_sum, direct_sum_permutation
from .exact import Vector


class UnsupportedBasis(Exception):
    """The working basis does not diagonalise a torus holding the pre-Einstein derivation."""


def diagonal_constraint_rows(L: LieAlgebra) -> list[Vector]:
    rows = []
    for (i, j, k) in L.structure:
        r = [Fraction(0)] * L.dim
        r[i] += 1
        r[j] += 1
        r[k] -= 1
        rows.append(r)
    return rows


def diagonal_derivation_space(L: LieAlgebra) -> Subspace:
    """Vectors ``v`` whose diagonal matrix is a derivation."""
    rows = diagonal_constraint_rows(L)
    if not rows:
        return Subspace.span(L.dim, exact.identity(L.dim))
    return Subspace.span(L.dim, exact.kernel(rows, L.dim))


@dataclass
class PreEinsteinResult:
    phi: list[Fraction]  # diagonal entries
    der_basis: list[Derivation] = field(repr=False)
    verified: bool = True

    @property
    def eigenvalue_type(self) -> list[tuple[Fraction, int]]:
        counts = Counter(self.phi)
        return sorted(counts.items())

    @property
    def integer_type(self) -> tuple[list[int], list[int]]:
        """Eigenvalues scaled to coprime integers, with multiplicities."""
        vals = [lam for lam, _ in self.eigenvalue_type]
        mult = [d for _, d in self.eigenvalue_type]
        return integer_profile(vals), mult

    def matrix(self) -> list[list[Fraction]]:
        n = len(self.phi)
        return [[self.phi[i] if i == j else Fraction(0) for j in range(n)] for i in range(n)]


def integer_profile(vals: Sequence[Fraction]) -> list[int]:
    if not any(vals):
        return [0] * len(vals)
    den = math.lcm(*(v.denominator for v in vals))
    ints = [int(v * den) for v in vals]
    g = math.gcd(*ints)
    return [x // g for x in ints]


def _trace_condition_failures(phi: Sequence[Fraction], der: Sequence[Derivation]) -> list[int]:
    bad = []
    for idx, psi in enumerate(der):
        M = psi.matrix
        lhs = sum((phi[i] * M[i][i] for i in range(len(phi))), Fraction(0))
        if lhs != psi.trace:
            bad.append(idx)
    return bad


def verify_pre_einstein(L: LieAlgebra, phi: Sequence, der: Sequence[Derivation] | None = None) -> bool:
    """``phi`` (diagonal entries) is a derivation with ``Tr(phi psi) = Tr psi`` on all of ``Der(L)``."""
    phi = [exact.to_fraction(x) for x in phi]
    for (i, j, k) in L.structure:
        if phi[i] + phi[j] != phi[k]:
            return False
    if der is None:
        der = derivation_algebra(L)
    return not _trace_condition_failures(phi, der)


def pre_einstein_diagonal(L: LieAlgebra, der: Sequence[Derivation] | None = None) -> PreEinsteinResult:
    """Project ``[1]_n`` onto the diagonal derivations and verify on all of ``Der(L)``.

    Raises :class:`UnsupportedBasis` when the candidate fails the full check.
    """
    space = diagonal_derivation_space(L)
    ones = [Fraction(1)] * L.dim
    phi = exact.project_onto_subspace(ones, [list(v) for v in space.basis])
    if der is None:
        der = derivation_algebra(L)
    bad = _trace_condition_failures(phi, der)
    if bad:
        raise UnsupportedBasis(
            f"diagonal candidate fails the trace condition on {len(bad)} of {len(der)} derivations"
        )
    return PreEinsteinResult(phi, list(der))


@dataclass
class AdPhiSpectrum:
    pairs: list[tuple[Fraction, int]]
    phi_positive: bool
    witness: Derivation | None = None  # element of Der in the most negative eigenspace

    @property
    def min_eigenvalue(self) -> Fraction | None:
        return min((lam for lam, _ in self.pairs), default=None)

    @property
    def ad_phi_nonneg(self) -> bool:
        return self.min_eigenvalue is None or self.min_eigenvalue >= 0

    @property
    def gate_passed(self) -> bool:
        return self.phi_positive and self.ad_phi_nonneg


def ad_phi_spectrum(L: LieAlgebra, phi: Sequence, der: Sequence[Derivation] | None = None) -> AdPhiSpectrum:
    """Spectrum of ``ad_phi`` on ``Der(L)`` for diagonal ``phi``.

    ``ad_phi`` scales the matrix unit ``E_rs`` by ``phi_r - phi_s``; since
    ``Der(L)`` is ``ad_phi``-stable it splits along these eigenspaces.
    """
    phi = [exact.to_fraction(x) for x in phi]
    n = len(phi)
    if der is None:
        der = derivation_algebra(L)
    groups: dict[Fraction, list[tuple[int, int]]] = {}
    for r in range(n):
        for s in range(n):
            groups.setdefault(phi[r] - phi[s], []).append((r, s))
    pairs = []
    witness = None
    for lam in sorted(groups):
        cells = groups[lam]
        rows = [[psi.matrix[r][s] for r, s in cells] for psi in der]
        pivots, _ = exact.rref(rows, len(cells))
        d = len(pivots)
        if d:
            pairs.append((lam, d))
            if witness is None and lam < 0:
                # sparsest reduced row: the simplest element of the eigenspace
                row = min(pivots.values(), key=lambda r: (len(r), min(r)))
                M = [[Fraction(0)] * n for _ in range(n)]
                for col, v in row.items():
                    r, s = cells[col]
                    M[r][s] = v
                witness = Derivation.of(M)
    assert sum(d for _, d in pairs) == len(der)
    return AdPhiSpectrum(pairs, all(x > 0 for x in phi), witness)


def pre_einstein_of_sum(L1: LieAlgebra, R1: PreEinsteinResult, L2: LieAlgebra, R2: PreEinsteinResult):
    """Pre-Einstein derivation of ``direct_sum(L1, L2)`` from those of the summands."""
    S = direct_sum(L1, L2)
    perm = direct_sum_permutation(L1, L2)
    concat = list(R1.phi) + list(R2.phi)
    phi = [concat[perm[r]] for r in range(S.dim)]
    der = derivation_algebra(S)
    if not verify_pre_einstein(S, phi, der):
        raise AssertionError("block pre-Einstein derivation failed verification on the direct sum")
    return S, PreEinsteinResult(phi, der)


# -- the rationality formula ---------------------------------------------------------


class RankDeficient(Exception):
    pass


def eigenvalue_relations(vals: Sequence[Fraction]) -> list[Vector]:
    """All vectors ``f_i + f_j - f_k`` (``i <= j``) with ``l_i + l_j = l_k``."""
    p = len(vals)
    out = []
    for i in range(p):
        for j in range(i, p):
            for k in range(p):
                if vals[i] + vals[j] == vals[k]:
                    v = [Fraction(0)] * p
                    v[i] += 1
                    v[j] += 1
                    v[k] -= 1
                    out.append(v)
    return out


def rational_spectrum_projection(mult: Sequence[int], relations: Sequence[Sequence]) -> Vector:
    """``l = [1]_p - D^-1 F (F^t D^-1 F)^-1 [1]_m`` with ``F`` a maximal independent set of relations."""
    p = len(mult)
    ones = [Fraction(1)] * p
    # keep a maximal linearly independent subset of the relation vectors
    cols: list[Vector] = []
    for rel in relations:
        rel = [exact.to_fraction(x) for x in rel]
        if exact.rank(cols + [rel]) > len(cols):
            cols.append(rel)
    if not cols:
        return ones
    Dinv = [Fraction(1, d) for d in mult]
    m = len(cols)
    gram = [[sum((cols[a][i] * Dinv[i] * cols[b][i] for i in range(p)), Fraction(0)) for b in range(m)] for a in range(m)]
    sol = exact.solve_affine(gram, [Fraction(1)] * m)
    if not sol or sol.kernel_basis:
        raise RankDeficient("F^t D^-1 F is singular")
    x = sol.particular
    return [1 - Dinv[i] * sum((cols[a][i] * x[a] for a in range(m)), Fraction(0)) for i in range(p)]


def spectrum_cross_check(result: PreEinsteinResult) -> bool:
    vals = [lam for lam, _ in result.eigenvalue_type]
    mult = [d for _, d in result.eigenvalue_type]
    return rational_spectrum_projection(mult, eigenvalue_relations(vals)) == vals
