"""Exact rational linear algebra and LP feasibility.

Matrices are plain lists of rows of :class:`fractions.Fraction`.  Row
reduction works on sparse ``{column: value}`` rows, which keeps the Leibniz
systems of derivation algebras (a few nonzeros per row) cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

Vector = list[Fraction]
Matrix = list[list[Fraction]]
SparseRow = dict[int, Fraction]


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not accepted in exact arithmetic: %r" % x)
    return Fraction(x)


def matrix(rows: Iterable[Iterable]) -> Matrix:
    return [[to_fraction(x) for x in row] for row in rows]


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def zeros(r: int, c: int) -> Matrix:
    return [[Fraction(0)] * c for _ in range(r)]


def transpose(A: Matrix) -> Matrix:
    return [list(col) for col in zip(*A)] if A else []


def matmul(A: Matrix, B: Matrix) -> Matrix:
    Bt = transpose(B)
    return [[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in Bt] for row in A]


def matvec(A: Matrix, v: Sequence[Fraction]) -> Vector:
    return [sum((a * x for a, x in zip(row, v)), Fraction(0)) for row in A]


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def _sparse(row: Sequence[Fraction]) -> SparseRow:
    return {j: to_fraction(x) for j, x in enumerate(row) if x != 0}


class _Reducer:
    """Incremental reduced row echelon form over sparse rows."""

    def __init__(self) -> None:
        self.pivots: dict[int, SparseRow] = {}
        # column -> pivot columns whose rows contain it
        self._users: dict[int, set[int]] = {}

    def reduce(self, row: SparseRow) -> SparseRow:
        row = dict(row)
        todo = sorted(c for c in row if c in self.pivots)
        while todo:
            c = todo.pop(0)
            coef = row.get(c)
            if not coef:
                continue
            for j, v in self.pivots[c].items():
                nv = row.get(j, 0) - coef * v
                if nv:
                    if j not in row and j in self.pivots and j != c:
                        todo.append(j)
                        todo.sort()
                    row[j] = nv
                else:
                    row.pop(j, None)
        return row

    def add(self, row: SparseRow) -> int | None:
        """Insert a row; return its pivot column, or None if dependent."""
        row = self.reduce(row)
        if not row:
            return None
        p = min(row)
        inv = 1 / row[p]
        row = {j: v * inv for j, v in row.items()}
        # back-substitute into existing pivot rows
        for q in list(self._users.get(p, ())):
            prow = self.pivots[q]
            coef = prow.get(p)
            if not coef:
                continue
            for j, v in row.items():
                nv = prow.get(j, 0) - coef * v
                if nv:
                    if j not in prow:
                        self._users.setdefault(j, set()).add(q)
                    prow[j] = nv
                else:
                    prow.pop(j, None)
        self.pivots[p] = row
        for j in row:
            self._users.setdefault(j, set()).add(p)
        return p


def rref(A: Matrix | Sequence[SparseRow], ncols: int | None = None) -> tuple[dict[int, SparseRow], int]:
    """Reduced row echelon form as ``({pivot_col: row}, ncols)``."""
    red = _Reducer()
    width = 0
    for row in A:
        srow = row if isinstance(row, dict) else _sparse(row)
        if not isinstance(row, dict):
            width = max(width, len(row))
        red.add(srow)
    return red.pivots, ncols if ncols is not None else width


def rank(A: Matrix | Sequence[SparseRow]) -> int:
    return len(rref(A)[0])


def kernel(A: Matrix | Sequence[SparseRow], ncols: int | None = None) -> list[Vector]:
    """Exact basis of the null space, one vector per free column."""
    if ncols is None:
        if A and not isinstance(A[0], dict):
            ncols = len(A[0])
        else:
            raise ValueError("ncols is required for sparse or empty input")
    pivots, _ = rref(A, ncols)
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for p, row in pivots.items():
            c = row.get(f)
            if c:
                v[p] = -c
        basis.append(v)
    return basis


@dataclass
class AffineSolutionSet:
    particular: Vector
    kernel_basis: list[Vector] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return len(self.kernel_basis)


@dataclass
class Infeasible:
    """An exact witness ``y`` with ``y.A = 0`` and ``y.b != 0``."""

    row_combination: Vector

    def __bool__(self) -> bool:
        return False


def solve_affine(A: Matrix, b: Sequence) -> AffineSolutionSet | Infeasible:
    m = len(A)
    n = len(A[0]) if A else 0
    b = [to_fraction(x) for x in b]
    # augmented with an identity block to recover the combination on failure
    rows = []
    for i in range(m):
        r = _sparse(A[i])
        if b[i]:
            r[n] = b[i]
        r[n + 1 + i] = Fraction(1)
        rows.append(r)
    pivots, _ = rref(rows, n + 1 + m)
    if n in pivots:
        row = pivots[n]
        y = [row.get(n + 1 + i, Fraction(0)) for i in range(m)]
        return Infeasible(y)
    x = [Fraction(0)] * n
    for p, row in pivots.items():
        if p < n:
            x[p] = row.get(n, Fraction(0))
    return AffineSolutionSet(x, kernel(A, n) if m else [_unit(n, j) for j in range(n)])


def _unit(n: int, j: int) -> Vector:
    v = [Fraction(0)] * n
    v[j] = Fraction(1)
    return v


def inverse(A: Matrix) -> Matrix:
    n = len(A)
    rows = []
    for i in range(n):
        r = _sparse(A[i])
        r[n + i] = Fraction(1)
        rows.append(r)
    pivots, _ = rref(rows, 2 * n)
    if any(p not in pivots for p in range(n)):
        raise ZeroDivisionError("matrix is singular")
    return [[pivots[i].get(n + j, Fraction(0)) for j in range(n)] for i in range(n)]


def project_onto_subspace(v: Sequence, basis: Sequence[Sequence]) -> Vector:
    """Orthogonal projection onto ``span(basis)`` in the standard inner product."""
    v = [to_fraction(x) for x in v]
    if not basis:
        return [Fraction(0)] * len(v)
    B = matrix(basis)
    gram = [[dot(a, b) for b in B] for a in B]
    rhs = [dot(a, v) for a in B]
    sol = solve_affine(gram, rhs)
    if not sol or sol.kernel_basis:
        raise ValueError("projection basis is linearly dependent")
    coef = sol.particular
    return [sum((c * B[k][i] for k, c in enumerate(coef)), Fraction(0)) for i in range(len(v))]


# --- linear programming -------------------------------------------------------


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Vector | None = None
    value: Fraction | None = None
    dual: Vector | None = None


def simplex_max(c: Sequence, A: Matrix, b: Sequence) -> LPResult:
    """Maximise ``c.x`` subject to ``A x = b``, ``x >= 0``.

    Two-phase tableau simplex in exact arithmetic with Bland's rule.  On an
    optimal finish ``dual`` holds ``y`` with ``A^T y >= c`` and ``b.y = value``.
    """
    m = len(A)
    n = len(c)
    c = [to_fraction(x) for x in c]
    b = [to_fraction(x) for x in b]
    T = [[to_fraction(x) for x in row] for row in A]
    flip = [False] * m
    for i in range(m):
        if b[i] < 0:
            T[i] = [-x for x in T[i]]
            b[i] = -b[i]
            flip[i] = True
    # artificials occupy columns n .. n+m-1
    for i in range(m):
        T[i] = T[i] + [Fraction(int(k == i)) for k in range(m)] + [b[i]]
    basis = [n + i for i in range(m)]
    width = n + m

    def pivot(r: int, s: int) -> None:
        inv = 1 / T[r][s]
        T[r] = [x * inv for x in T[r]]
        for i in range(m):
            if i != r and T[i][s]:
                f = T[i][s]
                Ti, Tr = T[i], T[r]
                T[i] = [a - f * q for a, q in zip(Ti, Tr)]
        basis[r] = s

    def run(cost: Vector, allowed: int) -> str:
        while True:
            # reduced costs: cost_j - cost_B . column_j
            enter = None
            for j in range(allowed):
                if j in basis:
                    continue
                rc = cost[j] - sum((cost[basis[i]] * T[i][j] for i in range(m)), Fraction(0))
                if rc > 0:
                    enter = j
                    break
            if enter is None:
                return "optimal"
            best = None
            for i in range(m):
                if T[i][enter] > 0:
                    ratio = T[i][-1] / T[i][enter]
                    if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                return "unbounded"
            pivot(best[1], enter)

    phase1 = [Fraction(0)] * n + [Fraction(-1)] * m
    run(phase1, width)
    infeas = sum((T[i][-1] for i in range(m) if basis[i] >= n), Fraction(0))
    if infeas > 0:
        return LPResult("infeasible")
    # drive remaining (zero-level) artificials out of the basis
    for i in range(m):
        if basis[i] >= n:
            for j in range(n):
                if T[i][j] != 0 and j not in basis:
                    pivot(i, j)
                    break
    cost = c + [Fraction(0)] * m
    status = run(cost, n)
    if status == "unbounded":
        return LPResult("unbounded")
    x = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i][-1]
    # y^T = c_B B^{-1}; B^{-1} sits in the artificial columns
    y = []
    for k in range(m):
        yk = sum((cost[basis[i]] * T[i][n + k] for i in range(m)), Fraction(0))
        y.append(-yk if flip[k] else yk)
    return LPResult("optimal", x, dot(c, x), y)


@dataclass
class PositiveSolution:
    """Outcome of the strict-positivity LP.

    When ``alpha`` is None, ``certificate`` is ``y`` with ``A^T y >= 0``,
    ``b.y <= 0`` and ``(A^T y, b.y) != 0``, which rules out ``A a = b, a > 0``.
    """

    alpha: Vector | None
    t_max: Fraction | None
    certificate: Vector | None = None

    def __bool__(self) -> bool:
        return self.alpha is not None


def check_emptiness_certificate(A: Matrix, b: Sequence, y: Sequence[Fraction]) -> bool:
    yA = [sum((y[i] * A[i][j] for i in range(len(A))), Fraction(0)) for j in range(len(A[0]))]
    yb = dot(y, [to_fraction(x) for x in b])
    if any(v < 0 for v in yA) or yb > 0:
        return False
    return yb < 0 or any(v != 0 for v in yA)


def positive_solution(A: Matrix, b: Sequence) -> PositiveSolution:
    """Find ``a > 0`` with ``A a = b`` or certify that none exists.

    Solves ``max t`` s.t. ``A (beta + t 1) = b``, ``beta >= 0``, ``t <= 1``.
    """
    A = matrix(A)
    b = [to_fraction(x) for x in b]
    m = len(A)
    n = len(A[0])
    rowsum = [sum(row, Fraction(0)) for row in A]
    # columns: beta (n), t+ , t-, slack
    rows = [A[i] + [rowsum[i], -rowsum[i], Fraction(0)] for i in range(m)]
    rows.append([Fraction(0)] * n + [Fraction(1), Fraction(-1), Fraction(1)])
    rhs = b + [Fraction(1)]
    cost = [Fraction(0)] * n + [Fraction(1), Fraction(-1), Fraction(0)]
    res = simplex_max(cost, rows, rhs)
    if res.status == "infeasible":
        sol = solve_affine(A, b)
        assert not sol
        return PositiveSolution(None, None, [-y for y in sol.row_combination])
    assert res.status == "optimal"
    t = res.value
    if t > 0:
        alpha = [res.x[j] + t for j in range(n)]
        return PositiveSolution(alpha, t)
    y = res.dual[:m]
    return PositiveSolution(None, t, y)
