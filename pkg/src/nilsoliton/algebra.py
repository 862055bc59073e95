"""Nilpotent Lie algebras given by exact structure constants."""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import exact
from .exact import Matrix, Vector


class AlgebraError(ValueError):
    pass


class ParseError(AlgebraError):
    pass


class NotNilpotentError(AlgebraError):
    pass


Triple = tuple[int, int, int]


def _default_labels(n: int, q: int) -> tuple[str, ...]:
    return tuple(f"X{i + 1}" for i in range(q)) + tuple(f"Z{a + 1}" for a in range(n - q))


@dataclass(frozen=True)
class LieAlgebra:
    """A Lie algebra on ``R^dim`` with brackets ``[e_i, e_j] = sum_k c[i,j,k] e_k``.

    Only ``i < j`` is stored.  Indices are 0-based.  ``q`` is the number of
    leading generator (``X``) basis vectors; the rest are labelled ``Z``.
    """

    dim: int
    structure: Mapping[Triple, Fraction] = field(default_factory=dict)
    labels: tuple[str, ...] = ()
    q: int | None = None

    def __post_init__(self) -> None:
        clean = {}
        for (i, j, k), c in self.structure.items():
            c = exact.to_fraction(c)
            if not (0 <= i < self.dim and 0 <= j < self.dim and 0 <= k < self.dim):
                raise AlgebraError(f"index out of range in ({i},{j},{k})")
            if i == j:
                if c:
                    raise AlgebraError(f"[e{i+1},e{i+1}] must vanish")
                continue
            if i > j:
                i, j, c = j, i, -c
                if (i, j, k) in clean:
                    raise AlgebraError(f"conflicting entries for ({i},{j},{k})")
            if c:
                clean[(i, j, k)] = c
        object.__setattr__(self, "structure", dict(sorted(clean.items())))
        q = self.dim if self.q is None else self.q
        object.__setattr__(self, "q", q)
        if not self.labels:
            object.__setattr__(self, "labels", _default_labels(self.dim, q))
        elif len(self.labels) != self.dim:
            raise AlgebraError("need one label per basis vector")
        else:
            object.__setattr__(self, "labels", tuple(self.labels))

    # -- access -----------------------------------------------------------

    def c(self, i: int, j: int, k: int) -> Fraction:
        if i < j:
            return self.structure.get((i, j, k), Fraction(0))
        if i > j:
            return -self.structure.get((j, i, k), Fraction(0))
        return Fraction(0)

    def tensor(self) -> list[list[list[Fraction]]]:
        """Dense antisymmetric tensor ``T[i][j][k] = c_ij^k``."""
        n = self.dim
        T = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
        for (i, j, k), c in self.structure.items():
            T[i][j][k] = c
            T[j][i][k] = -c
        return T

    def bracket(self, x: Sequence, y: Sequence) -> Vector:
        out = [Fraction(0)] * self.dim
        for (i, j, k), c in self.structure.items():
            out[k] += c * (x[i] * y[j] - x[j] * y[i])
        return out

    @property
    def is_abelian(self) -> bool:
        return not self.structure

    def relations(self) -> list[tuple[Triple, Fraction]]:
        return list(self.structure.items())

    def __hash__(self) -> int:
        return hash((self.dim, tuple(self.structure.items()), self.labels, self.q))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LieAlgebra):
            return NotImplemented
        return self.dim == other.dim and dict(self.structure) == dict(other.structure)

    def scaled(self, t) -> "LieAlgebra":
        t = exact.to_fraction(t)
        return LieAlgebra(self.dim, {key: c * t for key, c in self.structure.items()}, self.labels, self.q)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        doc = {
            "dim": self.dim,
            "brackets": [
                {"i": i + 1, "j": j + 1, "k": k + 1, "c": str(c)}
                for (i, j, k), c in self.structure.items()
            ],
        }
        if self.q != self.dim:
            doc["q"] = self.q
        if self.labels != _default_labels(self.dim, self.q):
            doc["labels"] = list(self.labels)
        return doc

    @classmethod
    def from_json(cls, doc: Mapping | str) -> "LieAlgebra":
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            n = int(doc["dim"])
            seen = set()
            structure: dict[Triple, Fraction] = {}
            for br in doc.get("brackets", []):
                i, j, k = int(br["i"]) - 1, int(br["j"]) - 1, int(br["k"]) - 1
                c = Fraction(str(br.get("c", "1")))
                if (i, j, k) in seen or (j, i, k) in seen:
                    raise ParseError(f"duplicate bracket ({i+1},{j+1},{k+1})")
                seen.add((i, j, k))
                if i > j:
                    i, j, c = j, i, -c
                structure[(i, j, k)] = c
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed algebra JSON: {exc}") from exc
        L = cls(n, structure, tuple(doc.get("labels", ())), doc.get("q"))
        validate(L)
        return L


# -- relation codes ----------------------------------------------------------------

_TERM = re.compile(r"([+\-−]?)\s*(\d)(\d)(\d)")


def parse_algebra(text: str) -> LieAlgebra:
    """Parse ``"q=5 p=3; 131,153,231,242"`` style relation codes.

    A term ``ija`` means ``[X_i, X_j] = Z_a`` (signed terms may be chained,
    ``-153-154`` is ``[X_1,X_5] = -Z_3 - Z_4``).  JSON input is also accepted.
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        return LieAlgebra.from_json(stripped)
    if ";" in stripped:
        header, body = stripped.split(";", 1)
    elif "=" in stripped.split(",")[0]:
        header, body = stripped, ""
    else:
        header, body = "", stripped
    q = p = None
    labels: tuple[str, ...] = ()
    for tok in header.split():
        key, _, val = tok.partition("=")
        if key == "q":
            q = int(val)
        elif key == "p":
            p = int(val)
        elif key == "labels":
            labels = tuple(val.split(","))
        else:
            raise ParseError(f"unknown header field {tok!r}")
    body = body.strip()
    terms: list[tuple[int, int, int, int]] = []
    if body and body != "(empty)":
        for item in body.split(","):
            item = item.strip()
            pos = 0
            found = False
            for m in _TERM.finditer(item):
                if item[pos:m.start()].strip():
                    raise ParseError(f"cannot read relation {item!r}")
                pos = m.end()
                sign = -1 if m.group(1) in ("-", "−") else 1
                terms.append((sign, int(m.group(2)), int(m.group(3)), int(m.group(4))))
                found = True
            if not found or item[pos:].strip():
                raise ParseError(f"cannot read relation {item!r}")
    if q is None:
        q = max((max(i, j) for _, i, j, _ in terms), default=0)
    if p is None:
        p = max((a for *_, a in terms), default=0)
    structure: dict[Triple, Fraction] = {}
    seen = set()
    for sign, i, j, a in terms:
        if not (1 <= i <= q and 1 <= j <= q):
            raise ParseError(f"generator index out of range in {i}{j}{a} (q={q})")
        if not 1 <= a <= p:
            raise ParseError(f"derived index out of range in {i}{j}{a} (p={p})")
        if i == j:
            raise ParseError(f"[X{i},X{i}] cannot be nonzero")
        key = (min(i, j), max(i, j), a)
        if key in seen:
            raise ParseError(f"duplicate relation for [X{key[0]},X{key[1]}] -> Z{a}")
        seen.add(key)
        c = Fraction(sign if i < j else -sign)
        structure[(key[0] - 1, key[1] - 1, q + a - 1)] = c
    L = LieAlgebra(q + p, structure, labels, q)
    validate(L)
    return L


def load_algebra(path: str) -> LieAlgebra:
    with open(path, encoding="utf-8") as fh:
        return parse_algebra(fh.read())


def abelian(n: int) -> LieAlgebra:
    return LieAlgebra(n, {})


def heisenberg(k: int = 1) -> LieAlgebra:
    """The ``(2k+1)``-dimensional Heisenberg algebra."""
    return LieAlgebra(2 * k + 1, {(2 * i, 2 * i + 1, 2 * k): Fraction(1) for i in range(k)}, q=2 * k)


def free_two_step(m: int) -> LieAlgebra:
    pairs = list(itertools.combinations(range(m), 2))
    return LieAlgebra(m + len(pairs), {(i, j, m + a): Fraction(1) for a, (i, j) in enumerate(pairs)}, q=m)


# -- checks ------------------------------------------------------------------------


@dataclass
class JacobiVerdict:
    ok: bool
    worst_triple: tuple[int, int, int] | None = None
    residual: Vector | None = None

    def __bool__(self) -> bool:
        return self.ok


def jacobi_check(L: LieAlgebra) -> JacobiVerdict:
    """Exact Jacobi test; reports the triple with the largest residual."""
    n = L.dim
    T = L.tensor()
    worst = None
    worst_size = Fraction(0)
    # [[ei,ej],ek] + [[ej,ek],ei] + [[ek,ei],ej]
    for i, j, k in itertools.combinations(range(n), 3):
        res = [Fraction(0)] * n
        for a in range(n):
            if T[i][j][a]:
                for b in range(n):
                    res[b] += T[i][j][a] * T[a][k][b]
            if T[j][k][a]:
                for b in range(n):
                    res[b] += T[j][k][a] * T[a][i][b]
            if T[k][i][a]:
                for b in range(n):
                    res[b] += T[k][i][a] * T[a][j][b]
        size = sum(abs(x) for x in res)
        if size > worst_size:
            worst, worst_size, worst_res = (i, j, k), size, res
    if worst is None:
        return JacobiVerdict(True)
    return JacobiVerdict(False, worst, worst_res)


@dataclass(frozen=True)
class Subspace:
    ambient_dim: int
    basis: tuple[tuple[Fraction, ...], ...]  # rows are spanning vectors

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def basis_matrix(self) -> Matrix:
        """Columns span the subspace."""
        return exact.transpose([list(v) for v in self.basis]) if self.basis else []

    @classmethod
    def span(cls, n: int, vectors: Iterable[Sequence]) -> "Subspace":
        pivots, _ = exact.rref([list(v) for v in vectors], n)
        rows = [tuple(row.get(j, Fraction(0)) for j in range(n)) for _, row in sorted(pivots.items())]
        return cls(n, tuple(rows))

    def contains(self, v: Sequence) -> bool:
        return exact.rank([list(b) for b in self.basis] + [list(v)]) == self.dim


def _bracket_space(L: LieAlgebra, A: Subspace, B: Subspace) -> Subspace:
    vecs = [L.bracket(a, b) for a in A.basis for b in B.basis]
    return Subspace.span(L.dim, vecs)


def full_space(n: int) -> Subspace:
    return Subspace.span(n, exact.identity(n))


def derived_subalgebra(L: LieAlgebra) -> Subspace:
    return Subspace.span(L.dim, [L.bracket(_e(L.dim, i), _e(L.dim, j))
                                 for i, j in itertools.combinations(range(L.dim), 2)])


def lower_central_series(L: LieAlgebra) -> list[Subspace]:
    """``n = C^0 > C^1 = [n,n] > C^2 = [n,C^1] > ... > 0``."""
    whole = full_space(L.dim)
    series = [whole]
    while series[-1].dim:
        nxt = _bracket_space(L, whole, series[-1])
        if nxt.dim == series[-1].dim:
            raise NotNilpotentError(f"lower central series stabilises at dimension {nxt.dim}")
        series.append(nxt)
    return series


def nilpotency_class(L: LieAlgebra) -> int:
    return len(lower_central_series(L)) - 1


def center(L: LieAlgebra) -> Subspace:
    n = L.dim
    T = L.tensor()
    # x in z  iff  sum_i x_i c_ij^k = 0 for all j, k
    rows = [[T[i][j][k] for i in range(n)] for j in range(n) for k in range(n)]
    rows = [r for r in rows if any(r)]
    return Subspace.span(n, exact.kernel(rows, n) if rows else exact.identity(n))


def _e(n: int, i: int) -> Vector:
    v = [Fraction(0)] * n
    v[i] = Fraction(1)
    return v


def validate(L: LieAlgebra) -> None:
    verdict = jacobi_check(L)
    if not verdict:
        a, b, c = verdict.worst_triple
        raise NotNilpotentError(f"Jacobi identity fails on ({L.labels[a]},{L.labels[b]},{L.labels[c]})")
    lower_central_series(L)


# -- constructions -----------------------------------------------------------------


def direct_sum(L1: LieAlgebra, L2: LieAlgebra) -> LieAlgebra:
    """Direct sum ordered as ``X(L1), X(L2), Z(L1), Z(L2)``."""
    q1, q2 = L1.q, L2.q
    p1 = L1.dim - q1
    n = L1.dim + L2.dim

    def pos1(i: int) -> int:
        return i if i < q1 else q1 + q2 + (i - q1)

    def pos2(i: int) -> int:
        return q1 + i if i < q2 else q1 + q2 + p1 + (i - q2)

    structure = {}
    for (i, j, k), c in L1.structure.items():
        structure[(pos1(i), pos1(j), pos1(k))] = c
    for (i, j, k), c in L2.structure.items():
        structure[(pos2(i), pos2(j), pos2(k))] = c
    return LieAlgebra(n, structure, q=q1 + q2)


def direct_sum_permutation(L1: LieAlgebra, L2: LieAlgebra) -> list[int]:
    """Row ``r`` of the sum basis comes from index ``perm[r]`` of the block-concatenated basis."""
    q1, q2 = L1.q, L2.q
    n1 = L1.dim
    order = list(range(q1)) + [n1 + i for i in range(q2)] + list(range(q1, n1)) + [n1 + i for i in range(q2, L2.dim)]
    return order


def change_basis(L: LieAlgebra, M: Matrix) -> LieAlgebra:
    """The bracket ``M.mu(X, Y) = M mu(M^-1 X, M^-1 Y)``."""
    n = L.dim
    M = exact.matrix(M)
    try:
        Minv = exact.inverse(M)
    except ZeroDivisionError:
        raise AlgebraError("change of basis matrix is singular") from None
    out = {}
    cols = [[Minv[i][a] for i in range(n)] for a in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            x, y = cols[a], cols[b]
            br = L.bracket(x, y)
            if any(br):
                v = exact.matvec(M, br)
                for k in range(n):
                    if v[k]:
                        out[(a, b, k)] = v[k]
    return LieAlgebra(n, out, L.labels, L.q)


# -- derivations -------------------------------------------------------------------


@dataclass(frozen=True)
class Derivation:
    matrix: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def of(cls, rows: Iterable[Iterable]) -> "Derivation":
        return cls(tuple(tuple(exact.to_fraction(x) for x in r) for r in rows))

    def as_list(self) -> Matrix:
        return [list(r) for r in self.matrix]

    @property
    def trace(self) -> Fraction:
        return sum((self.matrix[i][i] for i in range(len(self.matrix))), Fraction(0))


def leibniz_rows(L: LieAlgebra) -> list[dict[int, Fraction]]:
    """Sparse rows of the linear system ``D in Der(L)`` in the unknowns ``D[r][s] -> r*n+s``."""
    n = L.dim
    T = L.tensor()
    # support[a][b] = list of (k, c) with c = c_ab^k != 0
    rows = []
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                row: dict[int, Fraction] = {}

                def add(idx: int, val: Fraction) -> None:
                    v = row.get(idx, 0) + val
                    if v:
                        row[idx] = v
                    else:
                        row.pop(idx, None)

                # D [e_i, e_j]  component k
                for m in range(n):
                    if T[i][j][m]:
                        add(k * n + m, T[i][j][m])
                # - [D e_i, e_j] - [e_i, D e_j]
                for l in range(n):
                    if T[l][j][k]:
                        add(l * n + i, -T[l][j][k])
                    if T[i][l][k]:
                        add(l * n + j, -T[i][l][k])
                if row:
                    rows.append(row)
    return rows


def is_derivation(L: LieAlgebra, D: Sequence[Sequence]) -> bool:
    n = L.dim
    D = exact.matrix(D)
    flat = [D[r][s] for r in range(n) for s in range(n)]
    return all(sum((v * flat[idx] for idx, v in row.items()), Fraction(0)) == 0 for row in leibniz_rows(L))


def derivation_algebra(L: LieAlgebra) -> list[Derivation]:
    """Exact basis of ``Der(L)``."""
    n = L.dim
    basis = exact.kernel(leibniz_rows(L), n * n)
    return [Derivation.of([v[r * n:(r + 1) * n] for r in range(n)]) for v in basis]
