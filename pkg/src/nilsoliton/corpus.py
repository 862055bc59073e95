"""Bundled algebras, including the two-step algebras with printed nilsoliton bases.

Each table entry stores its relation code and the orthonormal basis of a
nilsoliton inner product, written as linear combinations of ``X_i`` and
``Z_a`` with coefficients built from rationals and square roots.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .algebra import LieAlgebra, abelian, direct_sum, free_two_step, heisenberg, parse_algebra


# (id, relation code, orthonormal basis)
TABLE_1 = [
    ("26", "133,152,233,244,251,341",
     ["-1/sqrt(3)*(2*X1-X2)", "sqrt(2)/sqrt(3)*X2", "X3", "X4", "X5",
      "Z3", "Z4", "-sqrt(3)/sqrt(10)*(Z1+2*Z2)", "sqrt(3)/sqrt(2)*Z2"]),
    ("28", "134,143,152,233,242,251,342",
     ["2*sqrt(3)*X1", "-2*X2+X3", "sqrt(6)*X3", "sqrt(6)*X4", "X5",
      "Z4", "Z3", "1/sqrt(2)*Z2", "1/sqrt(30)*Z1"]),
    ("44", "124,143,152,232,242,351",
     ["sqrt(6)*X1", "sqrt(6)*X2", "-2*X3+X4", "sqrt(6)*X4", "X5",
      "Z4", "Z3", "Z2", "1/sqrt(15)*Z1"]),
    ("45", "123,142,151,232,243,344",
     ["1/sqrt(6)*(2*X1+X4)", "2*X2", "X3", "X4", "sqrt(5/2)*X5",
      "Z4", "2*Z3", "2*Z2", "Z1"]),
    ("55", "124,132,142,243,351",
     ["X1", "X2", "1/sqrt(6)*(-2*X3+X4)", "X4", "X5",
      "Z4", "Z3", "Z2", "sqrt(2/5)*Z1"]),
    ("60", "124,132,143,232,251,341",
     ["1/sqrt(2)*(-2*X1+X2)", "sqrt(3/2)*X2", "X3", "X4", "X5",
      "sqrt(3)*Z4", "Z3", "Z2", "Z1"]),
    ("66", "124,131,153,231,242",
     ["-2*X1+X2", "sqrt(3)*X2", "X3", "X4", "X5",
      "sqrt(12)*Z4", "Z3", "Z2", "Z1"]),
    ("72", "132,143,232,251,341",
     ["X1+X2", "sqrt(3)*(X1-X2)", "X3", "X4", "X5", "Z3", "Z1", "Z2"]),
    ("78", "131,153,231,242",
     ["X1+X2", "sqrt(3)*(X1-X2)", "X3", "X4", "X5", "Z1", "Z2", "Z3"]),
]

TABLE_2 = [
    ("26*", "-251,341,-132,232,123,144,355,456",
     ["-sqrt(3)/sqrt(91)*(26*X1+19*X2)", "-3*sqrt(209)/sqrt(91)*X2", "12*sqrt(19)/7*X3",
      "11/6*X4", "sqrt(22)/sqrt(3)*X5",
      "Z1", "6*sqrt(6)/sqrt(77)*Z2", "Z3", "sqrt(627)/(16*sqrt(14))*Z4", "Z5",
      "77/(72*sqrt(19))*Z6"]),
    ("28*", "121,-153-154,232,-142,243,344,355,456",
     ["8*sqrt(266)/sqrt(5)*X1", "12*sqrt(57)/sqrt(145)*X2", "1/sqrt(29)*(9*X2+29*X3)", "X4",
      "sqrt(3)/(2*sqrt(14))*X5",
      "16*sqrt(14)/5*Z1", "4*sqrt(2)/sqrt(5)*Z2", "4*sqrt(6)/sqrt(145)*Z3",
      "1/(19*sqrt(29))*(-9*Z3+29*Z4)", "sqrt(3)/(10*sqrt(7))*Z5", "sqrt(3)/(16*sqrt(266))*Z6"]),
    ("44*", "131,-152-153,232,243,254,345,456",
     ["2*sqrt(199)/(3*sqrt(145))*X1", "1/sqrt(29)*X2", "sqrt(2)/(3*sqrt(2805))*(X3+33/58*X4)",
      "1/29*X4", "1/sqrt(5771)*X5",
      "Z6", "398*sqrt(2)/(3*sqrt(33))*Z1", "10*sqrt(34)/sqrt(33)*Z2",
      "-sqrt(65)/78*(154*Z2+199*Z3)", "5*sqrt(17)/sqrt(23)*Z4", "2*sqrt(995)/sqrt(1353)*Z5"]),
    ("45*", "-141,231,-122,242,133,254,355,456",
     ["13*X1-8*X4", "2/5*X2", "260*X3", "12*X4", "X5",
      "sqrt(130)*Z1", "1/sqrt(10)*Z2", "65*sqrt(10)*Z3", "1/(10*sqrt(13))*Z4",
      "5*sqrt(13)*Z5", "Z6"]),
    ("55*", "-131,141,152,233,254,345,456",
     ["X1", "X2", "1/(2*sqrt(6))*(17*X3+12*X4)", "sqrt(11)*X4", "X5",
      "sqrt(34)/(2*sqrt(3))*Z1", "sqrt(5)/sqrt(7)*Z2", "sqrt(34)/(2*sqrt(3))*Z3",
      "sqrt(5)/sqrt(7)*Z4", "17*sqrt(55)/(2*sqrt(39))*Z5", "sqrt(17)*Z6"]),
    ("60*", "-251,341,-132,232,153,244,355,456",
     ["sqrt(19)*(2*X1+X2)", "3*sqrt(3)*X2", "4*X3", "sqrt(33)*X4", "sqrt(22)*X5",
      "Z1", "4/sqrt(33)*Z2", "sqrt(19)/sqrt(51)*(-Z1+2*Z3)", "Z4", "4/sqrt(33)*Z5", "Z6"]),
    ("66*", "-131,231,452,143,254,345,356",
     ["1/sqrt(2)*(2*X1+X2)", "sqrt(3)/sqrt(2)*X2", "X3", "X4", "X5",
      "Z1", "Z2", "Z3", "Z4", "Z5", "Z6"]),
    ("72*", "-131,231,-252,342,123,154,245,356,457",
     ["4*X1+2*X2", "sqrt(19)/sqrt(2)*X2", "1/3*X3", "sqrt(11)*X4", "1/sqrt(57)*X5",
      "Z1", "Z2", "12*sqrt(19)/sqrt(29)*Z3", "2*sqrt(6)/(5*sqrt(19))*(Z2-2*Z4)",
      "3*sqrt(11)*Z5", "sqrt(2)/sqrt(1311)*Z6", "sqrt(66)/sqrt(437)*Z7"]),
    ("78*", "-131,231,122,143,254,345,356,457",
     ["-2*sqrt(3)*(X1+X2)", "2*(X1-X2)", "sqrt(14)*X3", "sqrt(51)*X4", "sqrt(51)*X5",
      "sqrt(14)/sqrt(51)*Z1", "4*sqrt(2)/(3*sqrt(17))*Z2", "Z3", "Z4", "Z5", "Z6",
      "sqrt(51)/sqrt(14)*Z7"]),
]

TABLE_ENTRIES = TABLE_1 + TABLE_2

# Printed basis vectors that do not give a nilsoliton, with replacements that do.
# Keyed by entry id, then by position in the basis list.  #28* has no known
# repair; see ``TableEntry.corrected_basis``.
CORRECTIONS: dict[str, dict[int, str]] = {
    "26": {7: "-1/sqrt(5)*(3*Z1-Z2)", 8: "Z2"},
    "26*": {8: "sqrt(77)/(2*sqrt(114))*Z4"},
    "44*": {2: "sqrt(2)/sqrt(2805)*(X3+33/58*X4)"},
    "55*": {5: "sqrt(85)/(2*sqrt(3))*Z1", 7: "sqrt(85)/(2*sqrt(3))*Z3"},
}


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def evaluate_vector(expr: str, L: LieAlgebra):
    """Coordinates of a basis expression such as ``"1/sqrt(6)*(2*X1+X4)"``."""
    names = {}
    for idx, lab in enumerate(L.labels):
        v = np.zeros(L.dim)
        v[idx] = 1.0
        names[lab] = v

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ValueError(f"unknown basis vector {node.id!r}")
            return names[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            x = ev(node.operand)
            return -x if isinstance(node.op, ast.USub) else x
        if isinstance(node, ast.Call) and getattr(node.func, "id", None) == "sqrt" and len(node.args) == 1:
            return math.sqrt(ev(node.args[0]))
        raise ValueError(f"unsupported expression element in {expr!r}")

    out = ev(ast.parse(expr, mode="eval"))
    if not isinstance(out, np.ndarray):
        raise ValueError(f"{expr!r} is a scalar, not a vector")
    return out


def basis_matrix(exprs: list[str], L: LieAlgebra) -> np.ndarray:
    """Columns are the given vectors in the working basis."""
    if len(exprs) != L.dim:
        raise ValueError(f"expected {L.dim} basis vectors, got {len(exprs)}")
    return np.column_stack([evaluate_vector(e, L) for e in exprs])


def gram_from_orthonormal_basis(B: np.ndarray) -> np.ndarray:
    """Gram matrix of the inner product for which the columns of ``B`` are orthonormal."""
    Binv = np.linalg.inv(B)
    return Binv.T @ Binv


@dataclass(frozen=True)
class TableEntry:
    id: str
    code: str
    basis: tuple[str, ...]

    @property
    def algebra(self) -> LieAlgebra:
        return parse_algebra(self.code)

    def basis_matrix(self) -> np.ndarray:
        return basis_matrix(list(self.basis), self.algebra)

    def gram(self) -> np.ndarray:
        return gram_from_orthonormal_basis(self.basis_matrix())

    @property
    def corrected(self) -> bool:
        return self.id in CORRECTIONS

    def corrected_basis(self) -> tuple[str, ...]:
        out = list(self.basis)
        for pos, expr in CORRECTIONS.get(self.id, {}).items():
            out[pos] = expr
        return tuple(out)

    def corrected_gram(self) -> np.ndarray:
        return gram_from_orthonormal_basis(basis_matrix(list(self.corrected_basis()), self.algebra))


def table_entries() -> list[TableEntry]:
    return [TableEntry(i, code, tuple(basis)) for i, code, basis in TABLE_ENTRIES]


def twelve_dim_example() -> LieAlgebra:
    """Type (2,10): ``[X1,X3]=[X2,X4]=[X5,X9]=[X6,X10]=Z1``, ``[X1,X4]=[X5,X8]=[X6,X9]=[X7,X10]=Z2``."""
    s = {}
    for i, j in [(1, 3), (2, 4), (5, 9), (6, 10)]:
        s[(i - 1, j - 1, 10)] = Fraction(1)
    for i, j in [(1, 4), (5, 8), (6, 9), (7, 10)]:
        s[(i - 1, j - 1, 11)] = Fraction(1)
    return LieAlgebra(12, s, q=10)


def algebra_102() -> LieAlgebra:
    """``f(3,2)`` plus a two-dimensional abelian ideal, as a type (3,5) algebra."""
    return direct_sum(free_two_step(3), abelian(2))


def dual_of_102() -> LieAlgebra:
    from .twostep import dual, from_j_tuple, to_j_tuple

    return from_j_tuple(dual(to_j_tuple(algebra_102())))


def _builders() -> dict:
    h3 = heisenberg
    out = {
        "h3": h3,
        "abelian-2": lambda: abelian(2),
        "abelian-4": lambda: abelian(4),
        "h3+h3": lambda: direct_sum(h3(), h3()),
        "h3+R2": lambda: direct_sum(h3(), abelian(2)),
        "h5": lambda: heisenberg(2),
        "f(3,2)": lambda: free_two_step(3),
        "102": algebra_102,
        "102*": dual_of_102,
        "twelve-dim": twelve_dim_example,
    }
    for i, code, _ in TABLE_ENTRIES:
        out[i] = lambda code=code: parse_algebra(code)
    return out


def corpus_ids() -> list[str]:
    return list(_builders())


def named_algebra(key: str) -> LieAlgebra:
    """Build one corpus algebra; ``KeyError`` for unknown ids."""
    return _builders()[key]()


def named_algebras() -> dict[str, LieAlgebra]:
    """Stable-ordered corpus of algebras with computable verdicts."""
    return {k: build() for k, build in _builders().items()}
