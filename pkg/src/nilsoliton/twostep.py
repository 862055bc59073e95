"""Two-step nilpotent algebras as tuples of skew-symmetric matrices.

A tuple ``J = (J_1, ..., J_p)`` of ``q x q`` skew matrices defines
``[X_i, X_j] = sum_a (J_a)_ij Z_a``.  Its span is a point of the
Grassmannian of ``p``-planes in ``so(q)``; the algebra built from the
orthogonal complement (for ``Q(K1, K2) = -Tr(K1 K2)``) is the dual.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import exact
from .algebra import AlgebraError, Derivation, LieAlgebra, derived_subalgebra, lower_central_series
from .flow import FlowOptions, Tag, run_flow
from .preeinstein import verify_pre_einstein


class TwoStepError(AlgebraError):
    pass


@dataclass(frozen=True)
class JTuple:
    q: int
    J: tuple  # p matrices, each a tuple of q row-tuples of Fraction

    @property
    def p(self) -> int:
        return len(self.J)

    @classmethod
    def of(cls, q: int, mats: Sequence) -> "JTuple":
        out = []
        for M in mats:
            M = [[exact.to_fraction(x) for x in row] for row in M]
            if len(M) != q or any(len(r) != q for r in M):
                raise TwoStepError(f"expected {q}x{q} matrices")
            for i in range(q):
                for j in range(q):
                    if M[i][j] != -M[j][i]:
                        raise TwoStepError("J matrices must be skew-symmetric")
            out.append(tuple(tuple(r) for r in M))
        return cls(q, tuple(out))

    def vectors(self) -> list[list[Fraction]]:
        """Coordinates in ``Lambda^2``: entries ``(i, j)``, ``i < j``, row-major."""
        return [[M[i][j] for i in range(self.q) for j in range(i + 1, self.q)] for M in self.J]

    @property
    def independent(self) -> bool:
        return exact.rank(self.vectors()) == self.p

    def digest(self) -> str:
        text = ";".join(",".join(str(x) for x in v) for v in self.vectors())
        return hashlib.sha256(f"{self.q}|{text}".encode()).hexdigest()[:16]

    def to_json(self) -> dict:
        return {"q": self.q, "p": self.p, "J": [[[str(x) for x in r] for r in M] for M in self.J]}


def _pairs(q: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(q) for j in range(i + 1, q)]


def from_vectors(q: int, vecs: Sequence[Sequence]) -> JTuple:
    mats = []
    for v in vecs:
        M = [[Fraction(0)] * q for _ in range(q)]
        for (i, j), x in zip(_pairs(q), v):
            M[i][j] = exact.to_fraction(x)
            M[j][i] = -M[i][j]
        mats.append(M)
    return JTuple.of(q, mats)


def from_j_tuple(t: JTuple) -> LieAlgebra:
    if not t.independent:
        raise TwoStepError("J matrices are linearly dependent; the type drops below p")
    q, p = t.q, t.p
    s = {}
    for a, M in enumerate(t.J):
        for i, j in _pairs(q):
            if M[i][j]:
                s[(i, j, q + a)] = M[i][j]
    return LieAlgebra(q + p, s, q=q)


def is_two_step(L: LieAlgebra) -> bool:
    lcs = lower_central_series(L)
    return len(lcs) == 3 and lcs[1].dim > 0


def type_of(L: LieAlgebra) -> tuple[int, int]:
    if not is_two_step(L):
        raise TwoStepError("algebra is not two-step nilpotent")
    p = derived_subalgebra(L).dim
    q = L.dim - p
    if not 1 <= p <= q * (q - 1) // 2:
        raise TwoStepError(f"impossible type ({p}, {q})")
    return p, q


def _standard_split(L: LieAlgebra) -> bool:
    """Brackets only pair the first ``L.q`` vectors and land in the rest, which spans ``[n,n]``."""
    if any(i >= L.q or j >= L.q or k < L.q for (i, j, k) in L.structure):
        return False
    return derived_subalgebra(L).dim == L.dim - L.q


def to_j_tuple(L: LieAlgebra) -> JTuple:
    if not _standard_split(L):
        raise TwoStepError("basis is not of the form X_1..X_q, Z_1..Z_p with [n,n] = span Z")
    q, p = L.q, L.dim - L.q
    mats = [[[Fraction(0)] * q for _ in range(q)] for _ in range(p)]
    for (i, j, k), c in L.structure.items():
        mats[k - q][i][j] = c
        mats[k - q][j][i] = -c
    return JTuple.of(q, mats)


def same_span(t1: JTuple, t2: JTuple) -> bool:
    if t1.q != t2.q:
        return False
    a, b = t1.vectors(), t2.vectors()
    r = exact.rank(a)
    return r == exact.rank(b) == exact.rank(a + b)


def dual(t: JTuple) -> JTuple:
    """Reduced-echelon basis of the complement of ``span J`` under ``-Tr(K1 K2)``.

    On skew matrices ``-Tr(K1 K2) = 2 sum_{i<j} (K1)_ij (K2)_ij``, so the
    complement is the kernel of the coordinate matrix.
    """
    D = t.q * (t.q - 1) // 2
    if t.p >= D:
        raise TwoStepError("the J matrices span all of so(q); the dual is empty")
    ker = exact.kernel(t.vectors(), D)
    pivots, _ = exact.rref(ker, D)
    vecs = [[row.get(c, Fraction(0)) for c in range(D)] for _, row in sorted(pivots.items())]
    return from_vectors(t.q, vecs)


def q_form(K1, K2) -> Fraction:
    q = len(K1)
    return -sum((K1[i][j] * K2[j][i] for i in range(q) for j in range(q)), Fraction(0))


def canonical_derivation(L: LieAlgebra) -> Derivation:
    if not _standard_split(L):
        raise TwoStepError("basis is not of the form X_1..X_q, Z_1..Z_p")
    n = L.dim
    return Derivation.of([[Fraction(1 if i < L.q else 2) if i == j else Fraction(0) for j in range(n)]
                          for i in range(n)])


def type12_scale(p: int, q: int) -> Fraction:
    """The multiple ``c`` of ``Psi`` satisfying ``Tr((c Psi)^2) = Tr(c Psi)``."""
    return Fraction(q + 2 * p, q + 4 * p)


def is_type12_pre_einstein(L: LieAlgebra, der=None) -> bool:
    """``c Psi`` is a pre-Einstein derivation (so ``G_phi = SL(q) x SL(p)``)."""
    if not _standard_split(L):
        return False
    p, q = L.dim - L.q, L.q
    c = type12_scale(p, q)
    phi = [c if i < q else 2 * c for i in range(L.dim)]
    return verify_pre_einstein(L, phi, der)


def sample_random(p: int, q: int, seed: int, bits: int = 20) -> JTuple:
    """Gaussian upper-triangular entries, truncated to multiples of ``2^-bits``."""
    D = q * (q - 1) // 2
    if not 1 <= p <= D:
        raise TwoStepError(f"need 1 <= p <= {D}")
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((p, D))
    scale = 1 << bits
    vecs = [[Fraction(int(math.floor(x * scale)), scale) for x in row] for row in raw]
    return from_vectors(q, vecs)


# -- surveys -----------------------------------------------------------------


@dataclass
class SampleResult:
    seed: int
    verdict: str
    iterations: int
    f_final: float | None
    type12: bool
    eigenvalue_type: list = field(default_factory=list)

    def matches_type(self, p: int, q: int) -> bool:
        """Eigenvalues in ratio 1:2 with multiplicities q and p."""
        ev = self.eigenvalue_type
        return len(ev) == 2 and ev[1][0] == 2 * ev[0][0] and ev[0][1] == q and ev[1][1] == p


def run_sample(p: int, q: int, seed: int, opts: FlowOptions | None = None) -> SampleResult:
    """Flow one sample over ``SL(q) x SL(p)``, the group ``G_phi`` for ``phi`` proportional to ``Psi``.

    The orbit of this group is closed exactly when the algebra is an Einstein
    nilradical of eigenvalue type ``(1, 2; q, p)``, so the flow is run with
    ``phi = c Psi`` whether or not ``c Psi`` is pre-Einstein; ``type12``
    records whether it is.
    """
    t = sample_random(p, q, seed)
    if not t.independent:
        return SampleResult(seed, "dependent", 0, None, False)
    L = from_j_tuple(t)
    opts = opts or FlowOptions()
    c = type12_scale(p, q)
    phi = [c if i < q else 2 * c for i in range(L.dim)]
    type12 = is_type12_pre_einstein(L)
    flow_opts = FlowOptions(**{**opts.__dict__, "check_necessary": False})
    out = run_flow(L, phi, flow_opts)
    st = out.state
    return SampleResult(seed, out.tag.value, st.iteration if st else 0, float(st.f_true) if st else None,
                        type12, [(Fraction(lam), m) for lam, m in out.eigenvalue_type or []])


def sample_seeds(base_seed: int, N: int) -> list[int]:
    """Independent per-sample seeds from one base seed."""
    ss = np.random.SeedSequence(base_seed)
    return [int(s.generate_state(1)[0]) for s in ss.spawn(N)]


@dataclass
class SurveyStats:
    p: int
    q: int
    N: int
    samples: list[SampleResult]

    def count(self, verdict: str) -> int:
        return sum(1 for s in self.samples if s.verdict == verdict)

    @property
    def converged(self) -> int:
        return self.count(Tag.CONVERGED.value)

    @property
    def degenerated(self) -> int:
        return self.count(Tag.DEGENERATED.value)

    @property
    def undecided(self) -> int:
        return self.N - self.converged - self.degenerated

    @property
    def converged_type12(self) -> int:
        return sum(1 for s in self.samples if s.verdict == Tag.CONVERGED.value and s.matches_type(self.p, self.q))

    @property
    def mean_iterations(self) -> float:
        return float(np.mean([s.iterations for s in self.samples])) if self.samples else 0.0

    def summary(self) -> dict:
        return {
            "p": self.p, "q": self.q, "N": self.N,
            "converged": self.converged,
            "converged_type_1_2": self.converged_type12,
            "degenerated": self.degenerated,
            "undecided": self.undecided,
            "type12_pre_einstein": sum(s.type12 for s in self.samples),
            "mean_iterations": self.mean_iterations,
        }

    def csv_rows(self):
        yield ["seed", "verdict", "iterations", "f_final", "type12", "eigenvalue_type"]
        for s in self.samples:
            ev = " ".join(f"{lam}^{m}" for lam, m in s.eigenvalue_type)
            yield [s.seed, s.verdict, s.iterations, "" if s.f_final is None else repr(float(s.f_final)), int(s.type12), ev]


def _run_sample_args(args):
    return run_sample(*args)


def survey(p: int, q: int, N: int, seed: int = 0, opts: FlowOptions | None = None,
           workers: int | None = None) -> SurveyStats:
    seeds = sample_seeds(seed, N)
    jobs = [(p, q, s, opts) for s in seeds]
    if workers is None or workers <= 1:
        results = [_run_sample_args(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_sample_args, jobs))
    return SurveyStats(p, q, N, results)
