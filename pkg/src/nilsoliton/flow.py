"""Gradient descent of ``f(g) = ||g.mu||^2`` over the group ``G_phi``.

``G_phi`` is the connected group of invertible maps commuting with ``phi``
whose determinant and ``phi``-weighted determinant are both 1; its Lie
algebra ``g_phi`` consists of matrices commuting with ``phi`` with
``Tr A = Tr(A phi) = 0``.  The gradient of ``f`` at ``mu`` along ``A`` is
``8 Tr(ric_mu A)``, so the steepest descent direction on the symmetric part
of ``g_phi`` is ``-R`` with ``R`` the orthogonal projection of ``ric_mu``.

A minimum is attained exactly when the orbit is closed, and the minimiser is
a nilsoliton for the standard inner product.  Orbit degeneration has no
finite-time test; :func:`run_flow` reports it heuristically when a whole
weight block of structure constants collapses, or when ``mu`` shrinks
towards 0 while the normalised gradient stays bounded away from 0.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence, TextIO

import numpy as np

from .algebra import LieAlgebra
from .preeinstein import PreEinsteinResult, ad_phi_spectrum, pre_einstein_diagonal
from .ricci import nilsoliton_verify, structure_tensor


class Tag(str, Enum):
    CONVERGED = "Converged"
    DEGENERATED = "Degenerated"
    MAX_ITERATIONS = "MaxIterations"
    REJECTED = "NotEinsteinNilradical"  # necessary conditions on phi fail, flow not run


class FlowError(RuntimeError):
    pass


def ricci_standard(T: np.ndarray) -> np.ndarray:
    """Ricci operator of ``mu`` for the standard inner product (float tensor)."""
    n = T.shape[0]
    Tm = T.reshape(n * n, n)
    T2 = T.reshape(n, n * n)
    return Tm.T @ Tm / 4 - T2 @ T2.T / 2


def act(h: np.ndarray, hinv: np.ndarray, T: np.ndarray) -> np.ndarray:
    """``h.mu = h mu(h^-1 ., h^-1 .)`` on the float structure tensor."""
    n = T.shape[0]
    A = (hinv.T @ T.reshape(n, n * n)).reshape(n, n, n)
    B = (hinv.T @ A.transpose(1, 0, 2).reshape(n, n * n)).reshape(n, n, n).transpose(1, 0, 2)
    return B @ h.T


def bracket_norm_sq(T: np.ndarray) -> float:
    return float(np.einsum("abk,abk->", T, T))


@dataclass
class GphiParts:
    c: float
    a: float
    R: np.ndarray


def commutant_mask(phi: Sequence) -> np.ndarray:
    phi = list(phi)
    n = len(phi)
    return np.array([[phi[i] == phi[j] for j in range(n)] for i in range(n)])


def gphi_decompose(S: np.ndarray, phi: Sequence, mask: np.ndarray | None = None) -> GphiParts:
    """Split ``S`` as ``c id + a phi + R`` with ``R`` in ``g_phi``.

    ``S`` is first projected onto the commutant of ``phi`` (blocks of equal
    eigenvalue), which is the orthogonal projection for diagonal ``phi``.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    if mask is None:
        mask = commutant_mask(phi)
    P = np.where(mask, S, 0.0)
    P = (P + P.T) / 2
    f = np.array([float(x) for x in phi])
    gram = np.array([[n, f.sum()], [f.sum(), f @ f]])
    rhs = np.array([np.trace(P), np.diag(P) @ f])
    if abs(np.linalg.det(gram)) < 1e-14 * max(1.0, gram.max()) ** 2:
        if n and not np.any(f):
            raise FlowError("phi vanishes: the algebra is abelian")
        # phi proportional to id: only the id-component is removable
        c = rhs[0] / n
        return GphiParts(c, 0.0, P - c * np.eye(n))
    c, a = np.linalg.solve(gram, rhs)
    R = P - c * np.eye(n) - a * np.diag(f)
    # second pass: R is far smaller than S, so this removes the rounding left
    # in its id- and phi-components by the first subtraction
    dc, da = np.linalg.solve(gram, np.array([np.trace(R), np.diag(R) @ f]))
    R = R - dc * np.eye(n) - da * np.diag(f)
    return GphiParts(float(c + dc), float(a + da), R)


@dataclass
class FlowOptions:
    max_iter: int = 20000
    tol_residual: float = 1e-8
    tol_degenerate: float = 1e-8
    patience: int = 500
    polish: float = 1e-2  # after reaching tol_residual, keep going towards tol_residual * polish
    polish_iter: int = 2000
    renormalize_every: int = 100
    armijo: float = 1e-4
    shrink: float = 0.5
    min_step: float = 1e-18
    check_necessary: bool = True
    trace: TextIO | str | None = None
    time_limit: float | None = None


@dataclass
class FlowState:
    mu: np.ndarray
    g: np.ndarray
    f_value: float  # ||mu||^2 of the current (possibly renormalised) tensor
    residual: float  # ||R|| / ||mu||^2
    iteration: int = 0
    log_scale: float = 0.0  # mu = exp(log_scale) * (g . mu_0)
    last_step: float = 0.0

    @property
    def f_true(self) -> float:
        """``||g.mu_0||^2`` with renormalisation undone."""
        return self.f_value * np.exp(-2 * self.log_scale)


def _residual(T: np.ndarray, phi, mask) -> tuple[GphiParts, float]:
    parts = gphi_decompose(ricci_standard(T), phi, mask)
    f = bracket_norm_sq(T)
    return parts, (float(np.linalg.norm(parts.R)) / f if f else 0.0)


def act_with_delta(Dh: np.ndarray, Di: np.ndarray, T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(h.mu, h.mu - mu)`` for ``h = I + Dh``, ``h^-1 = I + Di``.

    The difference is accumulated from terms that each contain a factor of
    ``Dh`` or ``Di``, so it keeps full relative precision for small steps.
    """
    n = T.shape[0]
    d1 = (Di.T @ T.reshape(n, n * n)).reshape(n, n, n)
    A = T + d1
    d2 = (Di.T @ A.transpose(1, 0, 2).reshape(n, n * n)).reshape(n, n, n).transpose(1, 0, 2)
    B = A + d2
    d3 = B @ Dh.T
    delta = d1 + d2 + d3
    # Rounding leaves a symmetric part in the (a, b) slots; along collapsing
    # orbits it is amplified, so project it out at every step.
    delta = (delta - delta.transpose(1, 0, 2)) / 2
    return T + delta, delta


def flow_step(state: FlowState, phi: Sequence, opts: FlowOptions | None = None,
              mask: np.ndarray | None = None) -> FlowState:
    """One Armijo-backtracked step ``mu <- exp(-eta R).mu``; returns a new state.

    The sufficient-decrease test uses ``f(new) - f(old)`` computed from the
    tensor difference, which stays meaningful when the decrease is far below
    the rounding level of ``f`` itself.
    """
    opts = opts or FlowOptions()
    if mask is None:
        mask = commutant_mask(phi)
    T = state.mu
    f0 = bracket_norm_sq(T)
    parts = gphi_decompose(ricci_standard(T), phi, mask)
    R = parts.R
    rn = float(np.linalg.norm(R))
    if rn == 0.0 or f0 == 0.0:
        return FlowState(T, state.g, f0, 0.0, state.iteration, state.log_scale, 0.0)
    w, V = np.linalg.eigh((R + R.T) / 2)
    slope = 8 * rn * rn
    eta = 1.0 / rn
    def trial(eta):
        Dh = (V * np.expm1(-eta * w)) @ V.T
        Di = (V * np.expm1(eta * w)) @ V.T
        Tn, dT = act_with_delta(Dh, Di, T)
        return float(np.sum(dT * (2 * T + dT))), Tn, Dh

    while eta > opts.min_step:
        df, Tn, Dh = trial(eta)
        if df <= -opts.armijo * eta * slope:
            # Keep halving while it still lowers f: a bare Armijo step can sit
            # near 2/L and bounce across the valley of the stiffest direction.
            while eta * opts.shrink > opts.min_step:
                cand = trial(eta * opts.shrink)
                if cand[0] >= df:
                    break
                eta *= opts.shrink
                df, Tn, Dh = cand
            g = state.g + Dh @ state.g
            _, res = _residual(Tn, phi, mask)
            return FlowState(Tn, g, bracket_norm_sq(Tn), res, state.iteration + 1, state.log_scale, eta * rn)
        eta *= opts.shrink
    # step underflow: stall
    return FlowState(T, state.g, f0, rn / f0, state.iteration + 1, state.log_scale, 0.0)


@dataclass
class FlowOutcome:
    tag: Tag
    state: FlowState | None
    phi: list
    c: float | None = None
    a: float | None = None
    eigenvalue_type: list | None = None
    vanished: list = field(default_factory=list)  # bracket groups that collapsed
    limit_tensor: np.ndarray | None = None
    direction: np.ndarray | None = None
    seconds: float = 0.0
    reason: str = ""

    @property
    def converged(self) -> bool:
        return self.tag == Tag.CONVERGED

    def as_dict(self) -> dict:
        st = self.state
        d = {
            "tag": self.tag.value,
            "iterations": st.iteration if st else 0,
            "f": st.f_true if st else None,
            "residual": st.residual if st else None,
            "phi": [str(x) for x in self.phi],
            "eigenvalue_type": [[str(l), m] for l, m in (self.eigenvalue_type or [])],
            "c": self.c,
            "a": self.a,
            "seconds": round(self.seconds, 4),
        }
        if self.tag == Tag.CONVERGED and st is not None:
            d["gram"] = (st.g.T @ st.g).tolist()
        if self.tag == Tag.DEGENERATED:
            d["vanished"] = [[list(map(str, k)), v] for k, v in self.vanished]
            d["direction"] = None if self.direction is None else np.round(self.direction, 6).tolist()
        if self.reason:
            d["reason"] = self.reason
        return d


def weight_groups(L: LieAlgebra, phi: Sequence) -> dict[tuple, np.ndarray]:
    """Masks over the tensor grouping entries by the eigenvalue triple they connect.

    Only entries with ``phi_a + phi_b = phi_k`` can be nonzero anywhere on the
    ``G_phi``-orbit, and each group scales independently under the torus.
    """
    n = L.dim
    phi = list(phi)
    groups: dict[tuple, np.ndarray] = {}
    for a in range(n):
        for b in range(n):
            for k in range(n):
                if phi[a] + phi[b] == phi[k]:
                    key = (min(phi[a], phi[b]), max(phi[a], phi[b]), phi[k])
                    m = groups.setdefault(key, np.zeros((n, n, n), dtype=bool))
                    m[a, b, k] = True
    return groups


def _drift_direction(g: np.ndarray) -> np.ndarray:
    """Symmetric generator of the dominant growth of ``g``, scaled to max entry 1."""
    w, V = np.linalg.eigh(g.T @ g)
    A = (V * (0.5 * np.log(np.maximum(w, 1e-300)))) @ V.T
    m = np.abs(A).max()
    return A / m if m else A


def _trace_writer(target):
    if target is None:
        return None, None
    fh = open(target, "w", newline="") if isinstance(target, str) else target
    w = csv.writer(fh)
    w.writerow(["iteration", "f", "residual"])
    return w, fh if isinstance(target, str) else None


def run_flow(L: LieAlgebra, phi: Sequence | PreEinsteinResult | None = None,
             opts: FlowOptions | None = None, start: np.ndarray | None = None) -> FlowOutcome:
    """Minimise ``||g.mu||^2`` over ``G_phi`` starting from ``mu`` (or ``start``)."""
    opts = opts or FlowOptions()
    t0 = time.perf_counter()
    if phi is None:
        phi = pre_einstein_diagonal(L)
    if isinstance(phi, PreEinsteinResult):
        pre = phi
        phi = pre.phi
    else:
        phi = [Fraction(x) for x in phi]
        pre = None
    ev_type = sorted({x: phi.count(x) for x in phi}.items())
    n = L.dim

    if L.is_abelian:
        T = structure_tensor(L)
        st = FlowState(T, np.eye(n), 0.0, 0.0)
        return FlowOutcome(Tag.CONVERGED, st, phi, 0.0, 0.0, ev_type, reason="abelian: flat",
                           seconds=time.perf_counter() - t0)
    if opts.check_necessary:
        sp = ad_phi_spectrum(L, phi, pre.der_basis if pre else None)
        if not sp.gate_passed:
            why = "phi has a nonpositive eigenvalue" if not sp.phi_positive else \
                f"ad_phi has eigenvalue {sp.min_eigenvalue} on Der"
            return FlowOutcome(Tag.REJECTED, None, phi, eigenvalue_type=ev_type, reason=why,
                               seconds=time.perf_counter() - t0)

    mask = commutant_mask(phi)
    groups = weight_groups(L, phi)
    T = structure_tensor(L) if start is None else np.array(start, dtype=float)
    f0 = bracket_norm_sq(T)
    _, res = _residual(T, phi, mask)
    state = FlowState(T, np.eye(n), f0, res)
    live = [k for k, m in groups.items() if np.any(T[m] != 0)]
    writer, owned = _trace_writer(opts.trace)
    low_streak = 0
    reached_at = None
    window = (0, res, f0)  # (iteration, residual, f_true) at the start of the current window
    try:
        while True:
            if writer:
                writer.writerow([state.iteration, state.f_true, state.residual])
            scale = np.sqrt(state.f_value)
            norms = {k: float(np.sqrt(np.sum(state.mu[m] ** 2))) for k, m in groups.items()}
            small = [k for k in live if norms[k] < opts.tol_degenerate * scale]
            if state.residual < opts.tol_residual and not small and reached_at is None:
                reached_at = state.iteration
            if reached_at is not None and not small and (
                    state.residual < opts.tol_residual * opts.polish
                    or state.iteration - reached_at >= opts.polish_iter
                    or (state.last_step == 0.0 and state.iteration > reached_at)):
                parts = gphi_decompose(ricci_standard(state.mu), phi, mask)
                return _finish(Tag.CONVERGED, state, phi, ev_type, t0, c=parts.c, a=parts.a)
            low_streak = low_streak + 1 if small else 0
            bounded = state.residual > 10 * opts.tol_residual
            collapsed = bounded and state.f_true < opts.tol_degenerate * f0
            if state.iteration - window[0] >= opts.patience:
                # A residual frozen at a positive value while f keeps shrinking means
                # the flow has settled onto a one-parameter subgroup driving mu to 0.
                frozen = abs(state.residual - window[1]) <= 1e-6 * state.residual
                collapsed = collapsed or (bounded and frozen and state.f_true < 0.99 * window[2])
                window = (state.iteration, state.residual, state.f_true)
            if collapsed or low_streak >= opts.patience or (small and state.last_step == 0.0 and state.iteration > 0):
                limit = state.mu.copy()
                for k in small:
                    limit[groups[k]] = 0.0
                vanished = [(k, norms[k] / scale) for k in small]
                if collapsed:
                    vanished.append((("f",), state.f_true / f0))
                    why = "orbit collapses: ||mu|| -> 0 with the residual bounded away from 0"
                else:
                    why = "bracket groups vanish along the flow"
                return _finish(Tag.DEGENERATED, state, phi, ev_type, t0, vanished=vanished, reason=why,
                               limit=limit / max(np.sqrt(bracket_norm_sq(limit)), 1e-300),
                               direction=_drift_direction(state.g))
            if state.iteration >= opts.max_iter or (
                    opts.time_limit is not None and time.perf_counter() - t0 > opts.time_limit):
                return _finish(Tag.MAX_ITERATIONS, state, phi, ev_type, t0)
            nxt = flow_step(state, phi, opts, mask)
            if nxt.last_step == 0.0 and reached_at is None and not small:
                return _finish(Tag.MAX_ITERATIONS, nxt, phi, ev_type, t0, reason="line search stalled")
            if nxt.f_value > state.f_value * (1 + 1e-12):
                raise FlowError("f increased on an accepted step")
            state = nxt
            if state.iteration % opts.renormalize_every == 0 and state.f_value > 0:
                s = np.sqrt(state.f_value)
                state = FlowState(state.mu / s, state.g, 1.0, state.residual, state.iteration,
                                  state.log_scale - np.log(s), state.last_step)
    finally:
        if owned:
            owned.close()


def _finish(tag, state, phi, ev_type, t0, c=None, a=None, vanished=(), limit=None, direction=None, reason=""):
    return FlowOutcome(tag, state, list(phi), c, a, ev_type, list(vanished), limit, direction,
                       time.perf_counter() - t0, reason)


def nilsoliton_metric_from_flow(outcome: FlowOutcome, L: LieAlgebra | None = None) -> np.ndarray:
    """Gram matrix of ``<g X, g Y>``, a nilsoliton inner product on the original algebra."""
    if outcome.tag != Tag.CONVERGED or outcome.state is None:
        raise FlowError(f"flow did not converge ({outcome.tag.value})")
    g = outcome.state.g
    G = g.T @ g
    return (G + G.T) / 2


def verify_flow_metric(L: LieAlgebra, outcome: FlowOutcome, tol: float = 1e-8):
    G = nilsoliton_metric_from_flow(outcome, L)
    return nilsoliton_verify(L, G, outcome.phi, tol=tol)
