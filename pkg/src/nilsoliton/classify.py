"""The decision pipeline: pre-Einstein derivation, positivity gate, then nice or flow path.

Every ``EinsteinNilradical`` report carries a Gram matrix that can be fed
back to :func:`nilsoliton.ricci.nilsoliton_verify`; every
``NotEinsteinNilradical`` report names the kind of evidence behind it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import exact
from .algebra import LieAlgebra, is_derivation
from .flow import FlowOptions, FlowOutcome, Tag, nilsoliton_metric_from_flow, run_flow
from .nice import NiceCertificate, NotApplicable, Verdict, closed_form_nilsoliton, diagonal_gram, is_nice, nice_test
from .preeinstein import AdPhiSpectrum, PreEinsteinResult, ad_phi_spectrum, pre_einstein_diagonal
from .ricci import NilsolitonReport, bracket_norm_sq, nilsoliton_verify

# evidence kinds attached to a negative verdict
NO_POSITIVE_DERIVATION = "no-positive-derivation"
AD_PHI_WITNESS = "ad-phi-negative-eigenvalue"
ALPHA_INFEASIBLE = "alpha-infeasibility-certificate"
DEGENERATION = "flow-degeneration"


def _fr(v) -> list[str]:
    return [str(x) for x in v]


@dataclass
class ClassificationReport:
    algebra: LieAlgebra = field(repr=False)
    algebra_id: str
    pre: PreEinsteinResult
    spectrum: AdPhiSpectrum
    verdict: Verdict
    path: str  # "gate", "nice" or "flow"
    nice: NiceCertificate | None = None
    flow: FlowOutcome | None = None
    gram: np.ndarray | None = None
    check: NilsolitonReport | None = None
    evidence: str | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return {Verdict.EINSTEIN: 0, Verdict.NOT_EINSTEIN: 1}.get(self.verdict, 2)

    def as_dict(self) -> dict:
        sp = self.spectrum
        d = {
            "id": self.algebra_id,
            "verdict": self.verdict.value,
            "path": self.path,
            "pre_einstein": {
                "phi_diagonal": _fr(self.pre.phi),
                "eigenvalue_type": [[str(lam), m] for lam, m in self.pre.eigenvalue_type],
            },
            "positivity": {
                "phi_positive": sp.phi_positive,
                "ad_phi_nonneg": sp.ad_phi_nonneg,
                "min_eigenvalue": None if sp.min_eigenvalue is None else str(sp.min_eigenvalue),
                "witness": None if sp.witness is None else [_fr(r) for r in sp.witness.as_list()],
            },
        }
        if self.nice is not None:
            d["nice"] = self.nice.as_dict()
        if self.flow is not None:
            fd = self.flow.as_dict()
            fd.pop("gram", None)
            d["flow"] = fd
        if self.gram is not None:
            d["metric"] = {"gram": self.gram.tolist(), "precision": "float64"}
        if self.check is not None:
            d["nilsoliton_check"] = self.check.as_dict()
            d["c"] = self.check.c
        if self.evidence:
            d["evidence"] = self.evidence
        if self.notes:
            d["notes"] = list(self.notes)
        return d


def normalise_gram(L: LieAlgebra, G: np.ndarray) -> np.ndarray:
    """Rescale ``G`` so that ``||mu||^2`` matches its value for the identity Gram matrix.

    With this convention the constant ``c`` of a nilsoliton does not depend on
    which route produced the metric.
    """
    target = float(bracket_norm_sq(L, np.eye(L.dim)))
    current = float(bracket_norm_sq(L, G))
    if target == 0 or current == 0:
        return G
    # ||mu||^2 scales like 1/t under G -> t G
    return G * (current / target)


def classify(L: LieAlgebra, algebra_id: str = "", opts: FlowOptions | None = None,
             tol: float = 1e-8) -> ClassificationReport:
    pre = pre_einstein_diagonal(L)  # UnsupportedBasis propagates to the caller
    sp = ad_phi_spectrum(L, pre.phi, pre.der_basis)
    report = ClassificationReport(L, algebra_id, pre, sp, Verdict.UNDECIDED, "gate")

    if L.is_abelian:
        G = np.eye(L.dim)
        report.verdict, report.gram = Verdict.EINSTEIN, G
        report.check = nilsoliton_verify(L, G, pre.phi, tol=tol)
        report.notes.append("abelian: the flat metric, c = 0")
        return report
    if not sp.phi_positive:
        report.verdict, report.evidence = Verdict.NOT_EINSTEIN, NO_POSITIVE_DERIVATION
        return report
    if not sp.ad_phi_nonneg:
        report.verdict, report.evidence = Verdict.NOT_EINSTEIN, AD_PHI_WITNESS
        return report

    if is_nice(L):
        report.path = "nice"
        cert = nice_test(L)
        report.nice = cert
        if cert.phi != list(pre.phi):
            report.notes.append("nice-basis phi differs from the projected phi")
        if cert.verdict == Verdict.NOT_EINSTEIN:
            report.verdict, report.evidence = Verdict.NOT_EINSTEIN, ALPHA_INFEASIBLE
            return report
        try:
            G = diagonal_gram(closed_form_nilsoliton(L, cert))
        except NotApplicable as exc:
            report.notes.append(f"closed form unavailable ({exc}); metric from the flow")
            G = None
        if G is not None:
            G = normalise_gram(L, G)
            report.gram = G
            report.check = nilsoliton_verify(L, G, pre.phi, tol=tol)
            report.verdict = Verdict.EINSTEIN
            return report

    report.path = "flow" if report.path == "gate" else report.path
    out = run_flow(L, pre, opts)
    report.flow = out
    if out.tag == Tag.CONVERGED:
        G = normalise_gram(L, nilsoliton_metric_from_flow(out))
        report.gram = G
        report.check = nilsoliton_verify(L, G, pre.phi, tol=tol)
        report.verdict = Verdict.EINSTEIN if report.check.passed else Verdict.UNDECIDED
        if not report.check.passed:
            report.notes.append("flow converged but the emitted metric fails the check")
    elif out.tag in (Tag.DEGENERATED, Tag.REJECTED):
        report.verdict, report.evidence = Verdict.NOT_EINSTEIN, DEGENERATION
        report.notes.append("degeneration is detected heuristically")
    return report


def certificate_holds(report: ClassificationReport) -> bool:
    """Re-check the evidence in a report from its own contents."""
    L = report.algebra
    if report.verdict == Verdict.EINSTEIN:
        if report.gram is None:
            return False
        tol = report.check.tol if report.check else 1e-8
        chk = nilsoliton_verify(L, report.gram, report.pre.phi, tol=tol)
        return chk.passed or (chk.flat and L.is_abelian)
    if report.verdict == Verdict.NOT_EINSTEIN:
        if report.evidence == NO_POSITIVE_DERIVATION:
            return not all(x > 0 for x in report.pre.phi)
        if report.evidence == AD_PHI_WITNESS:
            w = report.spectrum.witness
            return w is not None and report.spectrum.min_eigenvalue < 0 and is_derivation(L, w.as_list())
        if report.evidence == ALPHA_INFEASIBLE:
            cert = report.nice
            if cert is None or cert.certificate is None:
                return False
            A = [[exact.dot(a, b) for b in cert.Y] for a in cert.Y]
            return exact.check_emptiness_certificate(A, [Fraction(1)] * cert.m, cert.certificate)
        return report.evidence == DEGENERATION
    return True
