"""Chern connection data: torsion, curvature, Ricci traces, normal charts.

All formulas act on a metric jet in chart coordinates.  With ``X`` the
raised-index inverse of ``g``:

    Gamma[i, k, p] = Gamma^p_{ik}     = sum_q X[p, q] d_i g_{k qbar}
    T[i, j, k]     = T^k_{ij}         = Gamma[i, j, k] - Gamma[j, i, k]
    R[i, j, k, l]  = R_{i jbar k lbar}
                   = - d_i dbar_j g_{k lbar}
                     + sum_{p,q} X[p, q] (d_i g_{k qbar}) conj(d_j g_{l pbar})

The four Ricci traces contract the curvature with ``X`` over the four
possible index pairs.  The first two are Hermitian; the third and fourth are
mutual conjugate transposes and coincide only under extra symmetry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .metric_model.expr import Add, Conj, Const, Expr, Mul, Var, substitute
from .metric_model.jets import DEFAULT_SCHEME, JetScheme, field_first
from .metric_model.model import MetricJet, MetricSpec, Region, metric_jet
from .tensor_core import ComplexTensor, UnitaryFrame, Variance, metric_inverse_up

__all__ = [
    "RicciTraces",
    "ChernPoint",
    "NormalChart",
    "connection_coefficients",
    "chern_torsion",
    "chern_curvature",
    "ricci_traces",
    "q_squared_frame",
    "torsion_trace_frame",
    "first_bianchi_residual",
    "pluriclosed_residuals",
    "normal_coordinates",
]

_TORSION_SLOTS = (Variance.HOLO_DOWN, Variance.HOLO_DOWN, Variance.HOLO_UP)
_CURVATURE_SLOTS = (
    Variance.HOLO_DOWN,
    Variance.ANTI_DOWN,
    Variance.HOLO_DOWN,
    Variance.ANTI_DOWN,
)


def connection_coefficients(jet: MetricJet) -> np.ndarray:
    """Connection coefficients ``Gamma[i, k, p] = Gamma^p_{ik}``."""
    x = metric_inverse_up(jet.g)
    return np.einsum("pq,ikq->ikp", x, jet.d_g, optimize=True)


def chern_torsion(jet: MetricJet) -> np.ndarray:
    """Torsion ``T[i, j, k] = T^k_{ij}``, antisymmetric in ``(i, j)``."""
    gamma = connection_coefficients(jet)
    return gamma - np.swapaxes(gamma, 0, 1)


def chern_curvature(jet: MetricJet) -> np.ndarray:
    """Curvature ``R[i, j, k, l] = R_{i jbar k lbar}``.

    Hermitian symmetry ``R[i, j, k, l] = conj(R[j, i, l, k])`` holds exactly
    at the level of the formula; tests pin it down numerically.
    """
    x = metric_inverse_up(jet.g)
    correction = np.einsum(
        "pq,ikq,jlp->ijkl", x, jet.d_g, np.conj(jet.d_g), optimize=True
    )
    return -jet.dd_g + correction


@dataclass(frozen=True)
class RicciTraces:
    """The four curvature traces, indexed ``[k, l] = (k, lbar)``."""

    ric1: np.ndarray
    ric2: np.ndarray
    ric3: np.ndarray
    ric4: np.ndarray


def ricci_traces(jet: MetricJet, curvature: np.ndarray | None = None) -> RicciTraces:
    """Contract the curvature with the inverse metric in all four ways."""
    r = chern_curvature(jet) if curvature is None else curvature
    x = metric_inverse_up(jet.g)
    return RicciTraces(
        ric1=np.einsum("ij,klij->kl", x, r, optimize=True),
        ric2=np.einsum("ij,ijkl->kl", x, r, optimize=True),
        ric3=np.einsum("ij,kjil->kl", x, r, optimize=True),
        ric4=np.einsum("ij,ilkj->kl", x, r, optimize=True),
    )


def q_squared_frame(torsion_frame: np.ndarray) -> np.ndarray:
    """Torsion square ``Q[k, l] = sum_{p,q} T[p, q, l] conj(T[p, q, k])``.

    Positive semidefinite by construction; unitary-frame input expected.
    """
    return np.einsum(
        "pql,pqk->kl", torsion_frame, np.conj(torsion_frame), optimize=True
    )


def torsion_trace_frame(torsion_frame: np.ndarray) -> np.ndarray:
    """Torsion trace ``eta[j] = sum_i T[i, j, i]`` in a unitary frame."""
    return np.einsum("iji->j", torsion_frame)


@dataclass(frozen=True)
class ChernPoint:
    """Everything the functional layer needs at one point.

    Chart-frame tensors plus their unitary-frame versions, with the frame
    built from the Cholesky factor of the metric.
    """

    point: np.ndarray
    g: np.ndarray
    g_up: np.ndarray
    frame: UnitaryFrame
    torsion: np.ndarray
    curvature: np.ndarray
    torsion_frame: np.ndarray
    curvature_frame: np.ndarray

    @classmethod
    def from_jet(cls, jet: MetricJet) -> "ChernPoint":
        torsion = chern_torsion(jet)
        curvature = chern_curvature(jet)
        frame = UnitaryFrame.from_metric(jet.g)
        torsion_frame = frame.to_frame(ComplexTensor(torsion, _TORSION_SLOTS)).entries
        curvature_frame = frame.to_frame(
            ComplexTensor(curvature, _CURVATURE_SLOTS)
        ).entries
        return cls(
            point=jet.point,
            g=jet.g,
            g_up=metric_inverse_up(jet.g),
            frame=frame,
            torsion=torsion,
            curvature=curvature,
            torsion_frame=torsion_frame,
            curvature_frame=curvature_frame,
        )

    @classmethod
    def from_spec(
        cls, spec: MetricSpec, z: np.ndarray, scheme: JetScheme = DEFAULT_SCHEME
    ) -> "ChernPoint":
        return cls.from_jet(metric_jet(spec, z, scheme))

    def q_squared_chart(self) -> np.ndarray:
        """The torsion square as a chart Hermitian form ``L Q L^H``."""
        q = q_squared_frame(self.torsion_frame)
        return self.frame.L @ q @ self.frame.L.conj().T


def first_bianchi_residual(
    spec: MetricSpec, z: np.ndarray, scheme: JetScheme = DEFAULT_SCHEME
) -> float:
    """Max deviation in ``dbar_m T^k_{ij} = sum_l X[k,l] (R[j,m,i,l] - R[i,m,j,l])``.

    The left side differences the torsion field with the scheme's stencils;
    the right side is assembled at the centre point.  Chart frame throughout,
    so no connection terms enter.
    """
    jet = metric_jet(spec, z, scheme)
    x = metric_inverse_up(jet.g)
    r = chern_curvature(jet)

    def torsion_field(w: np.ndarray) -> np.ndarray:
        return chern_torsion(metric_jet(spec, w, scheme))

    _, dbar_t = field_first(torsion_field, z, scheme)
    rhs = np.einsum("kl,jmil->mijk", x, r, optimize=True) - np.einsum(
        "kl,imjl->mijk", x, r, optimize=True
    )
    return float(np.max(np.abs(dbar_t - rhs)))


def pluriclosed_residuals(jet: MetricJet) -> tuple[float, float]:
    """Two routes to pluriclosedness; both vanish iff ``ddbar omega = 0``.

    Returns ``(r_direct, r_symmetry)``: the direct second-derivative
    alternation, and the curvature-torsion symmetry that characterises the
    same condition through connection data.
    """
    dd = jet.dd_g
    alternation = (
        dd
        - np.transpose(dd, (2, 1, 0, 3))
        - np.transpose(dd, (0, 3, 2, 1))
        + np.transpose(dd, (2, 3, 0, 1))
    )
    r_direct = float(np.max(np.abs(alternation)))

    r = chern_curvature(jet)
    t = chern_torsion(jet)
    lhs = (
        r
        - np.transpose(r, (2, 1, 0, 3))
        - np.transpose(r, (0, 3, 2, 1))
        + np.transpose(r, (2, 3, 0, 1))
    )
    rhs = np.einsum("ikp,jlq,pq->ijkl", t, np.conj(t), jet.g, optimize=True)
    r_symmetry = float(np.max(np.abs(lhs - rhs)))
    return r_direct, r_symmetry


def _polynomial(coefficients: list[tuple[complex, Expr | None]]) -> Expr:
    """Sum of ``coeff * factor`` terms, skipping zero coefficients."""
    acc: Expr | None = None
    for coeff, factor in coefficients:
        if coeff == 0:
            continue
        term: Expr = Const(complex(coeff))
        if factor is not None:
            term = Mul(term, factor)
        acc = term if acc is None else Add(acc, term)
    return acc if acc is not None else Const(0j)


@dataclass(frozen=True)
class NormalChart:
    """A quadratic recentring ``z = p + S w + (1/2) C w w`` adapted at ``p``.

    In the new coordinates the metric is the identity at the origin and its
    holomorphic first derivatives reduce to half the torsion; the mixed
    second derivatives then recover the curvature up to a quadratic torsion
    term.  ``residuals`` reports all three relations.
    """

    center: np.ndarray
    S: np.ndarray
    C: np.ndarray
    composed: MetricSpec
    residuals: dict[str, float]


def normal_coordinates(
    spec: MetricSpec, p: np.ndarray, scheme: JetScheme = DEFAULT_SCHEME
) -> NormalChart:
    """Build the adapted quadratic chart at ``p`` and verify its relations."""
    p = np.asarray(p, dtype=complex)
    jet = metric_jet(spec, p, scheme)
    n = jet.n
    try:
        chol = np.linalg.cholesky(jet.g)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"metric not positive definite at {p}: {exc}") from exc
    s = np.linalg.solve(chol, np.eye(n, dtype=complex)).T

    # D[a, e, b] pulls the first derivatives back through S.
    d_pulled = np.einsum(
        "ikl,ia,ke,lb->aeb", jet.d_g, s, s, np.conj(s), optimize=True
    )
    sym = d_pulled + np.transpose(d_pulled, (1, 0, 2))
    rhs = -0.5 * np.transpose(sym, (2, 0, 1)).reshape(n, n * n)
    c = np.linalg.solve(chol.T, rhs).reshape(n, n, n)

    # z_k(w) = p_k + sum_a S[k,a] w_a + (1/2) sum_{a,c} C[k,a,c] w_a w_c
    phi: list[Expr] = []
    jac: list[list[Expr]] = []
    for k in range(n):
        terms: list[tuple[complex, Expr | None]] = [(complex(p[k]), None)]
        for a in range(n):
            terms.append((complex(s[k, a]), Var(a)))
        for a in range(n):
            for ccol in range(n):
                terms.append((0.5 * complex(c[k, a, ccol]), Mul(Var(a), Var(ccol))))
        phi.append(_polynomial(terms))
    for k in range(n):
        row: list[Expr] = []
        for a in range(n):
            terms = [(complex(s[k, a]), None)]
            for ccol in range(n):
                terms.append((complex(c[k, a, ccol]), Var(ccol)))
            row.append(_polynomial(terms))
        jac.append(row)

    entries = []
    for a in range(n):
        row_entries = []
        for b in range(n):
            acc: Expr | None = None
            for k in range(n):
                for l in range(n):
                    pulled = substitute(spec.entries[k][l], phi)
                    term = Mul(pulled, Mul(jac[k][a], Conj(jac[l][b])))
                    acc = term if acc is None else Add(acc, term)
            row_entries.append(acc if acc is not None else Const(0j))
        entries.append(tuple(row_entries))

    composed = MetricSpec(
        name=f"{spec.name}:normal",
        n=n,
        entries=tuple(entries),
        region=Region("ball", 0.05),
    )

    origin = np.zeros(n, dtype=complex)
    fd_scheme = JetScheme(
        h=scheme.h,
        order=scheme.order,
        richardson=scheme.richardson,
        use_exact=False,
        tol=scheme.tol,
    )
    hat = metric_jet(composed, origin, fd_scheme)
    torsion_hat = chern_torsion(hat)
    curvature_hat = chern_curvature(hat)
    rel1 = float(np.max(np.abs(hat.g - np.eye(n))))
    rel2 = float(np.max(np.abs(hat.d_g - 0.5 * torsion_hat)))
    quartic = 0.25 * np.einsum(
        "ikp,jlq,pq->ijkl", torsion_hat, np.conj(torsion_hat), hat.g, optimize=True
    )
    rel3 = float(np.max(np.abs(hat.dd_g + curvature_hat - quartic)))
    return NormalChart(
        center=p,
        S=s,
        C=c,
        composed=composed,
        residuals={"metric_identity": rel1, "first_order": rel2, "second_order": rel3},
    )
