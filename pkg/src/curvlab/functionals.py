"""Curvature functionals: sectional, bisectional, tempered, and extremizers.

Every functional is evaluated in the unitary frame of the point, where the
metric is the identity and norms are plain Euclidean.  Arguments:

* ``zeta``, ``nu``: nonzero frame vectors (holomorphic up indices),
* ``xi``: a positive semidefinite Hermitian form with raised indices,
  normalised to unit Frobenius norm (:class:`~curvlab.tensor_core.PSDForm`).

The tempering parameter ``tau`` interpolates the torsion correction.  On the
target side (real bisectional curvature) the correction weight is
``(1 - tau) / 4`` and ``tau`` ranges over ``[0, inf)``; on the source side
(tempered Ricci) it is ``(1 - 1/tau) / 4`` with ``tau`` in ``(0, inf]``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .chern import ChernPoint, q_squared_frame, ricci_traces
from .errors import ConfigError
from .tensor_core import PSDForm, hermitian_part, psd_project

__all__ = [
    "TauParam",
    "BoundCertificate",
    "hsc",
    "hbc",
    "rbc",
    "altered_hsc",
    "ric_tau_frame",
    "ric_tau",
    "frame_vector",
    "extremize_hsc",
    "extremize_rbc",
]

_IMAG_TOL = 1e-10


@dataclass(frozen=True)
class TauParam:
    """Tempering parameter with its admissible range per role.

    ``role`` is ``"target"`` for bisectional-curvature tempering (allows 0,
    forbids infinity) or ``"source"`` for Ricci tempering (allows infinity,
    forbids 0).
    """

    value: float
    role: str

    def __post_init__(self) -> None:
        if self.role not in ("target", "source"):
            raise ConfigError(f"unknown tau role '{self.role}'")
        if self.value < 0 or math.isnan(self.value):
            raise ConfigError(f"tau must be nonnegative, got {self.value}")
        if self.role == "target" and math.isinf(self.value):
            raise ConfigError("target tempering does not extend to tau = inf")
        if self.role == "source" and self.value == 0:
            raise ConfigError("source tempering does not extend to tau = 0")

    @property
    def target_weight(self) -> float:
        """Coefficient ``(1 - tau) / 4`` on the torsion square."""
        if self.role != "target":
            raise ConfigError(f"tau has role '{self.role}', expected 'target'")
        return (1.0 - self.value) / 4.0

    @property
    def source_weight(self) -> float:
        """Coefficient ``(1 - 1/tau) / 4``; equals ``1/4`` at tau = inf."""
        if self.role != "source":
            raise ConfigError(f"tau has role '{self.role}', expected 'source'")
        if math.isinf(self.value):
            return 0.25
        return (1.0 - 1.0 / self.value) / 4.0


def _real(value: complex, label: str) -> float:
    if abs(value.imag) > _IMAG_TOL * max(1.0, abs(value.real)):
        raise ConfigError(f"{label} should be real, got imaginary part {value.imag:.3e}")
    return float(value.real)


def frame_vector(point: ChernPoint, v_chart: np.ndarray) -> np.ndarray:
    """Frame components of a chart tangent vector (holomorphic up index)."""
    return point.frame.L.T @ np.asarray(v_chart, dtype=complex)


def hsc(point: ChernPoint, zeta: np.ndarray) -> float:
    """Holomorphic sectional curvature of the frame vector ``zeta``."""
    zeta = np.asarray(zeta, dtype=complex)
    norm2 = float(np.real(np.vdot(zeta, zeta)))
    if norm2 == 0.0:
        raise ConfigError("sectional curvature needs a nonzero vector")
    value = np.einsum(
        "abcd,a,b,c,d->",
        point.curvature_frame,
        zeta,
        np.conj(zeta),
        zeta,
        np.conj(zeta),
        optimize=True,
    )
    return _real(complex(value) / norm2**2, "holomorphic sectional curvature")


def hbc(point: ChernPoint, zeta: np.ndarray, nu: np.ndarray) -> float:
    """Holomorphic bisectional curvature of the frame pair ``(zeta, nu)``."""
    zeta = np.asarray(zeta, dtype=complex)
    nu = np.asarray(nu, dtype=complex)
    norm2 = float(np.real(np.vdot(zeta, zeta))) * float(np.real(np.vdot(nu, nu)))
    if norm2 == 0.0:
        raise ConfigError("bisectional curvature needs nonzero vectors")
    value = np.einsum(
        "abcd,a,b,c,d->",
        point.curvature_frame,
        zeta,
        np.conj(zeta),
        nu,
        np.conj(nu),
        optimize=True,
    )
    return _real(complex(value) / norm2, "holomorphic bisectional curvature")


def _form_entries(xi: PSDForm | np.ndarray) -> np.ndarray:
    if isinstance(xi, PSDForm):
        return xi.entries
    return np.asarray(xi, dtype=complex)


def rbc(point: ChernPoint, xi: PSDForm | np.ndarray, tau: TauParam) -> float:
    """Tempered real bisectional curvature of the form ``xi``.

    ``RBC^tau(xi)`` contracts ``R - ((1 - tau)/4) T T*`` twice against ``xi``
    and divides by the squared Frobenius norm.  At ``tau = 1`` the torsion
    term drops and rank-one forms reproduce holomorphic sectional curvature.
    """
    entries = _form_entries(xi)
    norm2 = float(np.real(np.sum(entries * np.conj(entries))))
    if norm2 == 0.0:
        raise ConfigError("real bisectional curvature needs a nonzero form")
    r = point.curvature_frame
    value = np.einsum("abcd,ab,cd->", r, entries, entries, optimize=True)
    weight = tau.target_weight
    if weight != 0.0:
        t = point.torsion_frame
        tt = np.einsum("acr,bdr,ab,cd->", t, np.conj(t), entries, entries, optimize=True)
        value = value - weight * tt
    return _real(complex(value) / norm2, "real bisectional curvature")


def altered_hsc(point: ChernPoint, xi: PSDForm | np.ndarray) -> float:
    """The swapped-slot sectional functional ``(R[a,b,c,d] + R[a,d,c,b]) xi xi``.

    For pluriclosed metrics half of this equals ``RBC^0``.
    """
    entries = _form_entries(xi)
    norm2 = float(np.real(np.sum(entries * np.conj(entries))))
    if norm2 == 0.0:
        raise ConfigError("altered sectional curvature needs a nonzero form")
    r = point.curvature_frame
    total = r + np.transpose(r, (0, 3, 2, 1))
    value = np.einsum("abcd,ab,cd->", total, entries, entries, optimize=True)
    return _real(complex(value) / norm2, "altered sectional curvature")


def ric_tau_frame(point: ChernPoint, tau: TauParam) -> np.ndarray:
    """Tempered Ricci form in the unitary frame.

    ``Ric^tau = Ric^(2) + ((1 - 1/tau)/4) Q`` with ``Q`` the torsion square.
    At ``tau = 1`` this returns the second Ricci trace unchanged.
    """
    r = point.curvature_frame
    ric2 = np.einsum("iikl->kl", r)
    if tau.value == 1.0:
        return ric2
    return ric2 + tau.source_weight * q_squared_frame(point.torsion_frame)


def ric_tau(point: ChernPoint, tau: TauParam, jet_ric2: np.ndarray | None = None) -> np.ndarray:
    """Tempered Ricci form in chart coordinates."""
    if jet_ric2 is None:
        x = point.g_up
        ric2 = np.einsum("ij,ijkl->kl", x, point.curvature, optimize=True)
    else:
        ric2 = jet_ric2
    if tau.value == 1.0:
        return ric2
    q_chart = point.q_squared_chart()
    return ric2 + tau.source_weight * q_chart


# ---------------------------------------------------------------------------
# extremizers


@dataclass(frozen=True)
class BoundCertificate:
    """Result of a multistart projected ascent.

    ``value`` re-evaluates exactly on ``witness``; ``samples`` counts the
    random starts and ``ascent_iterations`` the accepted steps across all of
    them.  ``kind`` is ``"sup"`` or ``"inf"``.
    """

    kind: str
    value: float
    witness: np.ndarray
    samples: int
    ascent_iterations: int
    tolerance: float


def _fd_gradient(objective: Callable, x: np.ndarray, step: float) -> np.ndarray:
    grad = np.zeros_like(x)
    for i in range(len(x)):
        bumped = x.copy()
        bumped[i] += step
        high = objective(bumped)
        bumped[i] -= 2 * step
        low = objective(bumped)
        grad[i] = (high - low) / (2 * step)
    return grad


def _ascend(
    objective: Callable,
    x0: np.ndarray,
    maximize: bool,
    steps: int,
    base_step: float = 1e-2,
    fd_step: float = 1e-5,
) -> tuple[np.ndarray, float, int]:
    x = x0.copy()
    value = objective(x)
    step = base_step
    accepted = 0
    for _ in range(steps):
        grad = _fd_gradient(objective, x, fd_step)
        if not maximize:
            grad = -grad
        scale = float(np.linalg.norm(grad))
        if scale == 0.0:
            break
        moved = False
        while step > 1e-14:
            candidate = x + step * grad / scale
            trial = objective(candidate)
            better = trial > value if maximize else trial < value
            if better:
                x, value = candidate, trial
                step = min(step * 1.3, 1.0)
                accepted += 1
                moved = True
                break
            step *= 0.5
        if not moved:
            break
    return x, value, accepted


def _thread_count() -> int:
    raw = os.environ.get("CURVLAB_THREADS", "1")
    try:
        count = int(raw)
    except ValueError as exc:
        raise ConfigError(f"CURVLAB_THREADS must be an integer, got '{raw}'") from exc
    return max(1, count)


def _multistart(
    objective: Callable,
    draw_start: Callable[[np.random.Generator], np.ndarray],
    kind: str,
    seed: int,
    starts: int,
    steps: int,
) -> tuple[np.ndarray, float, int]:
    if kind not in ("sup", "inf"):
        raise ConfigError(f"extremizer kind must be 'sup' or 'inf', got '{kind}'")
    maximize = kind == "sup"
    rng = np.random.default_rng(seed)
    initial = [draw_start(rng) for _ in range(starts)]

    def run(index: int) -> tuple[np.ndarray, float, int]:
        return _ascend(objective, initial[index], maximize, steps)

    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(starts)))
    else:
        results = [run(i) for i in range(starts)]

    # deterministic reduction: best value, ties broken by start index
    best_index = 0
    best_value = results[0][1]
    total_accepted = 0
    for i, (_, value, accepted) in enumerate(results):
        total_accepted += accepted
        better = value > best_value if maximize else value < best_value
        if better:
            best_index, best_value = i, value
    return results[best_index][0], best_value, total_accepted


def extremize_hsc(
    point: ChernPoint,
    kind: str,
    seed: int = 0,
    starts: int = 64,
    steps: int = 200,
) -> BoundCertificate:
    """Multistart ascent of holomorphic sectional curvature over unit vectors.

    The vector is parametrised by its ``2n`` real components; the functional
    is scale invariant so the ascent wanders freely and the witness is
    normalised at the end.
    """
    n = point.g.shape[0]

    def unpack(params: np.ndarray) -> np.ndarray:
        return params[:n] + 1j * params[n:]

    def objective(params: np.ndarray) -> float:
        zeta = unpack(params)
        norm = float(np.linalg.norm(zeta))
        if norm < 1e-12:
            return -math.inf if kind == "sup" else math.inf
        return hsc(point, zeta / norm)

    def draw(rng: np.random.Generator) -> np.ndarray:
        raw = rng.normal(size=2 * n)
        return raw / np.linalg.norm(raw)

    params, value, accepted = _multistart(objective, draw, kind, seed, starts, steps)
    witness = unpack(params)
    witness = witness / np.linalg.norm(witness)
    return BoundCertificate(
        kind=kind,
        value=value,
        witness=witness,
        samples=starts,
        ascent_iterations=accepted,
        tolerance=1e-12,
    )


def _hermitian_basis(n: int) -> list[np.ndarray]:
    basis = []
    for k in range(n):
        m = np.zeros((n, n), dtype=complex)
        m[k, k] = 1.0
        basis.append(m)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for k in range(n):
        for l in range(k + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[k, l] = inv_sqrt2
            m[l, k] = inv_sqrt2
            basis.append(m)
            m = np.zeros((n, n), dtype=complex)
            m[k, l] = 1j * inv_sqrt2
            m[l, k] = -1j * inv_sqrt2
            basis.append(m)
    return basis


def extremize_rbc(
    point: ChernPoint,
    tau: TauParam,
    kind: str,
    seed: int = 0,
    starts: int = 64,
    steps: int = 200,
) -> BoundCertificate:
    """Multistart projected ascent of ``RBC^tau`` over unit-norm PSD forms.

    The iterate lives in the real vector space of Hermitian matrices; every
    evaluation projects onto the positive semidefinite shell first, so the
    reported witness is always a valid form.
    """
    n = point.g.shape[0]
    basis = _hermitian_basis(n)
    dim = len(basis)

    def unpack(params: np.ndarray) -> np.ndarray:
        m = np.zeros((n, n), dtype=complex)
        for coeff, element in zip(params, basis):
            m = m + coeff * element
        return m

    def objective(params: np.ndarray) -> float:
        m = unpack(params)
        if float(np.linalg.norm(m)) < 1e-12:
            return -math.inf if kind == "sup" else math.inf
        try:
            form = psd_project(m)
        except Exception:
            return -math.inf if kind == "sup" else math.inf
        return rbc(point, form, tau)

    def draw(rng: np.random.Generator) -> np.ndarray:
        raw = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        h = hermitian_part(raw @ raw.conj().T)
        coeffs = np.array(
            [float(np.real(np.sum(h * np.conj(e)))) for e in basis]
        )
        return coeffs / np.linalg.norm(coeffs)

    params, value, accepted = _multistart(objective, draw, kind, seed, starts, steps)
    witness = psd_project(unpack(params))
    return BoundCertificate(
        kind=kind,
        value=value,
        witness=witness.entries,
        samples=starts,
        ascent_iterations=accepted,
        tolerance=1e-12,
    )
