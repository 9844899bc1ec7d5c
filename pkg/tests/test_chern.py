"""Tests for Chern connection data against closed-form oracles.

Oracle values frozen from hand computations:

* fixture F1 at the origin: T[0,1,0] = 2, R[0,0,1,1] = 0.5,
  R[0,0,0,0] = -0.1, all four Ricci traces diag(0.4, 0.4) for the first two,
  Q^2[0,0] = 8, eta = (0, 2).
* product of Poincare disks, one factor: R[0,0,0,0] = -2 (1 - |z|^2)^{-4},
  Ricci = -2 g, torsion = 0.
* hopf metric: R[i,j,k,l] = delta_{kl} (delta_{ij} / |z|^4
  - conj(z_i) z_j / |z|^6), T[i,j,k] = (delta_{ik} conj(z_j)
  - delta_{jk} conj(z_i)) / |z|^2.
"""

import numpy as np
import pytest

from curvlab.chern import (
    ChernPoint,
    chern_curvature,
    chern_torsion,
    first_bianchi_residual,
    normal_coordinates,
    pluriclosed_residuals,
    q_squared_frame,
    ricci_traces,
    torsion_trace_frame,
)
from curvlab.metric_model import fixture, flat, hopf, metric_jet, poincare_polydisk


def hopf_curvature_oracle(z: np.ndarray) -> np.ndarray:
    n = len(z)
    r2 = float(np.sum(np.abs(z) ** 2))
    r = np.zeros((n, n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            coeff = (i == j) / r2**2 - np.conj(z[i]) * z[j] / r2**3
            for k in range(n):
                r[i, j, k, k] = coeff
    return r


def hopf_torsion_oracle(z: np.ndarray) -> np.ndarray:
    n = len(z)
    r2 = float(np.sum(np.abs(z) ** 2))
    t = np.zeros((n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                t[i, j, k] = ((i == k) * np.conj(z[j]) - (j == k) * np.conj(z[i])) / r2
    return t


class TestFixtureOneOrigin:
    def setup_method(self):
        self.jet = metric_jet(fixture("F1"), np.zeros(2, dtype=complex))

    def test_torsion(self):
        t = chern_torsion(self.jet)
        assert t[0, 1, 0] == pytest.approx(2.0)
        assert t[1, 0, 0] == pytest.approx(-2.0)
        assert np.max(np.abs(t + np.swapaxes(t, 0, 1))) < 1e-14

    def test_curvature_entries(self):
        r = chern_curvature(self.jet)
        assert r[0, 0, 1, 1] == pytest.approx(0.5)
        assert r[0, 0, 0, 0] == pytest.approx(-0.1)
        assert r[1, 1, 0, 0] == pytest.approx(0.5)

    def test_ricci_traces(self):
        traces = ricci_traces(self.jet)
        assert traces.ric2[0, 0] == pytest.approx(0.4)
        assert traces.ric1[0, 0] == pytest.approx(0.4)
        assert traces.ric2[1, 1] == pytest.approx(0.4)

    def test_torsion_square_and_trace(self):
        point = ChernPoint.from_jet(self.jet)
        q = q_squared_frame(point.torsion_frame)
        assert q[0, 0] == pytest.approx(8.0)
        eta = torsion_trace_frame(point.torsion_frame)
        assert eta[0] == pytest.approx(0.0)
        assert eta[1] == pytest.approx(2.0)


class TestPoincareDisk:
    def test_curvature_closed_form(self):
        spec = poincare_polydisk(1)
        for z in (0.3 + 0.2j, -0.5j, 0.7 + 0j):
            jet = metric_jet(spec, np.array([z]))
            r = chern_curvature(jet)
            s = 1 - abs(z) ** 2
            assert r[0, 0, 0, 0] == pytest.approx(-2.0 * s**-4, rel=1e-12)
            t = chern_torsion(jet)
            assert np.max(np.abs(t)) == 0.0

    def test_einstein_property(self):
        spec = poincare_polydisk(2)
        jet = metric_jet(spec, np.array([0.3 + 0.1j, -0.4j]))
        traces = ricci_traces(jet)
        for ric in (traces.ric1, traces.ric2, traces.ric3, traces.ric4):
            assert np.allclose(ric, -2.0 * jet.g, atol=1e-12)


class TestHopf:
    def setup_method(self):
        self.spec = hopf(2)
        self.z = np.array([0.6 + 0.2j, -0.4 + 0.3j])
        self.jet = metric_jet(self.spec, self.z)

    def test_curvature_closed_form(self):
        r = chern_curvature(self.jet)
        assert np.allclose(r, hopf_curvature_oracle(self.z), atol=1e-13)

    def test_torsion_closed_form(self):
        t = chern_torsion(self.jet)
        assert np.allclose(t, hopf_torsion_oracle(self.z), atol=1e-13)

    def test_hermitian_symmetry(self):
        r = chern_curvature(self.jet)
        swapped = np.conj(np.transpose(r, (1, 0, 3, 2)))
        assert np.max(np.abs(r - swapped)) < 1e-13

    def test_trace_structure(self):
        traces = ricci_traces(self.jet)
        assert np.max(np.abs(traces.ric1 - traces.ric1.conj().T)) < 1e-13
        assert np.max(np.abs(traces.ric2 - traces.ric2.conj().T)) < 1e-13
        # the mixed traces are mutual conjugate transposes
        assert np.max(np.abs(traces.ric4 - traces.ric3.conj().T)) < 1e-13


class TestStructuralIdentities:
    def test_q_squared_positive_semidefinite(self):
        for name in ("F1", "F3"):
            point = ChernPoint.from_spec(
                fixture(name), fixture(name).region.base_point(2)
            )
            q = q_squared_frame(point.torsion_frame)
            eigs = np.linalg.eigvalsh(q)
            assert eigs[0] > -1e-12, f"{name}: Q^2 has eigenvalue {eigs[0]:.3e}"

    def test_first_bianchi_on_fixtures(self):
        for name, z in (
            ("F1", np.array([0.05 + 0.02j, -0.04j])),
            ("F2", np.array([0.3 + 0.1j, 0.2j])),
            ("F3", np.array([0.7 + 0.1j, -0.3j])),
            ("F4", np.array([0.5 + 0.5j, 1.0 + 0j])),
        ):
            residual = first_bianchi_residual(fixture(name), z)
            assert residual < 1e-6, f"{name}: Bianchi residual {residual:.3e}"

    def test_pluriclosed_hopf_two(self):
        direct, symmetry = pluriclosed_residuals(self.hopf_jet())
        assert direct < 1e-12
        assert symmetry < 1e-12

    def hopf_jet(self):
        return metric_jet(hopf(2), np.array([0.8 + 0.1j, -0.2 + 0.5j]))

    def test_pluriclosed_kaehler(self):
        jet = metric_jet(poincare_polydisk(2), np.array([0.2 + 0.3j, -0.1j]))
        direct, symmetry = pluriclosed_residuals(jet)
        assert direct < 1e-12
        assert symmetry < 1e-12

    def test_not_pluriclosed_fixture_one(self):
        jet = metric_jet(fixture("F1"), np.zeros(2, dtype=complex))
        direct, symmetry = pluriclosed_residuals(jet)
        assert direct > 0.1
        # both routes measure the same defect
        assert abs(direct - symmetry) < 1e-10


class TestNormalChart:
    def test_flat_chart_is_exact(self):
        chart = normal_coordinates(flat(2), np.array([0.3 + 0.1j, -0.2j]))
        assert np.allclose(chart.S, np.eye(2))
        assert np.max(np.abs(chart.C)) < 1e-12
        for value in chart.residuals.values():
            assert value < 1e-10

    def test_fixture_one_origin_has_no_quadratic_term(self):
        # first derivatives at 0 are antisymmetric, so the quadratic
        # correction vanishes and S is the identity
        chart = normal_coordinates(fixture("F1"), np.zeros(2, dtype=complex))
        assert np.allclose(chart.S, np.eye(2), atol=1e-12)
        assert np.max(np.abs(chart.C)) < 1e-12
        assert chart.residuals["metric_identity"] < 1e-9
        assert chart.residuals["first_order"] < 1e-8
        assert chart.residuals["second_order"] < 1e-8

    def test_poincare_disk_at_interior_point(self):
        chart = normal_coordinates(poincare_polydisk(1), np.array([0.3 + 0j]))
        assert chart.residuals["metric_identity"] < 1e-8
        assert chart.residuals["first_order"] < 1e-8
        assert chart.residuals["second_order"] < 1e-8
