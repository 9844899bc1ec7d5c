"""Tests for the expression DSL, FD jets, built-in metrics, and the loader."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvlab.errors import ConfigError
from curvlab.metric_model import (
    Abs2,
    Add,
    Conj,
    ConjVar,
    Const,
    Div,
    JetScheme,
    Mul,
    Neg,
    Pow,
    Sub,
    Var,
    complex_jet2,
    eval_expr,
    example22,
    field_first,
    fixture,
    flat,
    holomorphic_derivative,
    hopf,
    is_holomorphic,
    load_metric,
    metric_jet,
    metric_value,
    parse_expr,
    poincare_polydisk,
    substitute,
    to_text,
    validate_metric,
)

# ---------------------------------------------------------------------------
# expression language


class TestParser:
    def test_simple_metric_entry(self):
        node = parse_expr("1 / (1 - abs2(z1))^2")
        z = np.array([0.5 + 0j])
        assert eval_expr(node, z) == pytest.approx(1.0 / 0.75**2)

    def test_precedence(self):
        node = parse_expr("1 + 2 * z1^2")
        assert eval_expr(node, np.array([3 + 0j])) == pytest.approx(19.0)

    def test_unary_minus_binds_inside_power(self):
        # grammar places '-' inside the power base: -z1^2 is (-z1)^2
        node = parse_expr("-z1^2")
        assert eval_expr(node, np.array([2 + 0j])) == pytest.approx(4.0)

    def test_imaginary_literal(self):
        node = parse_expr("2i * z1")
        assert eval_expr(node, np.array([1 + 0j])) == pytest.approx(2j)

    def test_conj_of_variable_folds(self):
        assert parse_expr("conj(z2)") == ConjVar(1)

    def test_abs2(self):
        node = parse_expr("abs2(z1 + 1i)")
        assert eval_expr(node, np.array([1 + 0j])) == pytest.approx(2.0)

    def test_negative_exponent(self):
        node = parse_expr("z1^-2")
        assert eval_expr(node, np.array([2 + 0j])) == pytest.approx(0.25)

    def test_error_carries_location(self):
        with pytest.raises(ConfigError, match=r"line 1, col 5"):
            parse_expr("z1 +")

    def test_unknown_identifier(self):
        with pytest.raises(ConfigError, match="unknown identifier 'w'"):
            parse_expr("w + 1")

    def test_fractional_exponent_rejected(self):
        with pytest.raises(ConfigError, match="integer"):
            parse_expr("z1^1.5")

    def test_trailing_garbage(self):
        with pytest.raises(ConfigError, match="trailing"):
            parse_expr("z1 z2")


def _leaves():
    nonneg_float = st.floats(
        min_value=0.0, max_value=100.0, allow_nan=False, allow_infinity=False
    )
    return st.one_of(
        nonneg_float.map(lambda x: Const(complex(x))),
        nonneg_float.map(lambda x: Const(complex(0.0, x))),
        st.integers(0, 2).map(Var),
        st.integers(0, 2).map(ConjVar),
    )


def _trees():
    def extend(children):
        return st.one_of(
            st.builds(Add, children, children),
            st.builds(Sub, children, children),
            st.builds(Mul, children, children),
            st.builds(Div, children, children),
            st.builds(Pow, children, st.integers(-3, 5)),
            st.builds(Conj, children.filter(lambda c: not isinstance(c, Var))),
            st.builds(Abs2, children),
            st.builds(Neg, children),
        )

    return st.recursive(_leaves(), extend, max_leaves=25)


class TestPrinter:
    @given(_trees())
    @settings(max_examples=300, deadline=None)
    def test_round_trip(self, tree):
        text = to_text(tree)
        assert parse_expr(text) == tree, f"round trip failed for {text!r}"

    def test_minimal_parens(self):
        assert to_text(parse_expr("z1 + z2 * z1")) == "z1 + z2 * z1"
        assert to_text(parse_expr("(z1 + z2) * z1")) == "(z1 + z2) * z1"


class TestSubstitute:
    def test_conj_var_becomes_conj_of_replacement(self):
        tree = Add(Var(0), ConjVar(0))
        replaced = substitute(tree, [Mul(Const(2 + 0j), Var(1))])
        z = np.array([0.0, 1 + 2j])
        assert eval_expr(replaced, z) == pytest.approx((2 + 4j) + (2 - 4j))

    def test_holomorphic_detection(self):
        assert is_holomorphic(parse_expr("z1^2 + 3 * z2"))
        assert not is_holomorphic(parse_expr("z1 + conj(z2)"))
        assert not is_holomorphic(parse_expr("abs2(z1)"))


class TestHolomorphicDerivative:
    def test_known_derivatives(self):
        z = np.array([0.7 - 0.2j, 0.3 + 0.4j])
        d = holomorphic_derivative(parse_expr("z1^3 * z2 + 5 * z1"), 0)
        assert eval_expr(d, z) == pytest.approx(3 * z[0] ** 2 * z[1] + 5)
        d = holomorphic_derivative(parse_expr("z1 / (1 - z2)"), 1)
        assert eval_expr(d, z) == pytest.approx(z[0] / (1 - z[1]) ** 2)
        d = holomorphic_derivative(parse_expr("(1 - z1)^-2"), 0)
        assert eval_expr(d, z) == pytest.approx(2.0 / (1 - z[0]) ** 3)

    def test_matches_finite_differences(self):
        tree = parse_expr("z1^2 * z2 - z2^3 / (2 + z1)")
        z0 = np.array([0.35 + 0.1j, -0.2 + 0.3j])
        for k in range(2):
            sym = eval_expr(holomorphic_derivative(tree, k), z0)

            def field(w):
                return np.asarray(eval_expr(tree, w))

            d, dbar = field_first(field, z0)
            assert abs(sym - complex(d[k])) < 1e-10
            assert abs(complex(dbar[k])) < 1e-10

    def test_conjugation_rejected(self):
        with pytest.raises(ConfigError):
            holomorphic_derivative(parse_expr("conj(z1)"), 0)
        with pytest.raises(ConfigError):
            holomorphic_derivative(parse_expr("abs2(z1) + z1"), 0)

    def test_constant_tree_collapses(self):
        d = holomorphic_derivative(parse_expr("3 * z2 + 1"), 0)
        assert d == Const(0)


# ---------------------------------------------------------------------------
# finite-difference jets


class TestJets:
    def test_polynomial_field_exact(self):
        # f = z1^2 conj(z1) + 3 z1: d = 2|z|^2 + 3, dbar = z^2, dd = 2z, ddh = 2 conj(z)
        def f(z):
            return z[0] ** 2 * np.conj(z[0]) + 3.0 * z[0]

        z0 = np.array([0.4 + 0.3j])
        jet = complex_jet2(f, z0)
        w = z0[0]
        # second derivatives are roundoff-limited near eps / h^2 ~ 1e-10
        assert abs(jet.d[0] - (2 * abs(w) ** 2 + 3)) < 1e-10
        assert abs(jet.dbar[0] - w**2) < 1e-10
        assert abs(jet.dd[0, 0] - 2 * w) < 5e-8
        assert abs(jet.dd_holo[0, 0] - 2 * np.conj(w)) < 5e-8

    def test_cross_derivatives(self):
        # f = z1 z2 conj(z2): dd[1, 2] = d_1 dbar_2 f = z2... indices 0-based below
        def f(z):
            return z[0] * z[1] * np.conj(z[1])

        z0 = np.array([0.2 - 0.1j, 0.3 + 0.5j])
        jet = complex_jet2(f, z0)
        assert abs(jet.dd[0, 1] - z0[1]) < 5e-8
        assert abs(jet.dd[1, 0]) < 5e-8
        assert abs(jet.dd_holo[0, 1] - np.conj(z0[1])) < 5e-8
        assert abs(jet.d[0] - z0[1] * np.conj(z0[1])) < 1e-10

    def test_field_first_matches_full_jet(self):
        def f(z):
            return np.array([z[0] ** 3, np.conj(z[0]) * z[0]])

        z0 = np.array([0.7 + 0.2j])
        jet = complex_jet2(f, z0)
        d, dbar = field_first(f, z0)
        assert np.allclose(d, jet.d, atol=1e-10)
        assert np.allclose(dbar, jet.dbar, atol=1e-10)

    def test_determinism(self):
        def f(z):
            return 1.0 / (1.0 - z[0] * np.conj(z[0]))

        z0 = np.array([0.3 + 0.4j])
        first = complex_jet2(f, z0)
        second = complex_jet2(f, z0)
        assert np.array_equal(first.dd, second.dd)
        assert np.array_equal(first.d, second.d)

    def test_order_controls_error(self):
        def f(z):
            return np.exp(z[0] * np.conj(z[0]))

        z0 = np.array([0.5 + 0.1j])
        r2 = abs(z0[0]) ** 2
        exact = (1 + r2) * np.exp(r2)

        def error(h, order):
            scheme = JetScheme(h=h, order=order, richardson=0)
            jet = complex_jet2(f, z0, scheme)
            return abs(jet.dd[0, 0] - exact)

        ratio2 = error(2e-2, 2) / error(1e-2, 2)
        ratio4 = error(4e-2, 4) / error(2e-2, 4)
        assert 2.5 < ratio2 < 6.0, f"order-2 halving ratio {ratio2:.2f}"
        assert 10.0 < ratio4 < 26.0, f"order-4 halving ratio {ratio4:.2f}"

    def test_scheme_validation(self):
        with pytest.raises(ConfigError):
            JetScheme(order=3)
        with pytest.raises(ConfigError):
            JetScheme(h=-1e-3)
        with pytest.raises(ConfigError):
            JetScheme(richardson=2)


# ---------------------------------------------------------------------------
# built-in metrics and the loader


class TestBuiltins:
    def test_flat_jets_vanish(self):
        spec = flat(2)
        jet = metric_jet(spec, np.array([0.3 + 0.2j, -0.5j]))
        assert np.allclose(jet.g, np.eye(2))
        assert np.max(np.abs(jet.d_g)) == 0.0
        assert np.max(np.abs(jet.dd_g)) == 0.0

    def test_fixture_one_origin_values(self):
        spec = fixture("F1")
        jet = metric_jet(spec, np.zeros(2, dtype=complex))
        assert np.allclose(jet.g, np.eye(2))
        assert jet.d_g[0, 1, 0] == pytest.approx(1.0)
        assert jet.d_g[1, 0, 0] == pytest.approx(-1.0)
        assert jet.dd_g[0, 0, 1, 1] == pytest.approx(0.5)
        assert jet.dd_g[0, 0, 0, 0] == pytest.approx(0.1)

    @pytest.mark.parametrize(
        "factory,point",
        [
            (lambda: poincare_polydisk(2), np.array([0.3 + 0.1j, -0.2j])),
            (lambda: hopf(2), np.array([0.6 + 0.2j, -0.4 + 0.3j])),
            (lambda: fixture("F1"), np.array([0.05 + 0.02j, -0.03j])),
        ],
    )
    def test_exact_jets_match_finite_differences(self, factory, point):
        spec = factory()
        exact = metric_jet(spec, point)
        assert exact.exact
        fd = metric_jet(spec, point, JetScheme(use_exact=False))
        assert not fd.exact
        assert np.max(np.abs(exact.g - fd.g)) < 1e-12
        assert np.max(np.abs(exact.d_g - fd.d_g)) < 1e-8, (
            f"first derivatives disagree by {np.max(np.abs(exact.d_g - fd.d_g)):.3e}"
        )
        assert np.max(np.abs(exact.dd_g - fd.dd_g)) < 1e-6, (
            f"mixed seconds disagree by {np.max(np.abs(exact.dd_g - fd.dd_g)):.3e}"
        )

    def test_jet_hermitian_consistency(self):
        # dd_g[i, j, k, l] = conj(dd_g[j, i, l, k]) for a Hermitian entry field
        spec = hopf(2)
        jet = metric_jet(spec, np.array([0.5 + 0.1j, 0.2 - 0.3j]))
        swapped = np.conj(np.transpose(jet.dd_g, (1, 0, 3, 2)))
        assert np.max(np.abs(jet.dd_g - swapped)) < 1e-12

    def test_example22_requires_antisymmetry(self):
        bad = np.zeros((2, 2, 2), dtype=complex)
        bad[0, 0, 0] = 1.0
        with pytest.raises(ConfigError, match="antisymmetric"):
            example22(2, bad, 0.0)

    def test_validation_passes_on_fixtures(self):
        for name in ("F1", "F2", "F3", "F4"):
            validate_metric(fixture(name))

    def test_point_dimension_mismatch(self):
        with pytest.raises(ConfigError, match="coordinates"):
            metric_jet(flat(2), np.zeros(3, dtype=complex))


class TestLoader:
    def test_round_trip(self, tmp_path):
        payload = {
            "n": 1,
            "entries": [["1 / (1 - abs2(z1))^2"]],
            "region": {"type": "polydisk", "radius": 1.0},
        }
        path = tmp_path / "disk.json"
        path.write_text(json.dumps(payload))
        spec = load_metric(path)
        assert spec.n == 1
        value = metric_value(spec, np.array([0.5 + 0j]))
        assert value[0, 0] == pytest.approx(1.0 / 0.75**2)

    def test_non_hermitian_rejected(self):
        payload = {
            "n": 2,
            "entries": [["1", "z1"], ["z1", "1"]],
            "region": {"type": "ball", "radius": 1.0},
        }
        with pytest.raises(ConfigError, match="Hermitian"):
            load_metric(payload)

    def test_variable_out_of_range(self):
        payload = {
            "n": 1,
            "entries": [["1 + abs2(z2)"]],
            "region": {"type": "ball", "radius": 1.0},
        }
        with pytest.raises(ConfigError, match="z2"):
            load_metric(payload)

    def test_unknown_region(self):
        payload = {
            "n": 1,
            "entries": [["1"]],
            "region": {"type": "torus", "radius": 1.0},
        }
        with pytest.raises(ConfigError, match="region"):
            load_metric(payload)

    def test_non_positive_metric_rejected(self):
        payload = {
            "n": 1,
            "entries": [["-1"]],
            "region": {"type": "ball", "radius": 1.0},
        }
        with pytest.raises(ConfigError, match="positive definite"):
            load_metric(payload)
