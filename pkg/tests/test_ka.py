import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kamac import (
    DomainError,
    JointPmf,
    Pmf,
    ValidationError,
    catalog,
    entropy,
    evaluate_direct,
    gradient,
    hessian,
    inner_image_distribution,
    pipeline_evaluate,
    taylor2,
)
from kamac.ka import CATALOG_NAMES, target_function

finite = st.floats(-6, 6, allow_nan=False).filter(lambda v: abs(v) > 1e-3)


def test_sprecher_constants():
    s = catalog("product_abs_sprecher", {}, 3)
    assert s.q_range == tuple(range(7))
    assert s.constants["c"] == pytest.approx((math.e - 1) / (math.exp(7) - 1))
    assert s.inner_form == "log_b|x|"


def test_worked_outputs():
    assert pipeline_evaluate(catalog("product_abs_sprecher"), (3, -2)).output == pytest.approx(6, rel=1e-12)
    assert pipeline_evaluate(catalog("product_abs_simple"), (0, 7)).output == 0.0
    assert pipeline_evaluate(catalog("lm_norm", {"m": 2}), (3, 4)).output == pytest.approx(5)
    assert pipeline_evaluate(catalog("min"), (2, 5)).output == pytest.approx(2)
    assert pipeline_evaluate(catalog("affine", {"alphas": [1, 2]}), (1, -2)).output == pytest.approx(-3)


def test_trace_shapes_and_channel_sum():
    s = catalog("max")
    tr = pipeline_evaluate(s, (3, 3))
    assert tr.y_pq.shape == (2, 1, 3) and tr.y_q.shape == (1, 3)
    np.testing.assert_allclose(tr.y_q[0], [2, 6, 18])
    assert tr.output == pytest.approx(3)
    s = catalog("product_abs_sprecher", {}, 2)
    tr = pipeline_evaluate(s, (2, 5))
    np.testing.assert_allclose(tr.y_q, tr.y_pq.sum(axis=0))


def test_xor_direct_and_width():
    assert evaluate_direct("xor", {}, (1, 3)) == 2
    assert evaluate_direct("xor", {"width": 1}, (1, 3)) == 0
    assert evaluate_direct("xor", {"width": 1}, (2, 3)) == 1
    with pytest.raises(DomainError):
        evaluate_direct("xor", {}, (-1, 2))
    with pytest.raises(DomainError):
        pipeline_evaluate(catalog("xor"), (1, 2))


def test_catalog_errors():
    with pytest.raises(ValidationError):
        catalog("nope")
    with pytest.raises(ValidationError):
        catalog("max", {}, 3)
    with pytest.raises(ValidationError):
        catalog("affine", {"alphas": [1]}, 2)
    assert set(CATALOG_NAMES) >= {"lm_norm", "polynomial", "xor"}


def test_extremum_radicand_tolerates_rounding():
    s = catalog("min")
    for v in (0.1, 1e6, -7.3):
        assert pipeline_evaluate(s, (v, v)).output == pytest.approx(v)


def test_inner_images_merge_signs():
    s = catalog("lm_norm", {"m": 2})
    j = JointPmf.product(Pmf.uniform([-1, 0, 1]), Pmf.uniform([2]))
    jy = inner_image_distribution(s, j)
    assert jy.alphabets[0].symbols == (0, 1)
    assert jy.prob((1, 4)) == pytest.approx(2 / 3)
    assert entropy(jy.marginal_pmf(0)) < entropy(j.marginal_pmf(0))


def test_receiver_matches_direct_on_images():
    s = catalog("product_abs_simple")
    f = target_function("product_abs_simple")
    for x in [(-2, 1), (0, 4), (3, 4), (-2, -3)]:
        y = tuple(float(s.inner(float(v))[0]) for v in x)
        assert s.receiver(y) == pytest.approx(float(f(x)), abs=1e-12)


def test_non_differentiable_points():
    with pytest.raises(DomainError):
        gradient(catalog("product_abs_sprecher"), (0.0, 1.0))
    with pytest.raises(DomainError):
        hessian(catalog("lm_norm", {"m": 2}), (0.0, 0.0))


def test_product_gradient_and_quadratic_taylor():
    s = catalog("product_abs_sprecher")
    np.testing.assert_allclose(gradient(s, (2, 3)), [3, 2], rtol=1e-12)
    np.testing.assert_allclose(hessian(s, (2, 3)), [[0, 1], [1, 0]], atol=1e-12)
    # x1 x2 is quadratic, so the second-order expansion is exact for n = 2
    assert taylor2(s, (2, 3), (0.1, 0.1)) == pytest.approx(2.1 * 3.1, abs=1e-12)


def test_inner_curvature_term_matters():
    # psi(x) = x^2 has psi'' = 2; the full Hessian of sqrt(x1^2 + x2^2) at (3, 4)
    s = catalog("lm_norm", {"m": 2})
    h = hessian(s, (3.0, 4.0))
    r = 5.0
    want = np.array([[1 / r - 9 / r**3, -12 / r**3], [-12 / r**3, 1 / r - 16 / r**3]])
    np.testing.assert_allclose(h, want, rtol=1e-12)


@given(st.lists(finite, min_size=1, max_size=4))
@settings(max_examples=80, deadline=None)
def test_pipeline_equals_direct_any_n(x):
    n = len(x)
    for name, params in (("product_abs_sprecher", {}), ("lm_norm", {"m": 3}), ("polynomial", {"m": 3})):
        s = catalog(name, params, n)
        out = pipeline_evaluate(s, x).output
        direct = float(evaluate_direct(name, params, x))
        assert abs(out - direct) <= 1e-9 * max(1.0, abs(direct))


@given(st.tuples(finite, finite))
@settings(max_examples=60, deadline=None)
def test_gradient_matches_fd_property(x):
    x = np.array(x)
    for name, params in (("product_abs_simple", {}), ("lm_norm", {"m": 2}), ("polynomial", {"m": 2})):
        s = catalog(name, params)
        f = lambda z: float(evaluate_direct(name, params, tuple(z)))  # noqa: E731
        h = 1e-6
        fd = [(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(2)]
        g = gradient(s, x)
        assert np.max(np.abs(g - fd)) <= 1e-5 * max(1.0, np.max(np.abs(fd)))
