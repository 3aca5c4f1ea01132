"""Closed-form Kolmogorov-Arnold decompositions and their MAC pipeline.

A :class:`KaSystem` splits ``f(x)`` into

* inner maps ``Y_pq = alpha_p * psi(x_p + q*a)`` computed at source ``p``,
* a channel that adds the per-source contributions, ``Y_q = sum_p Y_pq``,
* an outer map at the receiver, ``f(x) = sum_q Phi(Y_q + q)``.

The channel is the deterministic sum.  Summation always runs over ``p`` in
source order for each ``q``, then over ``q`` in increasing order, so traces
are reproducible bit for bit.

``psi(0) = log|0|`` is represented by ``-inf``; ``Phi(-inf) = 0`` and any
channel sum containing ``-inf`` is ``-inf``, which keeps the product
pipelines total on integer alphabets containing zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from .errors import DomainError, ValidationError
from .prob import JointPmf, as_symbol

__all__ = [
    "CATALOG_NAMES",
    "KaSystem",
    "PipelineTrace",
    "catalog",
    "evaluate_direct",
    "target_function",
    "pipeline_evaluate",
    "inner_image_distribution",
    "gradient",
    "hessian",
    "taylor2",
]

CATALOG_NAMES = (
    "product_abs_sprecher",
    "product_abs_simple",
    "lm_norm",
    "polynomial",
    "max",
    "min",
    "affine",
    "xor",
)

NEG_INF = float("-inf")


def _vec(*values) -> np.ndarray:
    return np.array(values, dtype=float)


@dataclass(frozen=True)
class KaSystem:
    """One closed-form decomposition.

    ``inner``/``inner_d1``/``inner_d2`` map a real to a length-``dim`` vector
    (``dim == 1`` for scalar inner maps).  ``outer`` maps a length-``dim``
    vector to a real; ``outer_grad`` and ``outer_hess`` are its gradient and
    Hessian.  ``inner_form``/``outer_form`` record the symbolic shape of the
    maps, with the free constants in ``constants``.
    """

    name: str
    n: int
    params: tuple
    inner: Callable
    inner_d1: Callable
    inner_d2: Callable
    alphas: tuple
    shift: float
    q_range: tuple
    outer: Callable
    outer_grad: Callable
    outer_hess: Callable
    inner_form: str
    outer_form: str
    constants: Mapping = field(default_factory=dict)
    dim: int = 1
    exact_inner: Callable | None = None

    @property
    def scalar(self) -> bool:
        return self.dim == 1

    def param(self, key, default=None):
        return dict(self.params).get(key, default)

    def receiver(self, y) -> float:
        """Receiver output from the ``q = 0`` inner images ``y_p = alpha_p psi(x_p)``.

        Valid when the images do not depend on ``q`` (shift ``a = 0``).
        For the vector-valued entries the image of ``x_p`` is ``x_p`` itself.
        """
        if not self.scalar:
            return evaluate_direct(self.name, dict(self.params), y)
        if self.shift != 0:
            raise DomainError("receiver on q=0 images needs shift a = 0")
        total = math.fsum(float(v) for v in y) if NEG_INF not in y else NEG_INF
        acc = 0.0
        for q in self.q_range:
            acc += float(self.outer(_vec(total + q)))
        return acc


@dataclass(frozen=True)
class PipelineTrace:
    """All intermediate values for one realization."""

    x: tuple
    y_pq: np.ndarray  # shape (n, len(q_range), dim)
    y_q: np.ndarray  # shape (len(q_range), dim)
    output: float


# --------------------------------------------------------------------------
# inner/outer building blocks


def _log_abs(base):
    scale = 1.0 / math.log(base)

    def psi(x):
        x = float(x)
        return _vec(NEG_INF if x == 0 else math.log(abs(x)) * scale)

    def d1(x):
        x = float(x)
        if x == 0:
            raise DomainError("log|x| is not differentiable at 0")
        return _vec(scale / x)

    def d2(x):
        x = float(x)
        if x == 0:
            raise DomainError("log|x| is not differentiable at 0")
        return _vec(-scale / (x * x))

    return psi, d1, d2


def _exp_outer(base, coeff):
    log_b = math.log(base)

    def phi(y):
        y = float(y[0])
        return 0.0 if y == NEG_INF else coeff * math.exp(y * log_b)

    def grad(y):
        return _vec(log_b * phi(y))

    def hess(y):
        return np.array([[log_b * log_b * phi(y)]])

    return phi, grad, hess


def _abs_pow(m):
    def psi(x):
        return _vec(abs(float(x)) ** m)

    def d1(x):
        x = float(x)
        if m == 1:
            if x == 0:
                raise DomainError("|x| is not differentiable at 0")
            return _vec(math.copysign(1.0, x))
        return _vec(m * abs(x) ** (m - 1) * math.copysign(1.0, x) if x else 0.0)

    def d2(x):
        x = float(x)
        if m == 1:
            if x == 0:
                raise DomainError("|x| is not differentiable at 0")
            return _vec(0.0)
        return _vec(m * (m - 1) * abs(x) ** (m - 2))

    return psi, d1, d2


def _root_outer(m):
    inv = 1.0 / m

    def phi(y):
        y = float(y[0])
        if y < 0:
            raise DomainError(f"x^(1/m) needs a non-negative argument, got {y}")
        return y**inv

    def grad(y):
        y = float(y[0])
        if m == 1:
            return _vec(1.0)
        if y <= 0:
            raise DomainError("x^(1/m) is not differentiable at 0")
        return _vec(inv * y ** (inv - 1))

    def hess(y):
        y = float(y[0])
        if m == 1:
            return np.array([[0.0]])
        if y <= 0:
            raise DomainError("x^(1/m) is not differentiable at 0")
        return np.array([[inv * (inv - 1) * y ** (inv - 2)]])

    return phi, grad, hess


def _identity_inner():
    return (lambda x: _vec(float(x))), (lambda x: _vec(1.0)), (lambda x: _vec(0.0))


def _power_outer(m):
    def phi(y):
        return float(y[0]) ** m

    def grad(y):
        return _vec(m * float(y[0]) ** (m - 1))

    def hess(y):
        return np.array([[m * (m - 1) * float(y[0]) ** (m - 2) if m >= 2 else 0.0]])

    return phi, grad, hess


def _moment_inner():
    # psi(x) = (1, x, x^2)
    return (
        lambda x: _vec(1.0, float(x), float(x) ** 2),
        lambda x: _vec(0.0, 1.0, 2.0 * float(x)),
        lambda x: _vec(0.0, 0.0, 2.0),
    )


def _extremum_outer(sign):
    # Phi(y) = y_2/2 + sign * sqrt(2 y_3 - y_2^2)/2, and 2 y_3 - y_2^2 = (x_1 - x_2)^2.
    def radicand(y):
        r = 2.0 * y[2] - y[1] * y[1]
        if r < 0:
            if r < -1e-12 * max(1.0, abs(2.0 * y[2])):
                raise DomainError(f"negative radicand {r} in the extremum outer map")
            r = 0.0
        return r

    def phi(y):
        return 0.5 * y[1] + sign * 0.5 * math.sqrt(radicand(y))

    def grad(y):
        r = radicand(y)
        if r == 0:
            raise DomainError("max/min are not differentiable where x_1 = x_2")
        s = math.sqrt(r)
        dr = _vec(0.0, -2.0 * y[1], 2.0)
        return _vec(0.0, 0.5, 0.0) + sign * 0.5 * dr / (2.0 * s)

    def hess(y):
        r = radicand(y)
        if r == 0:
            raise DomainError("max/min are not differentiable where x_1 = x_2")
        s = math.sqrt(r)
        dr = _vec(0.0, -2.0 * y[1], 2.0)
        d2r = np.diag([0.0, -2.0, 0.0])
        return sign * 0.5 * (d2r / (2.0 * s) - np.outer(dr, dr) / (4.0 * r * s))

    return phi, grad, hess


def _positive_int(value, what):
    if isinstance(value, bool) or int(value) != value or int(value) < 1:
        raise ValidationError(f"{what} must be a positive integer, got {value!r}")
    return int(value)


def catalog(name: str, params: Mapping | None = None, n: int = 2) -> KaSystem:
    """Closed-form decomposition for one catalog function.

    ``params``: ``m`` for ``lm_norm``/``polynomial``, ``alphas`` for
    ``affine``, optional ``width`` (number of low bits) for ``xor``.
    """
    params = dict(params or {})
    n = _positive_int(n, "n")
    ones = tuple(1.0 for _ in range(n))
    common = dict(name=name, n=n, shift=0.0)

    if name == "product_abs_sprecher":
        psi, d1, d2 = _log_abs(math.e)
        coeff = (math.e - 1.0) / (math.exp(2 * n + 1) - 1.0)
        phi, g, h = _exp_outer(math.e, coeff)
        return KaSystem(
            **common, params=(), inner=psi, inner_d1=d1, inner_d2=d2, alphas=ones,
            q_range=tuple(range(2 * n + 1)), outer=phi, outer_grad=g, outer_hess=h,
            inner_form="log_b|x|", outer_form="c*b^x",
            constants={"b": math.e, "c": coeff, "a": 0.0},
        )
    if name == "product_abs_simple":
        psi, d1, d2 = _log_abs(2.0)
        phi, g, h = _exp_outer(2.0, 1.0)
        return KaSystem(
            **common, params=(), inner=psi, inner_d1=d1, inner_d2=d2, alphas=ones,
            q_range=(0,), outer=phi, outer_grad=g, outer_hess=h,
            inner_form="log_b|x|", outer_form="c*b^x", constants={"b": 2.0, "c": 1.0, "a": 0.0},
        )
    if name == "lm_norm":
        m = _positive_int(params.get("m", 2), "m")
        psi, d1, d2 = _abs_pow(m)
        phi, g, h = _root_outer(m)
        return KaSystem(
            **common, params=(("m", m),), inner=psi, inner_d1=d1, inner_d2=d2, alphas=ones,
            q_range=(0,), outer=phi, outer_grad=g, outer_hess=h,
            inner_form="|x|^m", outer_form="x^(1/m)", constants={"m": m, "a": 0.0},
            exact_inner=lambda x: abs(x) ** m,
        )
    if name == "polynomial":
        m = _positive_int(params.get("m", 2), "m")
        psi, d1, d2 = _identity_inner()
        phi, g, h = _power_outer(m)
        return KaSystem(
            **common, params=(("m", m),), inner=psi, inner_d1=d1, inner_d2=d2, alphas=ones,
            q_range=(0,), outer=phi, outer_grad=g, outer_hess=h,
            inner_form="x", outer_form="x^m", constants={"m": m, "a": 0.0},
            exact_inner=lambda x: x,
        )
    if name in ("max", "min"):
        if n != 2:
            raise ValidationError(f"{name} is only catalogued for n = 2, got n = {n}")
        psi, d1, d2 = _moment_inner()
        phi, g, h = _extremum_outer(1.0 if name == "max" else -1.0)
        return KaSystem(
            **common, params=(), inner=psi, inner_d1=d1, inner_d2=d2, alphas=ones,
            q_range=(0,), outer=phi, outer_grad=g, outer_hess=h,
            inner_form="(1,x,x^2)", outer_form="y2/2 +- sqrt(2*y3 - y2^2)/2",
            constants={"a": 0.0}, dim=3,
        )
    if name == "affine":
        alphas = params.get("alphas")
        if alphas is None or len(alphas) != n:
            raise ValidationError(f"affine needs {n} weights in params['alphas']")
        exact_alphas = tuple(as_symbol(a) for a in alphas)
        psi, d1, d2 = _identity_inner()
        return KaSystem(
            **common, params=(("alphas", exact_alphas),), inner=psi, inner_d1=d1, inner_d2=d2,
            alphas=tuple(float(a) for a in exact_alphas), q_range=(0,),
            outer=lambda y: float(y[0]), outer_grad=lambda y: _vec(1.0),
            outer_hess=lambda y: np.zeros((1, 1)),
            inner_form="x", outer_form="x", constants={"a": 0.0},
            exact_inner=lambda x: x,
        )
    if name == "xor":
        width = params.get("width")
        if width is not None:
            width = _positive_int(width, "width")

        def _unsupported(*_):
            raise DomainError("xor has no closed-form KA decomposition")

        return KaSystem(
            **common, params=(("width", width),), inner=_unsupported, inner_d1=_unsupported,
            inner_d2=_unsupported, alphas=ones, q_range=(), outer=_unsupported,
            outer_grad=_unsupported, outer_hess=_unsupported,
            inner_form="", outer_form="", constants={},
        )
    raise ValidationError(f"unknown catalog entry {name!r}; expected one of {CATALOG_NAMES}")


def _xor_operand(v, width):
    if isinstance(v, float):
        if not v.is_integer():
            raise DomainError(f"xor needs integer inputs, got {v}")
        v = int(v)
    if isinstance(v, Fraction):
        if v.denominator != 1:
            raise DomainError(f"xor needs integer inputs, got {v}")
        v = int(v)
    if v < 0:
        raise DomainError(f"xor needs non-negative inputs, got {v}")
    return v if width is None else v & ((1 << width) - 1)


def evaluate_direct(name: str, params: Mapping | None, x) -> object:
    """Literal evaluation of the catalog function (the ground-truth oracle)."""
    params = dict(params or {})
    x = tuple(x)
    if name in ("product_abs_sprecher", "product_abs_simple", "product_abs"):
        out = 1
        for v in x:
            out = out * abs(v)
        return out
    if name == "lm_norm":
        m = int(params.get("m", 2))
        return math.fsum(abs(float(v)) ** m for v in x) ** (1.0 / m)
    if name == "polynomial":
        m = int(params.get("m", 2))
        return sum(x) ** m
    if name == "max":
        return max(x)
    if name == "min":
        return min(x)
    if name == "affine":
        alphas = params["alphas"]
        if len(alphas) != len(x):
            raise ValidationError(f"affine has {len(alphas)} weights for {len(x)} inputs")
        return sum(as_symbol(a) * v for a, v in zip(alphas, x))
    if name == "xor":
        width = params.get("width")
        out = 0
        for v in x:
            out ^= _xor_operand(v, width)
        return out
    raise ValidationError(f"unknown catalog entry {name!r}")


def target_function(name: str, params: Mapping | None = None) -> Callable[[tuple], object]:
    """``f(x)`` as a callable on realizations, for graph and pushforward use."""
    params = dict(params or {})
    return lambda x: evaluate_direct(name, params, x)


def _check_arity(s: KaSystem, x) -> tuple:
    x = tuple(x)
    if len(x) != s.n:
        raise ValidationError(f"{s.name} expects {s.n} inputs, got {len(x)}")
    if s.name == "xor":
        raise DomainError("the xor entry has no KA pipeline")
    return x


def _inner_block(s: KaSystem, x) -> np.ndarray:
    """``Y_pq`` as an array of shape (n, len(q_range), dim)."""
    y = np.empty((s.n, len(s.q_range), s.dim))
    for p, (alpha, xp) in enumerate(zip(s.alphas, x)):
        for k, q in enumerate(s.q_range):
            y[p, k] = alpha * s.inner(float(xp) + q * s.shift)
    return y


def _channel(y_pq: np.ndarray) -> np.ndarray:
    y_q = y_pq[0].copy()
    for p in range(1, y_pq.shape[0]):
        y_q = y_q + y_pq[p]
    return y_q


def pipeline_evaluate(s: KaSystem, x) -> PipelineTrace:
    """Sources -> additive channel -> receiver for one realization."""
    x = _check_arity(s, x)
    y_pq = _inner_block(s, x)
    with np.errstate(invalid="ignore"):
        y_q = _channel(y_pq)
    output = 0.0
    for k, q in enumerate(s.q_range):
        output += float(s.outer(y_q[k] + q))
    return PipelineTrace(x=x, y_pq=y_pq, y_q=y_q, output=output)


def inner_image_distribution(s: KaSystem, j: JointPmf) -> JointPmf:
    """Exact joint law of the transmitted images ``Y_p = alpha_p psi(x_p)``.

    Only the ``q = 0`` representative is used.  Colliding images merge mass.
    For the vector-valued entries the image is in bijection with ``x_p``, so
    ``Y_p := x_p``.
    """
    if s.name == "xor":
        raise DomainError("the xor entry has no inner map")
    if j.n != s.n:
        raise ValidationError(f"{s.name} has n = {s.n} but the joint pmf has {j.n} coordinates")
    if not s.scalar:
        return j

    def image(p, v):
        if s.exact_inner is not None:
            alpha = s.param("alphas")[p] if s.name == "affine" else 1
            return as_symbol(alpha * s.exact_inner(v))
        return as_symbol(s.alphas[p] * float(s.inner(float(v))[0]))

    mass: dict = {}
    for x, prob in j.support():
        y = tuple(image(p, v) for p, v in enumerate(x))
        mass[y] = mass.get(y, 0) + prob
    return JointPmf.from_support(mass)


# --------------------------------------------------------------------------
# calculus through the decomposition


def _chain_parts(s: KaSystem, x):
    x = _check_arity(s, x)
    xf = [float(v) for v in x]
    y_pq = _inner_block(s, xf)
    y_q = _channel(y_pq)
    if not np.all(np.isfinite(y_q)):
        raise DomainError(f"{s.name} is not differentiable at {tuple(xf)}")
    return xf, y_q


def gradient(s: KaSystem, x) -> np.ndarray:
    """Gradient assembled as ``sum_q Phi'(Y_q + q) . alpha_p psi'(x_p + q a)``."""
    xf, y_q = _chain_parts(s, x)
    g = np.zeros(s.n)
    for k, q in enumerate(s.q_range):
        outer_g = s.outer_grad(y_q[k] + q)
        for p in range(s.n):
            g[p] += float(outer_g @ (s.alphas[p] * s.inner_d1(xf[p] + q * s.shift)))
    return g


def hessian(s: KaSystem, x) -> np.ndarray:
    """Hessian through the decomposition.

    The outer-curvature term ``sum_q J_q^T Phi''(Y_q + q) J_q`` is completed
    by the diagonal inner-curvature term
    ``sum_q Phi'(Y_q + q) . alpha_p psi''(x_p + q a)``; without it the result
    is wrong whenever ``psi`` is not affine.
    """
    xf, y_q = _chain_parts(s, x)
    h = np.zeros((s.n, s.n))
    for k, q in enumerate(s.q_range):
        z = y_q[k] + q
        outer_g = s.outer_grad(z)
        outer_h = s.outer_hess(z)
        jac = np.array([s.alphas[p] * s.inner_d1(xf[p] + q * s.shift) for p in range(s.n)])
        h += jac @ outer_h @ jac.T
        for p in range(s.n):
            h[p, p] += float(outer_g @ (s.alphas[p] * s.inner_d2(xf[p] + q * s.shift)))
    return h


def taylor2(s: KaSystem, x, dx) -> float:
    """Second-order prediction of ``f(x + dx)`` from the KA gradient and Hessian."""
    dx = np.asarray(dx, dtype=float)
    if dx.shape != (s.n,):
        raise ValidationError(f"dx must have {s.n} components")
    f0 = pipeline_evaluate(s, x).output
    return f0 + float(gradient(s, x) @ dx) + 0.5 * float(dx @ hessian(s, x) @ dx)
