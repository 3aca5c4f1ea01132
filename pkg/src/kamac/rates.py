"""Graph entropies and the three rate regions.

* ``slepian_wolf``: ``H(X_S | X_S^c)`` for direct transmission.
* ``inner``: the same bound on the transmitted inner images ``Y_p``.
* ``graph_lower`` / ``coloring_achievable``: characteristic-graph lower
  bounds and the Slepian-Wolf region of minimum-entropy colors.

Region keys are tuples of 0-based source indices.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConvergenceError, SizeCapError, ValidationError
from .graphs import (
    CharGraph,
    IndSetFamily,
    _bits,
    _mis_masks,
    build_char_graph,
    maximal_independent_sets,
    min_entropy_coloring,
    or_power,
    power_pmf,
)
from .ka import KaSystem, inner_image_distribution
from .prob import JointPmf, Pmf, conditional_entropy

__all__ = [
    "GraphEntropyResult",
    "Region",
    "RateReport",
    "Annotation",
    "subsets",
    "graph_entropy",
    "conditional_graph_entropy",
    "chromatic_rate_estimate",
    "sw_region",
    "inner_region",
    "graph_region",
    "compare",
]

LN2 = math.log(2.0)

GAP_TARGET = 1e-8
GAP_ACCEPT = 1e-6
MAX_FW_ITER = 100_000

COND_VERTEX_CAP = 12
COND_GIVEN_CAP = 64
RESTARTS = 16
MAX_AM_ITER = 20_000


@dataclass(frozen=True)
class GraphEntropyResult:
    """Körner graph entropy with its vertex-packing certificate.

    ``weights[i]`` is the mixture weight of ``family.sets[i]``; ``packing``
    is ``a_x = sum of weights of sets containing x`` aligned with the graph's
    vertices; ``duality_gap`` is the Frank-Wolfe gap in bits.
    """

    value: float
    weights: tuple
    family: IndSetFamily
    packing: tuple
    duality_gap: float
    iterations: int


def _vertex_weights(g: CharGraph, p) -> np.ndarray:
    if isinstance(p, Pmf):
        if p.symbols != tuple(g.vertices):
            raise ValidationError("pmf alphabet does not match the graph vertices")
        probs = p.probs
    else:
        probs = tuple(p)
        if len(probs) != len(g):
            raise ValidationError("weights do not match the graph vertices")
    w = np.array([float(v) for v in probs])
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValidationError("vertex weights must form a probability vector")
    return w


def _extend(g: CharGraph, mask: int) -> int:
    for v in range(len(g)):
        if not mask >> v & 1 and not g.adj[v] & mask:
            mask |= 1 << v
    return mask


def _line_search(p, a, d, hi) -> float:
    """Minimise ``-sum p log(a + t d)`` over ``t`` in ``[0, hi]``."""

    def slope(t):
        z = a + t * d
        if np.any(z <= 0):
            return math.inf
        return float(-np.sum(p * d / z))

    if slope(hi) <= 0:
        return hi
    lo, up = 0.0, hi
    t = 0.5 * hi
    for _ in range(200):
        s = slope(t)
        if s > 0:
            up = t
        else:
            lo = t
        z = a + t * d
        curv = float(np.sum(p * d * d / (z * z))) if math.isfinite(s) else 0.0
        nt = t - s / curv if curv > 0 and math.isfinite(s) else math.nan
        t = nt if lo < nt < up else 0.5 * (lo + up)
        if up - lo < 1e-15 * max(1.0, hi):
            break
    return t


def graph_entropy(g: CharGraph, p, *, tol: float = GAP_TARGET, max_iter: int = MAX_FW_ITER,
                  cap: int = 24) -> GraphEntropyResult:
    """Körner graph entropy ``min_{a in VP(G)} sum_x p_x log2(1/a_x)``.

    The vertex-packing polytope is parametrised by mixture weights over the
    maximal independent sets; minimisation is by away-step Frank-Wolfe whose
    linear subproblem is an exact maximum-weight independent set over the
    enumerated family.  Zero-probability vertices are dropped before solving
    and the optimal sets are extended back to maximal sets of ``g``.
    """
    if len(g) > cap:
        raise SizeCapError(f"{len(g)} vertices exceed the graph-entropy cap {cap}")
    w = _vertex_weights(g, p)
    support = [i for i in range(len(g)) if w[i] > 0]
    smask = sum(1 << i for i in support)
    local = _mis_masks(g.adj, smask)
    col = {v: c for c, v in enumerate(support)}
    A = np.zeros((len(local), len(support)))
    for r, m in enumerate(local):
        A[r, [col[v] for v in _bits(m)]] = 1.0
    ps = w[support]

    lam = np.full(len(local), 1.0 / len(local))
    gap = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        a = lam @ A
        scores = A @ (ps / a)
        s_idx = int(np.argmax(scores))
        gap = (float(scores[s_idx]) - 1.0) / LN2
        if gap <= tol:
            break
        active = np.flatnonzero(lam > 0)
        v_idx = int(active[np.argmin(scores[active])])
        away_gap = (1.0 - float(scores[v_idx])) / LN2
        if gap >= away_gap:
            dlam = -lam.copy()
            dlam[s_idx] += 1.0
            hi = 1.0
        else:
            if lam[v_idx] >= 1.0:
                break
            dlam = lam.copy()
            dlam[v_idx] -= 1.0
            hi = lam[v_idx] / (1.0 - lam[v_idx])
        t = _line_search(ps, a, dlam @ A, hi)
        lam = lam + t * dlam
        lam[lam < 1e-300] = 0.0
        lam /= lam.sum()
    a = lam @ A
    value = float(-np.sum(ps * np.log2(a)))

    full = [_extend(g, m) for m in local]
    order = sorted(range(len(full)), key=lambda r: tuple(_bits(full[r])))
    family = IndSetFamily(g.vertices, tuple(full[r] for r in order))
    weights = tuple(float(lam[r]) for r in order)
    packing = [0.0] * len(g)
    for wt, m in zip(weights, family.masks):
        for v in _bits(m):
            packing[v] += wt
    result = GraphEntropyResult(value, weights, family, tuple(packing), max(gap, 0.0), it)
    if gap > GAP_ACCEPT:
        raise ConvergenceError(f"graph entropy gap {gap:.3g} after {it} iterations")
    return result


def _cond_objective(pxz, q, r) -> float:
    # sum_{x,z} P(x,z) sum_w q(w|x) log2(q(w|x) / r(w|z))
    total = 0.0
    for xi in range(pxz.shape[0]):
        for zi in range(pxz.shape[1]):
            if pxz[xi, zi] > 0:
                qw = q[xi]
                nz = qw > 0
                total += pxz[xi, zi] * float(np.sum(qw[nz] * np.log2(qw[nz] / r[zi][nz])))
    return total


def conditional_graph_entropy(g: CharGraph, j: JointPmf, p: int, given: Sequence[int], *,
                              seed: int = 0, restarts: int = RESTARTS,
                              max_iter: int = MAX_AM_ITER, tol: float = 1e-13) -> float:
    """``min I(W; X_p | X_given)`` over ``X_p in W``, ``W`` a maximal independent set of ``g``,
    under the Markov chain ``W - X_p - X_given``.

    Alternating minimisation: ``r(w|z) = sum_x P(x|z) q(w|x)`` and the
    closed-form update ``q(w|x) ~ exp(sum_z P(z|x) ln r(w|z))`` over the sets
    containing ``x``.  The best of ``restarts`` random starts is returned.
    """
    given = tuple(int(i) for i in given)
    if p in given:
        raise ValidationError("conditioning set contains the source itself")
    if len(g) > COND_VERTEX_CAP:
        raise SizeCapError(f"{len(g)} vertices exceed the conditional cap {COND_VERTEX_CAP}")
    m = j.marginal((p,) + given)
    table = m.float_table().reshape(len(m.alphabets[0]), -1)
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] > COND_GIVEN_CAP:
        raise SizeCapError(f"conditioning support {table.shape[1]} exceeds cap {COND_GIVEN_CAP}")
    pxz = np.zeros((len(g), table.shape[1]))
    for row, sym in enumerate(m.alphabets[0].symbols):
        if table[row].sum() > 0:
            if sym not in g._index:
                raise ValidationError(f"support symbol {sym!r} is not a vertex of the graph")
            pxz[g.index(sym)] = table[row]
    px = pxz.sum(axis=1)
    pz = pxz.sum(axis=0)
    live = px > 0
    fam = maximal_independent_sets(g)
    allowed = fam.incidence().T.astype(bool)  # (x, w)
    p_x_given_z = pxz / pz
    p_z_given_x = np.divide(pxz, px[:, None], out=np.zeros_like(pxz), where=live[:, None])

    rng = np.random.default_rng(seed)
    best = math.inf
    converged_any = False
    for _ in range(restarts):
        q = np.where(allowed, rng.gamma(1.0, size=allowed.shape), 0.0)
        q /= q.sum(axis=1, keepdims=True)
        prev = math.inf
        converged = False
        for _ in range(max_iter):
            r = p_x_given_z.T @ q  # (z, w)
            with np.errstate(divide="ignore"):
                logr = np.log(r)
            score = np.where(allowed, 0.0, -np.inf)
            for zi in range(pxz.shape[1]):
                pz_x = p_z_given_x[:, zi][:, None]
                with np.errstate(invalid="ignore"):
                    score = score + np.where(pz_x > 0, pz_x * logr[zi][None, :], 0.0)
            score = np.where(allowed, score, -np.inf)
            score -= score.max(axis=1, keepdims=True)
            q = np.where(allowed, np.exp(score), 0.0)
            q /= q.sum(axis=1, keepdims=True)
            val = _cond_objective(pxz, q, p_x_given_z.T @ q)
            if prev - val < tol:
                converged = True
                break
            prev = val
        converged_any |= converged
        best = min(best, val)
    if not converged_any:
        raise ConvergenceError("conditional graph entropy did not converge on any restart")
    return max(best, 0.0)


def chromatic_rate_estimate(g: CharGraph, p: Pmf, k_max: int) -> list:
    """``H^chi(G^k)/k`` for ``k = 1..k_max`` under i.i.d. product laws."""
    if k_max < 1:
        raise ValidationError("k_max must be at least 1")
    if k_max > 2 or len(g) > 8:
        raise SizeCapError("chromatic rate estimates need k_max <= 2 and at most 8 vertices")
    out = []
    for k in range(1, k_max + 1):
        gk = or_power(g, k)
        _, h = min_entropy_coloring(gk, power_pmf(p, k), cap=len(gk))
        out.append(h / k)
    return out


# --------------------------------------------------------------------------
# regions


def subsets(n: int) -> list:
    """Non-empty subsets of ``range(n)`` ordered by size, then lexicographically."""
    return [c for size in range(1, n + 1) for c in itertools.combinations(range(n), size)]


@dataclass(frozen=True)
class Region:
    """Per-subset sum-rate values of one scheme for one source model."""

    scheme: str
    values: Mapping
    model: tuple
    notes: Mapping = field(default_factory=dict)


def sw_region(j: JointPmf) -> Region:
    values = {}
    for s in subsets(j.n):
        rest = tuple(i for i in range(j.n) if i not in s)
        values[s] = conditional_entropy(j, s, rest)
    return Region("slepian_wolf", values, j.fingerprint())


def inner_region(s: KaSystem, j: JointPmf) -> Region:
    """Slepian-Wolf bounds on the ``q = 0`` inner images."""
    if not s.scalar:
        raise ValidationError(f"{s.name} has a vector inner map; inner region needs a scalar one")
    jy = inner_image_distribution(s, j)
    return Region("inner", sw_region(jy).values, j.fingerprint())


def _graph_model(f, j: JointPmf, system: KaSystem | None):
    if system is None:
        return j, f
    return inner_image_distribution(system, j), system.receiver


def graph_region(f: Callable | None, j: JointPmf, *, system: KaSystem | None = None) -> tuple:
    """Characteristic-graph lower bounds and the coloring-achievable region.

    With ``system`` the graphs are built on the inner images and ``f`` is the
    receiver's outer computation.  Singleton subsets get conditional graph
    entropies; larger subsets get the sum of their members' singleton bounds,
    noted as ``"surrogate"``.  The achievable region is the Slepian-Wolf
    region of the joint law of per-source minimum-entropy colors.

    Returns ``(graph_lower, coloring_achievable, graphs, colorings)``.
    """
    model = j.fingerprint()
    jm, fm = _graph_model(f, j, system)
    n = jm.n
    graphs = [build_char_graph(jm, fm, p) for p in range(n)]
    singles = {}
    colorings = []
    for p in range(n):
        others = tuple(i for i in range(n) if i != p)
        if others:
            singles[p] = conditional_graph_entropy(graphs[p], jm, p, others)
        else:
            singles[p] = graph_entropy(graphs[p], jm.marginal_pmf(p)).value
        colorings.append(min_entropy_coloring(graphs[p], jm.marginal_pmf(p))[0])
    lower, notes = {}, {}
    for s in subsets(n):
        lower[s] = math.fsum(singles[p] for p in s)
        notes[s] = "exact" if len(s) == 1 else "surrogate"

    color_joint = _color_joint(jm, colorings)
    achievable = sw_region(color_joint).values
    return (
        Region("graph_lower", lower, model, notes),
        Region("coloring_achievable", achievable, model),
        graphs,
        colorings,
    )


def _color_joint(j: JointPmf, colorings) -> JointPmf:
    mass: dict = {}
    for x, pr in j.support():
        c = tuple(col.color_of(v) for col, v in zip(colorings, x))
        mass[c] = mass.get(c, 0) + pr
    return JointPmf.from_support(mass)


@dataclass(frozen=True)
class Annotation:
    """A printed value from the source analysis set against the computed one."""

    quantity: str
    location: str
    paper_value: float
    oracle_value: float | None
    tol: float = 5e-3

    @property
    def agree(self) -> bool | None:
        if self.oracle_value is None:
            return None
        return abs(self.paper_value - self.oracle_value) <= self.tol


@dataclass(frozen=True)
class RateReport:
    """Merged per-subset table of several schemes over one source model."""

    subsets: tuple
    rows: Mapping
    notes: Mapping
    flags: Mapping
    annotations: tuple = ()

    def value(self, scheme: str, subset) -> float | None:
        return self.rows[tuple(subset)].get(scheme)

    @property
    def consistent(self) -> bool:
        return all(v for fl in self.flags.values() for k, v in fl.items() if k.endswith("_ok"))


def compare(*regions: Region, annotations: Sequence[Annotation] = ()) -> RateReport:
    """Merge regions of the same source model into one table with ordering flags."""
    if not regions:
        raise ValidationError("nothing to compare")
    model = regions[0].model
    for r in regions[1:]:
        if r.model != model:
            raise ValidationError(f"region {r.scheme!r} was computed for a different source model")
    keys = tuple(regions[0].values)
    rows, notes, flags = {}, {}, {}
    for s in keys:
        row = {r.scheme: r.values[s] for r in regions if s in r.values}
        rows[s] = row
        notes[s] = {r.scheme: r.notes[s] for r in regions if s in r.notes}
        fl = {}
        sw, inner = row.get("slepian_wolf"), row.get("inner")
        lower, ach = row.get("graph_lower"), row.get("coloring_achievable")
        if sw is not None and inner is not None:
            fl["inner_le_sw_ok"] = inner <= sw + 1e-9
            fl["inner_gain"] = inner < sw - 1e-9
        if lower is not None and ach is not None:
            fl["lower_le_achievable_ok"] = lower <= ach + 1e-6
        if sw is not None and ach is not None:
            fl["coloring_gain"] = ach < sw - 1e-9
        flags[s] = fl
    return RateReport(keys, rows, notes, flags, tuple(annotations))
