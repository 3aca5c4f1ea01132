"""Characteristic graphs, OR-powers, independent sets and colorings.

Graphs are small (tens of vertices), so adjacency is stored as one integer
bitmask per vertex and every enumeration is exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import SizeCapError, ValidationError
from .prob import JointPmf, Pmf, as_symbol

__all__ = [
    "CharGraph",
    "Coloring",
    "IndSetFamily",
    "values_equal",
    "build_char_graph",
    "build_conditional_char_graph",
    "or_power",
    "power_pmf",
    "maximal_independent_sets",
    "min_entropy_coloring",
    "coloring_entropy",
    "chromatic_number",
    "to_dot",
]

EDGE_RULES = ("pointwise", "global")

MIS_CAP = 24
COLORING_CAP = 12
CHROMATIC_CAP = 16
POWER_CAP = 4096

_TIE = 1e-12


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def values_equal(a, b) -> bool:
    """Function outputs compare equal up to float round-off (rel 1e-9)."""
    if a == b:
        return True
    try:
        return math.isclose(float(a), float(b), rel_tol=1e-9, abs_tol=1e-12)
    except (TypeError, OverflowError):
        return False


@dataclass(frozen=True)
class CharGraph:
    """Undirected simple graph on a tuple of vertex labels.

    ``adj[i]`` is the bitmask of neighbours of ``vertices[i]``.
    ``provenance`` records how the graph was built.
    """

    vertices: tuple
    adj: tuple
    source_index: int | None = None
    provenance: tuple = ()

    def __post_init__(self):
        if len(self.adj) != len(self.vertices):
            raise ValidationError("adjacency length does not match vertex count")
        if len(set(self.vertices)) != len(self.vertices):
            raise ValidationError("vertex labels must be distinct")
        for i, row in enumerate(self.adj):
            if row >> i & 1:
                raise ValidationError(f"self-loop at {self.vertices[i]!r}")
            for k in _bits(row):
                if not self.adj[k] >> i & 1:
                    raise ValidationError("adjacency is not symmetric")

    @classmethod
    def from_edges(cls, vertices: Sequence, edges, **kwargs) -> "CharGraph":
        vertices = tuple(vertices)
        index = {v: i for i, v in enumerate(vertices)}
        adj = [0] * len(vertices)
        for u, v in edges:
            i, k = index[u], index[v]
            if i == k:
                raise ValidationError(f"self-loop at {u!r}")
            adj[i] |= 1 << k
            adj[k] |= 1 << i
        return cls(vertices, tuple(adj), **kwargs)

    @classmethod
    def complete(cls, vertices: Sequence, **kwargs) -> "CharGraph":
        vertices = tuple(vertices)
        full = (1 << len(vertices)) - 1
        return cls(vertices, tuple(full & ~(1 << i) for i in range(len(vertices))), **kwargs)

    @classmethod
    def empty(cls, vertices: Sequence, **kwargs) -> "CharGraph":
        vertices = tuple(vertices)
        return cls(vertices, (0,) * len(vertices), **kwargs)

    def __len__(self):
        return len(self.vertices)

    @cached_property
    def _index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    def index(self, vertex) -> int:
        try:
            return self._index[vertex]
        except KeyError:
            raise ValidationError(f"{vertex!r} is not a vertex") from None

    @cached_property
    def edges(self) -> tuple:
        """Edges as sorted index pairs ``(i, k)`` with ``i < k``."""
        return tuple((i, k) for i, row in enumerate(self.adj) for k in _bits(row) if i < k)

    @property
    def edge_symbols(self) -> tuple:
        return tuple((self.vertices[i], self.vertices[k]) for i, k in self.edges)

    def has_edge(self, u, v) -> bool:
        return bool(self.adj[self.index(u)] >> self.index(v) & 1)

    def degree(self, vertex) -> int:
        return self.adj[self.index(vertex)].bit_count()

    def with_edge(self, u, v) -> "CharGraph":
        i, k = self.index(u), self.index(v)
        if i == k:
            raise ValidationError("cannot add a self-loop")
        adj = list(self.adj)
        adj[i] |= 1 << k
        adj[k] |= 1 << i
        return CharGraph(self.vertices, tuple(adj), self.source_index, self.provenance)

    def is_independent(self, indices) -> bool:
        mask = sum(1 << i for i in indices)
        return all(not (self.adj[i] & mask) for i in indices)


@dataclass(frozen=True)
class Coloring:
    """Proper coloring; ``assignment[i]`` is the color of ``vertices[i]``.

    Colors are numbered by first occurrence in vertex order.
    """

    vertices: tuple
    assignment: tuple

    @property
    def num_colors(self) -> int:
        return max(self.assignment) + 1 if self.assignment else 0

    def color_of(self, vertex) -> int:
        return self.assignment[self.vertices.index(vertex)]

    @property
    def classes(self) -> tuple:
        out = [[] for _ in range(self.num_colors)]
        for v, c in zip(self.vertices, self.assignment):
            out[c].append(v)
        return tuple(tuple(c) for c in out)

    def is_proper(self, g: CharGraph) -> bool:
        return all(self.assignment[i] != self.assignment[k] for i, k in g.edges)


@dataclass(frozen=True)
class IndSetFamily:
    """Maximal independent sets as vertex bitmasks, canonically ordered."""

    vertices: tuple
    masks: tuple

    def __len__(self):
        return len(self.masks)

    def __iter__(self):
        return iter(self.sets)

    @property
    def indices(self) -> tuple:
        return tuple(tuple(_bits(m)) for m in self.masks)

    @property
    def sets(self) -> tuple:
        return tuple(tuple(self.vertices[i] for i in idx) for idx in self.indices)

    def incidence(self) -> np.ndarray:
        """0/1 matrix of shape (num_sets, num_vertices)."""
        out = np.zeros((len(self.masks), len(self.vertices)))
        for r, idx in enumerate(self.indices):
            out[r, list(idx)] = 1.0
        return out


# --------------------------------------------------------------------------
# construction


def _check_index(j: JointPmf, p: int) -> int:
    if not 0 <= p < j.n:
        raise ValidationError(f"source index {p} out of range for {j.n} sources")
    return p


def _evaluate(f, x):
    z = f(x)
    return z.item() if isinstance(z, np.generic) else z


def _edges_from_groups(groups: Mapping, index: Mapping) -> list:
    adj = [0] * len(index)
    for members in groups.values():
        for (u, fu), (v, fv) in itertools.combinations(members, 2):
            if u != v and not values_equal(fu, fv):
                i, k = index[u], index[v]
                adj[i] |= 1 << k
                adj[k] |= 1 << i
    return adj


def build_char_graph(j: JointPmf, f: Callable[[tuple], object], p: int, *, label=None) -> CharGraph:
    """Characteristic graph of source ``p`` for computing ``f``.

    ``u`` and ``v`` are adjacent iff some assignment of the other coordinates
    has positive probability jointly with both and separates them under ``f``.
    """
    p = _check_index(j, p)
    vertices = j.alphabets[p].symbols
    index = {v: i for i, v in enumerate(vertices)}
    groups: dict = {}
    for x, _ in j.support():
        rest = x[:p] + x[p + 1 :]
        groups.setdefault(rest, []).append((x[p], _evaluate(f, x)))
    adj = _edges_from_groups(groups, index)
    return CharGraph(vertices, tuple(adj), p, ("char", label, None))


def build_conditional_char_graph(
    j: JointPmf,
    f: Callable[[tuple], object],
    p: int,
    fixed: Mapping[int, object],
    *,
    rule: str = "pointwise",
    label=None,
) -> CharGraph:
    """Characteristic graph of source ``p`` given ``X_i = fixed[i]``.

    Vertices are the conditional support of ``X_p``.  Under the
    ``"pointwise"`` rule the fixed coordinates stay pinned and only the
    remaining ones are quantified; under ``"global"`` the edges are those of
    the unconditional graph restricted to the conditional support.
    """
    p = _check_index(j, p)
    if rule not in EDGE_RULES:
        raise ValidationError(f"edge rule must be one of {EDGE_RULES}, got {rule!r}")
    fixed = {int(i): as_symbol(v) for i, v in fixed.items()}
    for i, v in fixed.items():
        _check_index(j, i)
        if i == p:
            raise ValidationError("cannot condition a source on itself")
        if v not in j.alphabets[i]:
            raise ValidationError(f"value {v!r} not in the alphabet of source {i}")
    points = [(x, pr) for x, pr in j.support() if all(x[i] == v for i, v in fixed.items())]
    if not points:
        raise ValidationError(f"conditioning event {fixed} has zero probability")
    support = sorted({x[p] for x, _ in points})
    provenance = ("conditional", label, tuple(sorted(fixed.items())), rule)

    if rule == "global":
        base = build_char_graph(j, f, p)
        keep = [base.index(v) for v in support]
        adj = []
        for i in keep:
            adj.append(sum(1 << r for r, k in enumerate(keep) if base.adj[i] >> k & 1))
        return CharGraph(tuple(support), tuple(adj), p, provenance)

    index = {v: i for i, v in enumerate(support)}
    groups: dict = {}
    for x, _ in points:
        rest = tuple(x[i] for i in range(j.n) if i != p and i not in fixed)
        groups.setdefault(rest, []).append((x[p], _evaluate(f, x)))
    adj = _edges_from_groups(groups, index)
    return CharGraph(tuple(support), tuple(adj), p, provenance)


def _mask_to_int(row: np.ndarray) -> int:
    return int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")


def or_power(g: CharGraph, k: int, *, cap: int = POWER_CAP) -> CharGraph:
    """OR-product power: tuples are adjacent iff some coordinate pair is an edge.

    Vertices are ``k``-tuples in lexicographic order.
    """
    if int(k) != k or k < 1:
        raise ValidationError(f"power must be a positive integer, got {k!r}")
    size = len(g) ** k
    if size > cap:
        raise SizeCapError(f"power graph would have {size} vertices (cap {cap})")
    n = len(g)
    a = np.zeros((n, n), dtype=bool)
    for i, kk in g.edges:
        a[i, kk] = a[kk, i] = True
    # tuples are non-adjacent iff every coordinate pair is equal or a non-edge
    quiet = ~a
    acc = quiet
    for _ in range(k - 1):
        acc = np.kron(acc, quiet)
    adjm = ~acc
    np.fill_diagonal(adjm, False)
    vertices = tuple(itertools.product(g.vertices, repeat=k))
    adj = tuple(_mask_to_int(row) for row in adjm)
    return CharGraph(vertices, adj, g.source_index, ("power", k, g.provenance))


def power_pmf(p: Pmf, k: int) -> tuple:
    """i.i.d. product probabilities over ``k``-tuples, aligned with :func:`or_power`."""
    out = []
    for combo in itertools.product(p.probs, repeat=k):
        v = 1
        for c in combo:
            v = v * c
        out.append(v)
    return tuple(out)


# --------------------------------------------------------------------------
# independent sets


def _mis_masks(adj: Sequence[int], within: int) -> list:
    """Maximal independent sets of the subgraph induced by ``within``.

    Bron-Kerbosch with pivoting on the complement graph.
    """
    quiet = {v: within & ~adj[v] & ~(1 << v) for v in _bits(within)}
    found = []

    def extend(chosen, cand, excluded):
        if not cand and not excluded:
            found.append(chosen)
            return
        pivot = max(_bits(cand | excluded), key=lambda u: (cand & quiet[u]).bit_count())
        for v in list(_bits(cand & ~quiet[pivot])):
            bit = 1 << v
            extend(chosen | bit, cand & quiet[v], excluded & quiet[v])
            cand &= ~bit
            excluded |= bit

    if within:
        extend(0, within, 0)
    found.sort(key=lambda m: tuple(_bits(m)))
    return found


def maximal_independent_sets(g: CharGraph, *, cap: int = MIS_CAP) -> IndSetFamily:
    """All maximal independent sets, ordered lexicographically by vertex index."""
    if len(g) > cap:
        raise SizeCapError(f"{len(g)} vertices exceed the independent-set cap {cap}")
    return IndSetFamily(g.vertices, tuple(_mis_masks(g.adj, (1 << len(g)) - 1)))


# --------------------------------------------------------------------------
# colorings


def _weights(g: CharGraph, p) -> list:
    if isinstance(p, Pmf):
        if p.symbols != g.vertices:
            raise ValidationError("pmf alphabet does not match the graph vertices")
        probs = p.probs
    else:
        probs = tuple(p)
        if len(probs) != len(g):
            raise ValidationError("weights do not match the graph vertices")
    return [float(v) for v in probs]


def _plogp(w: float) -> float:
    return -w * math.log2(w) if w > 0 else 0.0


def coloring_entropy(c: Coloring, p) -> float:
    """Entropy in bits of the color of a random vertex."""
    probs = p.probs if isinstance(p, Pmf) else tuple(p)
    mass = [0.0] * c.num_colors
    for color, w in zip(c.assignment, probs):
        mass[color] += float(w)
    return math.fsum(_plogp(m) for m in mass)


def _canonical_assignment(n: int, classes) -> tuple:
    owner = [0] * n
    for cls in classes:
        for i in _bits(cls):
            owner[i] = cls
    colors: dict = {}
    return tuple(colors.setdefault(owner[i], len(colors)) for i in range(n))


def min_entropy_coloring(g: CharGraph, p, *, cap: int = COLORING_CAP) -> tuple:
    """Proper coloring of minimum color entropy under vertex law ``p``.

    Returns ``(Coloring, bits)``.  Ties: fewest colors, then the
    lexicographically smallest assignment.

    An optimal partition can always be taken with each class maximal
    independent in what remains (moving a vertex into a heavier class never
    increases entropy), so the search recurses over maximal independent sets
    of the remaining induced subgraph, memoised on the remaining vertex set.
    """
    n = len(g)
    if n > cap:
        raise SizeCapError(f"{n} vertices exceed the coloring cap {cap}")
    w = _weights(g, p)
    if n == 0:
        return Coloring((), ()), 0.0
    weight_of = lambda mask: math.fsum(w[i] for i in _bits(mask))  # noqa: E731
    memo: dict = {0: (0.0, 0, {()})}

    def solve(mask):
        if mask in memo:
            return memo[mask]
        best_h, best_k, parts = math.inf, 0, set()
        for cls in _mis_masks(g.adj, mask):
            sub_h, sub_k, sub_parts = solve(mask & ~cls)
            h, k = _plogp(weight_of(cls)) + sub_h, sub_k + 1
            if h < best_h - _TIE or (abs(h - best_h) <= _TIE and k < best_k):
                best_h, best_k, parts = h, k, set()
            if abs(h - best_h) <= _TIE and k == best_k:
                parts.update(tuple(sorted(sp + (cls,))) for sp in sub_parts)
        memo[mask] = (best_h, best_k, parts)
        return memo[mask]

    _, _, parts = solve((1 << n) - 1)
    assignment = min(_canonical_assignment(n, cls) for cls in parts)
    coloring = Coloring(g.vertices, assignment)
    return coloring, coloring_entropy(coloring, w)


def chromatic_number(g: CharGraph, *, cap: int = CHROMATIC_CAP) -> int:
    """Exact chromatic number by backtracking over increasing color counts."""
    n = len(g)
    if n > cap:
        raise SizeCapError(f"{n} vertices exceed the chromatic-number cap {cap}")
    if n == 0:
        return 0
    order = sorted(range(n), key=lambda v: -g.adj[v].bit_count())
    color = [-1] * n

    def place(pos, k, used):
        if pos == n:
            return True
        v = order[pos]
        banned = {color[u] for u in _bits(g.adj[v]) if color[u] >= 0}
        for c in range(min(used + 1, k)):
            if c not in banned:
                color[v] = c
                if place(pos + 1, k, max(used, c + 1)):
                    return True
                color[v] = -1
        return False

    for k in range(1, n + 1):
        if place(0, k, 0):
            return k
    return n


# --------------------------------------------------------------------------
# export


def _label(v) -> str:
    if isinstance(v, tuple):
        return "(" + ",".join(_label(s) for s in v) + ")"
    return str(v)


def to_dot(g: CharGraph, name: str = "G") -> str:
    """Graphviz DOT text; vertices ``v0, v1, ...`` labelled by symbol value."""
    lines = [f"graph {name} {{"]
    for i, v in enumerate(g.vertices):
        lines.append(f'  v{i} [label="{_label(v)}"];')
    for i, k in g.edges:
        lines.append(f"  v{i} -- v{k};")
    lines.append("}")
    return "\n".join(lines) + "\n"
