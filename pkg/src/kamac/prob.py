"""Finite discrete probability on real-valued alphabets.

Probabilities are kept as :class:`fractions.Fraction` whenever the inputs are
rational (ints, Fractions, or strings such as ``"1/3"``) and only converted to
``float`` when an entropy is evaluated.  Float inputs are accepted and stay
float.  Every information quantity is reported in bits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "Alphabet",
    "Pmf",
    "JointPmf",
    "MaximalCoupling",
    "as_prob",
    "as_symbol",
    "binary_entropy",
    "entropy",
    "entropy_of",
    "joint_entropy",
    "conditional_entropy",
    "pushforward",
    "maximal_coupling",
    "coupling_mixture_entropy",
    "branch_determined",
]

MASS_TOL = 1e-12


def as_prob(value, path=None):
    """Coerce a probability-like value to ``Fraction`` (exact) or ``float``."""
    if isinstance(value, bool):
        raise ValidationError(f"probability must be numeric, got {value!r}", path)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse probability {value!r}", path) from exc
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, Real):
        return float(value)
    raise ValidationError(f"probability must be numeric, got {value!r}", path)


def as_symbol(value, path=None):
    """Coerce an alphabet symbol; integral rationals collapse to ``int``."""
    if isinstance(value, bool):
        raise ValidationError(f"symbol must be numeric, got {value!r}", path)
    if isinstance(value, str):
        try:
            value = Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse symbol {value!r}", path) from exc
    if isinstance(value, Rational):
        value = Fraction(value)
        return int(value) if value.denominator == 1 else value
    if isinstance(value, Real):
        value = float(value)
        if math.isnan(value):
            raise ValidationError("symbol must not be NaN", path)
        return value
    raise ValidationError(f"symbol must be numeric, got {value!r}", path)


def _is_exact(values) -> bool:
    return all(isinstance(v, Fraction) for v in values)


def _plogp_sum(probs: Iterable) -> float:
    # 0 log 0 := 0
    terms = []
    for p in probs:
        p = float(p)
        if p > 0.0:
            terms.append(-p * math.log2(p))
    return math.fsum(terms)


def binary_entropy(d) -> float:
    """h(d) in bits."""
    return _plogp_sum([d, 1 - d])


@dataclass(frozen=True)
class Alphabet:
    """Strictly increasing, non-empty tuple of real symbols."""

    symbols: tuple

    def __post_init__(self):
        symbols = tuple(as_symbol(s) for s in self.symbols)
        if not symbols:
            raise ValidationError("alphabet must be non-empty")
        for a, b in zip(symbols, symbols[1:]):
            if not a < b:
                raise ValidationError(
                    f"alphabet symbols must be strictly increasing ({a!r} >= {b!r})"
                )
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(symbols)})

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __contains__(self, symbol):
        return symbol in self._index

    def index(self, symbol) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise ValidationError(f"symbol {symbol!r} not in alphabet") from None


@dataclass(frozen=True)
class Pmf:
    """A probability mass function aligned with an :class:`Alphabet`."""

    alphabet: Alphabet
    probs: tuple

    def __post_init__(self):
        if not isinstance(self.alphabet, Alphabet):
            object.__setattr__(self, "alphabet", Alphabet(tuple(self.alphabet)))
        probs = tuple(as_prob(p) for p in self.probs)
        if len(probs) != len(self.alphabet):
            raise ValidationError(
                f"pmf has {len(probs)} probabilities for {len(self.alphabet)} symbols"
            )
        if any(p < 0 for p in probs):
            raise ValidationError("probabilities must be non-negative")
        total = sum(probs)
        if abs(total - 1) > MASS_TOL:
            raise ValidationError(f"probabilities sum to {float(total)!r}, not 1")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, symbols: Sequence) -> "Pmf":
        k = len(symbols)
        return cls(Alphabet(tuple(symbols)), tuple(Fraction(1, k) for _ in symbols))

    @classmethod
    def from_dict(cls, mapping: Mapping) -> "Pmf":
        items = sorted((as_symbol(s), p) for s, p in mapping.items())
        return cls(Alphabet(tuple(s for s, _ in items)), tuple(p for _, p in items))

    @property
    def symbols(self) -> tuple:
        return self.alphabet.symbols

    @property
    def exact(self) -> bool:
        return _is_exact(self.probs)

    def __len__(self):
        return len(self.probs)

    def prob(self, symbol):
        return self.probs[self.alphabet.index(symbol)]

    def support(self) -> tuple:
        return tuple(s for s, p in zip(self.symbols, self.probs) if p > 0)

    def as_array(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])

    def items(self):
        return zip(self.symbols, self.probs)


class JointPmf:
    """Dense n-dimensional probability table over finite alphabets.

    ``table[i_1, ..., i_n]`` is the probability of
    ``(alphabets[0].symbols[i_1], ..., alphabets[n-1].symbols[i_n])``.
    Exact tables use ``dtype=object`` holding Fractions.
    """

    def __init__(self, alphabets: Sequence, table):
        alphabets = tuple(a if isinstance(a, Alphabet) else Alphabet(tuple(a)) for a in alphabets)
        if not alphabets:
            raise ValidationError("joint pmf needs at least one coordinate")
        raw = np.asarray(table, dtype=object)
        shape = tuple(len(a) for a in alphabets)
        if raw.shape != shape:
            raise ValidationError(f"table shape {raw.shape} does not match alphabets {shape}")
        flat = [as_prob(v) for v in raw.ravel()]
        if any(v < 0 for v in flat):
            raise ValidationError("joint probabilities must be non-negative")
        total = sum(flat)
        if abs(total - 1) > MASS_TOL:
            raise ValidationError(f"joint probabilities sum to {float(total)!r}, not 1")
        if _is_exact(flat):
            arr = np.empty(len(flat), dtype=object)
            arr[:] = flat
        else:
            arr = np.array([float(v) for v in flat], dtype=float)
        arr = arr.reshape(shape)
        arr.flags.writeable = False
        self._alphabets = alphabets
        self._table = arr

    @classmethod
    def product(cls, *pmfs: Pmf) -> "JointPmf":
        """Joint law of independent coordinates."""
        table = np.empty(tuple(len(p) for p in pmfs), dtype=object)
        for idx in itertools.product(*(range(len(p)) for p in pmfs)):
            v = 1
            for p, i in zip(pmfs, idx):
                v = v * p.probs[i]
            table[idx] = v
        return cls([p.alphabet for p in pmfs], table)

    @classmethod
    def from_support(cls, points: Mapping[tuple, object]) -> "JointPmf":
        """Build from ``{realization: probability}``; alphabets are inferred."""
        points = {tuple(as_symbol(s) for s in x): p for x, p in points.items()}
        n = len(next(iter(points)))
        alphabets = [Alphabet(tuple(sorted({x[i] for x in points}))) for i in range(n)]
        table = np.zeros(tuple(len(a) for a in alphabets), dtype=object)
        table[...] = Fraction(0)
        for x, p in points.items():
            table[tuple(a.index(s) for a, s in zip(alphabets, x))] = as_prob(p)
        return cls(alphabets, table)

    @property
    def alphabets(self) -> tuple:
        return self._alphabets

    @property
    def table(self) -> np.ndarray:
        return self._table

    @property
    def n(self) -> int:
        return len(self._alphabets)

    @property
    def shape(self) -> tuple:
        return self._table.shape

    @property
    def exact(self) -> bool:
        return self._table.dtype == object

    def __repr__(self):
        sizes = "x".join(str(len(a)) for a in self._alphabets)
        return f"JointPmf({sizes}, exact={self.exact})"

    def __eq__(self, other):
        if not isinstance(other, JointPmf):
            return NotImplemented
        return self._alphabets == other._alphabets and np.array_equal(self._table, other._table)

    __hash__ = None

    def fingerprint(self) -> tuple:
        """Hashable identity of the source model (alphabets plus probabilities)."""
        return (
            tuple(a.symbols for a in self._alphabets),
            tuple(str(v) for v in self._table.ravel()),
        )

    def float_table(self) -> np.ndarray:
        return np.asarray(self._table, dtype=float)

    def prob(self, realization) -> object:
        idx = tuple(a.index(s) for a, s in zip(self._alphabets, realization))
        return self._table[idx]

    def support(self) -> list:
        """``[(realization, probability), ...]`` over positive cells, row-major order."""
        out = []
        for idx in zip(*np.nonzero(self.float_table() > 0)):
            x = tuple(a.symbols[i] for a, i in zip(self._alphabets, idx))
            out.append((x, self._table[idx]))
        return out

    def _check_indices(self, indices, what="index") -> tuple:
        indices = tuple(int(i) for i in indices)
        for i in indices:
            if not 0 <= i < self.n:
                raise ValidationError(f"{what} {i} out of range for {self.n} coordinates")
        if len(set(indices)) != len(indices):
            raise ValidationError(f"repeated {what} in {indices}")
        return indices

    def marginal(self, indices: Sequence[int]) -> "JointPmf":
        """Joint law of the listed coordinates, in the listed order."""
        indices = self._check_indices(indices)
        if not indices:
            raise ValidationError("marginal needs at least one coordinate")
        others = tuple(i for i in range(self.n) if i not in indices)
        summed = self._table.sum(axis=others) if others else self._table
        kept = sorted(indices)
        summed = np.asarray(summed, dtype=self._table.dtype).reshape(
            tuple(len(self._alphabets[i]) for i in kept)
        )
        order = [kept.index(i) for i in indices]
        return JointPmf([self._alphabets[i] for i in indices], np.transpose(summed, order))

    def marginal_pmf(self, i: int) -> Pmf:
        m = self.marginal([i])
        return Pmf(self._alphabets[i], tuple(m.table.ravel()))


def entropy(p: Pmf) -> float:
    """Shannon entropy of a pmf in bits."""
    return _plogp_sum(p.probs)


def entropy_of(probs: Iterable) -> float:
    """Entropy in bits of a raw probability vector."""
    return _plogp_sum(probs)


def joint_entropy(j: JointPmf) -> float:
    return _plogp_sum(j.table.ravel())


def conditional_entropy(j: JointPmf, target: Sequence[int], given: Sequence[int] = ()) -> float:
    """H(X_target | X_given) in bits."""
    target = j._check_indices(target, "target index")
    given = j._check_indices(given, "given index")
    if not target:
        raise ValidationError("target index set must be non-empty")
    if set(target) & set(given):
        raise ValidationError(f"target {target} and given {given} overlap")
    h_all = joint_entropy(j.marginal(target + given))
    h_given = joint_entropy(j.marginal(given)) if given else 0.0
    return h_all - h_given


def pushforward(j: JointPmf, f: Callable[[tuple], object]) -> Pmf:
    """Exact law of ``f(X)``; the output alphabet is the sorted set of images."""
    mass: dict = {}
    for x, p in j.support():
        try:
            z = f(x)
        except (ArithmeticError, ValueError, TypeError) as exc:
            raise DomainError(f"function undefined at support point {x}: {exc}") from exc
        if z is None:
            raise DomainError(f"function undefined at support point {x}")
        z = as_symbol(z.item() if isinstance(z, np.generic) else z)
        mass[z] = mass.get(z, 0) + p
    return Pmf.from_dict(mass)


@dataclass(frozen=True)
class MaximalCoupling:
    """Maximal coupling of two pmfs on a shared alphabet.

    With probability ``1 - delta`` both coordinates equal a draw of ``T``;
    otherwise they are independent draws of ``V`` and ``W``.
    ``pV``/``pW`` are ``None`` when ``delta == 0`` and ``pT`` is ``None`` when
    ``delta == 1``.
    """

    delta: object
    pT: Pmf | None
    pV: Pmf | None
    pW: Pmf | None
    joint: JointPmf


def maximal_coupling(p: Pmf, q: Pmf) -> MaximalCoupling:
    if p.alphabet != q.alphabet:
        raise ValidationError("maximal coupling needs both pmfs on the same alphabet")
    overlap = [min(a, b) for a, b in zip(p.probs, q.probs)]
    delta = 1 - sum(overlap)
    if abs(delta) <= MASS_TOL:
        delta = 0 * delta
    k = len(p)
    zero = 0 * delta
    table = np.empty((k, k), dtype=object)
    table[...] = zero

    pT = pV = pW = None
    if delta < 1:
        pT = Pmf(p.alphabet, tuple(m / (1 - delta) for m in overlap))
        for i in range(k):
            table[i, i] += (1 - delta) * pT.probs[i]
    if delta > 0:
        pV = Pmf(p.alphabet, tuple((a - m) / delta for a, m in zip(p.probs, overlap)))
        pW = Pmf(p.alphabet, tuple((b - m) / delta for b, m in zip(q.probs, overlap)))
        for i in range(k):
            for r in range(k):
                table[i, r] += delta * pV.probs[i] * pW.probs[r]
    return MaximalCoupling(delta, pT, pV, pW, JointPmf([p.alphabet, p.alphabet], table))


def coupling_mixture_entropy(c: MaximalCoupling) -> float:
    """h(delta) + (1 - delta) H(T) + delta (H(V) + H(W)), in bits."""
    if not 0 < c.delta < 1:
        raise DomainError(f"mixture entropy needs 0 < delta < 1, got {c.delta}")
    d = float(c.delta)
    return binary_entropy(c.delta) + (1 - d) * entropy(c.pT) + d * (entropy(c.pV) + entropy(c.pW))


def branch_determined(c: MaximalCoupling) -> bool:
    """Whether the mixing branch is a function of the pair ``(Y_1, Y_2)``.

    True iff no cell of the joint table receives mass from both the
    diagonal branch and the independent branch.
    """
    if c.pT is None or c.pV is None:
        return True
    for i, t in enumerate(c.pT.probs):
        if t > 0 and c.pV.probs[i] > 0 and c.pW.probs[i] > 0:
            return False
    return True
