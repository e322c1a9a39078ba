"""Finite-alphabet probability tables and information measures in bits.

A :class:`JointPmf` is a labelled numpy array: axis ``i`` belongs to
``variables[i]``. All measures take variable *names* (a single string or a
sequence of strings) and work on marginals of the table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DomainError

NORMALIZATION_TOL = 1e-12
ZERO_FLOOR = 1e-15
MI_CLAMP_TOL = 1e-12

VarSpec = Union[str, Sequence[str]]


@dataclass(frozen=True)
class Alphabet:
    """A finite alphabet ``{0, ..., size-1}`` with a name."""

    name: str
    size: int

    def __post_init__(self):
        if not isinstance(self.size, (int, np.integer)) or self.size < 1:
            raise DomainError(f"alphabet {self.name!r} needs size >= 1, got {self.size!r}")


def _as_names(spec: VarSpec) -> tuple[str, ...]:
    if isinstance(spec, str):
        return (spec,)
    return tuple(spec)


class JointPmf:
    """Joint pmf over an ordered tuple of named alphabets.

    The table is copied, made read-only and checked for nonnegativity and
    normalization (within 1e-12). It is never renormalized silently.
    """

    __slots__ = ("variables", "table", "_index")

    def __init__(self, variables: Iterable[Alphabet], table, *, tol: float = NORMALIZATION_TOL):
        variables = tuple(variables)
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise DomainError(f"duplicate variable names in {names}")
        arr = np.array(table, dtype=float)
        shape = tuple(v.size for v in variables)
        if arr.size != math.prod(shape):
            raise DomainError(f"table has {arr.size} entries, alphabets need {shape}")
        arr = arr.reshape(shape)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise DomainError("pmf entries must be finite and nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > tol:
            raise DomainError(f"pmf sums to {total!r}, not 1 within {tol}")
        arr.setflags(write=False)
        self.variables = variables
        self.table = arr
        self._index = {n: i for i, n in enumerate(names)}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def axes(self, spec: VarSpec) -> tuple[int, ...]:
        names = _as_names(spec)
        try:
            return tuple(self._index[n] for n in names)
        except KeyError as exc:
            raise DomainError(f"unknown variable {exc.args[0]!r}; have {self.names}") from None

    def __repr__(self) -> str:
        dims = ", ".join(f"{v.name}:{v.size}" for v in self.variables)
        return f"JointPmf({dims})"


def _check_disjoint(*groups: tuple[str, ...]) -> None:
    seen: set[str] = set()
    for g in groups:
        if len(set(g)) != len(g):
            raise DomainError(f"repeated variable in {g}")
        overlap = seen.intersection(g)
        if overlap:
            raise DomainError(f"variable sets overlap on {sorted(overlap)}")
        seen.update(g)


def marginalize(p: JointPmf, keep: VarSpec) -> JointPmf:
    """Sum out every variable not in ``keep``; result axes follow ``keep``."""
    names = _as_names(keep)
    if not names:
        raise DomainError("marginalize needs at least one variable to keep")
    _check_disjoint(names)
    axes = p.axes(names)
    drop = tuple(i for i in range(len(p.variables)) if i not in axes)
    table = p.table.sum(axis=drop) if drop else p.table
    # remaining axes are in original order; permute to the requested order
    kept_sorted = sorted(axes)
    perm = [kept_sorted.index(a) for a in axes]
    table = np.transpose(table, perm)
    return JointPmf([p.variables[a] for a in axes], table)


def entropy_of_table(table) -> float:
    """Shannon entropy in bits of a nonnegative array (no normalization check)."""
    t = np.asarray(table, dtype=float).ravel()
    t = t[t > ZERO_FLOOR]
    return float(-(t * np.log2(t)).sum())


def entropy(p: JointPmf, vars: VarSpec) -> float:
    """Entropy of the marginal on ``vars``."""
    names = _as_names(vars)
    if not names:
        raise DomainError("entropy needs a nonempty variable set")
    _check_disjoint(names)
    axes = p.axes(names)
    drop = tuple(i for i in range(len(p.variables)) if i not in axes)
    table = p.table.sum(axis=drop) if drop else p.table
    return entropy_of_table(table)


def _h(p: JointPmf, names: tuple[str, ...]) -> float:
    return entropy(p, names) if names else 0.0


def conditional_entropy(p: JointPmf, target: VarSpec, given: VarSpec) -> float:
    """H(target | given) = H(target, given) - H(given)."""
    t, g = _as_names(target), _as_names(given)
    if not t:
        raise DomainError("conditional_entropy needs a nonempty target")
    _check_disjoint(t, g)
    return max(_h(p, t + g) - _h(p, g), 0.0)


def _clamp_information(value: float) -> float:
    if value < -MI_CLAMP_TOL:
        raise DomainError(f"negative information {value!r}; table is corrupted")
    return max(value, 0.0)


def mutual_information(p: JointPmf, a: VarSpec, b: VarSpec) -> float:
    """I(a; b) in bits."""
    an, bn = _as_names(a), _as_names(b)
    if not an or not bn:
        raise DomainError("mutual_information needs two nonempty variable sets")
    _check_disjoint(an, bn)
    return _clamp_information(_h(p, an) + _h(p, bn) - _h(p, an + bn))


def conditional_mutual_information(p: JointPmf, a: VarSpec, b: VarSpec, c: VarSpec) -> float:
    """I(a; b | c) = H(a|c) - H(a|b,c), computed from four joint entropies."""
    an, bn, cn = _as_names(a), _as_names(b), _as_names(c)
    if not an or not bn:
        raise DomainError("conditional_mutual_information needs nonempty a and b")
    _check_disjoint(an, bn, cn)
    value = _h(p, an + cn) + _h(p, bn + cn) - _h(p, an + bn + cn) - _h(p, cn)
    return _clamp_information(value)


def binary_entropy(q: float) -> float:
    """H(q) = -q log2 q - (1-q) log2 (1-q), with H(0) = H(1) = 0."""
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"binary_entropy needs 0 <= q <= 1, got {q!r}")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def inverse_binary_entropy(h: float, tol: float = 1e-12) -> float:
    """Root of H(q) = h in [0, 1/2], found by bisection."""
    if not 0.0 <= h <= 1.0:
        raise DomainError(f"binary entropy value must lie in [0, 1], got {h!r}")
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < h:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def product_pmf(*factors: tuple[Alphabet, Sequence[float]]) -> JointPmf:
    """Joint pmf of independent variables given as ``(alphabet, pmf)`` pairs."""
    table = np.ones(())
    for _, pmf in factors:
        table = np.multiply.outer(table, np.asarray(pmf, dtype=float))
    return JointPmf([a for a, _ in factors], table)
