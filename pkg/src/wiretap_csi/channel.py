"""Wiretap channels with state, auxiliary policies and the rate expressions.

Array conventions (all conditionals are normalized along the last axis):

* ``ChannelWithState.p_yz_given_xs[s, x, y, z]``
* ``CausalPolicy.p_v_given_s[s, v]`` and ``p_x_given_vs[v, s, x]``
* ``ShannonStrategy.p_u[u]``, ``v_of_us[u, s]`` and ``p_x_given_vs[v, s, x]``
* ``AuxChain``: ``p_u_given_s[s, u]``, ``p_v1_given_us[u, s, v1]``,
  ``p_v2_given_v1s[v1, s, v2]``, ``p_x_given_v2s[v2, s, x]``

Rate evaluators return raw values in bits, negative ones included; callers
that report rates floor them at zero.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import _batch
from .errors import ContractError, DomainError, ResourceError
from .grid import DEFAULT_GRID_CAP, simplex_grid
from .info import (
    Alphabet,
    JointPmf,
    binary_entropy,
    conditional_entropy,
    conditional_mutual_information,
    entropy,
    entropy_of_table,
    inverse_binary_entropy,
    mutual_information,
)

SLICE_TOL = 1e-12
LOAD_TOL = 1e-9


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def _check_conditional(arr: np.ndarray, name: str, tol: float = SLICE_TOL) -> None:
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} has negative or non-finite entries")
    sums = arr.reshape(-1, arr.shape[-1]).sum(axis=1) if arr.ndim > 1 else np.array([arr.sum()])
    worst = float(np.max(np.abs(sums - 1.0)))
    if worst > tol:
        raise DomainError(f"{name} slices must sum to 1 within {tol}; worst deviation {worst:.3g}")


def _expect_shape(arr: np.ndarray, shape: tuple, name: str) -> None:
    if arr.shape != shape:
        raise DomainError(f"{name} has shape {arr.shape}, expected {shape}")


@dataclass(frozen=True, eq=False)
class ChannelWithState:
    """State pmf p(s) and wiretap channel p(y, z | x, s) on finite alphabets."""

    p_s: np.ndarray
    p_yz_given_xs: np.ndarray

    def __post_init__(self):
        p_s = _frozen(self.p_s)
        w = _frozen(self.p_yz_given_xs)
        if p_s.ndim != 1 or w.ndim != 4:
            raise DomainError("p_s must be 1-d and p_yz_given_xs must be indexed [s][x][y][z]")
        if w.shape[0] != p_s.shape[0]:
            raise DomainError(f"p_yz_given_xs has {w.shape[0]} state slices, p_s has {p_s.shape[0]}")
        _check_conditional(p_s, "p_s")
        _check_conditional(w.reshape(w.shape[0], w.shape[1], -1), "p_yz_given_xs")
        object.__setattr__(self, "p_s", p_s)
        object.__setattr__(self, "p_yz_given_xs", w)

    @property
    def sizes(self) -> dict[str, int]:
        s, x, y, z = self.p_yz_given_xs.shape
        return {"x": x, "s": s, "y": y, "z": z}

    @property
    def card_s(self) -> int:
        return self.p_yz_given_xs.shape[0]

    @property
    def card_x(self) -> int:
        return self.p_yz_given_xs.shape[1]

    @property
    def p_y_given_xs(self) -> np.ndarray:
        return self.p_yz_given_xs.sum(axis=3)

    @property
    def p_z_given_xs(self) -> np.ndarray:
        return self.p_yz_given_xs.sum(axis=2)

    def is_state_independent(self, tol: float = SLICE_TOL) -> bool:
        w = self.p_yz_given_xs
        return bool(np.all(np.abs(w - w[0:1]) <= tol))

    def state_entropy(self) -> float:
        return entropy_of_table(self.p_s)


@dataclass(frozen=True, eq=False)
class CausalPolicy:
    """Auxiliary V with p(v|s) and the input map p(x|v,s).

    With ``independent_v`` set, p(v|s) must not depend on s (the domain of the
    second rate expression).
    """

    p_v_given_s: np.ndarray
    p_x_given_vs: np.ndarray
    independent_v: bool = False

    def __post_init__(self):
        pv = _frozen(self.p_v_given_s)
        px = _frozen(self.p_x_given_vs)
        if pv.ndim != 2 or px.ndim != 3:
            raise DomainError("p_v_given_s is [s][v] and p_x_given_vs is [v][s][x]")
        if px.shape[:2] != (pv.shape[1], pv.shape[0]):
            raise DomainError(f"p_x_given_vs shape {px.shape} does not match p_v_given_s {pv.shape}")
        _check_conditional(pv, "p_v_given_s")
        _check_conditional(px, "p_x_given_vs")
        if self.independent_v and np.any(np.abs(pv - pv[0:1]) > SLICE_TOL):
            raise DomainError("independent_v is set but p(v|s) varies with s")
        object.__setattr__(self, "p_v_given_s", pv)
        object.__setattr__(self, "p_x_given_vs", px)

    @property
    def card_v(self) -> int:
        return self.p_v_given_s.shape[1]

    @classmethod
    def independent(cls, p_v, p_x_given_vs) -> "CausalPolicy":
        """Policy with p(v|s) = p(v) for every state."""
        px = np.asarray(p_x_given_vs, dtype=float)
        pv = np.tile(np.asarray(p_v, dtype=float), (px.shape[1], 1))
        return cls(pv, px, independent_v=True)


@dataclass(frozen=True, eq=False)
class ShannonStrategy:
    """U ~ p(u) independent of S, v = v(u, s) and x ~ p(x | v, s)."""

    p_u: np.ndarray
    v_of_us: np.ndarray
    p_x_given_vs: np.ndarray

    def __post_init__(self):
        pu = _frozen(self.p_u)
        vmap = np.array(self.v_of_us, dtype=np.int64)
        px = _frozen(self.p_x_given_vs)
        if pu.ndim != 1 or vmap.ndim != 2 or px.ndim != 3:
            raise DomainError("p_u is [u], v_of_us is [u][s], p_x_given_vs is [v][s][x]")
        if vmap.shape[0] != pu.shape[0] or vmap.shape[1] != px.shape[1]:
            raise DomainError(f"v_of_us shape {vmap.shape} inconsistent with p_u / p_x_given_vs")
        if np.any(vmap < 0) or np.any(vmap >= px.shape[0]):
            raise DomainError("v_of_us maps outside the V alphabet")
        _check_conditional(pu, "p_u")
        _check_conditional(px, "p_x_given_vs")
        vmap.setflags(write=False)
        object.__setattr__(self, "p_u", pu)
        object.__setattr__(self, "v_of_us", vmap)
        object.__setattr__(self, "p_x_given_vs", px)

    @property
    def card_u(self) -> int:
        return self.p_u.shape[0]

    @classmethod
    def identity(cls, p_v, p_x_given_vs) -> "ShannonStrategy":
        """U = V, i.e. v(u, s) = u."""
        px = np.asarray(p_x_given_vs, dtype=float)
        card_v, card_s = px.shape[:2]
        vmap = np.tile(np.arange(card_v)[:, None], (1, card_s))
        return cls(p_v, vmap, px)

    def p_x_given_us(self) -> np.ndarray:
        """p(x | u, s) = p(x | v(u, s), s), shape (U, S, X)."""
        card_s = self.v_of_us.shape[1]
        return self.p_x_given_vs[self.v_of_us, np.arange(card_s)[None, :], :]


@dataclass(frozen=True, eq=False)
class AuxChain:
    """Auxiliaries U -> V1 -> V2 -> X, each conditioned on the state."""

    p_u_given_s: np.ndarray
    p_v1_given_us: np.ndarray
    p_v2_given_v1s: np.ndarray
    p_x_given_v2s: np.ndarray

    def __post_init__(self):
        pu = _frozen(self.p_u_given_s)
        p1 = _frozen(self.p_v1_given_us)
        p2 = _frozen(self.p_v2_given_v1s)
        px = _frozen(self.p_x_given_v2s)
        card_s, card_u = pu.shape
        if p1.shape[:2] != (card_u, card_s):
            raise DomainError(f"p_v1_given_us shape {p1.shape} does not match U={card_u}, S={card_s}")
        if p2.shape[:2] != (p1.shape[2], card_s):
            raise DomainError(f"p_v2_given_v1s shape {p2.shape} does not match V1={p1.shape[2]}")
        if px.shape[:2] != (p2.shape[2], card_s):
            raise DomainError(f"p_x_given_v2s shape {px.shape} does not match V2={p2.shape[2]}")
        for arr, name in ((pu, "p_u_given_s"), (p1, "p_v1_given_us"), (p2, "p_v2_given_v1s"), (px, "p_x_given_v2s")):
            _check_conditional(arr, name)
        object.__setattr__(self, "p_u_given_s", pu)
        object.__setattr__(self, "p_v1_given_us", p1)
        object.__setattr__(self, "p_v2_given_v1s", p2)
        object.__setattr__(self, "p_x_given_v2s", px)


@dataclass(frozen=True, eq=False)
class BoundReport:
    """Values of the two lower-bound branches and the overall lower bound.

    ``r_csi_2`` is ``None`` when it was not evaluated (a policy whose V depends
    on the state); ``lower_bound`` is then ``r_csi_1``.
    """

    r_csi_1: float
    r_csi_2: float | None
    liu_chen: float | None = None
    witnesses: dict = field(default_factory=dict)
    capacity_certified: bool = False
    details: dict = field(default_factory=dict)

    @property
    def lower_bound(self) -> float:
        if self.r_csi_2 is None:
            return self.r_csi_1
        return max(self.r_csi_1, self.r_csi_2)


# ---------------------------------------------------------------------------
# induced joints


def _check_policy_fits(ch: ChannelWithState, card_s: int, p_x: np.ndarray, what: str) -> None:
    if card_s != ch.card_s:
        raise DomainError(f"{what} is defined for {card_s} states, channel has {ch.card_s}")
    if p_x.shape[-1] != ch.card_x:
        raise DomainError(f"{what} emits |X|={p_x.shape[-1]}, channel input has {ch.card_x}")


def _alphabets(ch: ChannelWithState, **aux: int) -> list[Alphabet]:
    sz = ch.sizes
    out = [Alphabet(name, size) for name, size in aux.items()]
    out += [Alphabet("S", sz["s"]), Alphabet("X", sz["x"]), Alphabet("Y", sz["y"]), Alphabet("Z", sz["z"])]
    return out


def induce_joint(ch: ChannelWithState, pol: CausalPolicy) -> JointPmf:
    """Joint pmf over (V, S, X, Y, Z) = p(s) p(v|s) p(x|v,s) p(y,z|x,s)."""
    _check_policy_fits(ch, pol.p_v_given_s.shape[0], pol.p_x_given_vs, "policy")
    table = np.einsum("s,sv,vsx,sxyz->vsxyz", ch.p_s, pol.p_v_given_s, pol.p_x_given_vs, ch.p_yz_given_xs)
    return JointPmf(_alphabets(ch, V=pol.card_v), table)


def induce_noncausal_joint(ch: ChannelWithState, p_u_given_s, p_x_given_us) -> JointPmf:
    """Joint pmf over (U, S, X, Y, Z) = p(s) p(u|s) p(x|u,s) p(y,z|x,s)."""
    pu = np.asarray(p_u_given_s, dtype=float)
    px = np.asarray(p_x_given_us, dtype=float)
    if pu.ndim != 2 or px.ndim != 3 or px.shape[:2] != (pu.shape[1], pu.shape[0]):
        raise DomainError(f"p_u_given_s {pu.shape} and p_x_given_us {px.shape} are inconsistent")
    _check_policy_fits(ch, pu.shape[0], px, "noncausal policy")
    _check_conditional(pu, "p_u_given_s")
    _check_conditional(px, "p_x_given_us")
    table = np.einsum("s,su,usx,sxyz->usxyz", ch.p_s, pu, px, ch.p_yz_given_xs)
    return JointPmf(_alphabets(ch, U=pu.shape[1]), table)


def strategy_joint(ch: ChannelWithState, strat: ShannonStrategy) -> JointPmf:
    """Joint pmf over (U, V, S, X, Y, Z) induced by a Shannon strategy."""
    card_v = strat.p_x_given_vs.shape[0]
    _check_policy_fits(ch, strat.v_of_us.shape[1], strat.p_x_given_vs, "strategy")
    indicator = np.zeros((strat.card_u, ch.card_s, card_v))
    u_idx, s_idx = np.indices(strat.v_of_us.shape)
    indicator[u_idx, s_idx, strat.v_of_us] = 1.0
    table = np.einsum(
        "u,s,usv,vsx,sxyz->uvsxyz", strat.p_u, ch.p_s, indicator, strat.p_x_given_vs, ch.p_yz_given_xs
    )
    return JointPmf(_alphabets(ch, U=strat.card_u, V=card_v), table)


def aux_chain_joint(ch: ChannelWithState, chain: AuxChain) -> JointPmf:
    """Joint pmf over (U, V1, V2, S, X, Y, Z) for an auxiliary chain."""
    _check_policy_fits(ch, chain.p_u_given_s.shape[0], chain.p_x_given_v2s, "auxiliary chain")
    table = np.einsum(
        "s,su,usa,asb,bsx,sxyz->uabsxyz",
        ch.p_s,
        chain.p_u_given_s,
        chain.p_v1_given_us,
        chain.p_v2_given_v1s,
        chain.p_x_given_v2s,
        ch.p_yz_given_xs,
    )
    aux = {"U": chain.p_u_given_s.shape[1], "V1": chain.p_v1_given_us.shape[2], "V2": chain.p_v2_given_v1s.shape[2]}
    return JointPmf(_alphabets(ch, **aux), table)


# ---------------------------------------------------------------------------
# rate expressions


def rate_csi_1_value(ch: ChannelWithState, pol: CausalPolicy) -> float:
    """min{I(V;Y|S) - I(V;Z|S) + H(S|Z), I(V;Y|S)} at the given policy."""
    j = induce_joint(ch, pol)
    i_vy = conditional_mutual_information(j, "V", "Y", "S")
    i_vz = conditional_mutual_information(j, "V", "Z", "S")
    h_sz = conditional_entropy(j, "S", "Z")
    return min(i_vy - i_vz + h_sz, i_vy)


def rate_csi_2_value(ch: ChannelWithState, pol: CausalPolicy) -> float:
    """min{H(S|Z,V), I(V;Y|S)}; the policy must have V independent of S."""
    if not pol.independent_v:
        raise ContractError("the second rate expression needs a policy with p(v|s) = p(v) (independent_v)")
    j = induce_joint(ch, pol)
    return min(conditional_entropy(j, "S", ("Z", "V")), conditional_mutual_information(j, "V", "Y", "S"))


def liu_chen_value(ch: ChannelWithState, p_u_given_s, p_x_given_us) -> float:
    """Noncausal lower bound min{I(U;Y|S) - I(U;Z|S) + I(S;U|Z), I(U;Y|S)}."""
    j = induce_noncausal_joint(ch, p_u_given_s, p_x_given_us)
    i_uy = conditional_mutual_information(j, "U", "Y", "S")
    i_uz = conditional_mutual_information(j, "U", "Z", "S")
    i_su = conditional_mutual_information(j, "S", "U", "Z")
    return min(i_uy - i_uz + i_su, i_uy)


def embed_policy(pol: CausalPolicy) -> tuple[np.ndarray, np.ndarray]:
    """Map a causal policy to a noncausal one with U = v + s|V|.

    p(u|s) = p(v|s) on the matching index and 0 elsewhere, so U determines S.
    Rows p(x|u,s) for impossible (u, s) pairs are set uniform to keep every
    slice a pmf; they carry zero probability.
    """
    card_s, card_v = pol.p_v_given_s.shape
    card_x = pol.p_x_given_vs.shape[2]
    card_u = card_v * card_s
    p_u = np.zeros((card_s, card_u))
    p_x = np.full((card_u, card_s, card_x), 1.0 / card_x)
    for s in range(card_s):
        block = slice(s * card_v, (s + 1) * card_v)
        p_u[s, block] = pol.p_v_given_s[s]
        p_x[block, s, :] = pol.p_x_given_vs[:, s, :]
    return p_u, p_x


def collapse_strategy(strat: ShannonStrategy) -> CausalPolicy:
    """Policy with p(v|s) = sum of p(u) over u with v(u,s) = v."""
    card_v, card_s = strat.p_x_given_vs.shape[:2]
    p_v = np.zeros((card_s, card_v))
    for s in range(card_s):
        np.add.at(p_v[s], strat.v_of_us[:, s], strat.p_u)
    return CausalPolicy(p_v, strat.p_x_given_vs)


def shannon_strategy_value(ch: ChannelWithState, strat: ShannonStrategy) -> float:
    """min{I(U;Y,S) - I(U;Z,S) + H(S|Z), I(U;Y,S)} for a Shannon strategy."""
    j = strategy_joint(ch, strat)
    i_uys = mutual_information(j, "U", ("Y", "S"))
    i_uzs = mutual_information(j, "U", ("Z", "S"))
    return min(i_uys - i_uzs + conditional_entropy(j, "S", "Z"), i_uys)


def upper_bound_value(ch: ChannelWithState, chain: AuxChain) -> float:
    """min{I(V1;Y|U,S) - I(V1;Z|U,S) + H(S|Z,U), I(V2;Y|S)} for one chain."""
    j = aux_chain_joint(ch, chain)
    first = (
        conditional_mutual_information(j, "V1", "Y", ("U", "S"))
        - conditional_mutual_information(j, "V1", "Z", ("U", "S"))
        + conditional_entropy(j, "S", ("Z", "U"))
    )
    return min(first, conditional_mutual_information(j, "V2", "Y", "S"))


def evaluate_policy(ch: ChannelWithState, pol: CausalPolicy) -> BoundReport:
    """Every lower-bound expression that applies at one policy."""
    r1 = rate_csi_1_value(ch, pol)
    r2 = rate_csi_2_value(ch, pol) if pol.independent_v else None
    liu = liu_chen_value(ch, *embed_policy(pol))
    witnesses = {"csi1": pol}
    if r2 is not None:
        witnesses["csi2"] = pol
    return BoundReport(r_csi_1=r1, r_csi_2=r2, liu_chen=liu, witnesses=witnesses)


# ---------------------------------------------------------------------------
# special classes of channels


class GridMax(NamedTuple):
    value: float
    argmax: np.ndarray
    evaluations: int


def _identity_policy(p_x_given_s: np.ndarray, independent: bool = False) -> CausalPolicy:
    card_s, card_x = p_x_given_s.shape
    eye = np.tile(np.eye(card_x)[:, None, :], (1, card_s, 1))
    return CausalPolicy(p_x_given_s, eye, independent_v=independent)


def _per_state_product(grid: np.ndarray, card_s: int, cap: int, chunk: int = 1 << 16):
    n = len(grid)
    total = n**card_s
    if total > cap:
        raise ResourceError(f"product grid over {card_s} states has {total} points, cap is {cap}", required=total)
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        idx = np.stack(np.unravel_index(flat, (n,) * card_s), axis=1)
        yield start, grid[idx]  # (m, S, X)


def less_noisy_capacity(ch: ChannelWithState, resolution: int, cap: int = DEFAULT_GRID_CAP) -> GridMax:
    """Grid maximum over p(x|s) of min{I(X;Y|S) - I(X;Z|S) + H(S|Z), I(X;Y|S)}.

    This is the secrecy capacity when Y is less noisy than Z in every state;
    the caller is responsible for that hypothesis (see :func:`check_less_noisy`).
    The value is recomputed at the argmax through :func:`rate_csi_1_value`.
    """
    if resolution < 2:
        raise DomainError(f"resolution must be >= 2, got {resolution}")
    grid = simplex_grid(ch.card_x, resolution, cap)
    eye = np.eye(ch.card_x)
    best, best_idx, evaluations = -np.inf, None, 0
    for start, p_xs in _per_state_product(grid, ch.card_s, cap):
        joint = p_xs[:, :, :, None] * eye[None, None, :, :]
        vals = _batch.csi1_objective(ch.p_s, ch.p_y_given_xs, ch.p_z_given_xs, joint)
        k = int(np.argmax(vals))
        evaluations += len(vals)
        if vals[k] > best:
            best, best_idx = float(vals[k]), (start + k, p_xs[k].copy())
    argmax = best_idx[1]
    return GridMax(rate_csi_1_value(ch, _identity_policy(argmax)), argmax, evaluations)


def _require_state_independent(ch: ChannelWithState, what: str) -> None:
    if not ch.is_state_independent():
        raise ContractError(f"{what} needs a state-independent channel p(y,z|x,s) = p(y,z|x)")


def _input_grid_max(objective, card_x: int, resolution: int, cap: int) -> tuple[float, np.ndarray, int]:
    if resolution < 2:
        raise DomainError(f"resolution must be >= 2, got {resolution}")
    grid = simplex_grid(card_x, resolution, cap)
    vals = objective(grid)
    k = int(np.argmax(vals))
    return float(vals[k]), grid[k].copy(), len(grid)


def z_less_noisy_capacity(ch: ChannelWithState, resolution: int, cap: int = DEFAULT_GRID_CAP) -> GridMax:
    """Grid maximum over p(x) of min{H(S), I(X;Y)} for a state-independent channel.

    This is the secrecy capacity when the eavesdropper is less noisy than the
    legitimate receiver (an assumption the caller makes).
    """
    _require_state_independent(ch, "z_less_noisy_capacity")
    h_s = ch.state_entropy()
    w_y = ch.p_y_given_xs[0]
    _, p_x, evals = _input_grid_max(
        lambda g: np.minimum(h_s, _batch.mutual_information_rows(g, w_y)), ch.card_x, resolution, cap
    )
    pol = _identity_policy(np.tile(p_x, (ch.card_s, 1)), independent=True)
    return GridMax(rate_csi_2_value(ch, pol), p_x, evals)


def is_degraded(p_y_given_x, p_z_given_x, tol: float = 1e-9) -> bool:
    """True when some channel p(z|y) gives p(z|x) = sum_y p(y|x) p(z|y).

    Decided by a linear feasibility problem.
    """
    from scipy.optimize import linprog

    wy = np.asarray(p_y_given_x, dtype=float)
    wz = np.asarray(p_z_given_x, dtype=float)
    nx, ny = wy.shape
    nz = wz.shape[1]
    # unknown T[y, z] flattened row-major
    a_eq, b_eq = [], []
    for x in range(nx):
        for z in range(nz):
            row = np.zeros(ny * nz)
            row[np.arange(ny) * nz + z] = wy[x]
            a_eq.append(row)
            b_eq.append(wz[x, z])
    for y in range(ny):
        row = np.zeros(ny * nz)
        row[y * nz : (y + 1) * nz] = 1.0
        a_eq.append(row)
        b_eq.append(1.0)
    res = linprog(np.zeros(ny * nz), A_eq=np.array(a_eq), b_eq=np.array(b_eq), bounds=(0, None), method="highs")
    if res.status != 0:
        return False
    residual = np.abs(np.array(a_eq) @ res.x - np.array(b_eq)).max()
    return bool(residual <= tol)


def yamamoto_capacity(ch: ChannelWithState, resolution: int, cap: int = DEFAULT_GRID_CAP) -> GridMax:
    """Grid maximum over p(x) of min{I(X;Y) - I(X;Z) + H(S), I(X;Y)}.

    Secrecy capacity of the wiretap channel with a shared key when the channel
    ignores the state and Z is a degraded version of Y.
    """
    _require_state_independent(ch, "yamamoto_capacity")
    w_y, w_z = ch.p_y_given_xs[0], ch.p_z_given_xs[0]
    if not is_degraded(w_y, w_z):
        raise ContractError("yamamoto_capacity needs Z to be a degraded version of Y")
    h_s = ch.state_entropy()

    def objective(g):
        i_y = _batch.mutual_information_rows(g, w_y)
        return np.minimum(i_y - _batch.mutual_information_rows(g, w_z) + h_s, i_y)

    _, p_x, evals = _input_grid_max(objective, ch.card_x, resolution, cap)
    pol = _identity_policy(np.tile(p_x, (ch.card_s, 1)))
    return GridMax(rate_csi_1_value(ch, pol), p_x, evals)


class LessNoisyCertificate(NamedTuple):
    """Outcome of the midpoint concavity scan.

    ``concave`` True is a grid-level certificate only; when False,
    ``violation`` holds (p1, p2, midpoint) with f(mid) < (f(p1) + f(p2)) / 2.
    """

    concave: bool
    violation: tuple | None
    resolution: int


def check_less_noisy(p_yz_given_x, resolution: int, tol: float = 1e-12, chunk: int = 1 << 16) -> LessNoisyCertificate:
    """Midpoint test of concavity of f(p) = I(X;Y) - I(X;Z) over the input simplex.

    Concavity of f in p(x) is equivalent to Y being less noisy than Z. Every
    pair of grid points at the given resolution is tested.
    """
    w = np.asarray(p_yz_given_x, dtype=float)
    if w.ndim != 3:
        raise DomainError("check_less_noisy expects a state-independent slice indexed [x][y][z]")
    _check_conditional(w.reshape(w.shape[0], -1), "p_yz_given_x")
    w_y, w_z = w.sum(axis=2), w.sum(axis=1)

    def f(p):
        return _batch.mutual_information_rows(p, w_y) - _batch.mutual_information_rows(p, w_z)

    grid = simplex_grid(w.shape[0], resolution)
    f_grid = f(grid)
    i_idx, j_idx = np.triu_indices(len(grid), k=1)
    for start in range(0, len(i_idx), chunk):
        ii, jj = i_idx[start : start + chunk], j_idx[start : start + chunk]
        mid = 0.5 * (grid[ii] + grid[jj])
        gap = f(mid) - 0.5 * (f_grid[ii] + f_grid[jj])
        bad = np.flatnonzero(gap < -tol)
        if bad.size:
            k = bad[0]
            return LessNoisyCertificate(False, (grid[ii[k]], grid[jj[k]], mid[k]), resolution)
    return LessNoisyCertificate(True, None, resolution)


# ---------------------------------------------------------------------------
# the two-state example channel and builders


def example_channel(crossover: float = 0.1) -> ChannelWithState:
    """Binary channel with Z = X, Y = X through a BSC(0.1), state independent of everything.

    p(S=1) is the root below 1/2 of H(q) = 1 - H(0.1), so H(S) = 1 - H(0.1).
    """
    q = inverse_binary_entropy(1.0 - binary_entropy(crossover))
    w = np.zeros((2, 2, 2, 2))
    for s, x, y in itertools.product(range(2), repeat=3):
        w[s, x, y, x] = 1.0 - crossover if y == x else crossover
    return ChannelWithState(np.array([1.0 - q, q]), w)


def state_independent_channel(p_s, p_yz_given_x) -> ChannelWithState:
    """Channel whose p(y,z|x,s) is the same slice for every state."""
    p_s = np.asarray(p_s, dtype=float)
    w = np.asarray(p_yz_given_x, dtype=float)
    return ChannelWithState(p_s, np.tile(w[None], (len(p_s), 1, 1, 1)))


def bsc(p: float) -> np.ndarray:
    return np.array([[1.0 - p, p], [p, 1.0 - p]])


def degraded_bsc_pair(p_y: float, p_z: float) -> np.ndarray:
    """p(y, z | x) with Y = BSC(p_y)(X) and Z = BSC(d)(Y) so that Z = BSC(p_z)(X)."""
    if not 0 <= p_y <= p_z <= 0.5:
        raise DomainError("need 0 <= p_y <= p_z <= 1/2")
    d = (p_z - p_y) / (1.0 - 2.0 * p_y)
    return np.einsum("xy,yz->xyz", bsc(p_y), bsc(d))


# ---------------------------------------------------------------------------
# file formats


def _renormalize(arr: np.ndarray, name: str) -> np.ndarray:
    _check_conditional(arr, name, tol=LOAD_TOL)
    return arr / arr.sum(axis=-1, keepdims=True)


def channel_from_dict(doc: dict) -> ChannelWithState:
    """Build a channel from ``{alphabets, p_s, p_yz_given_xs}``.

    ``p_yz_given_xs[s][x]`` is the (Y, Z) pmf flattened row-major. Slices must
    sum to 1 within 1e-9 and are renormalized exactly after the check.
    """
    try:
        sizes = {k: int(doc["alphabets"][k]) for k in ("x", "s", "y", "z")}
        p_s = np.array(doc["p_s"], dtype=float)
        flat = np.array(doc["p_yz_given_xs"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed channel document: {exc!r}") from None
    expected = (sizes["s"], sizes["x"], sizes["y"] * sizes["z"])
    if p_s.shape != (sizes["s"],):
        raise DomainError(f"p_s has shape {p_s.shape}, alphabets say |S|={sizes['s']}")
    if flat.shape != expected:
        raise DomainError(f"p_yz_given_xs has shape {flat.shape}, expected [s][x][y*z] = {expected}")
    p_s = _renormalize(p_s, "p_s")
    flat = _renormalize(flat, "p_yz_given_xs")
    return ChannelWithState(p_s, flat.reshape(sizes["s"], sizes["x"], sizes["y"], sizes["z"]))


def channel_to_dict(ch: ChannelWithState) -> dict:
    s, x, y, z = ch.p_yz_given_xs.shape
    return {
        "alphabets": {"x": x, "s": s, "y": y, "z": z},
        "p_s": ch.p_s.tolist(),
        "p_yz_given_xs": ch.p_yz_given_xs.reshape(s, x, y * z).tolist(),
    }


def policy_from_dict(doc: dict) -> CausalPolicy:
    """Build a policy from ``{p_v_given_s: [s][v], p_x_given_vs: [v][s][x], independent_v}``."""
    try:
        pv = np.array(doc["p_v_given_s"], dtype=float)
        px = np.array(doc["p_x_given_vs"], dtype=float)
        independent = bool(doc.get("independent_v", False))
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed policy document: {exc!r}") from None
    if pv.ndim != 2 or px.ndim != 3:
        raise DomainError("policy needs p_v_given_s as [s][v] and p_x_given_vs as [v][s][x]")
    return CausalPolicy(_renormalize(pv, "p_v_given_s"), _renormalize(px, "p_x_given_vs"), independent)


def policy_to_dict(pol: CausalPolicy) -> dict:
    return {
        "p_v_given_s": pol.p_v_given_s.tolist(),
        "p_x_given_vs": pol.p_x_given_vs.tolist(),
        "independent_v": pol.independent_v,
    }


def load_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def load_channel(path) -> ChannelWithState:
    return channel_from_dict(load_json(path))


def load_policy(path) -> CausalPolicy:
    return policy_from_dict(load_json(path))
