"""Grid maximization of the lower-bound branches and the special-case formulas.

Both branches are searched exhaustively on a lattice of step 1/resolution and
then polished by local coordinate moves on successively finer lattices.

* CSI1 searches the conditional joint p(v, x | s), one simplex per state. The
  objective splits into per-state terms plus H(S|Z), which only depends on
  the marginals p(x|s), so the exact lattice maximum is found by combining
  per-state Pareto fronts of (I(V;Y|S=s) - I(V;Z|S=s), I(V;Y|S=s)) within each
  marginal class.
* CSI2 searches p(v) and p(x|v,s). Relabelling V and merging V symbols that
  share the same p(x|v,.) leave the objective unchanged, so it suffices to
  enumerate integer partitions of the resolution (the masses of p(v)) with a
  set of distinct columns p(x|v,.) attached to each part size.
"""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _batch
from .channel import (
    BoundReport,
    CausalPolicy,
    ChannelWithState,
    ContractError,
    check_less_noisy,
    embed_policy,
    is_degraded,
    less_noisy_capacity,
    liu_chen_value,
    rate_csi_1_value,
    rate_csi_2_value,
    yamamoto_capacity,
    z_less_noisy_capacity,
)
from .errors import DomainError, ResourceError
from .grid import DEFAULT_GRID_CAP, simplex_compositions, simplex_grid, simplex_size

IMPROVE_TOL = 1e-13
MAX_ASCENT_STEPS = 2000


class Branch(str, enum.Enum):
    CSI1 = "CSI1"
    CSI2 = "CSI2"


class SpecialCase(str, enum.Enum):
    THM3 = "Thm3"
    YAMAMOTO = "Yamamoto"
    Z_LESS_NOISY = "ZLessNoisy"


class Tightness(str, enum.Enum):
    CASE_I = "CaseI"
    CASE_II = "CaseII"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class SearchConfig:
    """Search settings.

    ``card_v`` defaults to |X||S| + 1 for the CSI1 branch. ``card_v_indep`` is
    the cardinality used for the CSI2 branch, whose exhaustive lattice grows
    much faster; it defaults to ``min(card_v, 3)``. ``workers`` only changes
    wall-clock time, never results.
    """

    card_v: int | None = None
    grid_resolution: int = 8
    refine_rounds: int = 2
    restarts: int = 0
    seed: int = 0
    card_v_indep: int | None = None
    cap: int = DEFAULT_GRID_CAP
    workers: int = 1

    def __post_init__(self):
        if self.grid_resolution < 2:
            raise DomainError(f"grid_resolution must be >= 2, got {self.grid_resolution}")
        for name in ("card_v", "card_v_indep"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise DomainError(f"{name} must be >= 1, got {value}")
        if self.refine_rounds < 0 or self.restarts < 0:
            raise DomainError("refine_rounds and restarts must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")

    def resolved(self, ch: ChannelWithState) -> "SearchConfig":
        card_v = self.card_v if self.card_v is not None else ch.card_x * ch.card_s + 1
        card_ind = self.card_v_indep if self.card_v_indep is not None else min(card_v, 3)
        return replace(self, card_v=card_v, card_v_indep=card_ind)


@dataclass(frozen=True, eq=False)
class OptimResult:
    """Best value found for one branch and the policy that attains it.

    ``value`` is the branch evaluator applied to ``witness``; ``grid_value``
    is the lattice maximum before refinement.
    """

    value: float
    witness: CausalPolicy
    branch: Branch
    evaluations: int
    grid_value: float = float("nan")
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# local refinement


def _ascend(objective, theta: np.ndarray, value: float, blocks: list[slice], step: float):
    """Steepest ascent with mass transfers of size ``step`` inside each simplex block."""
    moves = []
    for blk in blocks:
        idx = range(blk.start, blk.stop)
        moves.extend(itertools.permutations(idx, 2))
    if not moves:
        return theta, value, 0
    src = np.array([m[0] for m in moves])
    dst = np.array([m[1] for m in moves])
    rows = np.arange(len(moves))
    evaluations = 0
    for _ in range(MAX_ASCENT_STEPS):
        ok = theta[src] >= step - 1e-15
        cand = np.repeat(theta[None, :], len(moves), axis=0)
        cand[rows, src] -= step
        cand[rows, dst] += step
        np.clip(cand, 0.0, None, out=cand)
        vals = np.where(ok, objective(cand), -np.inf)
        evaluations += int(ok.sum())
        k = int(np.argmax(vals))
        if vals[k] <= value + IMPROVE_TOL:
            break
        theta, value = cand[k], float(vals[k])
    return theta, value, evaluations


def _refine(objective, theta, value, blocks, resolution, rounds):
    evaluations = 0
    for r in range(1, rounds + 1):
        step = 1.0 / (resolution * 4**r)
        theta, value, used = _ascend(objective, theta, value, blocks, step)
        evaluations += used
    return theta, value, evaluations


def _random_start(rng: np.random.Generator, blocks: list[slice], size: int) -> np.ndarray:
    theta = np.zeros(size)
    for blk in blocks:
        theta[blk] = rng.dirichlet(np.ones(blk.stop - blk.start))
    return theta


def _polish(objective, theta, value, blocks, cfg: SearchConfig, stream: int):
    """Refine the incumbent, then try ``cfg.restarts`` seeded random starts."""
    theta, value, evals = _refine(objective, theta, value, blocks, cfg.grid_resolution, cfg.refine_rounds)
    if cfg.restarts:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, stream]))
        rounds = max(cfg.refine_rounds, 1)
        for _ in range(cfg.restarts):
            start = _random_start(rng, blocks, theta.size)
            v0 = float(objective(start[None])[0])
            cand, val, used = _refine(objective, start, v0, blocks, cfg.grid_resolution, rounds)
            evals += used + 1
            if val > value + IMPROVE_TOL:
                theta, value = cand, val
    return theta, value, evals


# ---------------------------------------------------------------------------
# CSI1: exact lattice maximum via per-state Pareto fronts


def _pareto(x: np.ndarray, y: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """Indices of points not dominated in (x, y); exact ties keep the smallest key row."""
    order = np.lexsort(tuple(keys[:, c] for c in range(keys.shape[1] - 1, -1, -1)) + (-y, -x))
    keep, best_y = [], -np.inf
    for i in order:
        if y[i] > best_y:
            keep.append(i)
            best_y = y[i]
    return np.array(keep, dtype=np.int64)


def _state_terms(p_vx: np.ndarray, w_y_s: np.ndarray, w_z_s: np.ndarray):
    """I(V;Y|S=s) and I(V;Z|S=s) for a stack of p(v,x|s) of shape (N, V, X)."""
    h_v = _batch.plogp_sum(p_vx.sum(axis=2), axis=1)

    def mi(w):
        p_vo = np.einsum("nvx,xo->nvo", p_vx, w)
        return np.clip(h_v + _batch.plogp_sum(p_vo.sum(axis=1), axis=1) - _batch.plogp_sum(p_vo, axis=(1, 2)), 0, None)

    return mi(w_y_s), mi(w_z_s)


def _h_s_given_z(ch: ChannelWithState, p_xs: np.ndarray) -> float:
    return float(_batch._h_s_given_z(ch.p_s, ch.p_z_given_xs, p_xs[None])[0])


def _csi1_lattice(ch: ChannelWithState, card_v: int, resolution: int, cap: int):
    """Exact maximum of the CSI1 objective over the lattice of p(v,x|s).

    Returns (value, per-state point indices, points array, evaluations, terms)
    where ``terms`` holds the per-state (a, b) arrays for reuse.
    """
    card_s, card_x = ch.card_s, ch.card_x
    n_points = simplex_size(card_v * card_x, resolution)
    if n_points * card_s > cap:
        raise ResourceError(
            f"CSI1 lattice needs {n_points * card_s} evaluations (card_v={card_v}, resolution={resolution}), cap is {cap}",
            required=n_points * card_s,
        )
    comps = simplex_compositions(card_v * card_x, resolution, cap).reshape(-1, card_v, card_x)
    points = comps / resolution
    marg_comps = simplex_compositions(card_x, resolution)
    base = resolution + 1
    weights = base ** np.arange(card_x - 1, -1, -1)
    marg_codes = marg_comps @ weights
    point_marg = np.searchsorted(marg_codes, comps.sum(axis=1) @ weights)
    n_marg = len(marg_comps)

    terms = [_state_terms(points, ch.p_y_given_xs[s], ch.p_z_given_xs[s]) for s in range(card_s)]
    fronts = []
    for s, (a, b) in enumerate(terms):
        per_marg = []
        for g in range(n_marg):
            members = np.flatnonzero(point_marg == g)
            keep = members[_pareto((a - b)[members], a[members], members[:, None])]
            per_marg.append((ch.p_s[s] * (a - b)[keep], ch.p_s[s] * a[keep], keep[:, None]))
        fronts.append(per_marg)

    evaluations = n_points * card_s
    best = (-np.inf, None)
    marg_pmfs = marg_comps / resolution
    for combo in itertools.product(range(n_marg), repeat=card_s):
        c = _h_s_given_z(ch, marg_pmfs[list(combo)])
        x, y, keys = fronts[0][combo[0]]
        for s in range(1, card_s):
            x2, y2, k2 = fronts[s][combo[s]]
            x = (x[:, None] + x2[None, :]).ravel()
            y = (y[:, None] + y2[None, :]).ravel()
            keys = np.concatenate(
                [np.repeat(keys, len(k2), axis=0), np.tile(k2, (len(keys), 1))], axis=1
            )
            evaluations += len(x)
            keep = _pareto(x, y, keys)
            x, y, keys = x[keep], y[keep], keys[keep]
        vals = np.minimum(x + c, y)
        top = vals.max()
        tied = np.flatnonzero(vals == top)
        k = tied[np.lexsort(tuple(keys[tied, c] for c in range(card_s - 1, -1, -1)))[0]]
        cand_key = tuple(int(v) for v in keys[k])
        if top > best[0] or (top == best[0] and cand_key < best[1]):
            best = (float(top), cand_key)
    return best[0], best[1], points, evaluations, terms


def _policy_from_joint(p_vx_s: np.ndarray, independent: bool = False) -> CausalPolicy:
    """CausalPolicy from p(v,x|s) of shape (S, V, X)."""
    p_v = p_vx_s.sum(axis=2)  # (S, V)
    card_x = p_vx_s.shape[2]
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = p_vx_s / p_v[:, :, None]
    cond = np.where(p_v[:, :, None] > 0, cond, 1.0 / card_x)
    cond = cond / cond.sum(axis=2, keepdims=True)
    p_v = p_v / p_v.sum(axis=1, keepdims=True)
    return CausalPolicy(p_v, np.transpose(cond, (1, 0, 2)), independent_v=independent)


def maximize_csi1(ch: ChannelWithState, cfg: SearchConfig) -> OptimResult:
    """Maximize min{I(V;Y|S) - I(V;Z|S) + H(S|Z), I(V;Y|S)} over p(v|s) p(x|v,s)."""
    cfg = cfg.resolved(ch)
    card_v, card_x, card_s = cfg.card_v, ch.card_x, ch.card_s
    grid_value, key, points, evals, _ = _csi1_lattice(ch, card_v, cfg.grid_resolution, cfg.cap)
    theta = np.stack([points[i] for i in key]).ravel()
    shape = (card_s, card_v, card_x)
    blocks = [slice(s * card_v * card_x, (s + 1) * card_v * card_x) for s in range(card_s)]

    def objective(batch):
        return _batch.csi1_objective(ch.p_s, ch.p_y_given_xs, ch.p_z_given_xs, batch.reshape((-1,) + shape))

    theta, _, more = _polish(objective, theta, grid_value, blocks, cfg, stream=1)
    witness = _policy_from_joint(theta.reshape(shape))
    return OptimResult(
        value=rate_csi_1_value(ch, witness),
        witness=witness,
        branch=Branch.CSI1,
        evaluations=evals + more,
        grid_value=grid_value,
        details={"card_v": card_v, "resolution": cfg.grid_resolution},
    )


# ---------------------------------------------------------------------------
# CSI2: symmetry-reduced exhaustive lattice


def _partitions(total: int, max_parts: int, largest: int | None = None):
    """Partitions of ``total`` into at most ``max_parts`` parts, parts non-increasing."""
    largest = total if largest is None else largest
    if total == 0:
        yield ()
        return
    if max_parts == 0:
        return
    for first in range(min(total, largest), 0, -1):
        for rest in _partitions(total - first, max_parts - 1, first):
            yield (first,) + rest


def _combination_array(n: int, m: int) -> np.ndarray:
    if m > n:
        return np.zeros((0, m), dtype=np.int64)
    flat = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(n), m)), dtype=np.int64)
    return flat.reshape(-1, m)


def _csi2_plan(n_cols: int, card_v: int, resolution: int):
    plan, total = [], 0
    for part in _partitions(resolution, card_v):
        groups = [(w, len(list(g))) for w, g in itertools.groupby(part)]
        count = math.prod(math.comb(n_cols, m) for _, m in groups)
        if count:
            plan.append((part, groups, count))
            total += count
    return plan, total


def _csi2_chunks(plan, n_cols: int, chunk_rows: int):
    """Yield (order key, weights, column index array) for the whole enumeration."""
    for p_i, (part, groups, _) in enumerate(plan):
        combos = [_combination_array(n_cols, m) for _, m in groups]
        rest = combos[1:]
        rest_count = math.prod(len(c) for c in rest)
        rows_per = max(1, chunk_rows // max(rest_count, 1))
        weights = np.array(part, dtype=float)
        for c_i, start in enumerate(range(0, len(combos[0]), rows_per)):
            head = combos[0][start : start + rows_per]
            parts = [head] + rest
            grids = np.meshgrid(*[np.arange(len(p)) for p in parts], indexing="ij")
            cols = np.concatenate([p[g.ravel()] for p, g in zip(parts, grids)], axis=1)
            yield (p_i, c_i), weights, cols


def _csi2_lattice(ch: ChannelWithState, card_v: int, resolution: int, cap: int, workers: int):
    card_s, card_x = ch.card_s, ch.card_x
    per_state = simplex_grid(card_x, resolution)
    n_per = len(per_state)
    n_cols = n_per**card_s
    if n_cols > cap:
        raise ResourceError(f"CSI2 column lattice has {n_cols} points, cap is {cap}", required=n_cols)
    col_idx = np.stack(np.unravel_index(np.arange(n_cols), (n_per,) * card_s), axis=1)
    cols = per_state[col_idx]  # (C, S, X): p(x | v, s) for one v
    plan, total = _csi2_plan(n_cols, card_v, resolution)
    if total > cap:
        raise ResourceError(
            f"CSI2 lattice needs {total} evaluations (card_v={card_v}, resolution={resolution}), cap is {cap}",
            required=total,
        )
    p_s, w_y, w_z = ch.p_s, ch.p_y_given_xs, ch.p_z_given_xs
    # per column: H(S|Z, V=v), sum_s p(s) H(Y|V=v, S=s), p(y | v, s)
    p_sz = p_s[None, :, None] * np.einsum("csx,sxz->csz", cols, w_z)
    h_col = _batch.plogp_sum(p_sz, axis=(1, 2)) - _batch.plogp_sum(p_sz.sum(axis=1), axis=1)
    q_col = np.einsum("csx,sxy->csy", cols, w_y)
    g_col = _batch.plogp_sum(q_col, axis=2) @ p_s

    def score(item):
        key, weights, idx = item
        w = weights / resolution
        a = h_col[idx] @ w
        mix = np.einsum("k,nksy->nsy", w, q_col[idx])
        b = _batch.plogp_sum(mix, axis=2) @ p_s - g_col[idx] @ w
        vals = np.minimum(np.clip(a, 0, None), np.clip(b, 0, None))
        k = int(np.argmax(vals))
        return float(vals[k]), key, k, weights, idx[k].copy()

    chunks = _csi2_chunks(plan, n_cols, chunk_rows=1 << 17)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(score, chunks))
    else:
        results = [score(c) for c in chunks]
    best = results[0]
    for r in results[1:]:
        if r[0] > best[0]:
            best = r
    value, _, _, weights, idx = best
    p_v = np.zeros(card_v)
    p_x = np.full((card_v, card_s, card_x), 1.0 / card_x)
    p_v[: len(idx)] = weights / resolution
    p_x[: len(idx)] = cols[idx]
    return value, p_v, p_x, total


def maximize_csi2(ch: ChannelWithState, cfg: SearchConfig) -> OptimResult:
    """Maximize min{H(S|Z,V), I(V;Y|S)} over p(v) p(x|v,s)."""
    cfg = cfg.resolved(ch)
    card_v, card_s, card_x = cfg.card_v_indep, ch.card_s, ch.card_x
    grid_value, p_v, p_x, evals = _csi2_lattice(ch, card_v, cfg.grid_resolution, cfg.cap, cfg.workers)
    theta = np.concatenate([p_v, p_x.ravel()])
    blocks = [slice(0, card_v)] + [
        slice(card_v + i * card_x, card_v + (i + 1) * card_x) for i in range(card_v * card_s)
    ]

    def objective(batch):
        pv = batch[:, :card_v]
        px = batch[:, card_v:].reshape(-1, card_v, card_s, card_x)
        return _batch.csi2_objective(ch.p_s, ch.p_y_given_xs, ch.p_z_given_xs, pv, px)

    theta, _, more = _polish(objective, theta, grid_value, blocks, cfg, stream=2)
    pv = theta[:card_v] / theta[:card_v].sum()
    px = theta[card_v:].reshape(card_v, card_s, card_x)
    px = px / px.sum(axis=2, keepdims=True)
    witness = CausalPolicy.independent(pv, px)
    return OptimResult(
        value=rate_csi_2_value(ch, witness),
        witness=witness,
        branch=Branch.CSI2,
        evaluations=evals + more,
        grid_value=grid_value,
        details={"card_v": card_v, "resolution": cfg.grid_resolution},
    )


def maximize_branch(ch: ChannelWithState, cfg: SearchConfig, branch: Branch) -> OptimResult:
    return maximize_csi1(ch, cfg) if Branch(branch) is Branch.CSI1 else maximize_csi2(ch, cfg)


def maximize_lower_bound(ch: ChannelWithState, cfg: SearchConfig | None = None) -> BoundReport:
    """Maximize both branches of the lower bound independently.

    The report carries both branch maxima, their witnesses, and the noncausal
    bound evaluated at the embedding of the CSI1 witness.
    """
    cfg = (cfg or SearchConfig()).resolved(ch)
    r1 = maximize_csi1(ch, cfg)
    r2 = maximize_csi2(ch, cfg)
    liu = liu_chen_value(ch, *embed_policy(r1.witness))
    return BoundReport(
        r_csi_1=r1.value,
        r_csi_2=r2.value,
        liu_chen=liu,
        witnesses={"csi1": r1.witness, "csi2": r2.witness},
        details={
            "card_v": cfg.card_v,
            "card_v_indep": cfg.card_v_indep,
            "grid_resolution": cfg.grid_resolution,
            "refine_rounds": cfg.refine_rounds,
            "restarts": cfg.restarts,
            "seed": cfg.seed,
            "csi1_grid_value": r1.grid_value,
            "csi2_grid_value": r2.grid_value,
            "evaluations": r1.evaluations + r2.evaluations,
            "results": {"csi1": r1, "csi2": r2},
        },
    )


# ---------------------------------------------------------------------------
# special cases


def _check_per_state_less_noisy(ch: ChannelWithState, resolution: int, swap: bool) -> bool:
    for s in range(ch.card_s):
        w = ch.p_yz_given_xs[s]
        if swap:
            w = np.transpose(w, (0, 2, 1))
        if not check_less_noisy(w, resolution).concave:
            return False
    return True


def maximize_special_case(ch: ChannelWithState, which: SpecialCase, resolution: int) -> OptimResult:
    """Grid maximization of one of the closed-form capacity formulas.

    Preconditions are checked structurally (state independence, degradedness
    by linear feasibility) or on the lattice (less noisy, midpoint concavity).
    """
    which = SpecialCase(which)
    check_res = min(resolution, 64)
    if which is SpecialCase.THM3:
        if not _check_per_state_less_noisy(ch, check_res, swap=False):
            raise ContractError("Thm3 needs Y less noisy than Z in every state; the midpoint scan found a violation")
        res = less_noisy_capacity(ch, resolution)
        branch, pol = Branch.CSI1, _identity(res.argmax)
    elif which is SpecialCase.YAMAMOTO:
        res = yamamoto_capacity(ch, resolution)
        branch, pol = Branch.CSI1, _identity(np.tile(res.argmax, (ch.card_s, 1)))
    else:
        if ch.is_state_independent() and not _check_per_state_less_noisy(ch, check_res, swap=True):
            raise ContractError("ZLessNoisy needs Z less noisy than Y; the midpoint scan found a violation")
        res = z_less_noisy_capacity(ch, resolution)
        branch, pol = Branch.CSI2, _identity(np.tile(res.argmax, (ch.card_s, 1)), independent=True)
    return OptimResult(
        value=res.value,
        witness=pol,
        branch=branch,
        evaluations=res.evaluations,
        grid_value=res.value,
        details={"case": which.value, "resolution": resolution},
    )


def _identity(p_x_given_s: np.ndarray, independent: bool = False) -> CausalPolicy:
    card_s, card_x = p_x_given_s.shape
    eye = np.tile(np.eye(card_x)[:, None, :], (1, card_s, 1))
    return CausalPolicy(p_x_given_s, eye, independent_v=independent)


def detect_special_cases(ch: ChannelWithState, resolution: int = 32) -> list[SpecialCase]:
    """Special cases whose structural preconditions hold for ``ch``."""
    found = []
    if _check_per_state_less_noisy(ch, resolution, swap=False):
        found.append(SpecialCase.THM3)
    if ch.is_state_independent():
        if is_degraded(ch.p_y_given_xs[0], ch.p_z_given_xs[0]):
            found.append(SpecialCase.YAMAMOTO)
        if _check_per_state_less_noisy(ch, resolution, swap=True):
            found.append(SpecialCase.Z_LESS_NOISY)
    return found


# ---------------------------------------------------------------------------
# tightness


def tightness_classify(ch: ChannelWithState, report: BoundReport, resolution: int, tol: float = 1e-12) -> Tightness:
    """Check the two sufficient conditions for the lower bound to be the capacity.

    CaseI: the lattice maximizer V* of I(V;Y|S) - I(V;Z|S) + H(S|Z) has that
    value at most I(V*;Y|S). CaseII: the lattice maximizer V' of I(V;Y|S)
    has I(V';Y|S) at most its first expression. Exact ties among maximizers
    are broken by lattice order.
    """
    card_v = report.details.get("card_v") or ch.card_x * ch.card_s + 1
    card_s = ch.card_s
    _, _, points, _, terms = _csi1_lattice(ch, card_v, resolution, report.details.get("cap", DEFAULT_GRID_CAP))
    card_x = ch.card_x
    marg = np.rint(points.sum(axis=1) * resolution).astype(np.int64)
    marg_keys = marg @ ((resolution + 1) ** np.arange(card_x - 1, -1, -1))
    uniq, inverse = np.unique(marg_keys, return_inverse=True)

    # CaseI: maximize sum_s p_s (a_s - b_s) + H(S|Z); within a marginal class the
    # per-state choices decouple.
    best_first = (-np.inf, None)
    per_state_best = []
    for s in range(card_s):
        a, b = terms[s]
        d = a - b
        choice = []
        for g in range(len(uniq)):
            members = np.flatnonzero(inverse == g)
            choice.append(members[np.argmax(d[members])])
        per_state_best.append(choice)
    marg_pmfs = np.array([points[per_state_best[0][g]].sum(axis=0) for g in range(len(uniq))])
    for combo in itertools.product(range(len(uniq)), repeat=card_s):
        key = tuple(per_state_best[s][combo[s]] for s in range(card_s))
        c = _h_s_given_z(ch, marg_pmfs[list(combo)])
        val = sum(ch.p_s[s] * (terms[s][0][k] - terms[s][1][k]) for s, k in enumerate(key)) + c
        if val > best_first[0] + tol:
            best_first = (val, key)
    key = best_first[1]
    a_star = sum(ch.p_s[s] * terms[s][0][k] for s, k in enumerate(key))
    if best_first[0] <= a_star + tol:
        return Tightness.CASE_I

    # CaseII: I(V;Y|S) separates over states.
    key2 = tuple(int(np.argmax(terms[s][0])) for s in range(card_s))
    a2 = sum(ch.p_s[s] * terms[s][0][k] for s, k in enumerate(key2))
    b2 = sum(ch.p_s[s] * terms[s][1][k] for s, k in enumerate(key2))
    c2 = _h_s_given_z(ch, np.stack([points[k].sum(axis=0) for k in key2]))
    if a2 <= a2 - b2 + c2 + tol:
        return Tightness.CASE_II
    return Tightness.UNKNOWN


def certify(report: BoundReport, tightness: Tightness) -> BoundReport:
    """Copy of ``report`` flagged as the capacity when a tightness case holds."""
    return replace(report, capacity_certified=tightness is not Tightness.UNKNOWN)
