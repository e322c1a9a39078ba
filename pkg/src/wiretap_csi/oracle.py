"""Exact enumeration of error probability, leakage and key statistics.

Everything here conditions on one realized codebook and key binning, and is
only feasible for tiny alphabets and block lengths. Session leakage is
I(M_2..M_b; Z^{bn} | C) divided by the number of message-bearing symbols
(b-1)n; the error probability is that of one message block (it does not depend
on the block index because every key is a function of a fresh i.i.d. state
block).

The main path builds per-block transition kernels and chains them forward
over keys. :func:`second_enumerator_crosscheck` recomputes the same numbers
with plain loops in a different order, calling the simulator's decoder.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelWithState
from .errors import ConsistencyError, ResourceError
from .info import Alphabet, JointPmf, entropy_of_table, mutual_information
from .simulate import (
    KeyBinning,
    MessageCodebook,
    SchemeCase,
    SchemeConfig,
    _typical_mask,
    candidate_range,
    decode_block,
    design_joint,
    key_bin,
    message_of_index,
    select_codeword,
)

DEFAULT_BUDGET = 10**8
CROSSCHECK_TOL = 1e-10


@dataclass(frozen=True)
class EnumerationBudget:
    max_terms: int = DEFAULT_BUDGET

    def charge(self, terms: int, what: str) -> None:
        if terms > self.max_terms:
            raise ResourceError(f"{what} needs {terms} enumerated terms, budget is {self.max_terms}", required=terms)


@dataclass(frozen=True)
class OracleReport:
    """Exact finite-n quantities for one codebook.

    ``key_entropy[j-1]`` is H(K_j|C); ``key_leakage_block[j-1]`` is
    I(K_j; Z(j)|C) and ``key_leakage[j-1]`` is I(K_j; Z^j|C), for j = 1..b-1.
    """

    exact_pe: float
    leakage_bits_per_symbol: float
    leakage_bits: float
    message_entropy: float
    key_entropy: tuple[float, ...]
    key_leakage_block: tuple[float, ...]
    key_leakage: tuple[float, ...]
    crosscheck: bool | None = None
    details: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "exact_pe": self.exact_pe,
            "leakage_bits_per_symbol": self.leakage_bits_per_symbol,
            "leakage_bits": self.leakage_bits,
            "message_entropy": self.message_entropy,
            "key_entropy": list(self.key_entropy),
            "key_leakage_block": list(self.key_leakage_block),
            "key_leakage": list(self.key_leakage),
            "crosscheck": self.crosscheck,
        }


def all_sequences(card: int, n: int) -> np.ndarray:
    """Every length-n sequence over ``card`` symbols, lexicographic (first symbol slowest)."""
    grids = np.indices((card,) * n).reshape(n, -1).T
    return np.ascontiguousarray(grids)


def _per_symbol_output(ch: ChannelWithState, cb: MessageCodebook, which: str) -> np.ndarray:
    """p(out | u, s) for the strategy of ``cb``; shape (U, S, Out)."""
    w = ch.p_y_given_xs if which == "y" else ch.p_z_given_xs  # (S, X, Out)
    strat = cb.strategy
    s_idx = np.arange(ch.card_s)
    p_x_us = strat.p_x_given_vs[strat.v_of_us, s_idx[None, :]]  # (U, S, X)
    return np.einsum("usx,sxo->uso", p_x_us, w)


class _Tables:
    """Block-level probability tables shared by the main-path computations."""

    def __init__(self, ch, cfg, cb, kb, budget):
        self.cfg = cfg
        n = cfg.n
        self.states = all_sequences(ch.card_s, n)
        n_states = len(self.states)
        self.p_states = np.prod(ch.p_s[self.states], axis=1)
        self.keys = np.array([key_bin(s, kb) for s in self.states], dtype=np.int64)
        self.p_key = np.bincount(self.keys, weights=self.p_states, minlength=cfg.n_key)
        # state-probability mass routed to each key: (S^n, NK)
        self.state_to_key = np.zeros((n_states, cfg.n_key))
        self.state_to_key[np.arange(n_states), self.keys] = self.p_states
        self.budget = budget
        self._ch, self._cb = ch, cb

    def block_output(self, which: str) -> np.ndarray:
        """p(out^n | L, s^n), shape (N, S^n, Out^n), built symbol by symbol."""
        ch, cb, cfg = self._ch, self._cb, self.cfg
        per = _per_symbol_output(ch, cb, which)
        card_o = per.shape[2]
        n_out = card_o**cfg.n
        self.budget.charge(cfg.n_total * len(self.states) * n_out, f"p({which}^n | codeword, s^n)")
        table = np.ones((cfg.n_total, len(self.states), 1))
        for i in range(cfg.n):
            step = per[cb.sequences[:, i][:, None], self.states[:, i][None, :]]  # (N, S^n, Out)
            table = (table[:, :, :, None] * step[:, :, None, :]).reshape(cfg.n_total, len(self.states), -1)
        return table

    def selection(self, k: int) -> np.ndarray:
        """P(L = l | m, k) as an (M, N) matrix."""
        cfg, cb = self.cfg, self._cb
        mat = np.zeros((cfg.message_count, cfg.n_total))
        for m in range(cfg.message_count):
            if cfg.case is SchemeCase.CASE3:
                mat[m, select_codeword(cb, m, k, _NoRandom())] = 1.0
            else:
                first = select_codeword(cb, m, k, _NoRandom())
                mat[m, first : first + cfg.cell_size] = 1.0 / cfg.cell_size
        return mat

    def block_kernel(self, pz: np.ndarray) -> np.ndarray:
        """T[k_prev, m, z, k_new] = sum_L P(L|m,k_prev) sum_s p(s)[bin(s)=k_new] p(z|L,s)."""
        cfg = self.cfg
        # G[L, z, k_new]
        g = np.einsum("lsz,sk->lzk", pz, self.state_to_key)
        return np.stack([np.einsum("ml,lzk->mzk", self.selection(k), g) for k in range(cfg.n_key)])

    def first_block(self, pz: np.ndarray) -> np.ndarray:
        """F[z, k] for the keyless first block (uniform codeword)."""
        return np.einsum("lsz,sk->zk", pz, self.state_to_key) / self.cfg.n_total


class _NoRandom:
    """Stand-in generator that always picks the first codeword of a cell."""

    def integers(self, high):
        return 0


def _check_instance(budget: EnumerationBudget | None) -> EnumerationBudget:
    return budget if budget is not None else EnumerationBudget()


def exact_error_probability(
    ch: ChannelWithState, cfg: SchemeConfig, cb: MessageCodebook, kb: KeyBinning, budget: EnumerationBudget | None = None
) -> float:
    """P(M_hat != M) for one message block, summed exactly over all configurations."""
    budget = _check_instance(budget)
    tab = _Tables(ch, cfg, cb, kb, budget)
    n_states = len(tab.states)
    card_y = ch.sizes["y"]
    outputs = all_sequences(card_y, cfg.n)
    budget.charge(cfg.n_key * cfg.message_count * cfg.n_total * n_states * len(outputs), "error probability")
    py = tab.block_output("y")  # (N, S^n, Y^n)
    joint = design_joint(ch, cb.strategy)
    table = joint.table.ravel()
    card_u = cb.strategy.card_u
    # typical[l, s, y] via joint-type counts of (u(l)_i, s_i, y_i)
    n_cells = table.size
    typical = np.empty((cfg.n_total, n_states, len(outputs)), dtype=bool)
    for l in range(cfg.n_total):
        codes = (cb.sequences[l][None, None, :] * ch.card_s + tab.states[:, None, :]) * card_y + outputs[None, :, :]
        flat = codes + (np.arange(n_states * len(outputs)) * n_cells).reshape(n_states, len(outputs), 1)
        counts = np.bincount(flat.ravel(), minlength=n_states * len(outputs) * n_cells)
        typical[l] = _typical_mask(counts.reshape(n_states, len(outputs), n_cells), cfg.n, table, cfg.epsilon)
    assert card_u * ch.card_s * card_y == n_cells
    pe = 0.0
    for k in range(cfg.n_key):
        if tab.p_key[k] == 0:
            continue
        cand = candidate_range(cb, k)
        sub = typical[cand.start : cand.stop]
        hits = sub.sum(axis=0)
        first = sub.argmax(axis=0) + cand.start
        decoded = np.full(hits.shape, -1, dtype=np.int64)
        lookup = np.array([message_of_index(cb, l, k) for l in range(cfg.n_total)])
        decoded[hits == 1] = lookup[first[hits == 1]]
        # R[m, s, y] = sum_L P(L|m,k) p(y|L,s)
        r = np.einsum("ml,lsy->msy", tab.selection(k), py)
        correct = decoded[None, :, :] == np.arange(cfg.message_count)[:, None, None]
        p_correct = np.einsum("msy,s->", np.where(correct, r, 0.0), tab.p_states) / cfg.message_count
        pe += tab.p_key[k] * (1.0 - p_correct)
    return float(min(max(pe, 0.0), 1.0))


def _mi_from_table(table: np.ndarray) -> float:
    """I(A;B) for a 2-D table (rows A, columns B)."""
    total = table.sum()
    p = table / total
    variables = (Alphabet("A", p.shape[0]), Alphabet("B", p.shape[1]))
    return mutual_information(JointPmf(variables, p, tol=1e-9), "A", "B")


def exact_leakage(
    ch: ChannelWithState, cfg: SchemeConfig, cb: MessageCodebook, kb: KeyBinning, budget: EnumerationBudget | None = None
) -> float:
    """I(M_2..M_b; Z^{bn} | C) / ((b-1) n) in bits per symbol."""
    return _leakage_bits(ch, cfg, cb, kb, _check_instance(budget)) / ((cfg.b - 1) * cfg.n)


def _leakage_bits(ch, cfg, cb, kb, budget) -> float:
    tab = _Tables(ch, cfg, cb, kb, budget)
    card_z = ch.sizes["z"]
    n_z = card_z**cfg.n
    budget.charge(
        cfg.message_count ** (cfg.b - 1) * n_z**cfg.b * cfg.n_key**2, "session leakage forward table"
    )
    pz = tab.block_output("z")
    kernel = tab.block_kernel(pz) / cfg.message_count  # (K, M, Z, K)
    # alpha[m-history, z-history, k]
    alpha = tab.first_block(pz)[None, :, :]
    for _ in range(1, cfg.b):
        alpha = np.einsum("azk,kmwj->amzwj", alpha, kernel)
        a, m, z, w, j = alpha.shape
        alpha = alpha.reshape(a * m, z * w, j)
    return _mi_from_table(alpha.sum(axis=2))


def key_statistics(
    ch: ChannelWithState,
    cfg: SchemeConfig,
    cb: MessageCodebook,
    kb: KeyBinning,
    j: int,
    budget: EnumerationBudget | None = None,
) -> tuple[float, float, float]:
    """(H(K_j|C), I(K_j; Z(j)|C), I(K_j; Z^j|C)) for block j >= 1."""
    budget = _check_instance(budget)
    if j < 1:
        raise ValueError("block index j starts at 1")
    tab = _Tables(ch, cfg, cb, kb, budget)
    h_k = entropy_of_table(tab.p_key)
    n_z = ch.sizes["z"] ** cfg.n
    budget.charge(n_z**j * cfg.n_key**2 * cfg.message_count, "key statistics forward table")
    pz = tab.block_output("z")
    first = tab.first_block(pz)  # (Z, K)
    if j == 1:
        return h_k, _mi_from_table(first), _mi_from_table(first)
    step = tab.block_kernel(pz).sum(axis=1) / cfg.message_count  # (K, Z, K)
    alpha = first
    for _ in range(1, j):
        alpha = np.einsum("zk,kwj->zwj", alpha, step).reshape(-1, cfg.n_key)
    block = np.einsum("k,kwj->wj", tab.p_key, step)
    return h_k, _mi_from_table(block), _mi_from_table(alpha)


def oracle_report(
    ch: ChannelWithState,
    cfg: SchemeConfig,
    cb: MessageCodebook,
    kb: KeyBinning,
    budget: EnumerationBudget | None = None,
    crosscheck: bool = False,
) -> OracleReport:
    budget = _check_instance(budget)
    pe = exact_error_probability(ch, cfg, cb, kb, budget)
    leak_bits = _leakage_bits(ch, cfg, cb, kb, budget)
    stats = [key_statistics(ch, cfg, cb, kb, j, budget) for j in range(1, cfg.b)]
    verdict = second_enumerator_crosscheck(ch, cfg, cb, kb, budget) if crosscheck else None
    return OracleReport(
        exact_pe=pe,
        leakage_bits_per_symbol=leak_bits / ((cfg.b - 1) * cfg.n),
        leakage_bits=leak_bits,
        message_entropy=(cfg.b - 1) * float(np.log2(cfg.message_count)),
        key_entropy=tuple(s[0] for s in stats),
        key_leakage_block=tuple(s[1] for s in stats),
        key_leakage=tuple(s[2] for s in stats),
        crosscheck=verdict,
    )


# ---------------------------------------------------------------------------
# Second enumerator: loops in a different order, scalar probabilities, and the
# simulator's decoder called once per (output, state, key).


def _alt_codeword_law(cb: MessageCodebook, m: int, k: int) -> dict[int, float]:
    cfg = cb.cfg
    if cfg.case is SchemeCase.CASE3:
        return {(m + k) % cfg.n_key: 1.0}
    if cfg.case is SchemeCase.CASE1:
        n1 = 1 << cfg.log2_subbins
        m0, m1 = divmod(m, n1)
        cell = m0 * n1 + (m1 + k) % n1
    else:
        n_d, n_m = 1 << cfg.log2_keyd, cfg.message_count
        cell = (k % n_d) * n_m + (m + (k // n_d)) % n_m
    members = cb.cell_members(cell)
    return {l: 1.0 / len(members) for l in members}


def _alt_seq_prob(per: np.ndarray, word, states, outs) -> float:
    p = 1.0
    for u, s, o in zip(word, states, outs):
        p *= per[u, s, o]
    return p


def _alt_error_probability(ch, cfg, cb, kb) -> float:
    card_s, card_y = ch.card_s, ch.sizes["y"]
    per_y = _per_symbol_output(ch, cb, "y")
    joint = design_joint(ch, cb.strategy)
    state_list = list(itertools.product(range(card_s), repeat=cfg.n))
    p_state = {s: float(np.prod([ch.p_s[x] for x in s])) for s in state_list}
    key_of = {s: key_bin(np.array(s), kb) for s in state_list}
    p_key = np.zeros(cfg.n_key)
    for s in state_list:
        p_key[key_of[s]] += p_state[s]
    pe = 0.0
    for y in itertools.product(range(card_y), repeat=cfg.n):
        for s in state_list:
            for k in range(cfg.n_key):
                if p_key[k] == 0:
                    continue
                decoded = decode_block(cb, y, s, k, joint, cfg.epsilon).message
                for m in range(cfg.message_count):
                    if decoded == m:
                        continue
                    mass = sum(w * _alt_seq_prob(per_y, cb.sequences[l], s, y) for l, w in _alt_codeword_law(cb, m, k).items())
                    pe += p_key[k] * p_state[s] * mass / cfg.message_count
    return pe


def _alt_leakage_bits(ch, cfg, cb, kb) -> float:
    card_s, card_z = ch.card_s, ch.sizes["z"]
    per_z = _per_symbol_output(ch, cb, "z")
    state_list = list(itertools.product(range(card_s), repeat=cfg.n))
    z_list = list(itertools.product(range(card_z), repeat=cfg.n))
    p_state = np.array([np.prod([ch.p_s[x] for x in s]) for s in state_list])
    keys = [key_bin(np.array(s), kb) for s in state_list]
    # block z-distribution for codeword l under state sequence s
    zdist = np.array(
        [[[_alt_seq_prob(per_z, cb.sequences[l], s, z) for z in z_list] for s in state_list] for l in range(cfg.n_total)]
    )
    messages = list(itertools.product(range(cfg.message_count), repeat=cfg.b - 1))
    table = np.zeros((len(messages), len(z_list) ** cfg.b))
    for mi, msg in enumerate(messages):
        acc = np.zeros(len(z_list) ** cfg.b)
        for states in itertools.product(range(len(state_list)), repeat=cfg.b):
            w_states = float(np.prod(p_state[list(states)]))
            if w_states == 0.0:
                continue
            laws = [{l: 1.0 / cfg.n_total for l in range(cfg.n_total)}]
            for j in range(1, cfg.b):
                laws.append(_alt_codeword_law(cb, msg[j - 1], keys[states[j - 1]]))
            for choice in itertools.product(*[list(law.items()) for law in laws]):
                w = w_states
                vec = np.ones(1)
                for (l, pl), si in zip(choice, states):
                    w *= pl
                    vec = np.outer(vec, zdist[l, si]).ravel()
                acc += w * vec
        table[mi] = acc / len(messages)
    return _mi_from_table(table)


@dataclass(frozen=True)
class CrossCheck:
    pe_main: float
    pe_alt: float
    leakage_main: float
    leakage_alt: float

    @property
    def agree(self) -> bool:
        return abs(self.pe_main - self.pe_alt) <= CROSSCHECK_TOL and abs(self.leakage_main - self.leakage_alt) <= CROSSCHECK_TOL


def crosscheck_values(ch, cfg, cb, kb, budget: EnumerationBudget | None = None) -> CrossCheck:
    budget = _check_instance(budget)
    return CrossCheck(
        pe_main=exact_error_probability(ch, cfg, cb, kb, budget),
        pe_alt=_alt_error_probability(ch, cfg, cb, kb),
        leakage_main=_leakage_bits(ch, cfg, cb, kb, budget) / ((cfg.b - 1) * cfg.n),
        leakage_alt=_alt_leakage_bits(ch, cfg, cb, kb) / ((cfg.b - 1) * cfg.n),
    )


def second_enumerator_crosscheck(ch, cfg, cb, kb, budget: EnumerationBudget | None = None) -> bool:
    """Recompute P_e and leakage with the loop-based enumerator; True when both agree within 1e-10."""
    return crosscheck_values(ch, cfg, cb, kb, budget).agree


def assert_crosscheck(ch, cfg, cb, kb, budget: EnumerationBudget | None = None) -> CrossCheck:
    """Like :func:`second_enumerator_crosscheck` but raise ConsistencyError on disagreement."""
    result = crosscheck_values(ch, cfg, cb, kb, budget)
    if not result.agree:
        raise ConsistencyError(f"enumerators disagree: {result}")
    return result
