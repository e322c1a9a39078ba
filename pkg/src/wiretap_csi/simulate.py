"""Desk-scale block-Markov coding with keys generated from the state.

A session sends b-1 uniform messages over b blocks of n symbols. Block 1 sends
a random codeword and only produces a key; the key of block j-1 (the bin of
the state sequence seen in that block) pads the message of block j. All code
sizes are powers of two and the pad is addition modulo the message modulus.

Codeword index layout (contiguous, so partitions are exact):

* Case 1: ``l = (m0 * N1 + m1') * size + offset`` with bins ``m0 < N0`` and
  sub-bins ``m1' < N1``; message ``m = m0 * N1 + m1``.
* Case 2: ``l = (kd * M + m') * size + offset`` where ``kd`` is the low part of
  the key and ``M`` the message count.
* Case 3: ``l = m'`` directly (one codeword per message, N = NK).
"""

from __future__ import annotations

import enum
import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .channel import CausalPolicy, ChannelWithState, ShannonStrategy, strategy_joint
from .errors import ContractError, DomainError, ResourceError
from .info import JointPmf, marginalize

DEFAULT_CODEBOOK_CAP = 10**8

# SeedSequence streams derived from the master seed
_CODEBOOK_STREAM = 0
_BINNING_STREAM = 1
_TRIAL_STREAM = 2


class SchemeCase(int, enum.Enum):
    CASE1 = 1
    CASE2 = 2
    CASE3 = 3


@dataclass(frozen=True)
class SchemeConfig:
    """Integer code sizes, given as base-2 logarithms.

    ``log2_total`` codewords, ``log2_bins`` bins (Case 1), ``log2_subbins``
    sub-bins per bin (Case 1) or messages (Case 2), ``log2_key`` key bins and
    ``log2_keyd`` key bits spent selecting the bin (Case 2).
    """

    case: SchemeCase
    n: int
    b: int
    log2_total: int
    log2_key: int
    log2_bins: int = 0
    log2_subbins: int = 0
    log2_keyd: int = 0
    epsilon: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "case", SchemeCase(self.case))
        for name in ("log2_total", "log2_key", "log2_bins", "log2_subbins", "log2_keyd"):
            if getattr(self, name) < 0:
                raise ContractError(f"{name} must be nonnegative")
        if self.n < 1:
            raise ContractError("block length n must be >= 1")
        if self.b < 2:
            raise ContractError("a session needs b >= 2 blocks")
        if not self.epsilon > 0:
            raise ContractError("epsilon must be positive")
        if not 0 <= self.seed < 2**64:
            raise ContractError("seed must be a 64-bit unsigned integer")
        if self.case is SchemeCase.CASE1:
            if self.log2_bins + self.log2_subbins > self.log2_total:
                raise ContractError("Case 1 needs N0 * N1 <= N_total (bins times sub-bins must divide the codebook)")
            if self.log2_subbins > self.log2_key:
                raise ContractError("Case 1 needs R1 <= RK (sub-bin count N1 must not exceed key count NK)")
        elif self.case is SchemeCase.CASE2:
            if self.log2_keyd + self.log2_subbins > self.log2_total:
                raise ContractError("Case 2 needs Nd * messages <= N_total")
            if self.log2_keyd + self.log2_subbins > self.log2_key:
                raise ContractError("Case 2 needs messages <= NK / Nd (R <= RK - Rd)")
        else:
            if self.log2_total != self.log2_key:
                raise ContractError("Case 3 needs one codeword per key value (N_total = NK, R = RK)")

    @property
    def n_total(self) -> int:
        return 1 << self.log2_total

    @property
    def n_key(self) -> int:
        return 1 << self.log2_key

    @property
    def message_count(self) -> int:
        if self.case is SchemeCase.CASE1:
            return 1 << (self.log2_bins + self.log2_subbins)
        if self.case is SchemeCase.CASE2:
            return 1 << self.log2_subbins
        return self.n_key

    @property
    def cell_count(self) -> int:
        """Number of equal cells the codebook is cut into."""
        if self.case is SchemeCase.CASE1:
            return 1 << (self.log2_bins + self.log2_subbins)
        if self.case is SchemeCase.CASE2:
            return 1 << (self.log2_keyd + self.log2_subbins)
        return self.n_total

    @property
    def cell_size(self) -> int:
        return self.n_total // self.cell_count

    @classmethod
    def from_dict(cls, doc: dict) -> "SchemeConfig":
        try:
            sizes = doc.get("log2_sizes", {})
            return cls(
                case=SchemeCase(int(doc["case"])),
                n=int(doc["n"]),
                b=int(doc["b"]),
                log2_total=int(sizes["total"]),
                log2_key=int(sizes["key"]),
                log2_bins=int(sizes.get("bins", 0)),
                log2_subbins=int(sizes.get("subbins", 0)),
                log2_keyd=int(sizes.get("keyd", 0)),
                epsilon=float(doc.get("epsilon", 1.0)),
                seed=int(doc.get("seed", 0)),
            )
        except (ContractError, DomainError):
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed scheme document: {exc!r}") from None

    def to_dict(self) -> dict:
        return {
            "case": int(self.case),
            "n": self.n,
            "b": self.b,
            "log2_sizes": {
                "total": self.log2_total,
                "bins": self.log2_bins,
                "subbins": self.log2_subbins,
                "key": self.log2_key,
                "keyd": self.log2_keyd,
            },
            "epsilon": self.epsilon,
            "seed": self.seed,
        }


def pad(m: int, k: int, modulus: int) -> int:
    """One-time pad on [0, modulus): (m + k) mod modulus, key reduced first."""
    return (m + k % modulus) % modulus


def unpad(c: int, k: int, modulus: int) -> int:
    return (c - k % modulus) % modulus


def as_strategy(obj) -> ShannonStrategy:
    """Accept a Shannon strategy, or a policy with V independent of S (used as U = V)."""
    if isinstance(obj, ShannonStrategy):
        return obj
    if isinstance(obj, CausalPolicy):
        if not obj.independent_v:
            raise ContractError("a codebook over V needs a policy with p(v|s) = p(v)")
        return ShannonStrategy.identity(obj.p_v_given_s[0], obj.p_x_given_vs)
    raise DomainError(f"cannot build a codebook from {type(obj).__name__}")


def default_strategy(ch: ChannelWithState) -> ShannonStrategy:
    """U = V = X uniform, independent of the state."""
    card_x, card_s = ch.card_x, ch.card_s
    return ShannonStrategy.identity(np.full(card_x, 1.0 / card_x), np.tile(np.eye(card_x)[:, None, :], (1, card_s, 1)))


@dataclass(frozen=True, eq=False)
class MessageCodebook:
    """Codewords ``sequences[l]`` (symbols of U, or V in Case 3) and the cell layout."""

    cfg: SchemeConfig
    strategy: ShannonStrategy
    sequences: np.ndarray

    def cell_of(self, index: int) -> int:
        return index // self.cfg.cell_size

    def cell_members(self, cell: int) -> range:
        size = self.cfg.cell_size
        return range(cell * size, (cell + 1) * size)

    def locate(self, index: int) -> tuple[int, int]:
        """(bin, sub-bin) of a codeword index."""
        cell = self.cell_of(index)
        if self.cfg.case is SchemeCase.CASE1:
            n1 = 1 << self.cfg.log2_subbins
        elif self.cfg.case is SchemeCase.CASE2:
            n1 = self.cfg.message_count
        else:
            n1 = 1
        return divmod(cell, n1)


def generate_codebook(
    ch: ChannelWithState, cfg: SchemeConfig, strat, cap: int = DEFAULT_CODEBOOK_CAP
) -> MessageCodebook:
    """Draw ``N_total`` i.i.d. sequences from p(u) (or p(v) in Case 3)."""
    strat = as_strategy(strat)
    if strat.v_of_us.shape[1] != ch.card_s or strat.p_x_given_vs.shape[2] != ch.card_x:
        raise DomainError("strategy alphabets do not match the channel")
    if cfg.case is SchemeCase.CASE3:
        identity = np.arange(strat.card_u)[:, None]
        if strat.p_x_given_vs.shape[0] != strat.card_u or np.any(strat.v_of_us != identity):
            raise ContractError("Case 3 transmits v^n directly; use a strategy with v(u,s) = u")
    size = cfg.n_total * cfg.n
    if size > cap:
        raise ResourceError(f"codebook needs {size} symbols, cap is {cap}", required=size)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _CODEBOOK_STREAM]))
    seqs = rng.choice(strat.card_u, size=(cfg.n_total, cfg.n), p=strat.p_u)
    seqs.setflags(write=False)
    return MessageCodebook(cfg, strat, seqs)


@dataclass(frozen=True)
class KeyBinning:
    """Keyed hash of the state sequence into ``n_key`` bins."""

    prf_seed: int
    n_key: int

    def __call__(self, s_seq) -> int:
        return key_bin(s_seq, self)

    @classmethod
    def from_config(cls, cfg: SchemeConfig) -> "KeyBinning":
        words = np.random.SeedSequence([cfg.seed, _BINNING_STREAM]).generate_state(2, dtype=np.uint32)
        return cls(int(words[0]) | (int(words[1]) << 32), cfg.n_key)


def key_bin(s_seq, kb: KeyBinning) -> int:
    """Bin index in [0, NK) of a state sequence; deterministic in (prf_seed, s_seq)."""
    if kb.n_key == 1:
        return 0
    data = np.asarray(s_seq, dtype="<u2").tobytes()
    digest = hashlib.blake2b(data, digest_size=8, key=kb.prf_seed.to_bytes(8, "little")).digest()
    return int.from_bytes(digest, "little") % kb.n_key


def select_codeword(cb: MessageCodebook, m: int | None, key_prev: int | None, rng: np.random.Generator) -> int:
    """Index L of the codeword sent for message ``m`` under key ``key_prev``.

    ``m=None`` is the first block: a uniformly random codeword.
    """
    cfg = cb.cfg
    if m is None:
        return int(rng.integers(cfg.n_total))
    if not 0 <= m < cfg.message_count:
        raise DomainError(f"message {m} outside [0, {cfg.message_count})")
    if key_prev is None or not 0 <= key_prev < cfg.n_key:
        raise DomainError(f"key {key_prev} outside [0, {cfg.n_key})")
    if cfg.case is SchemeCase.CASE3:
        return pad(m, key_prev, cfg.n_key)
    if cfg.case is SchemeCase.CASE1:
        n1 = 1 << cfg.log2_subbins
        m0, m1 = divmod(m, n1)
        cell = m0 * n1 + pad(m1, key_prev, n1)
    else:
        n_d, n_m = 1 << cfg.log2_keyd, cfg.message_count
        k_d, k_m = key_prev % n_d, (key_prev // n_d) % n_m
        cell = k_d * n_m + pad(m, k_m, n_m)
    return cell * cfg.cell_size + int(rng.integers(cfg.cell_size))


def encode_block(
    cb: MessageCodebook,
    m: int | None,
    key_prev: int | None,
    state_stream: Iterable[int],
    rng: np.random.Generator,
) -> tuple[np.ndarray, int]:
    """Transmit one block; returns (x^n, L).

    The codeword index is drawn first, then one uniform per symbol; symbol i
    reads only states 1..i, so x_i never depends on future states.
    """
    strat = cb.strategy
    L = select_codeword(cb, m, key_prev, rng)
    word = cb.sequences[L]
    cdf = np.cumsum(strat.p_x_given_vs, axis=2)
    x = np.empty(cb.cfg.n, dtype=np.int64)
    stream = iter(state_stream)
    for i in range(cb.cfg.n):
        s = int(next(stream))
        v = strat.v_of_us[word[i], s]
        draw = rng.random()
        x[i] = min(int(np.searchsorted(cdf[v, s], draw, side="right")), cdf.shape[2] - 1)
    return x, L


def transmit(ch: ChannelWithState, x: np.ndarray, s: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Sample (y^n, z^n) from the memoryless channel."""
    _, _, card_y, card_z = ch.p_yz_given_xs.shape
    probs = ch.p_yz_given_xs[s, x].reshape(len(x), -1)
    draws = rng.random(len(x))
    flat = (probs.cumsum(axis=1) <= draws[:, None]).sum(axis=1)
    flat = np.minimum(flat, card_y * card_z - 1)
    return flat // card_z, flat % card_z


def design_joint(ch: ChannelWithState, strat) -> JointPmf:
    """p(u, s, y) the decoder tests typicality against."""
    return marginalize(strategy_joint(ch, as_strategy(strat)), ("U", "S", "Y"))


def _typical_mask(counts: np.ndarray, n: int, p: np.ndarray, epsilon: float) -> np.ndarray:
    freq = counts / n
    ok = np.abs(freq - p) <= epsilon * p
    ok |= (p == 0) & (counts == 0)
    ok &= ~((p == 0) & (counts > 0))
    return ok.all(axis=-1)


def typicality_check(sequences, joint: JointPmf, epsilon: float) -> bool:
    """Robust typicality: |freq(a) - p(a)| <= epsilon p(a) for every tuple a.

    ``sequences`` holds one symbol sequence per variable of ``joint``, in order.
    Tuples of probability zero must not occur.
    """
    seqs = [np.asarray(s, dtype=np.int64) for s in sequences]
    if len(seqs) != len(joint.variables):
        raise DomainError(f"need {len(joint.variables)} sequences, got {len(seqs)}")
    n = len(seqs[0])
    if any(len(s) != n for s in seqs) or n == 0:
        raise DomainError("typicality needs equal-length nonempty sequences")
    shape = joint.table.shape
    for s, size in zip(seqs, shape):
        if np.any(s < 0) or np.any(s >= size):
            raise DomainError("sequence symbol outside its alphabet")
    codes = np.ravel_multi_index(tuple(seqs), shape)
    counts = np.bincount(codes, minlength=joint.table.size)
    return bool(_typical_mask(counts, n, joint.table.ravel(), epsilon))


def candidate_range(cb: MessageCodebook, key_prev: int) -> range:
    """Codeword indices the decoder searches: the whole codebook, or bin C(k_d) in Case 2."""
    cfg = cb.cfg
    if cfg.case is SchemeCase.CASE2:
        k_d = key_prev % (1 << cfg.log2_keyd)
        width = cfg.message_count * cfg.cell_size
        return range(k_d * width, (k_d + 1) * width)
    return range(cfg.n_total)


def message_of_index(cb: MessageCodebook, index: int, key_prev: int) -> int:
    """Invert the cell layout and strip the key."""
    cfg = cb.cfg
    if cfg.case is SchemeCase.CASE3:
        return unpad(index, key_prev, cfg.n_key)
    bin_, sub = cb.locate(index)
    if cfg.case is SchemeCase.CASE1:
        n1 = 1 << cfg.log2_subbins
        return bin_ * n1 + unpad(sub, key_prev, n1)
    n_d, n_m = 1 << cfg.log2_keyd, cfg.message_count
    return unpad(sub, (key_prev // n_d) % n_m, n_m)


class DecodeResult(NamedTuple):
    message: int | None
    hits: int


def decode_block(
    cb: MessageCodebook, y_seq, s_seq, key_prev: int, joint: JointPmf, epsilon: float
) -> DecodeResult:
    """Typicality decoding of one block.

    Zero or several typical candidates give ``message=None`` (an error).
    """
    y = np.asarray(y_seq, dtype=np.int64)
    s = np.asarray(s_seq, dtype=np.int64)
    cand = candidate_range(cb, key_prev)
    words = cb.sequences[cand.start : cand.stop]
    card_u, card_s, card_y = joint.table.shape
    codes = (words * card_s + s[None, :]) * card_y + y[None, :]
    offsets = np.arange(len(words))[:, None] * joint.table.size
    counts = np.bincount((codes + offsets).ravel(), minlength=len(words) * joint.table.size)
    typical = _typical_mask(counts.reshape(len(words), -1), len(y), joint.table.ravel(), epsilon)
    hits = np.flatnonzero(typical)
    if len(hits) != 1:
        return DecodeResult(None, int(len(hits)))
    return DecodeResult(message_of_index(cb, cand.start + int(hits[0]), key_prev), 1)


@dataclass
class BlockTrace:
    states: np.ndarray
    index: int
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    key: int
    message: int | None
    decoded: int | None
    error: bool | None


@dataclass(frozen=True)
class SimulationReport:
    """Monte Carlo outcome of ``trials`` sessions with one codebook.

    ``per_block_errors[j]`` counts errors in message block j + 2 and
    ``key_histogram`` counts the keys k_1 .. k_{b-1} that were used.
    """

    trials: int
    blocks: int
    errors: int
    per_block_errors: tuple[int, ...]
    key_histogram: tuple[int, ...]
    trace: tuple[BlockTrace, ...] | None = field(default=None, compare=False)

    @property
    def message_blocks(self) -> int:
        return self.trials * (self.blocks - 1)

    @property
    def empirical_pe(self) -> float:
        return self.errors / self.message_blocks if self.message_blocks else 0.0

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "blocks": self.blocks,
            "message_blocks": self.message_blocks,
            "errors": self.errors,
            "empirical_pe": self.empirical_pe,
            "per_block_errors": list(self.per_block_errors),
            "key_histogram": list(self.key_histogram),
        }


def trial_rng(cfg: SchemeConfig, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, _TRIAL_STREAM, trial]))


def _run_trial(ch, cb, kb, joint, trial: int, keep: bool):
    cfg = cb.cfg
    rng = trial_rng(cfg, trial)
    errors = [0] * (cfg.b - 1)
    keys = []
    trace = [] if keep else None
    key_prev = None
    for j in range(cfg.b):
        s = rng.choice(ch.card_s, size=cfg.n, p=ch.p_s)
        m = int(rng.integers(cfg.message_count)) if j > 0 else None
        x, L = encode_block(cb, m, key_prev, s, rng)
        y, z = transmit(ch, x, s, rng)
        decoded = err = None
        if j > 0:
            decoded = decode_block(cb, y, s, key_prev, joint, cfg.epsilon).message
            err = decoded != m
            errors[j - 1] += int(err)
        key = key_bin(s, kb)
        if j < cfg.b - 1:
            keys.append(key)
        if keep:
            trace.append(BlockTrace(s, L, x, y, z, key, m, decoded, err))
        key_prev = key
    return errors, keys, trace


def run_session(
    ch: ChannelWithState,
    cfg: SchemeConfig,
    strat=None,
    trials: int = 1000,
    workers: int = 1,
    keep_trace: bool = False,
) -> SimulationReport:
    """Simulate ``trials`` independent sessions with one codebook and key binning.

    Trial t draws its randomness from SeedSequence([seed, 2, t]) and counts are
    summed, so the report does not depend on ``workers``.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    strat = default_strategy(ch) if strat is None else as_strategy(strat)
    cb = generate_codebook(ch, cfg, strat)
    kb = KeyBinning.from_config(cfg)
    joint = design_joint(ch, strat)

    def run_range(bounds):
        lo, hi = bounds
        err = np.zeros(cfg.b - 1, dtype=np.int64)
        hist = np.zeros(cfg.n_key, dtype=np.int64)
        trace = None
        for t in range(lo, hi):
            e, keys, tr = _run_trial(ch, cb, kb, joint, t, keep_trace and t == 0)
            err += e
            np.add.at(hist, keys, 1)
            trace = trace or tr
        return err, hist, trace

    n_chunks = min(trials, max(workers, 1) * 4)
    edges = np.linspace(0, trials, n_chunks + 1).astype(int)
    ranges = list(zip(edges[:-1], edges[1:]))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_range, ranges))
    else:
        parts = [run_range(r) for r in ranges]
    err = sum(p[0] for p in parts)
    hist = sum(p[1] for p in parts)
    trace = next((p[2] for p in parts if p[2]), None)
    return SimulationReport(
        trials=trials,
        blocks=cfg.b,
        errors=int(err.sum()),
        per_block_errors=tuple(int(e) for e in err),
        key_histogram=tuple(int(h) for h in hist),
        trace=tuple(trace) if trace else None,
    )


def binomial_sigma(p: float, count: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / count)


def strategy_from_dict(doc: dict) -> ShannonStrategy:
    """Build a strategy from ``{p_u, v_of_us: [u][s], p_x_given_vs: [v][s][x]}``."""
    try:
        return ShannonStrategy(
            np.array(doc["p_u"], dtype=float),
            np.array(doc["v_of_us"], dtype=np.int64),
            np.array(doc["p_x_given_vs"], dtype=float),
        )
    except DomainError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed strategy document: {exc!r}") from None


def strategy_to_dict(strat: ShannonStrategy) -> dict:
    return {
        "p_u": strat.p_u.tolist(),
        "v_of_us": strat.v_of_us.tolist(),
        "p_x_given_vs": strat.p_x_given_vs.tolist(),
    }
