import itertools

import numpy as np
import pytest
from scipy.stats import binom

from wiretap_csi.channel import CausalPolicy, ShannonStrategy, example_channel, state_independent_channel
from wiretap_csi.errors import ContractError, DomainError, ResourceError
from wiretap_csi.info import Alphabet, JointPmf
from wiretap_csi.oracle import all_sequences, exact_error_probability
from wiretap_csi.simulate import (
    KeyBinning,
    MessageCodebook,
    SchemeCase,
    SchemeConfig,
    as_strategy,
    binomial_sigma,
    decode_block,
    default_strategy,
    design_joint,
    encode_block,
    generate_codebook,
    key_bin,
    message_of_index,
    pad,
    run_session,
    select_codeword,
    strategy_from_dict,
    strategy_to_dict,
    typicality_check,
    unpad,
)

EYE2 = np.eye(2)


def noiseless():
    """Y = X, Z constant, uniform binary state."""
    return state_independent_channel([0.5, 0.5], np.einsum("xy,z->xyz", EYE2, [1.0, 0.0]))


def case_configs(n):
    return [
        SchemeConfig(case=1, n=n, b=2, log2_total=3, log2_bins=1, log2_subbins=1, log2_key=2, seed=5),
        SchemeConfig(case=2, n=n, b=2, log2_total=3, log2_subbins=1, log2_keyd=1, log2_key=2, seed=5),
        SchemeConfig(case=3, n=n, b=2, log2_total=2, log2_key=2, seed=5),
    ]


def state_dependent_strategy():
    # v depends on (u, s) and x is random given (v, s)
    return ShannonStrategy(
        np.array([0.3, 0.7]),
        np.array([[0, 1], [1, 0]]),
        np.array([[[0.8, 0.2], [0.4, 0.6]], [[0.1, 0.9], [0.5, 0.5]]]),
    )


# ---------------------------------------------------------------------------
# configuration


def test_scheme_invariants():
    with pytest.raises(ContractError, match="R1 <= RK"):
        SchemeConfig(case=1, n=4, b=2, log2_total=2, log2_subbins=2, log2_key=1)
    with pytest.raises(ContractError):
        SchemeConfig(case=1, n=4, b=2, log2_total=1, log2_bins=1, log2_subbins=1, log2_key=1)
    with pytest.raises(ContractError):
        SchemeConfig(case=2, n=4, b=2, log2_total=3, log2_subbins=2, log2_keyd=1, log2_key=2)
    with pytest.raises(ContractError):
        SchemeConfig(case=3, n=4, b=2, log2_total=2, log2_key=1)
    with pytest.raises(ContractError):
        SchemeConfig(case=3, n=4, b=1, log2_total=1, log2_key=1)


def test_scheme_dict_roundtrip():
    cfg = case_configs(4)[1]
    assert SchemeConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(DomainError):
        SchemeConfig.from_dict({"case": 3})


def test_sizes():
    c1, c2, c3 = case_configs(4)
    assert (c1.message_count, c1.cell_count, c1.cell_size) == (4, 4, 2)
    assert (c2.message_count, c2.cell_count, c2.cell_size) == (2, 4, 2)
    assert (c3.message_count, c3.cell_count, c3.cell_size) == (4, 4, 1)


def test_strategy_dict_roundtrip():
    strat = state_dependent_strategy()
    back = strategy_from_dict(strategy_to_dict(strat))
    assert np.array_equal(back.v_of_us, strat.v_of_us)
    with pytest.raises(DomainError):
        strategy_from_dict({"p_u": [1.0]})


def test_as_strategy_requires_independent_policy():
    with pytest.raises(ContractError):
        as_strategy(CausalPolicy(np.array([[1.0, 0.0], [0.0, 1.0]]), np.tile(EYE2[:, None, :], (1, 2, 1))))


# ---------------------------------------------------------------------------
# codebook


def test_single_codeword():
    ch = example_channel()
    cfg = SchemeConfig(case=3, n=4, b=2, log2_total=0, log2_key=0)
    cb = generate_codebook(ch, cfg, default_strategy(ch))
    assert cb.sequences.shape == (1, 4)
    assert cb.locate(0) == (0, 0)


def test_codebook_determinism():
    ch = example_channel()
    cfg = case_configs(6)[0]
    a = generate_codebook(ch, cfg, default_strategy(ch))
    b = generate_codebook(ch, cfg, default_strategy(ch))
    assert np.array_equal(a.sequences, b.sequences)


def test_codebook_symbol_frequency():
    ch = example_channel()
    total = 0
    for seed in range(1000):
        cfg = SchemeConfig(case=3, n=4, b=2, log2_total=4, log2_key=4, seed=seed)
        total += generate_codebook(ch, cfg, default_strategy(ch)).sequences.sum()
    count = 1000 * 16 * 4
    assert abs(total / count - 0.5) <= 4 * binomial_sigma(0.5, count)


def test_codebook_cap():
    ch = example_channel()
    with pytest.raises(ResourceError):
        generate_codebook(ch, SchemeConfig(case=3, n=8, b=2, log2_total=4, log2_key=4), default_strategy(ch), cap=100)


def test_case3_needs_identity_strategy():
    ch = example_channel()
    with pytest.raises(ContractError):
        generate_codebook(ch, case_configs(4)[2], state_dependent_strategy())


@pytest.mark.parametrize("cfg", case_configs(4), ids=["case1", "case2", "case3"])
def test_partition_exactness(cfg):
    ch = example_channel()
    cb = generate_codebook(ch, cfg, default_strategy(ch))
    owners = {}
    for cell in range(cfg.cell_count):
        members = cb.cell_members(cell)
        assert len(members) == cfg.cell_size
        for l in members:
            assert l not in owners
            owners[l] = cell
            assert cb.cell_of(l) == cell
    assert sorted(owners) == list(range(cfg.n_total))


# ---------------------------------------------------------------------------
# key binning


def test_key_bin_trivial_and_stable():
    kb = KeyBinning(123, 1)
    assert key_bin(np.array([0, 1, 1]), kb) == 0
    kb = KeyBinning(123, 8)
    s = np.array([1, 0, 1, 1, 0])
    assert key_bin(s, kb) == key_bin(s.copy(), kb) == kb(s)
    assert 0 <= key_bin(s, kb) < 8


def test_key_bin_balance_matches_multinomial_oracle():
    # fraction of seeds whose 4 bins over all 256 sequences lie in 64 +- 16
    seqs = all_sequences(2, 8)
    hits = 0
    for seed in range(1000):
        kb = KeyBinning(seed, 4)
        counts = np.bincount([key_bin(s, kb) for s in seqs], minlength=4)
        hits += bool(np.all(np.abs(counts - 64) <= 16))
    rng = np.random.default_rng(0)
    ideal = np.mean(np.all(np.abs(rng.multinomial(256, [0.25] * 4, size=200_000) - 64) <= 16, axis=1))
    assert abs(hits / 1000 - ideal) <= 3 * binomial_sigma(ideal, 1000)


def test_key_bin_marginally_uniform_over_seeds():
    s = np.array([0, 1, 1, 0, 1, 0, 0, 1])
    counts = np.bincount([key_bin(s, KeyBinning(seed, 4)) for seed in range(4000)], minlength=4)
    assert np.all(np.abs(counts / 4000 - 0.25) <= 4 * binomial_sigma(0.25, 4000))


# ---------------------------------------------------------------------------
# encoding


def test_encode_identity_deterministic():
    ch = example_channel()
    cfg = SchemeConfig(case=3, n=6, b=2, log2_total=1, log2_key=1, seed=2)
    cb = generate_codebook(ch, cfg, default_strategy(ch))
    x, L = encode_block(cb, 0, 0, np.zeros(6, dtype=int), np.random.default_rng(0))
    assert L == 0
    assert np.array_equal(x, cb.sequences[0])


def test_case3_pad_example():
    ch = example_channel()
    cfg = SchemeConfig(case=3, n=4, b=2, log2_total=1, log2_key=1)
    cb = generate_codebook(ch, cfg, default_strategy(ch))
    assert select_codeword(cb, 1, 1, np.random.default_rng(0)) == 0


def test_encode_range_checks():
    ch = example_channel()
    cfg = case_configs(4)[0]
    cb = generate_codebook(ch, cfg, default_strategy(ch))
    rng = np.random.default_rng(0)
    with pytest.raises(DomainError):
        encode_block(cb, cfg.message_count, 0, np.zeros(4, dtype=int), rng)
    with pytest.raises(DomainError):
        encode_block(cb, 0, cfg.n_key, np.zeros(4, dtype=int), rng)


@pytest.mark.parametrize("n", [1, 3, 6])
@pytest.mark.parametrize("case_index", [0, 1, 2])
def test_causality_exhaustive(n, case_index):
    ch = example_channel()
    cfg = case_configs(n)[case_index]
    strat = default_strategy(ch) if cfg.case is SchemeCase.CASE3 else state_dependent_strategy()
    cb = generate_codebook(ch, cfg, strat)
    for m, k in [(0, 0), (1, 3), (None, None)]:
        prefix_map = {}
        for s in itertools.product(range(2), repeat=n):
            x, _ = encode_block(cb, m, k, np.array(s), np.random.default_rng(99))
            for t in range(1, n + 1):
                key = (t, s[:t])
                if key in prefix_map:
                    assert np.array_equal(prefix_map[key], x[:t])
                else:
                    prefix_map[key] = x[:t]


def test_encoder_reads_states_lazily():
    ch = example_channel()
    cfg = case_configs(4)[0]
    cb = generate_codebook(ch, cfg, state_dependent_strategy())
    seen = []

    def stream():
        for i, s in enumerate([0, 1, 1, 0]):
            seen.append(i)
            yield s

    encode_block(cb, 0, 0, stream(), np.random.default_rng(0))
    assert seen == [0, 1, 2, 3]


@pytest.mark.parametrize("n", [2, 6])
@pytest.mark.parametrize("case_index", [0, 1, 2])
def test_pad_invertibility_exhaustive(n, case_index):
    ch = example_channel()
    cfg = case_configs(n)[case_index]
    cb = generate_codebook(ch, cfg, default_strategy(ch))
    for k in range(cfg.n_key):
        for m in range(cfg.message_count):
            for draw in range(cfg.cell_size):
                rng = _FixedDraw(draw)
                assert message_of_index(cb, select_codeword(cb, m, k, rng), k) == m
    for modulus in (1, 2, 4, 8):
        for m in range(modulus):
            for k in range(16):
                assert unpad(pad(m, k, modulus), k, modulus) == m


class _FixedDraw:
    def __init__(self, value):
        self.value = value

    def integers(self, high):
        return self.value % high


# ---------------------------------------------------------------------------
# typicality and decoding


def test_typicality_point_mass():
    joint = JointPmf([Alphabet("A", 2)], [1.0, 0.0])
    assert typicality_check([np.zeros(20, dtype=int)], joint, 0.1)
    assert not typicality_check([np.r_[np.zeros(19, dtype=int), 1]], joint, 10.0)


def test_typicality_zero_probability_tuple():
    joint = JointPmf([Alphabet("A", 2), Alphabet("B", 2)], [[0.5, 0.0], [0.0, 0.5]])
    assert typicality_check([[0, 1, 0, 1], [0, 1, 0, 1]], joint, 1.0)
    assert not typicality_check([[0, 1, 0, 1], [0, 1, 0, 0]], joint, 100.0)


def test_typicality_length_mismatch():
    joint = JointPmf([Alphabet("A", 2), Alphabet("B", 2)], np.full((2, 2), 0.25))
    with pytest.raises(DomainError):
        typicality_check([[0, 1], [0, 1, 1]], joint, 0.5)
    with pytest.raises(DomainError):
        typicality_check([[0, 1]], joint, 0.5)


def test_typicality_acceptance_rate_binomial():
    joint = JointPmf([Alphabet("A", 2)], [0.5, 0.5])
    rng = np.random.default_rng(2024)
    trials = 10_000
    accepted = sum(typicality_check([rng.integers(0, 2, size=100)], joint, 0.2) for _ in range(trials))
    # |k/100 - 1/2| <= 0.1  <=>  40 <= k <= 60
    oracle = binom.cdf(60, 100, 0.5) - binom.cdf(39, 100, 0.5)
    assert abs(accepted / trials - oracle) <= 2 * binomial_sigma(oracle, trials)


def _noiseless_codebook(cfg):
    ch = noiseless()
    cb = generate_codebook(ch, cfg, default_strategy(ch))
    assert len({tuple(r) for r in cb.sequences}) == cfg.n_total
    return ch, cb


def test_decode_noiseless_correct():
    cfg = SchemeConfig(case=3, n=6, b=2, log2_total=2, log2_key=2, epsilon=3.0, seed=0)
    ch, cb = _noiseless_codebook(cfg)
    joint = design_joint(ch, cb.strategy)
    s = np.array([0, 1, 0, 1, 1, 0])
    for m in range(4):
        for k in range(4):
            x, _ = encode_block(cb, m, k, s, np.random.default_rng(m))
            assert decode_block(cb, x, s, k, joint, cfg.epsilon).message == m


def test_decode_duplicate_codewords_tie():
    ch = noiseless()
    cfg = SchemeConfig(case=3, n=4, b=2, log2_total=1, log2_key=1, epsilon=3.0)
    strat = default_strategy(ch)
    cb = MessageCodebook(cfg, strat, np.array([[0, 1, 1, 0], [0, 1, 1, 0]]))
    result = decode_block(cb, [0, 1, 1, 0], [0, 0, 1, 1], 0, design_joint(ch, strat), cfg.epsilon)
    assert result.message is None and result.hits == 2


def test_case2_decoder_searches_key_bin_only():
    ch = noiseless()
    cfg = SchemeConfig(case=2, n=6, b=2, log2_total=2, log2_subbins=1, log2_keyd=1, log2_key=2, epsilon=3.0)
    strat = default_strategy(ch)
    words = np.array([[0, 0, 0, 1, 1, 1], [1, 1, 1, 0, 0, 0], [0, 1, 0, 1, 0, 1], [1, 0, 1, 0, 1, 0]])
    cb = MessageCodebook(cfg, strat, words)
    joint = design_joint(ch, strat)
    s = np.zeros(6, dtype=int)
    # codeword 2 sits in the bin of k_d = 1, so under k_d = 0 nothing is typical
    assert decode_block(cb, words[2], s, 0, joint, cfg.epsilon).hits == 0
    assert decode_block(cb, words[2], s, 1, joint, cfg.epsilon).message is not None


# ---------------------------------------------------------------------------
# sessions


def test_session_noiseless_zero_error():
    cfg = SchemeConfig(case=3, n=6, b=2, log2_total=2, log2_key=2, epsilon=3.0, seed=0)
    _noiseless_codebook(cfg)
    rep = run_session(noiseless(), cfg, trials=300)
    assert rep.empirical_pe == 0.0


def test_session_determinism_and_workers():
    ch = example_channel()
    cfg = SchemeConfig(case=1, n=6, b=3, log2_total=2, log2_bins=1, log2_subbins=1, log2_key=1, seed=9)
    a = run_session(ch, cfg, trials=300)
    b = run_session(ch, cfg, trials=300)
    c = run_session(ch, cfg, trials=300, workers=4)
    assert a == b == c
    assert sum(a.key_histogram) == 300 * (cfg.b - 1)
    assert 0.0 <= a.empirical_pe <= 1.0
    assert sum(a.per_block_errors) == a.errors


def test_session_trace_key_chain():
    ch = noiseless()
    cfg = SchemeConfig(case=3, n=6, b=4, log2_total=2, log2_key=2, epsilon=3.0, seed=0)
    rep = run_session(ch, cfg, trials=5, keep_trace=True)
    kb = KeyBinning.from_config(cfg)
    assert len(rep.trace) == cfg.b
    for j, block in enumerate(rep.trace):
        assert block.key == key_bin(block.states, kb)
        if j > 0:
            # decoder recomputes the previous key from the common state sequence
            assert block.decoded == block.message
            assert block.index == select_codeword_for_trace(block.message, rep.trace[j - 1].key, cfg)


def select_codeword_for_trace(m, k, cfg):
    return pad(m, k, cfg.n_key)


def _oracle_band(ch, cfg, trials):
    cb = generate_codebook(ch, cfg, default_strategy(ch))
    exact = exact_error_probability(ch, cfg, cb, KeyBinning.from_config(cfg))
    rep = run_session(ch, cfg, trials=trials)
    return rep.empirical_pe, exact, binomial_sigma(exact, rep.message_blocks)


def test_case3_figure2_matches_oracle():
    emp, exact, sigma = _oracle_band(example_channel(), SchemeConfig(case=3, n=8, b=2, log2_total=1, log2_key=1, seed=4), 200)
    assert abs(emp - exact) <= 3 * sigma


def test_case1_figure2_matches_oracle():
    cfg = SchemeConfig(case=1, n=8, b=2, log2_total=2, log2_bins=1, log2_subbins=1, log2_key=1, seed=4)
    emp, exact, sigma = _oracle_band(example_channel(), cfg, 500)
    assert abs(emp - exact) <= 3 * sigma


def test_error_monotonicity_soft():
    # U = X uniform gives I(U;Y,S) = 1 - H(0.1); rate 25% below that, rounded down to a power of two
    ch = example_channel()
    rate = 0.75 * 0.5310044
    pes = {}
    for n in (4, 12):
        k = int(np.floor(rate * n))
        cfg = SchemeConfig(case=3, n=n, b=2, log2_total=k, log2_key=k, epsilon=1.0, seed=2)
        pes[n] = run_session(ch, cfg, trials=1000).empirical_pe
    assert pes[12] <= pes[4] + 3 * binomial_sigma(pes[4], 1000)
