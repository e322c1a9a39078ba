import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wiretap_csi.channel import ChannelWithState, ShannonStrategy, example_channel, state_independent_channel
from wiretap_csi.errors import ConsistencyError, ResourceError
from wiretap_csi.oracle import (
    CrossCheck,
    EnumerationBudget,
    all_sequences,
    assert_crosscheck,
    crosscheck_values,
    exact_error_probability,
    exact_leakage,
    key_statistics,
    oracle_report,
    second_enumerator_crosscheck,
)
from wiretap_csi.simulate import KeyBinning, SchemeConfig, binomial_sigma, default_strategy, generate_codebook, run_session

EYE2 = np.eye(2)


def setup(ch, cfg, strat=None):
    cb = generate_codebook(ch, cfg, strat if strat is not None else default_strategy(ch))
    return ch, cfg, cb, KeyBinning.from_config(cfg)


def noiseless():
    return state_independent_channel([0.5, 0.5], np.einsum("xy,z->xyz", EYE2, [1.0, 0.0]))


def random_tiny_channel(rng):
    p_s = rng.dirichlet(np.ones(2))
    w = rng.dirichlet(np.ones(4), size=(2, 2)).reshape(2, 2, 2, 2)
    return ChannelWithState(p_s, w)


def random_strategy(rng, identity):
    if identity:
        return ShannonStrategy.identity(rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2), size=(2, 2)))
    return ShannonStrategy(
        rng.dirichlet(np.ones(3)), rng.integers(0, 2, size=(3, 2)), rng.dirichlet(np.ones(2), size=(2, 2))
    )


def test_all_sequences_order():
    assert all_sequences(2, 2).tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    assert len(all_sequences(3, 4)) == 81


# ---------------------------------------------------------------------------
# error probability


def test_pe_noiseless_injective_is_zero():
    cfg = SchemeConfig(case=3, n=6, b=2, log2_total=2, log2_key=2, epsilon=3.0, seed=0)
    args = setup(noiseless(), cfg)
    assert len({tuple(r) for r in args[2].sequences}) == 4
    assert exact_error_probability(*args) == 0.0


def test_pe_useless_channel():
    useless = state_independent_channel([0.5, 0.5], np.full((2, 2, 2), 0.25))
    cfg = SchemeConfig(case=3, n=4, b=2, log2_total=1, log2_key=1, epsilon=1.0, seed=3)
    args = setup(useless, cfg)
    pe = exact_error_probability(*args)
    assert pe >= 0.5 - 1e-12
    cc = crosscheck_values(*args)
    assert abs(cc.pe_main - cc.pe_alt) <= 1e-10


def test_pe_matches_monte_carlo():
    cfg = SchemeConfig(case=3, n=4, b=2, log2_total=1, log2_key=1, seed=12)
    args = setup(example_channel(), cfg)
    exact = exact_error_probability(*args)
    rep = run_session(example_channel(), cfg, trials=10_000)
    assert abs(rep.empirical_pe - exact) <= 3 * binomial_sigma(exact, rep.message_blocks)


def test_pe_budget():
    cfg = SchemeConfig(case=3, n=6, b=2, log2_total=2, log2_key=2, seed=0)
    with pytest.raises(ResourceError) as info:
        exact_error_probability(*setup(example_channel(), cfg), budget=EnumerationBudget(1000))
    assert info.value.required > 1000


# ---------------------------------------------------------------------------
# leakage


def test_leakage_single_message_is_zero():
    cfg = SchemeConfig(case=3, n=4, b=2, log2_total=0, log2_key=0, seed=1)
    assert exact_leakage(*setup(example_channel(), cfg)) == 0.0


def test_leakage_constant_eavesdropper_is_zero():
    cfg = SchemeConfig(case=3, n=4, b=3, log2_total=1, log2_key=1, seed=1)
    assert exact_leakage(*setup(noiseless(), cfg)) == 0.0


def test_leakage_trend_reference_seed():
    values = {}
    for n in (2, 4):
        cfg = SchemeConfig(case=3, n=n, b=2, log2_total=1, log2_key=1, seed=7)
        values[n] = exact_leakage(*setup(example_channel(), cfg))
    assert values[4] < values[2]


@pytest.mark.parametrize("seed", range(6))
def test_leakage_closed_form_figure2(seed):
    # Z = X = v^n(L): with distinct codewords the eavesdropper learns L = M + K,
    # so I(M; Z | C) = 1 - H(K) exactly for one binary message block.
    cfg = SchemeConfig(case=3, n=4, b=2, log2_total=1, log2_key=1, seed=seed)
    ch, cfg, cb, kb = setup(example_channel(), cfg)
    h_k = key_statistics(ch, cfg, cb, kb, 1)[0]
    leak = exact_leakage(ch, cfg, cb, kb) * cfg.n
    if np.array_equal(cb.sequences[0], cb.sequences[1]):
        assert leak == pytest.approx(0.0, abs=1e-12)
    else:
        assert leak == pytest.approx(1.0 - h_k, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 3]))
def test_leakage_bounds(seed, case):
    rng = np.random.default_rng(seed)
    ch = random_tiny_channel(rng)
    if case == 3:
        cfg = SchemeConfig(case=3, n=3, b=2, log2_total=1, log2_key=1, seed=seed)
    else:
        cfg = SchemeConfig(case=1, n=3, b=2, log2_total=2, log2_bins=1, log2_subbins=1, log2_key=1, seed=seed)
    rep = oracle_report(*setup(ch, cfg, random_strategy(rng, case == 3)))
    assert 0.0 <= rep.leakage_bits <= rep.message_entropy + 1e-12
    assert 0.0 <= rep.exact_pe <= 1.0


# ---------------------------------------------------------------------------
# key statistics


def test_key_statistics_single_bin():
    cfg = SchemeConfig(case=3, n=4, b=2, log2_total=0, log2_key=0, seed=1)
    assert key_statistics(*setup(example_channel(), cfg), 1) == (0.0, 0.0, 0.0)


def test_key_entropy_concentration_uniform_state():
    # Z independent of S, uniform binary S, n = 8, NK = 4
    ch = state_independent_channel([0.5, 0.5], np.einsum("xy,xz->xyz", EYE2, EYE2))
    good = 0
    for seed in range(100):
        cfg = SchemeConfig(case=3, n=8, b=2, log2_total=2, log2_key=2, seed=seed)
        h_k = key_statistics(*setup(ch, cfg), 1)[0]
        assert h_k <= 2.0 + 1e-12
        good += h_k >= 1.9
    assert good >= 95


@pytest.mark.parametrize("j", [1, 2])
def test_key_leakage_figure2_vanishes(j):
    # Z = X and X is independent of S, so nothing about the keys reaches Z
    cfg = SchemeConfig(case=3, n=3, b=3, log2_total=1, log2_key=1, seed=2)
    _, block, cumulative = key_statistics(*setup(example_channel(), cfg), j)
    assert block <= 1e-9 and cumulative <= 1e-9


def test_key_leakage_positive_when_z_sees_state():
    # Z = S: the eavesdropper observes the state sequence and so the key
    w = np.zeros((2, 2, 2, 2))
    for s in range(2):
        for x in range(2):
            w[s, x, x, s] = 1.0
    ch = ChannelWithState(np.array([0.5, 0.5]), w)
    cfg = SchemeConfig(case=3, n=3, b=2, log2_total=1, log2_key=1, seed=0)
    h_k, block, cumulative = key_statistics(*setup(ch, cfg), 1)
    assert block == pytest.approx(h_k, abs=1e-12)
    assert cumulative == pytest.approx(h_k, abs=1e-12)


# ---------------------------------------------------------------------------
# second enumerator


def test_crosscheck_trivial_cases():
    for ch, cfg in [
        (noiseless(), SchemeConfig(case=3, n=4, b=2, log2_total=2, log2_key=2, epsilon=3.0, seed=0)),
        (example_channel(), SchemeConfig(case=3, n=4, b=2, log2_total=0, log2_key=0, seed=1)),
    ]:
        assert second_enumerator_crosscheck(*setup(ch, cfg))


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 3]), st.sampled_from([2, 3]))
def test_crosscheck_random_tiny(seed, case, b):
    rng = np.random.default_rng(seed)
    ch = random_tiny_channel(rng)
    n = 3 if b == 2 else 2
    cfg = {
        1: SchemeConfig(case=1, n=n, b=b, log2_total=2, log2_bins=1, log2_subbins=1, log2_key=1, seed=seed),
        2: SchemeConfig(case=2, n=n, b=b, log2_total=2, log2_subbins=1, log2_keyd=1, log2_key=2, seed=seed),
        3: SchemeConfig(case=3, n=n, b=b, log2_total=1, log2_key=1, seed=seed),
    }[case]
    args = setup(ch, cfg, random_strategy(rng, case == 3))
    cc = assert_crosscheck(*args)
    assert cc.agree


def test_crosscheck_disagreement_raises(monkeypatch):
    import wiretap_csi.oracle as oracle

    cfg = SchemeConfig(case=3, n=2, b=2, log2_total=1, log2_key=1, seed=0)
    args = setup(example_channel(), cfg)
    monkeypatch.setattr(oracle, "_alt_error_probability", lambda *a: 2.0)
    with pytest.raises(ConsistencyError):
        assert_crosscheck(*args)
    assert not CrossCheck(0.1, 0.1 + 1e-9, 0.0, 0.0).agree


def test_oracle_report_fields():
    cfg = SchemeConfig(case=3, n=3, b=3, log2_total=1, log2_key=1, seed=2)
    rep = oracle_report(*setup(example_channel(), cfg), crosscheck=True)
    assert rep.crosscheck is True
    assert len(rep.key_entropy) == cfg.b - 1
    assert all(h <= 1.0 + 1e-12 for h in rep.key_entropy)
    assert rep.leakage_bits_per_symbol == pytest.approx(rep.leakage_bits / ((cfg.b - 1) * cfg.n))
    assert set(rep.to_dict()) >= {"exact_pe", "leakage_bits_per_symbol", "key_entropy", "key_leakage"}
