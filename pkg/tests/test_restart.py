import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fractal_ge.restart import (
    UNBOUNDED,
    EmpiricalRunModel,
    Fixed,
    Luby,
    NoRestart,
    ParetoRunModel,
    Walsh,
    doubling_thresholds,
    fixed_restart_cost,
    luby,
    mix_seed,
    optimal_fixed_threshold,
    parse_strategy,
    run_with_restarts,
    threshold_sequence,
)

LUBY_16 = [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8, 1]


def luby_by_doubling(k):
    """Sequence up to index 2^k - 1 built as S_k = S_{k-1} S_{k-1} 2^(k-1)."""
    seq = [1]
    for j in range(2, k + 1):
        seq = seq + seq + [2 ** (j - 1)]
    return seq


def test_luby_prefix():
    assert [threshold_sequence(Luby(), i) for i in range(1, 17)] == LUBY_16
    assert [luby(i) for i in range(1, 32)] == luby_by_doubling(5)


def test_luby_self_similarity():
    for k in range(1, 11):
        seq = [luby(i) for i in range(1, 2 ** (k + 1))]
        assert seq == luby_by_doubling(k + 1)
        assert seq[2**k - 1: 2 ** (k + 1) - 2] == seq[: 2**k - 1]
        assert seq[2 ** (k + 1) - 2] == 2**k


def test_other_thresholds():
    assert [threshold_sequence(Walsh(2), i) for i in range(1, 5)] == [1, 2, 4, 8]
    assert [threshold_sequence(Fixed(5), i) for i in (1, 2, 100)] == [5, 5, 5]
    assert threshold_sequence(NoRestart(), 1) == UNBOUNDED
    with pytest.raises(ValueError):
        threshold_sequence(Luby(), 0)


def test_walsh_monotone_with_ratio():
    w = Walsh(1.2)
    seq = [threshold_sequence(w, i) for i in range(1, 80)]
    assert seq[0] == 1
    assert all(a <= b for a, b in zip(seq, seq[1:]))
    assert seq[-1] / seq[-2] == pytest.approx(1.2, rel=1e-3)


def test_strategy_validation_and_parsing():
    with pytest.raises(ValueError):
        Fixed(0)
    with pytest.raises(ValueError):
        Walsh(1.0)
    assert parse_strategy("none") == NoRestart()
    assert parse_strategy("fixed:6") == Fixed(6)
    assert parse_strategy("LUBY") == Luby()
    assert parse_strategy("walsh:1.2") == Walsh(1.2)
    for bad in ("fixed", "walsh:x", "restart", "luby:3"):
        with pytest.raises(ValueError):
            parse_strategy(bad)
    for s in (NoRestart(), Fixed(6), Luby(), Walsh(1.2)):
        assert parse_strategy(str(s)) == s


def test_mix_seed_distinct():
    seeds = {mix_seed(42, i) for i in range(10_000)}
    assert len(seeds) == 10_000
    assert all(0 <= s < 2**64 for s in seeds)


def test_always_succeeds_at_three():
    out = run_with_restarts(lambda seed, budget: 3 if budget >= 3 else None, Fixed(10), 0)
    assert (out.total_generations, out.restarts_used, out.succeeded) == (3, 0, True)
    assert out.winning_seed == mix_seed(0, 1)


@pytest.mark.parametrize("master", [0, 1, 7, 12345, 2**63])
def test_even_seed_enumeration(master):
    def run(seed, budget):
        return 2 if seed % 2 == 0 and budget >= 2 else None

    failures = 0
    while mix_seed(master, failures + 1) % 2:
        failures += 1
    out = run_with_restarts(run, Fixed(5), master)
    assert out.total_generations == 5 * failures + 2
    assert out.restarts_used == failures
    assert out.winning_seed == mix_seed(master, failures + 1)


def test_global_cap_truncates_last_attempt():
    out = run_with_restarts(lambda seed, budget: None, Fixed(4), 3, global_cap=10)
    assert (out.total_generations, out.restarts_used, out.succeeded, out.winning_seed) == (10, 2, False, None)
    out = run_with_restarts(lambda seed, budget: None, NoRestart(), 3, global_cap=10)
    assert (out.total_generations, out.restarts_used) == (10, 0)


@settings(max_examples=100, deadline=None)
@given(master=st.integers(0, 2**64 - 1), cap=st.integers(1, 5000),
       strategy=st.sampled_from([NoRestart(), Fixed(3), Fixed(50), Luby(), Walsh(1.5)]),
       alpha=st.sampled_from([0.5, 1.0, 2.0]))
def test_conservation_and_determinism(master, cap, strategy, alpha):
    model = ParetoRunModel(alpha)
    out = run_with_restarts(model, strategy, master, cap)
    assert out.total_generations <= cap
    assert out.succeeded or out.total_generations == cap
    assert out == run_with_restarts(model, strategy, master, cap)


def test_optimal_threshold_examples():
    assert optimal_fixed_threshold([3] * 10, range(1, 11)) == (3, 3.0)
    theta, cost = optimal_fixed_threshold([1, 100], [1, 100])
    assert theta == 1 and cost == pytest.approx(2.0)
    with pytest.raises(ValueError):
        optimal_fixed_threshold([5, 6], [1, 2, 3])
    assert math.isinf(fixed_restart_cost([5], 4))


def simulate_fixed(sample, theta, trials, rng):
    """Direct restart simulation: draw runs from the sample until one fits."""
    sample = np.asarray(sample, dtype=float)
    totals = np.empty(trials)
    for t in range(trials):
        total = 0.0
        while True:
            x = sample[rng.integers(len(sample))]
            if x <= theta:
                totals[t] = total + x
                break
            total += theta
    return totals.mean()


@pytest.mark.parametrize("theta", [2, 8, 64])
def test_cost_formula_matches_simulation(theta):
    rng = np.random.default_rng(8)
    observed = np.ceil(rng.pareto(0.8, size=300)) + 1
    censored = 40
    sample = list(observed) + [math.inf] * censored
    formula = fixed_restart_cost(observed, theta, censored)
    sim = simulate_fixed(sample, theta, 20_000, rng)
    assert sim == pytest.approx(formula, rel=0.05)


def test_empirical_run_model():
    model = EmpiricalRunModel([3, 7], censored=1)
    assert [model(s, 10) for s in range(3)] == [3, 7, None]
    assert model(1, 6) is None
    with pytest.raises(ValueError):
        EmpiricalRunModel([])


def test_pareto_run_model_tail():
    model = ParetoRunModel(0.8, scale=2)
    xs = np.array([model.runtime(s) for s in range(50_000)])
    assert xs.min() >= 2
    # P(X > x) = (scale / x)^alpha for x above the scale
    for x in (10, 100, 1000):
        assert (xs > x).mean() == pytest.approx((2 / x) ** 0.8, rel=0.1)


def test_doubling_thresholds():
    assert doubling_thresholds() == [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048]
