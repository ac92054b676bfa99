import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from superdiff.analysis import (
    ExponentSeries,
    Transport,
    classify_exponent,
    default_window,
    exponents,
    local_exponents,
    onset_step,
    resilience_rank,
    running_average,
    shared_point_sigma_running,
    window_mean,
)
from superdiff.correlator import CorrelationSeries


def power_law(alpha, steps=20, err=0.0, amp=1.0):
    t = np.arange(steps + 1.0)
    c = np.ones_like(t)
    c[1:] = amp * t[1:] ** alpha
    return CorrelationSeries(t, c, np.full_like(t, err), 30)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.5, -0.1), st.floats(0.1, 5))
def test_exact_power_law_gives_constant_exponent(alpha, amp):
    es = exponents(power_law(alpha, amp=amp))
    assert np.allclose(es.local, alpha, atol=1e-12)
    assert np.allclose(es.running, alpha, atol=1e-12)
    assert es.steps[0] == 1 and es.times[0] == 1.0


def test_start_step_drops_early_slopes():
    c = power_law(-0.5)
    c.mean[2] *= 3  # spoil slopes touching step 2
    es = exponents(c, start=3)
    assert es.steps[0] == 3
    assert np.allclose(es.running, -0.5)
    assert es.metadata["first_slope_step"] == 3


def test_error_propagation_formula():
    t = np.array([0.0, 1.0, 2.0, 4.0])
    c = np.array([1.0, 0.8, 0.5, 0.3])
    s = np.array([0.0, 0.02, 0.01, 0.03])
    es = exponents(CorrelationSeries(t, c, s, 10))
    y0 = math.log(0.5 / 0.8) / math.log(2)
    sy0 = math.sqrt((0.01 / 0.5) ** 2 + (0.02 / 0.8) ** 2) / math.log(2)
    sy1 = math.sqrt((0.03 / 0.3) ** 2 + (0.01 / 0.5) ** 2) / math.log(2)
    assert es.local[0] == pytest.approx(y0)
    assert es.sigma_local[0] == pytest.approx(sy0)
    assert es.sigma_running[1] == pytest.approx(math.sqrt(sy0 ** 2 + sy1 ** 2) / 2)


def test_monte_carlo_matches_propagated_errors():
    rng = np.random.default_rng(123)
    base = power_law(-2 / 3, steps=12, err=0.0)
    sig = 0.004 * np.ones_like(base.mean)
    sig[0] = 0.0
    nominal = exponents(CorrelationSeries(base.times, base.mean, sig, 30))
    trials = np.array([
        exponents(CorrelationSeries(base.times, base.mean + rng.normal(0, sig), sig, 30)).local
        for _ in range(4000)
    ])
    # local slopes: per-entry std vs formula
    assert np.allclose(trials.std(axis=0), nominal.sigma_local, rtol=0.1)


def test_shared_point_sigma_matches_monte_carlo():
    rng = np.random.default_rng(5)
    base = power_law(-2 / 3, steps=12)
    sig = 0.01 * base.mean
    sig[0] = 0.0
    noisy = CorrelationSeries(base.times, base.mean, sig, 30)
    runs = np.array([
        exponents(CorrelationSeries(base.times, base.mean + rng.normal(0, sig), sig, 30)).running
        for _ in range(4000)
    ])
    exact = shared_point_sigma_running(noisy)
    assert np.allclose(runs.std(axis=0), exact, rtol=0.1)
    # the independent-slope formula overestimates once slopes share points
    assert np.all(exponents(noisy).sigma_running[3:] > 1.5 * exact[3:])
    assert exact[0] == pytest.approx(exponents(noisy).sigma_running[0])


def test_nonpositive_correlator_is_flagged():
    c = power_law(-0.5, steps=6)
    c.mean[4] = -0.01
    es = exponents(c)
    assert es.invalid == [3, 4]
    assert np.isnan(es.local[2]) and np.isnan(es.local[3])
    assert np.isfinite(es.running[1]) and np.all(np.isnan(es.running[2:]))


def test_times_must_increase():
    c = power_law(-0.5, steps=3)
    c.times[2] = c.times[1]
    with pytest.raises(ValueError):
        local_exponents(c)


@pytest.mark.parametrize("y, label", [
    (-1.02, Transport.BALLISTIC),
    (-0.70, Transport.SUPERDIFFUSIVE),
    (-0.52, Transport.DIFFUSIVE),
    (-0.85, Transport.INTERMEDIATE),
])
def test_classification(y, label):
    assert classify_exponent(y).label is label


def test_window_and_ranking():
    assert default_window(19) == slice(13, 19)
    assert default_window(2) == slice(1, 2)
    runs = [exponents(power_law(a)) for a in (-0.55, -0.68, -0.9)]
    ranked = resilience_rank(runs, labels=["diff", "kpz", "ball"])
    assert [r.label for r in ranked] == ["kpz", "diff", "ball"]
    assert ranked[1].direction == "diffusive" and ranked[2].direction == "ballistic"
    assert window_mean(runs[0]) == pytest.approx(-0.55)


def test_onset_with_reference_and_direction():
    ref = exponents(power_law(-2 / 3))
    run = exponents(power_law(-2 / 3))
    run.local[5:] = -0.3
    running_average(run)
    assert onset_step(run, reference=ref) == 1 + 5
    assert onset_step(run, reference=ref, direction=-1) is None
    assert onset_step(ref) is None
    assert onset_step(run, threshold=10) is None


def test_csv_has_full_precision():
    es = exponents(power_law(-1 / 3, steps=4))
    row = es.to_csv().splitlines()[1].split(",")
    assert float(row[2]) == es.local[0]
    assert isinstance(es, ExponentSeries) and len(es) == 3


def test_halving_over_doubling_gives_minus_one():
    es = exponents(CorrelationSeries(np.array([0.0, 1.0, 2.0]), np.array([1.0, 1.0, 0.5]), np.zeros(3), 1))
    assert es.local[0] == pytest.approx(-1.0)


def test_running_average_examples():
    es = exponents(power_law(-0.5, steps=3))
    es.local = np.array([-1.0, 0.0])
    es.sigma_local = np.array([0.3, 0.3])
    running_average(es)
    assert np.allclose(es.running, [-1.0, -0.5])
    assert np.allclose(es.sigma_running, 0.3 / np.sqrt([1, 2]))


def test_local_sigma_against_large_monte_carlo():
    rng = np.random.default_rng(77)
    base = power_law(-2 / 3, steps=8)
    sig = 0.02 * base.mean
    sig[0] = 0.0
    nominal = exponents(CorrelationSeries(base.times, base.mean, sig, 30))
    draws = base.mean[1:] + rng.normal(size=(100_000, 8)) * sig[1:]
    logt = np.log(base.times[1:])
    y = np.diff(np.log(draws), axis=1) / np.diff(logt)
    assert np.allclose(y.std(axis=0), nominal.sigma_local, rtol=0.05)


@pytest.mark.parametrize("y, label", [(-0.66, Transport.SUPERDIFFUSIVE), (-0.83, Transport.INTERMEDIATE)])
def test_classification_examples(y, label):
    assert classify_exponent(y).label is label


def test_ranking_ties_keep_input_order():
    runs = [exponents(power_law(a)) for a in (-0.5, -0.5, -2 / 3)]
    ranked = resilience_rank(runs, labels=["a", "b", "c"])
    assert [r.label for r in ranked] == ["c", "a", "b"]


@settings(max_examples=40, deadline=None)
@given(st.floats(-2.0, 0.0), st.floats(1e-3, 1e3))
def test_exponents_invariant_under_rescaling(alpha, scale):
    a = exponents(power_law(alpha))
    b = exponents(power_law(alpha, amp=scale))
    assert np.allclose(a.local, alpha, atol=1e-12)
    assert np.allclose(a.local, b.local, atol=1e-12)
