# ruff: noqa: T201, D100, D103
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm
from test_common import random_echo_sequence, random_model, static_model

from ddtelegraph.engine import (
    DecoherenceSample,
    PropagatorCache,
    coherence,
    coherence_from_intervals,
    coherence_ode,
    curve,
    matrix_exponential,
)
from ddtelegraph.errors import DomainError, NumericalError, ResourceError
from ddtelegraph.noise import NoiseModel, two_state_rtn
from ddtelegraph.pulses import cdd, cpmg, free, from_positions, parse_sequence, udd

abs = 1e-10


@pytest.fixture()
def rtn():
    return two_state_rtn(1.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(
    real=arrays(np.float64, (4, 4), elements=st.floats(min_value=-2.0, max_value=2.0)),
    imag=arrays(np.float64, (4, 4), elements=st.floats(min_value=-2.0, max_value=2.0)),
)
def test_matrix_exponential_matches_scipy(real, imag):
    A = real + 1j * imag
    expected = expm(A)
    scale = max(1.0, np.max(np.abs(expected)))
    assert np.max(np.abs(matrix_exponential(A) - expected)) <= 1e-9 * scale


def test_matrix_exponential(subtests):
    with subtests.test(msg="diagonal"):
        d = np.array([0.5, -3.0, 2.0j])
        assert matrix_exponential(np.diag(d)) == pytest.approx(np.diag(np.exp(d)), abs=0)
    with subtests.test(msg="zero"):
        assert matrix_exponential(np.zeros((3, 3))) == pytest.approx(np.eye(3), abs=0)
    with subtests.test(msg="nilpotent"):
        N = np.array([[0.0, 1.0], [0.0, 0.0]])
        assert matrix_exponential(N) == pytest.approx(np.eye(2) + N, abs=1e-15)
    with subtests.test(msg="not square"), pytest.raises(DomainError):
        matrix_exponential(np.zeros((2, 3)))
    with subtests.test(msg="not finite"), pytest.raises(DomainError):
        matrix_exponential(np.array([[np.inf, 0.0], [0.0, 1.0]]))
    with subtests.test(msg="too large"), pytest.raises(ResourceError):
        matrix_exponential(np.eye(65))


def test_free_rtn_closed_form(subtests, rtn):
    for t in [0.5, 1.0]:
        with subtests.test(msg=f"t = {t}"):
            value = coherence(rtn, free(), t).value
            assert value.real == pytest.approx(np.exp(-t) * (1 + t), abs=abs)
            assert value.imag == pytest.approx(0.0, abs=abs)


def test_zero_time(rtn):
    assert coherence(rtn, cpmg(3), 0.0).value == 1.0


def test_negative_time(rtn):
    with pytest.raises(DomainError):
        coherence(rtn, cpmg(1), -1.0)


def test_echo_refocuses_static_noise(subtests):
    model = static_model(levels=(1.0, -1.0, 0.3), initial=(0.2, 0.5, 0.3))
    for seq in [cpmg(1), cpmg(4), udd(3), udd(6), cdd(3)]:
        with subtests.test(msg=seq.label):
            for t in [1.0, 10.0, 100.0, 1000.0]:
                assert np.abs(coherence(model, seq, t).value - 1.0) <= 1e-12
    rng = np.random.default_rng(17)
    for n in [2, 3, 4]:
        seq = random_echo_sequence(n, rng)
        with subtests.test(msg=f"random N = {n}"):
            for t in [1.0, 100.0]:
                assert np.abs(coherence(model, seq, t).value - 1.0) <= 1e-12


def test_static_noise_without_echo():
    # Free evolution in static noise averages the phase factors.
    model = static_model(levels=(1.0, -1.0), initial=(0.5, 0.5))
    assert coherence(model, free(), 2.0).value == pytest.approx(np.cos(2.0), abs=1e-14)


def test_magnitude_bounded(subtests):
    rng = np.random.default_rng(2)
    for k in [2, 3, 5]:
        model = random_model(k, rng)
        with subtests.test(msg=f"K = {k}"):
            for seq in [free(), cpmg(2), udd(5)]:
                for t in [0.1, 1.0, 10.0]:
                    assert coherence(model, seq, t).magnitude <= 1.0 + 1e-12


def test_sample_rejects_growth():
    with pytest.raises(NumericalError):
        DecoherenceSample(1.0, 1.1 + 0.0j)


def test_symmetric_noise_is_real(rtn):
    value = coherence(rtn, udd(4), 2.3).value
    assert value.imag == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(
    rates=arrays(np.float64, (3, 3), elements=st.floats(min_value=0.05, max_value=5.0)),
    levels=arrays(np.float64, (3,), elements=st.floats(min_value=-3.0, max_value=3.0)),
    t=st.floats(min_value=0.0, max_value=5.0),
    spec=st.sampled_from(["free", "cpmg:1", "cpmg:3", "udd:4", "pos:0.1,0.35,0.8"]),
)
def test_negated_levels_conjugate(rates, levels, t, spec):
    np.fill_diagonal(rates, 0)
    generator = rates - np.diag(rates.sum(axis=0))
    seq = parse_sequence(spec)
    value = coherence(NoiseModel(levels, generator), seq, t).value
    mirrored = coherence(NoiseModel(-levels, generator), seq, t).value
    assert mirrored == pytest.approx(np.conj(value), abs=1e-12)


def test_interval_splitting(rtn):
    seq = from_positions([0.2, 0.65])
    t = 1.7
    whole = coherence(rtn, seq, t).value
    lengths = [0.1, 0.1, 0.45, 0.2, 0.15]
    signs = [1, 1, -1, 1, 1]
    assert coherence_from_intervals(rtn, lengths, signs, t) == pytest.approx(whole, abs=1e-13)


def test_propagator_cache(subtests, rtn):
    with subtests.test(msg="defective generator falls back"):
        cache = PropagatorCache(rtn)
        assert not cache.active
        assert coherence(rtn, cpmg(2), 0.7, cache).value == pytest.approx(
            coherence(rtn, cpmg(2), 0.7).value, abs=1e-14
        )
    with subtests.test(msg="diagonalizable generator"):
        model = random_model(4, np.random.default_rng(8))
        cache = PropagatorCache(model)
        assert cache.active
        grid = np.linspace(0.0, 3.0, 13)
        cached = curve(model, udd(3), grid, use_cache=True)
        direct = curve(model, udd(3), grid)
        for a, b in zip(cached, direct, strict=True):
            assert a.value == pytest.approx(b.value, abs=abs)


def test_ode_agrees(subtests):
    model = random_model(3, np.random.default_rng(4))
    for seq in [free(), cpmg(1), udd(4)]:
        with subtests.test(msg=seq.label):
            for t in [0.5, 2.0]:
                exact = coherence(model, seq, t).value
                assert coherence_ode(model, seq, t).value == pytest.approx(exact, abs=1e-8)


def test_curve(subtests, rtn):
    grid = np.linspace(0.0, 2.0, 9)
    with subtests.test(msg="times"):
        samples = curve(rtn, cpmg(2), grid)
        assert [s.t for s in samples] == pytest.approx(grid, abs=0)
    with subtests.test(msg="threads"):
        threaded = curve(rtn, cpmg(2), grid, workers=3)
        assert [s.value for s in threaded] == [s.value for s in samples]
    with subtests.test(msg="unsorted"), pytest.raises(DomainError):
        curve(rtn, cpmg(2), [1.0, 0.5])
    with subtests.test(msg="negative"), pytest.raises(DomainError):
        curve(rtn, cpmg(2), [-1.0, 0.5])
