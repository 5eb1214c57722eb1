# ruff: noqa: T201, D100, D103
from math import fsum

import numpy as np
import pytest

from ddtelegraph.errors import DomainError, ResourceError, ValidationError
from ddtelegraph.pulses import (
    CDD_MAX_LEVEL,
    beta,
    cdd,
    cpmg,
    cumulative_switching,
    echo_residual,
    free,
    from_positions,
    hahn,
    parse_sequence,
    reduce_positions,
    switching_value,
    udd,
)

abs = 1e-15


def test_cpmg(subtests):
    with subtests.test(msg="positions"):
        assert cpmg(3).positions == pytest.approx([1 / 6, 1 / 2, 5 / 6], abs=abs)
    with subtests.test(msg="hahn"):
        assert cpmg(1) == hahn()
    with subtests.test(msg="zero pulses"):
        assert cpmg(0).is_free
    with subtests.test(msg="echo"):
        for n in range(1, 20):
            assert echo_residual(cpmg(n)) == pytest.approx(0.0, abs=1e-14)
    with subtests.test(msg="negative"), pytest.raises(DomainError):
        cpmg(-1)


def test_udd(subtests):
    with subtests.test(msg="two pulses"):
        assert np.array_equal(udd(2).positions, cpmg(2).positions)
    with subtests.test(msg="one pulse"):
        assert udd(1) == hahn()
    with subtests.test(msg="symmetric"):
        for n in range(1, 12):
            p = udd(n).positions
            assert p + p[::-1] == pytest.approx(np.ones(n), abs=abs)
            assert echo_residual(udd(n)) == pytest.approx(0.0, abs=1e-14)
    with subtests.test(msg="sin squared"):
        n = np.arange(1, 6)
        assert udd(5).positions == pytest.approx(np.sin(n * np.pi / 12) ** 2, abs=1e-15)


def test_cdd(subtests):
    with subtests.test(msg="level 1"):
        assert cdd(1).positions == pytest.approx([0.5], abs=abs)
    with subtests.test(msg="level 2"):
        assert cdd(2).positions == pytest.approx([0.25, 0.5, 0.75], abs=abs)
    with subtests.test(msg="count"):
        for level in range(1, 7):
            assert cdd(level).n_pulses == 2**level - 1
            assert echo_residual(cdd(level)) == pytest.approx(0.0, abs=1e-14)
    with subtests.test(msg="cap"), pytest.raises(ResourceError):
        cdd(CDD_MAX_LEVEL + 1)
    with subtests.test(msg="level 0"), pytest.raises(DomainError):
        cdd(0)


def test_presets_round_trip(subtests):
    presets = [cpmg(n) for n in range(1, 65)] + [udd(n) for n in range(1, 65)]
    presets += [cdd(level) for level in range(1, 9)]
    for seq in presets:
        with subtests.test(msg=seq.label):
            assert from_positions(seq.positions) == seq
            a = seq.intervals()
            assert np.all(a > 0)
            assert fsum(a) == pytest.approx(1.0, abs=abs)
            assert np.cumsum(a)[:-1] == pytest.approx(seq.positions, abs=1e-14)


def test_physical_boundary(subtests):
    cases = {
        "unordered": [0.6, 0.4],
        "at zero": [0.0, 0.5],
        "at one": [0.5, 1.0],
        "coincident": [0.3, 0.3],
        "not finite": [np.nan],
    }
    for name, positions in cases.items():
        with subtests.test(msg=name), pytest.raises(ValidationError) as e:
            from_positions(positions)
        assert e.value.invariant == "physical boundary"


def test_intervals_and_signs(subtests):
    seq = from_positions([0.2, 0.7])
    with subtests.test(msg="intervals"):
        assert seq.intervals() == pytest.approx([0.2, 0.5, 0.3], abs=abs)
    with subtests.test(msg="signs"):
        assert seq.signs() == pytest.approx([1, -1, 1], abs=0)
    with subtests.test(msg="free"):
        assert free().intervals() == pytest.approx([1.0], abs=0)
        assert free().signs() == pytest.approx([1.0], abs=0)
    with subtests.test(msg="echo residual"):
        assert echo_residual(seq) == pytest.approx(0.2 - 0.5 + 0.3, abs=abs)
        assert echo_residual(free()) == 1.0


def test_beta(subtests):
    with subtests.test(msg="cpmg"):
        assert beta(cpmg(4)) == pytest.approx(np.zeros(4), abs=abs)
    with subtests.test(msg="shifted"):
        assert beta(from_positions([0.3, 0.8])) == pytest.approx([0.05, 0.05], abs=abs)
    with subtests.test(msg="free"), pytest.raises(DomainError):
        beta(free())


def test_switching(subtests):
    seq = hahn()
    with subtests.test(msg="value"):
        assert switching_value(seq, 0.25) == 1.0
        assert switching_value(seq, 0.5) == -1.0
        assert switching_value(seq, 0.75) == -1.0
    with subtests.test(msg="outside"), pytest.raises(DomainError):
        switching_value(seq, 1.5)
    with subtests.test(msg="cumulative"):
        s = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
        assert cumulative_switching(seq, s) == pytest.approx([0.0, 0.25, 0.5, 0.25, 0.0], abs=abs)
    with subtests.test(msg="cumulative at end is the echo residual"):
        seq = from_positions([0.1, 0.45, 0.9])
        assert cumulative_switching(seq, 1.0) == pytest.approx(echo_residual(seq), abs=abs)


def test_reduce_positions(subtests):
    with subtests.test(msg="ends and pairs"):
        assert reduce_positions([0.0, 0.3, 0.3, 0.7, 1.0]) == pytest.approx([0.7], abs=0)
    with subtests.test(msg="nothing to do"):
        assert reduce_positions([0.2, 0.4]) == pytest.approx([0.2, 0.4], abs=0)
    with subtests.test(msg="triple"):
        assert reduce_positions([0.5, 0.5, 0.5]) == pytest.approx([0.5], abs=0)


def test_parse_sequence(subtests):
    with subtests.test(msg="families"):
        assert parse_sequence("cpmg:4") == cpmg(4)
        assert parse_sequence("UDD:3") == udd(3)
        assert parse_sequence("cdd:2") == cdd(2)
        assert parse_sequence("hahn") == hahn()
        assert parse_sequence("free").is_free
        assert parse_sequence("pos:0.2,0.8") == from_positions([0.2, 0.8])
    with subtests.test(msg="label"):
        assert parse_sequence("cpmg:4").label == "cpmg:4"
    for spec in ["bogus", "cpmg:x", "wobble:3", "udd:0"]:
        with subtests.test(msg=spec), pytest.raises(ValidationError) as e:
            parse_sequence(spec)
        assert e.value.invariant == "sequence spec"
    with subtests.test(msg="bad positions"), pytest.raises(ValidationError) as e:
        parse_sequence("pos:0.8,0.2")
    assert e.value.invariant == "physical boundary"
