import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdlab.errors import ConstructionError, ScheduleError
from sdlab.signals import (
    SampleSequence,
    ScheduleConfig,
    compute_envelope,
    modulate_alternating,
    shifted_block,
    thm1_adversary,
    thm2_adversary,
    thm4_adversary,
    trapezoid_samples,
)

coeffs = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=40)


def test_zero_sequence_is_canonical():
    z = SampleSequence.from_values(5, [0.0, 0.0])
    assert z.is_zero
    assert z == SampleSequence.zeros()
    assert z.support_lo == 0 and z.support_hi == 0


def test_trimming_and_lookup():
    s = SampleSequence.from_values(-3, [0.0, 2.0, 0.0, -1.0, 0.0])
    assert (s.support_lo, s.support_hi) == (-2, 0)
    assert s[-2] == 2.0 and s[0] == -1.0 and s[7] == 0.0
    np.testing.assert_array_equal(s.at([-2, -1, 5]), [2.0, 0.0, 0.0])


def test_trapezoid_values():
    w = trapezoid_samples(2)
    np.testing.assert_allclose(w.at(range(-4, 5)), [0, 0.5, 1, 1, 1, 1, 1, 0.5, 0])
    assert w.extent == 3


def test_trapezoid_rejects_nonpositive():
    with pytest.raises(ValueError):
        trapezoid_samples(0)


@given(coeffs, st.integers(-50, 50))
def test_modulation_is_an_involution(c, lo):
    s = SampleSequence.from_values(lo, c)
    assert modulate_alternating(modulate_alternating(s)) == s


@given(coeffs, st.integers(-50, 50))
def test_serialisation_round_trips(c, lo):
    s = SampleSequence.from_values(lo, c)
    assert SampleSequence.from_json(s.to_json()) == s
    assert SampleSequence.from_csv(s.to_csv()) == s


def test_csv_header_and_line_endings():
    text = SampleSequence.from_values(0, [1.0, 0.1]).to_csv()
    assert text.startswith("k,c_k\n")
    assert "\r" not in text
    assert "0.10000000000000001" in text


def test_addition_and_shift():
    a = SampleSequence.delta(0) + SampleSequence.delta(3, 2.0)
    assert a.shifted(2)[5] == 2.0
    assert (a + (-a)).is_zero


def test_schedule_validation():
    with pytest.raises(ScheduleError):
        ScheduleConfig((4, 4), (1, 1))
    with pytest.raises(ScheduleError):
        ScheduleConfig((4,), (0.0,))
    with pytest.raises(ScheduleError, match="level 2"):
        ScheduleConfig((4, 2**30), (1, 1))


def test_cubic_schedule_hits_cap_at_level_three():
    assert ScheduleConfig.cubic_exponent(2).indices == (2, 256)
    with pytest.raises(ScheduleError, match="level 3"):
        ScheduleConfig.cubic_exponent(3)


def test_thm1_adversary_is_weighted_window_sum():
    sched = ScheduleConfig.inverse_square((2, 8))
    g, f1 = thm1_adversary(sched)
    ref = trapezoid_samples(2) + trapezoid_samples(8).scaled(0.25)
    assert g == ref
    assert f1 == modulate_alternating(ref)


def test_shifted_block_support():
    b = shifted_block(12)
    # q_4 spans [-7, 7], moved right by 8
    assert (b.support_lo, b.support_hi) == (1, 15)
    assert abs(b[8]) == 1.0


def test_thm4_selection_respects_condition_ii():
    adv = thm4_adversary((12, 100, 432), 2, (1.0, 0.25))
    assert adv.chosen == (0, 2)
    assert adv.block_n == (12, 432)
    assert adv.block_n1 == (4, 144)


def test_thm4_names_condition_ii():
    with pytest.raises(ConstructionError, match=r"condition ii\)"):
        thm4_adversary((12, 145), 2)


def test_envelope_and_thm2_schedule():
    env = compute_envelope(trapezoid_samples(2).scaled(0.1))
    assert env(0) == 1.0
    assert env(1) == pytest.approx(0.1)
    assert env(3) == pytest.approx(0.05)
    assert env(10) == 0.0
    adv = thm2_adversary(env, 3)
    assert not adv.complete
    assert "level 3" in adv.violation and "log" in adv.violation
    # level 2 needs log N > 8
    assert adv.schedule[1] == math.ceil(math.exp(8)) or math.log(adv.schedule[1]) > 8


@settings(max_examples=30)
@given(st.integers(1, 40))
def test_window_support_width(n):
    w = trapezoid_samples(n)
    assert w.support_hi - w.support_lo + 1 == 4 * n - 1
