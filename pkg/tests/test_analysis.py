import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdlab import analysis, engines
from sdlab.analysis import (
    TraceConfig,
    divergence_trace,
    harmonic_log_scan,
    oscillation_trace,
    probe_grid,
    pw1_norm,
    sup_on_grid,
    verify_harmonic_log_bound,
    verify_maximal_domination,
    verify_thm1_lower_bound,
    verify_thm4_decomposition,
)
from sdlab.errors import SDLError
from sdlab.signals import (
    SampleSequence,
    ScheduleConfig,
    modulate_alternating,
    thm1_adversary,
    thm4_adversary,
    trapezoid_samples,
)


def fejer(n):
    k = np.arange(-(n - 1), n)
    return SampleSequence(-(n - 1), n - 1, 1.0 - np.abs(k) / n)


def test_delta_norm_is_one():
    assert pw1_norm(SampleSequence.delta(3)).value == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("n", [1, 3, 10, 40])
def test_fejer_kernel_norm_is_one(n):
    # a nonnegative trigonometric polynomial has norm equal to its mean
    assert pw1_norm(fejer(n)).value == pytest.approx(1.0, abs=1e-12)


def test_window_norm_against_mpmath_quadrature():
    w = trapezoid_samples(2)

    def modulus(x):
        return abs(mp.fsum(c * mp.expj(k * x) for k, c in zip(w.indices.tolist(), w.coefficients)))

    with mp.workdps(20):
        pts = mp.linspace(-mp.pi, mp.pi, 65)
        ref = float(mp.quad(modulus, pts) / (2 * mp.pi))
    n = pw1_norm(w, oversample=64)
    assert n.value == pytest.approx(ref, abs=1e-6)
    assert n.error < 1e-4


@settings(max_examples=20)
@given(st.integers(1, 30), st.integers(-50, 50))
def test_modulation_and_shift_preserve_norm(n, shift):
    w = trapezoid_samples(n)
    a = pw1_norm(w).value
    assert pw1_norm(modulate_alternating(w).shifted(shift)).value == pytest.approx(a, rel=1e-9)


def test_probe_grid_contents():
    g = probe_grid(2.0, 0.25, extra=(0.33, 9.0))
    assert g[0] == -2.0 and g[-1] == 2.0
    assert 1.5 in g and 0.33 in g and 9.0 not in g
    assert np.all(np.diff(g) > 0)


@settings(max_examples=15)
@given(st.integers(1, 6))
def test_grid_refinement_never_lowers_max(p):
    s = modulate_alternating(trapezoid_samples(3))
    f = lambda t: engines.shannon_partial(s, 5, t)
    coarse = sup_on_grid(f, 7, 2.0**-p)
    fine = sup_on_grid(f, 7, 2.0 ** -(p + 1))
    assert fine.max >= coarse.max and fine.min <= coarse.min


def test_harmonic_bound():
    c = verify_harmonic_log_bound(1)
    assert c.holds and c.lhs == pytest.approx(2 + 2 / 3 + 2 / 5)
    assert harmonic_log_scan(2000).holds


def test_thm1_bound_levels():
    sched = ScheduleConfig.inverse_square((4, 16))
    g = thm1_adversary(sched).g
    b = verify_thm1_lower_bound(g, sched, 10)
    assert b.level == 2 and b.holds and b.cubic_form is None
    assert b.bound == pytest.approx(0.25 * math.log(43) / math.pi)
    with pytest.raises(SDLError):
        verify_thm1_lower_bound(g, sched, 17)


def test_shannon_trace_probe_matches_closed_form():
    sched = ScheduleConfig.inverse_square((4, 16))
    tr = divergence_trace("shannon_thm1", TraceConfig(schedule=sched, step=1 / 16))
    g = thm1_adversary(sched).g
    for r in tr.rows:
        assert r.certified_lower == pytest.approx(engines.half_integer_closed_form(g, r.N), rel=1e-12)
    assert tr.consistent()
    assert tr.to_csv().splitlines()[0] == ",".join(analysis.TRACE_HEADER)


def test_trace_csv_is_deterministic():
    cfg = TraceConfig(schedule=ScheduleConfig.inverse_square((4, 8)), step=1 / 8)
    assert divergence_trace("valiron", cfg).to_csv() == divergence_trace("valiron", cfg).to_csv()


def test_unknown_kind():
    with pytest.raises(SDLError):
        divergence_trace("nope")


def test_thm4_decomposition_holds():
    adv = thm4_adversary((12, 432), 2, (1.0, 0.25))
    for m in (1, 2):
        d = verify_thm4_decomposition(adv, m)
        assert d.holds
        assert d.term1 + d.term2 + d.term3 == pytest.approx(d.direct, abs=1e-12)


def test_maximal_domination_examples():
    assert verify_maximal_domination(SampleSequence.delta(0), (1, 2)).holds
    rng = np.random.default_rng(0)
    s = SampleSequence(0, 6, rng.standard_normal(7))
    assert verify_maximal_domination(s, (2, 6)).holds


def test_zero_perturbation_oscillation_is_vacuous():
    rep = oscillation_trace("sinecrossing_thm3", TraceConfig(perturbation=SampleSequence.zeros(), thm3_ladder=(4, 8)))
    assert rep.vacuous and rep.holds
    assert all(r.grid_max == 0.0 for r in rep.trace.rows)


def test_oscillation_rejects_other_kinds():
    with pytest.raises(SDLError):
        oscillation_trace("valiron")


def test_growth_run():
    assert analysis.longest_growth_run([1.0, 0.99, 1.1, 1.2]) == 4
    assert analysis.longest_growth_run([3.0, 1.0, 0.5]) == 0
    assert analysis.steps_within_slack([1.0, 0.96, 1.2])
    assert not analysis.steps_within_slack([1.0, 0.9])


def test_log_normalized_sup():
    f1 = thm1_adversary(ScheduleConfig.inverse_square((4, 16))).f1
    rows = analysis.log_normalized_sup(f1, (4, 16), step=1 / 8)
    assert [n for n, _ in rows] == [4, 16]
    assert all(v > 0 for _, v in rows)
    with pytest.raises(ValueError):
        analysis.log_normalized_sup(f1, (1,))
