"""Exit criteria, each at its stated tolerance and time budget."""

import json
import time

import mpmath as mp
import numpy as np
import pytest

from sdlab import battery, cli, engines, oracle
from sdlab.analysis import (
    TraceConfig,
    divergence_trace,
    harmonic_log_scan,
    oscillation_trace,
    pw1_norm,
    verify_harmonic_log_bound,
    verify_thm1_lower_bound,
    verify_thm4_decomposition,
)
from sdlab.signals import (
    SampleSequence,
    ScheduleConfig,
    modulate_alternating,
    thm1_adversary,
    thm4_adversary,
    trapezoid_samples,
)
from sdlab.sinetype import (
    GeneratingProduct,
    interpolation_partial,
    perturbed_zeros,
    phi_eval,
    phi_k_eval,
)

pytestmark = pytest.mark.acceptance

DESK = ScheduleConfig.inverse_square((4, 16, 64, 256))


def test_01_window_norm(criterion):
    start = time.perf_counter()
    norms = [pw1_norm(trapezoid_samples(N), oversample=64) for N in range(1, 65)]
    elapsed = time.perf_counter() - start
    worst, err = max(n.value for n in norms), max(n.error for n in norms)
    ok = worst < 3 and err < 1e-4 and elapsed < 10
    criterion("1 window norm < 3, quadrature error < 1e-4", ok,
              f"max {worst:.6f}, error {err:.1e}, {elapsed:.2f}s")


def test_02_half_integer_identity(criterion):
    rng = np.random.default_rng(battery.SEED)
    worst = 0.0
    for _ in range(100):
        g, N = battery.random_nonnegative(rng, 1000)
        a = abs(engines.shannon_partial(modulate_alternating(g), N, N + 0.5))
        b = engines.half_integer_closed_form(g, N)
        worst = max(worst, abs(a - b) / abs(b))
    criterion("2 half-integer identity, 1e-10 relative", worst <= 1e-10, f"worst {worst:.1e}")


def test_03_harmonic_chain(criterion):
    start = time.perf_counter()
    # direct sums at a few N alongside the incremental scan
    spot = all(verify_harmonic_log_bound(N).holds for N in (1, 2, 3, 10, 1000, 100_000))
    scan = harmonic_log_scan(100_000)
    elapsed = time.perf_counter() - start
    with mp.workdps(30):
        tight = oracle.harmonic_half(3, 0) > mp.log(7)
    ok = spot and scan.holds and bool(tight) and elapsed < 5
    criterion("3 harmonic/log chain on [1, 1e5]", ok, f"{scan.note}, {elapsed:.2f}s")


def test_04_thm1_desk_trace(criterion):
    start = time.perf_counter()
    trace = divergence_trace("shannon_thm1", TraceConfig(schedule=DESK))
    g = thm1_adversary(DESK).g
    rows = {r.N: r for r in trace.rows}
    bounds_ok = all(
        rows[N].certified_lower >= verify_thm1_lower_bound(g, DESK, N).bound - 1e-9 for N in DESK.indices
    )
    ratio = rows[256].certified_lower / rows[4].certified_lower
    elapsed = time.perf_counter() - start
    criterion("4a thm1 per-level lower bounds", bounds_ok and elapsed < 30, f"{elapsed:.2f}s")
    criterion("4b thm1 certified_lower(256) >= 2 * certified_lower(4)", ratio >= 2.0, f"ratio {ratio:.4f}")


def test_05_valiron(criterion):
    grid = np.linspace(-50, 50, 1000)
    v = engines.valiron_partial(SampleSequence.zeros(), engines.sin_pi(0.3), 0.3, 20, grid)
    exact = float(np.max(np.abs(v - engines.sin_pi(grid))))

    trace = divergence_trace("valiron", TraceConfig(schedule=DESK, t0=0.3))
    f1 = thm1_adversary(DESK).f1
    worst = 0.0
    with mp.workdps(oracle.DPS):
        f_t0 = oracle.reconstruct(f1, 0.3)
        for r in trace.rows:
            t = r.N + 0.5
            ref = abs(oracle.reconstruct(f1, t) - oracle.valiron_partial(f1, f_t0, 0.3, r.N, t))
            worst = max(worst, abs(r.certified_lower - float(ref)))
    criterion("5 valiron exactness <= 1e-12 and probe vs oracle <= 1e-8", exact <= 1e-12 and worst <= 1e-8,
              f"exact {exact:.1e}, probe {worst:.1e}")


def test_06_thm4_decomposition(criterion):
    start = time.perf_counter()
    adv = thm4_adversary((12, 432), 2, (1.0, 0.25))
    assert adv.block_n1[1] == adv.block_n[0] ** 2
    results = [verify_thm4_decomposition(adv, m, rel_tol=1e-10) for m in (1, 2)]
    elapsed = time.perf_counter() - start
    failed = [c.name for d in results for c in d.checks if not c.holds]
    criterion("6 thm4 decomposition and term bounds", not failed and elapsed < 20,
              f"{elapsed:.2f}s" + (f", failed {failed}" if failed else ""))


def test_07_sine_type_reduction(criterion):
    gp = GeneratingProduct(perturbed_zeros(SampleSequence.zeros(), window=32))
    z = np.linspace(-8, 8, 2001)
    e_phi = float(np.max(np.abs(phi_eval(gp, z) - np.sin(np.pi * z) / np.pi)))
    e_k = max(float(np.max(np.abs(phi_k_eval(gp, k, z) - engines.sinc_kernel(z, k)))) for k in range(-8, 9))
    rng = np.random.default_rng(7)
    s = SampleSequence(-12, 12, rng.standard_normal(25))
    e_s = max(float(np.max(np.abs(interpolation_partial(gp, s, N, z) - engines.shannon_partial(s, N, z))))
              for N in (0, 5, 12))
    ok = e_phi <= 1e-10 and e_k <= 1e-9 and e_s <= 1e-9
    criterion("7 sine-type reduction", ok, f"phi {e_phi:.1e}, phi_k {e_k:.1e}, series {e_s:.1e}")


def test_08_cardinal(criterion):
    zeros = battery.cardinal_zeros(64, 0.25)
    assert zeros.max_perturbation == 0.25
    gp = GeneratingProduct(zeros, domain=65)
    ks = np.arange(-64, 65)
    tj = zeros.t(ks)
    worst = max(float(np.max(np.abs(phi_k_eval(gp, int(k), tj) - (ks == k)))) for k in ks)
    criterion("8 cardinal property K=64, max|delta|=0.25", worst <= 1e-9, f"worst {worst:.1e}")


def test_09_oscillation(criterion):
    start = time.perf_counter()
    rep = oscillation_trace("sinetype_thm2", TraceConfig(), slack=0.05, min_run=3)
    elapsed = time.perf_counter() - start
    levels = ", ".join(f"{N}:{c:.3f}" for N, c in rep.levels)
    failed = [c.name for c in rep.checks if not c.holds]
    criterion("9 two-sided oscillation with sign flips", rep.holds and not rep.vacuous,
              f"c_N {levels}; {elapsed:.2f}s" + (f", failed {failed}" if failed else ""))


def test_10_maximal_domination(criterion):
    out = battery.maximal(tol=1e-6)
    failed = [c.name for c in out.checks if not c.holds]
    names = [c.name for c in out.checks]
    assert any("delta" in n for n in names) and any("thm4" in n for n in names)
    criterion("10 maximal domination lhs <= rhs + 1e-6", not failed, f"{len(names)} signals")


def test_11_determinism(tmp_path, criterion):
    a, b = tmp_path / "a", tmp_path / "b"
    codes = [cli.main(["verify-all", "--out", str(d)]) for d in (a, b)]
    csvs = sorted(p.name for p in a.glob("*.csv"))
    same_csv = bool(csvs) and all((a / n).read_bytes() == (b / n).read_bytes() for n in csvs)
    ra = json.loads((a / "report.json").read_text())
    rb = json.loads((b / "report.json").read_text())
    same_json = ra == rb
    criterion("11 verify-all deterministic", same_csv and same_json and codes[0] == codes[1],
              f"{len(csvs)} CSV files, exit {codes}")


def test_11b_verify_all_green(tmp_path, criterion):
    code = cli.main(["verify-all", "--out", str(tmp_path)])
    report = json.loads((tmp_path / "report.json").read_text())
    failed = [c["name"] for c in report["checks"] if not c["holds"]]
    criterion("verify-all battery passes", code == 0 and not failed, f"{len(report['checks'])} checks")
