"""The verifier battery run by ``sdlab verify`` and ``sdlab verify-all``.

Each entry returns a list of :class:`~sdlab.analysis.Check` and may attach
trace CSV text under a file name.  Everything is deterministic: random test
signals come from a fixed seed.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath as mp
import numpy as np

from . import engines, oracle
from .analysis import (
    Check,
    TraceConfig,
    divergence_trace,
    harmonic_log_scan,
    oscillation_trace,
    pw1_norm,
    verify_maximal_domination,
    verify_thm1_lower_bound,
    verify_thm4_decomposition,
)
from .signals import (
    SampleSequence,
    ScheduleConfig,
    modulate_alternating,
    thm1_adversary,
    thm4_adversary,
    trapezoid_samples,
)
from .sinetype import GeneratingProduct, ZeroSequence, perturbed_zeros

SEED = 20240601
FAULTS = ("corrupt-coefficients",)


@dataclass
class Outcome:
    checks: list[Check] = field(default_factory=list)
    files: dict[str, str] = field(default_factory=dict)
    observations: dict[str, float] = field(default_factory=dict)


def window_norms(oversample: int = 64, n_max: int = 64) -> Outcome:
    out = Outcome()
    worst_v, worst_e = 0.0, 0.0
    for N in range(1, n_max + 1):
        v, e, _ = pw1_norm(trapezoid_samples(N), oversample)
        worst_v, worst_e = max(worst_v, v), max(worst_e, e)
    out.checks.append(Check("window_norm_below_3", worst_v, 3.0, worst_v < 3.0, 0.0, f"N in [1, {n_max}]"))
    out.checks.append(Check("window_norm_quadrature_error", worst_e, 1e-4, worst_e < 1e-4))
    return out


def random_nonnegative(rng: np.random.Generator, n_max: int = 1000) -> tuple[SampleSequence, int]:
    N = int(rng.integers(0, n_max + 1))
    lo = int(rng.integers(-N - 5, 1))
    width = int(rng.integers(1, 2 * N + 12))
    return SampleSequence(lo, lo + width - 1, rng.random(width)), N


def half_integer_identity(count: int = 100, rel_tol: float = 1e-10) -> Outcome:
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(count):
        g, N = random_nonnegative(rng)
        a = abs(engines.shannon_partial(modulate_alternating(g), N, N + 0.5))
        b = engines.half_integer_closed_form(g, N)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    return Outcome([Check("half_integer_identity", worst, rel_tol, worst <= rel_tol, rel_tol, f"{count} random g")])


def harmonic(n_max: int = 100_000) -> Outcome:
    return Outcome([harmonic_log_scan(n_max)])


def thm1(indices=(4, 16, 64, 256), step: float | None = None, tol: float = 1e-9) -> Outcome:
    sched = ScheduleConfig.inverse_square(indices)
    cfg = TraceConfig(schedule=sched, **({"step": step} if step else {}))
    trace = divergence_trace("shannon_thm1", cfg)
    g = thm1_adversary(sched).g
    out = Outcome(files={"trace_shannon_thm1.csv": trace.to_csv()})
    for row in trace.rows:
        b = verify_thm1_lower_bound(g, sched, row.N, tol)
        out.checks.append(Check(f"thm1_lower_bound[N={row.N}]", row.certified_lower, b.bound,
                                row.certified_lower >= b.bound - tol, tol))
    out.checks.append(Check("thm1_trace_consistent", 0.0, 0.0, trace.consistent()))
    first, last = trace.rows[0], trace.rows[-1]
    out.observations["thm1_certified_ratio_last_over_first"] = last.certified_lower / first.certified_lower
    return out


def valiron(indices=(4, 16, 64, 256), t0: float = 0.3, tol: float = 1e-8) -> Outcome:
    out = Outcome()
    # sin(pi t) is reproduced by the anchor term alone
    grid = np.linspace(-20.0, 20.0, 1000)
    zero = SampleSequence.zeros()
    vals = engines.valiron_partial(zero, engines.sin_pi(t0), t0, 10, grid)
    err = float(np.max(np.abs(vals - engines.sin_pi(grid))))
    out.checks.append(Check("valiron_sine_exact", err, 1e-12, err <= 1e-12, 1e-12))

    sched = ScheduleConfig.inverse_square(indices)
    trace = divergence_trace("valiron", TraceConfig(schedule=sched, t0=t0))
    out.files["trace_valiron.csv"] = trace.to_csv()
    f1 = thm1_adversary(sched).f1
    worst = 0.0
    for row in trace.rows:
        t = row.N + 0.5
        with mp.workdps(oracle.DPS):
            ref = abs(oracle.reconstruct(f1, t) - oracle.valiron_partial(f1, oracle.reconstruct(f1, t0), t0, row.N, t))
        worst = max(worst, abs(row.certified_lower - float(ref)))
    out.checks.append(Check("valiron_probe_vs_oracle", worst, tol, worst <= tol, tol))
    out.checks.append(Check("valiron_trace_consistent", 0.0, 0.0, trace.consistent()))
    return out


def thm4(base=(12, 432), weights=(1.0, 0.25), fault: str | None = None) -> Outcome:
    adv = thm4_adversary(base, len(weights), weights)
    if fault == "corrupt-coefficients":
        # perturb f1 without touching its blocks
        bump = SampleSequence.delta(adv.block_n[0] // 2, 0.5)
        adv = dataclasses.replace(adv, f1=adv.f1 + bump)
    out = Outcome()
    for m in range(1, len(adv.parts) + 1):
        d = verify_thm4_decomposition(adv, m)
        out.checks.extend(d.checks)
        out.observations[f"thm4_display_gap[m={m}]"] = d.display_log - d.display_sum
    return out


def sine_reduction(window: int = 32) -> Outcome:
    gp = GeneratingProduct(perturbed_zeros(SampleSequence.zeros(), window=window))
    z = np.linspace(-8.0, 8.0, 1601)
    e_phi = float(np.max(np.abs(gp.phi(z) - engines.sin_pi(z) / math.pi)))
    e_k = 0.0
    for k in range(-8, 9):
        e_k = max(e_k, float(np.max(np.abs(gp.phi_k(k, z) - engines.sinc_kernel(z, k)))))
    rng = np.random.default_rng(SEED + 1)
    s = SampleSequence(-10, 10, rng.standard_normal(21))
    e_s = 0.0
    for N in (0, 3, 10):
        e_s = max(e_s, float(np.max(np.abs(gp.series(s, N, z) - engines.shannon_partial(s, N, z)))))
    return Outcome([
        Check("sine_reduction_phi", e_phi, 1e-10, e_phi <= 1e-10, 1e-10),
        Check("sine_reduction_phi_k", e_k, 1e-9, e_k <= 1e-9, 1e-9),
        Check("sine_reduction_series", e_s, 1e-9, e_s <= 1e-9, 1e-9),
    ])


def cardinal_zeros(K: int = 64, amplitude: float = 0.25) -> ZeroSequence:
    rng = np.random.default_rng(SEED + 2)
    d = rng.uniform(-amplitude, amplitude, 2 * K + 1)
    d[K + 7] = amplitude
    return ZeroSequence(K, d)


def cardinal(K: int = 64, amplitude: float = 0.25) -> Outcome:
    zeros = cardinal_zeros(K, amplitude)
    gp = GeneratingProduct(zeros, domain=K + 1)
    ks = np.arange(-K, K + 1)
    tj = zeros.t(ks)
    worst = 0.0
    for k in ks:
        vals = gp.phi_k(int(k), tj)
        worst = max(worst, float(np.max(np.abs(vals - (ks == k)))))
    return Outcome([Check("cardinal_interpolation", worst, 1e-9, worst <= 1e-9, 1e-9,
                          f"K={K}, max|delta|={zeros.max_perturbation}")])


def oscillation(kind: str) -> Outcome:
    rep = oscillation_trace(kind)
    name = "trace_" + kind + ".csv"
    return Outcome(rep.checks + [Check(f"{kind}:trace_consistent", 0.0, 0.0, rep.trace.consistent())],
                   {name: rep.trace.to_csv()})


def maximal(tol: float = 1e-6) -> Outcome:
    rng = np.random.default_rng(SEED + 3)
    out = Outcome()
    c = verify_maximal_domination(SampleSequence.delta(0), (1, 2, 4), tol=tol)
    out.checks.append(c._replace(name="maximal_domination[delta]"))
    for i in range(3):
        s = SampleSequence(0, 8, rng.standard_normal(9))
        c = verify_maximal_domination(s, (2, 4, 8), tol=tol)
        out.checks.append(c._replace(name=f"maximal_domination[random{i}]"))
    adv = thm4_adversary((12, 432), 2, (1.0, 0.25))
    c = verify_maximal_domination(adv.f1, adv.block_n, tol=tol)
    out.checks.append(c._replace(name="maximal_domination[thm4]"))
    return out


BATTERY: dict[str, Callable[..., Outcome]] = {
    "window_norm": window_norms,
    "half_integer": half_integer_identity,
    "harmonic": harmonic,
    "thm1": thm1,
    "valiron": valiron,
    "thm4": thm4,
    "sine_reduction": sine_reduction,
    "cardinal": cardinal,
    "oscillation_thm2": lambda: oscillation("sinetype_thm2"),
    "oscillation_thm3": lambda: oscillation("sinecrossing_thm3"),
    "maximal": maximal,
}


def run_battery(names=None, fault: str | None = None) -> Outcome:
    """Run the selected entries (all by default) and merge their outcomes."""
    names = list(BATTERY) if names is None else list(names)
    if not names:
        raise ValueError("empty battery selection")
    unknown = [n for n in names if n not in BATTERY]
    if unknown:
        raise ValueError(f"unknown checks {unknown}; choose from {list(BATTERY)}")
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}")
    total = Outcome()
    for name in names:
        res = BATTERY[name](fault=fault) if name == "thm4" else BATTERY[name]()
        total.checks.extend(res.checks)
        total.files.update(res.files)
        total.observations.update(res.observations)
    return total
