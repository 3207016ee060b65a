"""Norms, grid extrema, divergence traces and inequality verifiers."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import engines
from .errors import SDLError
from .signals import (
    DEFAULT_CAP,
    SampleSequence,
    ScheduleConfig,
    Thm4Adversary,
    compute_envelope,
    fmt,
    thm1_adversary,
    thm2_adversary,
    thm4_adversary,
    trapezoid_samples,
)
from .sinetype import GeneratingProduct, crossing_samples, midpoint_probe, perturbed_zeros

GRID_STEP = 1.0 / 64
SLACK = 0.05


class Check(NamedTuple):
    """One verifier verdict."""

    name: str
    lhs: float
    rhs: float
    holds: bool
    tolerance: float = 0.0
    note: str = ""

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "holds": bool(self.holds),
            "tolerance": float(self.tolerance),
        }
        if self.note:
            d["note"] = self.note
        return d


# ---------------------------------------------------------------- norms


class Pw1Norm(NamedTuple):
    value: float
    error: float
    nodes: int


def _mean_modulus(s: SampleSequence, nodes: int) -> float:
    spec = np.fft.fft(s.coefficients, n=nodes)
    return math.fsum(np.abs(spec)) / nodes


def pw1_norm(s: SampleSequence, oversample: int = 32) -> Pw1Norm:
    """``(1/2pi) int |sum_k s(k) e^{-ik w}| dw`` by the periodic trapezoid rule.

    The rule runs on ``oversample * width`` nodes (width floored at 64) and on
    twice as many; the finer value is returned and the full difference is the
    error estimate.  Kinks of the modulus at the polynomial's zeros make the
    usual ``1/3`` Richardson factor unreliable.
    """
    if oversample < 8:
        raise ValueError("oversample must be at least 8")
    width = s.support_hi - s.support_lo + 1
    m = oversample * max(width, 64)
    coarse = _mean_modulus(s, m)
    fine = _mean_modulus(s, 2 * m)
    return Pw1Norm(fine, abs(fine - coarse), 2 * m)


# ---------------------------------------------------------------- grid search


class GridExtrema(NamedTuple):
    max: float
    argmax: float
    min: float
    argmin: float


def probe_grid(T: float, step: float = GRID_STEP, extra: Sequence[float] = ()) -> np.ndarray:
    """Multiples of ``step`` in ``[-T, T]``, the endpoints, every half-integer, and ``extra``."""
    if step <= 0 or T <= 0:
        raise ValueError("step and T must be positive")
    i = np.arange(math.ceil(-T / step), math.floor(T / step) + 1)
    h = np.arange(math.ceil(-T - 0.5), math.floor(T - 0.5) + 1) + 0.5
    pts = [i * step, h, [-T, T]]
    pts.append([x for x in extra if -T <= x <= T])
    return np.unique(np.concatenate([np.asarray(p, dtype=float) for p in pts]))


def sup_on_grid(
    evaluator: Callable, T: float, step: float = GRID_STEP, extra: Sequence[float] = ()
) -> GridExtrema:
    """Extrema of ``evaluator`` over :func:`probe_grid`; ties go to the smallest ``t``."""
    grid = probe_grid(T, step, extra)
    vals = np.asarray(evaluator(grid), dtype=float)
    i, j = int(np.argmax(vals)), int(np.argmin(vals))
    return GridExtrema(float(vals[i]), float(grid[i]), float(vals[j]), float(grid[j]))


# ---------------------------------------------------------------- traces


class TraceRow(NamedTuple):
    N: int
    certified_lower: float
    grid_max: float
    grid_min: float
    argmax: float
    argmin: float
    log_ratio: float | None


TRACE_HEADER = ("N", "certified_lower", "grid_max", "grid_min", "argmax", "argmin", "log_ratio")


@dataclass
class DivergenceTrace:
    kind: str
    rows: list[TraceRow]
    probes: dict[int, float] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in sorted(self.rows, key=lambda r: r.N):
            w.writerow(
                [r.N]
                + [fmt(x) for x in r[1:6]]
                + ["" if r.log_ratio is None else fmt(r.log_ratio)]
            )
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "rows": [dict(zip(TRACE_HEADER, r)) for r in sorted(self.rows, key=lambda r: r.N)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def consistent(self, tol: float = 1e-9) -> bool:
        """Grid extrema bracket the probe value and ``grid_max >= grid_min``."""
        return all(
            r.grid_max >= r.grid_min
            and max(r.grid_max, -r.grid_min) >= r.certified_lower - tol
            for r in self.rows
        )


def _row(N: int, probe_value: float, ext: GridExtrema) -> TraceRow:
    sup = max(abs(ext.max), abs(ext.min))
    return TraceRow(
        N,
        abs(probe_value),
        ext.max,
        ext.min,
        ext.argmax,
        ext.argmin,
        sup / math.log(N) if N >= 2 else None,
    )


@dataclass
class TraceConfig:
    """Parameters for every trace kind; each kind reads the fields it needs."""

    schedule: ScheduleConfig = field(
        default_factory=lambda: ScheduleConfig.inverse_square((4, 16, 64, 256))
    )
    ladder: tuple[int, ...] | None = None
    step: float = GRID_STEP
    t0: float = 0.3
    base_subseq: tuple[int, ...] = (12, 432)
    r_max: int = 2
    block_weights: tuple[float, ...] | None = (1.0, 0.25)
    perturbation: SampleSequence | None = None
    k_max: int = 3
    cap: int = DEFAULT_CAP
    sine_ladder: tuple[int, ...] = (8, 16, 32, 64, 128, 256)
    thm3_schedule: ScheduleConfig = field(default_factory=lambda: ScheduleConfig((128,), (1.0,)))
    thm3_ladder: tuple[int, ...] = (8, 16, 32, 64, 128)


KINDS = ("shannon_thm1", "valiron", "thm4", "sinetype_thm2", "sinecrossing_thm3")


def default_perturbation(kind: str, config: TraceConfig) -> SampleSequence:
    if kind == "sinetype_thm2":
        return trapezoid_samples(2).scaled(0.1)
    return scale_to_half_norm(thm1_adversary(config.thm3_schedule).g)


def scale_to_half_norm(g: SampleSequence) -> SampleSequence:
    """Divide ``g`` so its PW1 norm (plus quadrature error) stays below 1/2."""
    if g.is_zero:
        return g
    n = pw1_norm(g)
    return g.scaled(1.0 / (2.0 * (n.value + n.error) * 1.001))


def _shannon_trace(config: TraceConfig) -> DivergenceTrace:
    g, f1 = thm1_adversary(config.schedule)
    ladder = config.ladder or config.schedule.indices
    rows, probes = [], {}
    for N in ladder:
        probes[N] = N + 0.5
        val = engines.shannon_partial(f1, N, N + 0.5)
        ext = sup_on_grid(lambda t: engines.shannon_partial(f1, N, t), N + 2, config.step)
        rows.append(_row(N, val, ext))
    return DivergenceTrace("shannon_thm1", rows, probes)


def valiron_error(f: SampleSequence, t0: float, N: int, t):
    """``f(t) - V_N f(t)`` for the Valiron series anchored at ``t0``."""
    f_t0 = engines.reconstruct(f, t0)
    return np.asarray(engines.reconstruct(f, t)) - np.asarray(
        engines.valiron_partial(f, f_t0, t0, N, t)
    )


def _valiron_trace(config: TraceConfig, f1: SampleSequence | None = None) -> DivergenceTrace:
    if f1 is None:
        f1 = thm1_adversary(config.schedule).f1
    ladder = config.ladder or config.schedule.indices
    rows, probes = [], {}
    for N in ladder:
        probes[N] = N + 0.5
        val = float(valiron_error(f1, config.t0, N, N + 0.5))
        ext = sup_on_grid(lambda t: valiron_error(f1, config.t0, N, t), N + 2, config.step)
        rows.append(_row(N, val, ext))
    return DivergenceTrace("valiron", rows, probes)


def _thm4_trace(config: TraceConfig) -> DivergenceTrace:
    adv = thm4_adversary(config.base_subseq, config.r_max, config.block_weights, cap=config.cap)
    ladder = config.ladder or adv.block_n
    rows, probes = [], {}
    for N in ladder:
        probes[N] = N + 0.5
        val = engines.shannon_one_sided(adv.f1, N, N + 0.5)
        ext = sup_on_grid(lambda t: engines.shannon_one_sided(adv.f1, N, t), N + 2, config.step)
        rows.append(_row(N, val, ext))
    return DivergenceTrace("thm4", rows, probes)


@dataclass
class SineSetup:
    """Generating product and interpolation samples shared by the sine-type traces."""

    gp: GeneratingProduct
    samples: SampleSequence
    ladder: tuple[int, ...]
    schedule: tuple[int, ...] = ()
    violation: str | None = None


def sine_setup(kind: str, config: TraceConfig) -> SineSetup:
    default = config.sine_ladder if kind == "sinetype_thm2" else config.thm3_ladder
    ladder = tuple(config.ladder or default)
    top = max(ladder) + 1
    pert = config.perturbation
    if pert is None:
        pert = default_perturbation(kind, config)
    zeros = perturbed_zeros(pert, window=2 * (top + 3))
    gp = GeneratingProduct(zeros)
    ks = np.arange(-top, top + 1)
    if kind == "sinetype_thm2":
        adv = thm2_adversary(compute_envelope(pert), config.k_max, config.cap)
        vals = np.asarray(engines.reconstruct(adv.f1, zeros.t(ks)))
        return SineSetup(gp, SampleSequence(-top, top, vals), ladder, adv.schedule, adv.violation)
    return SineSetup(gp, crossing_samples(zeros, top), ladder)


def _sine_trace(kind: str, config: TraceConfig, setup: SineSetup | None = None) -> DivergenceTrace:
    setup = setup or sine_setup(kind, config)
    gp, samples = setup.gp, setup.samples
    rows, probes = [], {}
    for N in setup.ladder:
        tn, tn1 = midpoint_probe(gp.zeros, N), midpoint_probe(gp.zeros, N + 1)
        probes[N] = tn
        val = gp.series(samples, N, tn)
        ext = sup_on_grid(lambda t: gp.series(samples, N, t), N + 2, config.step, (tn, tn1))
        rows.append(_row(N, val, ext))
    return DivergenceTrace(kind, rows, probes)


def divergence_trace(kind: str, config: TraceConfig | None = None) -> DivergenceTrace:
    """Probe values and grid extrema along the configured ladder of ``N``."""
    config = config or TraceConfig()
    if kind == "shannon_thm1":
        return _shannon_trace(config)
    if kind == "valiron":
        return _valiron_trace(config)
    if kind == "thm4":
        return _thm4_trace(config)
    if kind in ("sinetype_thm2", "sinecrossing_thm3"):
        return _sine_trace(kind, config)
    raise SDLError(f"unknown trace kind {kind!r}; expected one of {KINDS}")


# ---------------------------------------------------------------- oscillation


def steps_within_slack(values: Sequence[float], slack: float = SLACK) -> bool:
    """Every step keeps at least ``1 - slack`` of the previous value."""
    v = list(values)
    return all(b >= a * (1 - slack) for a, b in zip(v, v[1:]))


def longest_growth_run(values: Sequence[float], slack: float = SLACK) -> int:
    """Length of the longest run of positive values that grows with ``slack`` and ends above its start."""
    best = 0
    v = list(values)
    for i in range(len(v)):
        if v[i] <= 0:
            continue
        j = i
        while j + 1 < len(v) and v[j + 1] > 0 and v[j + 1] >= v[j] * (1 - slack):
            j += 1
            if v[j] > v[i]:
                best = max(best, j - i + 1)
    return best


@dataclass
class OscillationReport:
    """Oscillation checks for a sine-type trace.

    ``probe_pairs`` holds ``(N, S_N(m_N), S_N(m_{N+1}))`` with ``m_N`` the
    midpoint of ``(t_N, t_{N+1})``.  ``levels`` holds the certified two-sided
    level ``c_N = min(max pair, -min pair)``; when the pair has opposite signs
    the grid maximum is at least ``c_N`` and the grid minimum at most ``-c_N``.
    """

    trace: DivergenceTrace
    probe_pairs: list[tuple[int, float, float]]
    levels: list[tuple[int, float]]
    checks: list[Check]
    vacuous: bool

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checks)


def oscillation_trace(
    kind: str, config: TraceConfig | None = None, slack: float = SLACK, min_run: int = 3
) -> OscillationReport:
    """Signed extrema along the ladder with the two-sided growth and sign-flip checks."""
    if kind not in ("sinetype_thm2", "sinecrossing_thm3"):
        raise SDLError(f"oscillation traces exist for sine-type kinds only, not {kind!r}")
    config = config or TraceConfig()
    setup = sine_setup(kind, config)
    gp, samples = setup.gp, setup.samples
    trace = _sine_trace(kind, config, setup)
    pairs = []
    for N in setup.ladder:
        a = gp.series(samples, N, midpoint_probe(gp.zeros, N))
        b = gp.series(samples, N, midpoint_probe(gp.zeros, N + 1))
        pairs.append((N, float(a), float(b)))
    levels = [(N, min(max(a, b), -min(a, b))) for N, a, b in pairs]

    rows = sorted(trace.rows, key=lambda r: r.N)
    vacuous = all(r.grid_max == 0.0 and r.grid_min == 0.0 for r in rows)
    if vacuous:
        checks = [Check(f"{kind}:oscillation", 0.0, 0.0, True, slack, "zero trace; monotonicity vacuous")]
        return OscillationReport(trace, pairs, levels, checks, True)

    later = rows[1:]
    c = [lv for _, lv in levels]
    run = longest_growth_run(c, slack)
    flips = [a * b < 0 for _, a, b in pairs]
    bracket = all(r.grid_max > lv > 0 and r.grid_min < -lv for r, (_, lv) in zip(rows, levels))
    checks = [
        Check(f"{kind}:max_steps", later[-1].grid_max, later[0].grid_max,
              steps_within_slack([r.grid_max for r in later], slack), slack,
              "grid_max nondecreasing past the first rung, within slack"),
        Check(f"{kind}:min_steps", later[-1].grid_min, later[0].grid_min,
              steps_within_slack([-r.grid_min for r in later], slack), slack,
              "grid_min nonincreasing past the first rung, within slack"),
        Check(f"{kind}:sign_flip", float(sum(flips)), float(len(flips)), all(flips), 0.0,
              "partial sum changes sign between consecutive midpoint probes"),
        Check(f"{kind}:two_sided_bracket", min(c), 0.0, bracket, 0.0,
              "grid_min < -c_N < 0 < c_N < grid_max on every rung"),
        Check(f"{kind}:two_sided_growth", float(run), float(min_run), run >= min_run, slack,
              "longest run of consecutive rungs over which c_N grows"),
    ]
    return OscillationReport(trace, pairs, levels, checks, False)


def log_normalized_sup(s: SampleSequence, ladder: Sequence[int], step: float = GRID_STEP) -> list[tuple[int, float]]:
    """``max_t |S_N s(t)| / log N`` on the probe grid for each ``N >= 2``."""
    out = []
    for N in ladder:
        if N < 2:
            raise ValueError("ladder entries must be at least 2")
        ext = sup_on_grid(lambda t: engines.shannon_partial(s, N, t), N + 2, step)
        out.append((int(N), max(abs(ext.max), abs(ext.min)) / math.log(N)))
    return out


# ---------------------------------------------------------------- verifiers


def verify_harmonic_log_bound(N: int) -> Check:
    """``sum_{k=0}^{2N} 1/(k+1/2)`` against ``log(4N+3)``."""
    if N < 1:
        raise ValueError("N must be positive")
    lhs = math.fsum(1.0 / (k + 0.5) for k in range(2 * N + 1))
    rhs = math.log(4 * N + 3)
    return Check("harmonic_log_bound", lhs, rhs, lhs > rhs)


def harmonic_log_scan(n_max: int) -> Check:
    """The harmonic/log comparison for every ``N`` in ``[1, n_max]``; reports the tightest ``N``."""
    acc = engines.Neumaier()
    acc.add(2.0)  # k = 0
    worst, worst_n, worst_l, worst_r = math.inf, 0, 0.0, 0.0
    ok = True
    for N in range(1, n_max + 1):
        acc.add(1.0 / (2 * N - 0.5))
        acc.add(1.0 / (2 * N + 0.5))
        lhs = float(acc.value)
        rhs = math.log(4 * N + 3)
        ok &= lhs > rhs
        if lhs - rhs < worst:
            worst, worst_n, worst_l, worst_r = lhs - rhs, N, lhs, rhs
    return Check("harmonic_log_scan", worst_l, worst_r, ok, 0.0, f"N in [1, {n_max}], tightest at N={worst_n}")


@dataclass
class Thm1Bound:
    value: float
    bound: float
    holds: bool
    level: int
    cubic_form: float | None

    def check(self, N: int, tol: float = 0.0) -> Check:
        return Check(f"thm1_lower_bound[N={N}]", self.value, self.bound, self.holds, tol)


def verify_thm1_lower_bound(g: SampleSequence, sched: ScheduleConfig, N: int, tol: float = 0.0) -> Thm1Bound:
    """Half-integer value against ``a_j log(4N+3)/pi`` for the first level ``j`` with ``N <= N_j``.

    ``cubic_form`` is ``(j-1)^3 log 2 / (pi j^2)`` when the schedule is
    ``N_l = 2**(l**3)``, otherwise ``None``.
    """
    if N < 1 or N > sched.indices[-1]:
        raise SDLError(f"N={N} outside schedule coverage [1, {sched.indices[-1]}]")
    level = next(j for j, n in enumerate(sched.indices, start=1) if N <= n)
    value = engines.half_integer_closed_form(g, N)
    bound = sched.weights[level - 1] * math.log(4 * N + 3) / math.pi
    cubic = all(n == 2 ** (l**3) for l, n in enumerate(sched.indices, start=1))
    k_hat = level - 1
    cubic_form = k_hat**3 / (k_hat + 1) ** 2 * math.log(2) / math.pi if cubic else None
    return Thm1Bound(value, bound, value >= bound - tol, level, cubic_form)


@dataclass
class Thm4Decomposition:
    term1: float
    term2: float
    term3: float
    direct: float
    checks: list[Check]
    display_sum: float
    display_log: float

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checks)


def verify_thm4_decomposition(adv: Thm4Adversary, m: int, rel_tol: float = 1e-10) -> Thm4Decomposition:
    """Split the one-sided partial sum at ``N_m + 1/2`` into earlier, own and later blocks.

    ``m`` is 1-based.  ``display_sum``/``display_log`` compare
    ``sum_{k=1}^{2 N1} 1/(k+1/2)`` with ``log(3 N1 + 3/2)``, a relation that
    does not hold as an identity and is reported rather than asserted.
    """
    if not 1 <= m <= len(adv.parts):
        raise IndexError(f"block index {m} outside 1..{len(adv.parts)}")
    N = adv.block_n[m - 1]
    n1 = adv.block_n1[m - 1]
    t = N + 0.5
    per_block = [w * engines.shannon_one_sided(p, N, t) for w, p in zip(adv.weights, adv.parts)]
    term1 = math.fsum(per_block[: m - 1])
    term2 = per_block[m - 1]
    term3 = math.fsum(per_block[m:])
    direct = engines.shannon_one_sided(adv.f1, N, t)
    total = math.fsum(per_block)

    b1 = 3.0 * math.fsum(adv.weights[: m - 1])
    b2 = adv.weights[m - 1] * math.log((4 * n1 + 3) / 3) / math.pi
    b3 = math.fsum(w * N * N / n1r for w, n1r in zip(adv.weights[m:], adv.block_n1[m:])) / math.pi
    tol = rel_tol * max(1.0, abs(direct))

    def below(x, b):
        return abs(x) < b or (b == 0.0 and x == 0.0)

    checks = [
        Check(f"thm4_decomposition[m={m}]", total, direct, abs(total - direct) <= tol, tol),
        Check(f"thm4_term1_bound[m={m}]", abs(term1), b1, below(term1, b1)),
        Check(f"thm4_term2_bound[m={m}]", abs(term2), b2, abs(term2) > b2),
        Check(f"thm4_term3_bound[m={m}]", abs(term3), b3, below(term3, b3)),
    ]
    display_sum = math.fsum(1.0 / (k + 0.5) for k in range(1, 2 * n1 + 1))
    return Thm4Decomposition(term1, term2, term3, direct, checks, display_sum, math.log(3 * n1 + 1.5))


def verify_maximal_domination(
    s: SampleSequence,
    subseq: Sequence[int],
    resolution: int = 64,
    step: float = GRID_STEP,
    tol: float = 1e-6,
) -> Check:
    """Grid max of one-sided reconstructions against the mean of the maximal operator."""
    subseq = [int(n) for n in subseq]
    if not subseq:
        raise ValueError("subsequence must be nonempty")
    T = max(subseq) + 2
    grid = probe_grid(T, step)
    lhs = 0.0
    for n in subseq:
        lhs = max(lhs, float(np.max(np.abs(engines.shannon_one_sided(s, n, grid)))))
    nodes = resolution * (max(subseq) + 1)
    omega = -math.pi + 2 * math.pi * np.arange(nodes) / nodes
    m_star = engines.maximal_operator(s, subseq, omega)
    rhs = math.fsum(np.atleast_1d(m_star)) / nodes
    return Check("maximal_domination", lhs, rhs, lhs <= rhs + tol, tol)
