"""Integer-sample signals and the adversarial constructions built from them.

A signal in this package is represented by its finitely many nonzero integer
samples.  The reconstruction at non-integer ``t`` is always the (finite) sinc
series through those samples, so a :class:`SampleSequence` fully determines a
band-limited function.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConstructionError, ScheduleError

DEFAULT_CAP = 2**24


def fmt(x: float) -> str:
    """Shortest lossless text for a float (17 significant digits)."""
    return format(float(x), ".17g")


@dataclass(frozen=True, eq=False)
class SampleSequence:
    """Finitely supported map ``k -> c_k`` on the integers.

    The stored form is canonical: leading and trailing zeros are trimmed, and
    the identically zero sequence is stored as ``support_lo = support_hi = 0``
    with a single zero coefficient.
    """

    support_lo: int
    support_hi: int
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).ravel()
        lo, hi = int(self.support_lo), int(self.support_hi)
        if hi < lo or c.size != hi - lo + 1:
            raise ValueError(
                f"support [{lo}, {hi}] does not match {c.size} coefficients"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        nz = np.flatnonzero(c)
        if nz.size == 0:
            lo, hi, c = 0, 0, np.zeros(1)
        else:
            lo, hi, c = lo + int(nz[0]), lo + int(nz[-1]), c[nz[0] : nz[-1] + 1]
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "support_lo", lo)
        object.__setattr__(self, "support_hi", hi)
        object.__setattr__(self, "coefficients", c)

    # construction helpers

    @classmethod
    def zeros(cls) -> SampleSequence:
        return cls(0, 0, [0.0])

    @classmethod
    def delta(cls, k: int = 0, value: float = 1.0) -> SampleSequence:
        return cls(k, k, [value])

    @classmethod
    def from_values(cls, lo: int, values: Sequence[float]) -> SampleSequence:
        values = list(values)
        if not values:
            return cls.zeros()
        return cls(lo, lo + len(values) - 1, values)

    @classmethod
    def from_mapping(cls, mapping: dict[int, float]) -> SampleSequence:
        if not mapping:
            return cls.zeros()
        lo, hi = min(mapping), max(mapping)
        c = np.zeros(hi - lo + 1)
        for k, v in mapping.items():
            c[k - lo] = v
        return cls(lo, hi, c)

    # queries

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coefficients)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.support_lo, self.support_hi + 1)

    @property
    def extent(self) -> int:
        """Largest ``|k|`` inside the support."""
        return max(abs(self.support_lo), abs(self.support_hi))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coefficients)))

    def __getitem__(self, k: int) -> float:
        if self.support_lo <= k <= self.support_hi:
            return float(self.coefficients[k - self.support_lo])
        return 0.0

    def at(self, ks) -> np.ndarray:
        """Vectorised lookup; zero outside the support."""
        ks = np.asarray(ks, dtype=np.int64)
        out = np.zeros(ks.shape)
        inside = (ks >= self.support_lo) & (ks <= self.support_hi)
        out[inside] = self.coefficients[ks[inside] - self.support_lo]
        return out

    def window(self, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        """Indices and coefficients restricted to ``[lo, hi]`` (may be empty)."""
        a, b = max(lo, self.support_lo), min(hi, self.support_hi)
        if a > b:
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        return (
            np.arange(a, b + 1, dtype=np.int64),
            self.coefficients[a - self.support_lo : b - self.support_lo + 1],
        )

    # arithmetic

    def scaled(self, factor: float) -> SampleSequence:
        return SampleSequence(self.support_lo, self.support_hi, self.coefficients * factor)

    def shifted(self, offset: int) -> SampleSequence:
        """The sequence ``k -> c_{k - offset}``."""
        return SampleSequence(
            self.support_lo + offset, self.support_hi + offset, self.coefficients
        )

    def __add__(self, other: SampleSequence) -> SampleSequence:
        if not isinstance(other, SampleSequence):
            return NotImplemented
        lo = min(self.support_lo, other.support_lo)
        hi = max(self.support_hi, other.support_hi)
        c = np.zeros(hi - lo + 1)
        c[self.support_lo - lo : self.support_hi - lo + 1] += self.coefficients
        c[other.support_lo - lo : other.support_hi - lo + 1] += other.coefficients
        return SampleSequence(lo, hi, c)

    def __neg__(self) -> SampleSequence:
        return self.scaled(-1.0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SampleSequence):
            return NotImplemented
        return (
            self.support_lo == other.support_lo
            and self.support_hi == other.support_hi
            and np.array_equal(self.coefficients, other.coefficients)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return (
            f"SampleSequence(support=[{self.support_lo}, {self.support_hi}], "
            f"nnz={np.count_nonzero(self.coefficients)})"
        )

    # serialisation

    def to_dict(self) -> dict:
        return {
            "support_lo": self.support_lo,
            "support_hi": self.support_hi,
            "coefficients": [float(x) for x in self.coefficients],
        }

    @classmethod
    def from_dict(cls, data: dict) -> SampleSequence:
        return cls(int(data["support_lo"]), int(data["support_hi"]), data["coefficients"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> SampleSequence:
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "c_k"])
        for k, c in zip(self.indices, self.coefficients):
            w.writerow([int(k), fmt(c)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> SampleSequence:
        rows = list(csv.reader(io.StringIO(text)))
        if rows and rows[0] and rows[0][0].strip() == "k":
            rows = rows[1:]
        return cls.from_mapping({int(r[0]): float(r[1]) for r in rows if r})


@dataclass(frozen=True)
class ScheduleConfig:
    """Finite level schedule: window half-widths ``indices`` with ``weights``.

    ``cap`` bounds the number of coefficients any window may occupy; a window
    ``w_N`` occupies ``4N - 1`` integer samples.
    """

    indices: tuple[int, ...]
    weights: tuple[float, ...]
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        idx = tuple(int(n) for n in self.indices)
        wts = tuple(float(a) for a in self.weights)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", wts)
        if not idx:
            raise ScheduleError("schedule has no levels")
        if len(idx) != len(wts):
            raise ScheduleError(f"{len(idx)} indices but {len(wts)} weights")
        if idx[0] < 1 or any(b <= a for a, b in zip(idx, idx[1:])):
            raise ScheduleError(f"indices must be strictly increasing positive integers: {idx}")
        if any(not (math.isfinite(a) and a > 0) for a in wts):
            raise ScheduleError(f"weights must be positive and finite: {wts}")
        for level, n in enumerate(idx, start=1):
            if 4 * n - 1 > self.cap:
                raise ScheduleError(
                    f"level {level}: N={n} needs {4 * n - 1} coefficients, cap is {self.cap}"
                )

    @property
    def levels(self) -> int:
        return len(self.indices)

    @classmethod
    def inverse_square(cls, indices: Sequence[int], cap: int = DEFAULT_CAP) -> ScheduleConfig:
        """Weights ``1/l**2`` on the given indices."""
        return cls(tuple(indices), tuple(1.0 / l**2 for l in range(1, len(indices) + 1)), cap)

    @classmethod
    def cubic_exponent(cls, levels: int, cap: int = DEFAULT_CAP) -> ScheduleConfig:
        """``N_l = 2**(l**3)`` with weights ``1/l**2``; fails once a level exceeds ``cap``."""
        return cls.inverse_square([2 ** (l**3) for l in range(1, levels + 1)], cap)


@dataclass(frozen=True)
class DecayEnvelope:
    """Tail maxima ``C(n) = max_{|k| >= n} |g(k)|`` with the floored ``C(0)``."""

    values: tuple[float, ...]

    @property
    def n_max(self) -> int:
        return len(self.values) - 1

    def __call__(self, n: int) -> float:
        if n < 0:
            raise ValueError("envelope index must be nonnegative")
        if n <= self.n_max:
            return self.values[n]
        if self.values[-1] == 0.0:
            return 0.0
        raise ValueError(f"C({n}) is beyond the computed envelope (n_max={self.n_max})")


def trapezoid_samples(N: int) -> SampleSequence:
    """Samples of the window ``w_N``: one on ``|k| <= N``, linear ramp to zero at ``|k| = 2N``."""
    if N < 1:
        raise ValueError(f"window half-width must be positive, got {N}")
    k = np.arange(-(2 * N - 1), 2 * N)
    a = np.abs(k)
    c = np.where(a <= N, 1.0, 1.0 - (a - N) / N)
    return SampleSequence(-(2 * N - 1), 2 * N - 1, c)


def modulate_alternating(s: SampleSequence) -> SampleSequence:
    """``c_k -> (-1)**k c_k`` (a frequency shift by pi)."""
    sign = np.where(s.indices % 2 == 0, 1.0, -1.0)
    return SampleSequence(s.support_lo, s.support_hi, s.coefficients * sign)


class Thm1Adversary(NamedTuple):
    g: SampleSequence
    f1: SampleSequence


def thm1_adversary(sched: ScheduleConfig) -> Thm1Adversary:
    """Weighted sum of windows ``g`` and its alternating modulation ``f1``."""
    width = 2 * sched.indices[-1] - 1
    c = np.zeros(2 * width + 1)
    k = np.abs(np.arange(-width, width + 1))
    for n, a in zip(sched.indices, sched.weights):
        c += a * np.clip(np.where(k <= n, 1.0, 1.0 - (k - n) / n), 0.0, None)
    g = SampleSequence(-width, width, c)
    return Thm1Adversary(g, modulate_alternating(g))


@dataclass(frozen=True)
class Thm4Adversary:
    """One-sided adversary assembled from shifted alternating windows.

    ``parts[r]`` is the unweighted block for ``chosen[r]``; ``f1`` is the
    weighted sum.  ``middle_bounds[r]`` is the guaranteed middle-term lower
    bound ``weight * log(N - 3/2) / pi`` for the block.
    """

    f1: SampleSequence
    chosen: tuple[int, ...]
    parts: tuple[SampleSequence, ...]
    block_n: tuple[int, ...]
    block_n1: tuple[int, ...]
    weights: tuple[float, ...]
    middle_bounds: tuple[float, ...]


def shifted_block(n: int) -> SampleSequence:
    """``q_{N1}`` moved right by ``N - N1``, where ``N1 = floor(N/3)``."""
    n1 = n // 3
    if n1 < 1:
        raise ConstructionError(f"N={n} gives N1=0; blocks need N >= 3")
    return modulate_alternating(trapezoid_samples(n1)).shifted(n - n1)


def thm4_adversary(
    base_subseq: Sequence[int],
    r_max: int,
    weights: Sequence[float] | None = None,
    enforce_condition_i: bool = False,
    cap: int = DEFAULT_CAP,
) -> Thm4Adversary:
    """Select ``r_max`` indices from ``base_subseq`` and sum the weighted blocks.

    Consecutive selections satisfy ``floor(N_next/3) >= N_prev**2``.  The
    growth condition ``log(N - 3/2)/(pi r^2) >= r`` is only enforced when
    ``enforce_condition_i`` is set; otherwise it is reported through
    ``middle_bounds``.
    """
    base = [int(n) for n in base_subseq]
    if any(b <= a for a, b in zip(base, base[1:])):
        raise ConstructionError(f"base subsequence must be strictly increasing: {base}")
    if r_max < 1:
        raise ConstructionError("r_max must be at least 1")
    if weights is None:
        weights = [1.0 / r**2 for r in range(1, r_max + 1)]
    weights = [float(w) for w in weights]
    if len(weights) < r_max or any(w <= 0 for w in weights[:r_max]):
        raise ConstructionError(f"need {r_max} positive weights, got {weights}")

    def cond_i(r, n):
        return (not enforce_condition_i) or math.log(n - 1.5) / (math.pi * r * r) >= r

    chosen: list[int] = []
    pos = 0
    for r in range(1, r_max + 1):
        need = 1 if not chosen else base[chosen[-1]] ** 2
        while pos < len(base) and not (base[pos] // 3 >= need and base[pos] >= 3 and cond_i(r, base[pos])):
            pos += 1
        if pos == len(base):
            if chosen:
                prev = base[chosen[-1]]
                raise ConstructionError(
                    f"condition ii) fails for block {r}: need floor(N/3) >= {prev}^2 = {need} "
                    f"(N >= {3 * need}) after N={prev}; base subsequence {base} has no admissible index"
                )
            raise ConstructionError(
                f"no admissible first index in {base} (need N >= 3"
                + (", condition i)" if enforce_condition_i else "")
                + ")"
            )
        chosen.append(pos)
        pos += 1

    block_n = tuple(base[i] for i in chosen)
    top = block_n[-1] + block_n[-1] // 3 - 1
    if top + 1 > cap:
        raise ConstructionError(f"adversary support [0, {top}] exceeds coefficient cap {cap}")
    parts = tuple(shifted_block(n) for n in block_n)
    f1 = SampleSequence.zeros()
    for w, p in zip(weights, parts):
        f1 = f1 + p.scaled(w)
    return Thm4Adversary(
        f1=f1,
        chosen=tuple(chosen),
        parts=parts,
        block_n=block_n,
        block_n1=tuple(n // 3 for n in block_n),
        weights=tuple(weights[:r_max]),
        middle_bounds=tuple(w * math.log(n - 1.5) / math.pi for w, n in zip(weights, block_n)),
    )


def compute_envelope(g: SampleSequence, n_max: int | None = None) -> DecayEnvelope:
    """Decay envelope of ``|g|``; ``n_max`` defaults to one past the support."""
    ext = g.extent
    if n_max is None:
        n_max = ext + 1
    a = np.arange(ext + 1)
    by_radius = np.maximum(np.abs(g.at(a)), np.abs(g.at(-a)))
    tail = np.maximum.accumulate(by_radius[::-1])[::-1]
    values = [max(1.0, g.max_abs())]
    for n in range(1, n_max + 1):
        values.append(float(tail[n]) if n <= ext else 0.0)
    return DecayEnvelope(tuple(values))


@dataclass(frozen=True)
class Thm2Adversary:
    g1: SampleSequence
    f1: SampleSequence
    schedule: tuple[int, ...]
    complete: bool
    violation: str | None = None


def _first_below(env: DecayEnvelope, level: float) -> int | None:
    # C is nonincreasing past n = 1, so a linear scan finds the least n.
    for n in range(1, env.n_max + 1):
        if env(n) < level:
            return n
    if env.values[-1] == 0.0 and level > 0:
        return env.n_max + 1
    return None


def _first_log_above(x: float) -> int:
    n = max(1, int(math.floor(math.exp(x))))
    while math.log(n) <= x:
        n += 1
    while n > 1 and math.log(n - 1) > x:
        n -= 1
    return n


def thm2_adversary(env: DecayEnvelope, k_max: int, cap: int = DEFAULT_CAP) -> Thm2Adversary:
    """Build ``g1`` on the schedule ``N_1 < N_2 < ...`` driven by the envelope.

    Level 1 needs ``8 pi C(0) C(N_1) < 1``; level ``j >= 2`` needs
    ``8 pi C(0) C(N_j) < 2**-j`` and ``log(N_j) > j 2**j``.  Construction stops
    at the first level whose index would exceed ``cap`` and returns the
    partial schedule with the violated condition named.
    """
    if k_max < 1:
        raise ConstructionError("k_max must be at least 1")
    c0 = env(0)
    schedule: list[int] = []
    violation = None
    for j in range(1, k_max + 1):
        thresh = 1.0 if j == 1 else 2.0**-j
        n_decay = _first_below(env, thresh / (8 * math.pi * c0))
        if j == 1:
            n_log = 1
        else:
            x = j * 2.0**j
            n_log = cap + 1 if x >= math.log(cap) else _first_log_above(x)
        if n_decay is None or n_decay > cap:
            violation = f"level {j}: decay condition 8*pi*C(0)*C(N) < {thresh:g} needs N > cap {cap}"
            break
        if n_log > cap:
            violation = f"level {j}: log condition log(N) > {j}*2^{j} needs N > cap {cap}"
            break
        schedule.append(max(n_decay, n_log))

    g1 = SampleSequence.zeros()
    for j, n in enumerate(schedule, start=1):
        a = c0 if j == 1 else 2.0 ** -(j - 1)
        g1 = g1 + trapezoid_samples(n).scaled(a)
    return Thm2Adversary(g1, modulate_alternating(g1), tuple(schedule), violation is None, violation)
