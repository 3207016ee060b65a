"""Truncated reconstruction series evaluated by direct summation.

Every function accepts a scalar or an array of evaluation points and returns
the same shape.  Series are summed with compensated arithmetic: ``math.fsum``
for a single point, a vectorised Neumaier accumulator across many points.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .signals import SampleSequence


def sin_pi(t):
    """``sin(pi t)`` with exact reduction to ``[-1/2, 1/2]`` before scaling by pi."""
    t = np.asarray(t, dtype=float)
    n = np.rint(t)
    r = t - n
    sign = np.where(np.fmod(n, 2.0) == 0.0, 1.0, -1.0)
    out = sign * np.sin(np.pi * r)
    return out if out.ndim else float(out)


def _parity(k) -> np.ndarray:
    return np.where(np.asarray(k) % 2 == 0, 1.0, -1.0)


def sinc_kernel(t, k):
    """``sin(pi(t-k)) / (pi(t-k))``, equal to 1 at ``t == k``.

    Uses ``sin(pi(t-k)) = (-1)**k sin(pi t)`` with ``sin(pi t)`` reduced about
    the nearest integer, so large ``t`` loses no accuracy.
    """
    t = np.asarray(t, dtype=float)
    k = np.asarray(k)
    d = t - k
    n = np.rint(t)
    r = t - n
    # (-1)^(n - k) sin(pi r) / (pi d); d == r when n == k
    sgn = np.where(np.fmod(n - k, 2.0) == 0.0, 1.0, -1.0)
    num = sgn * np.sin(np.pi * r)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(d == 0.0, 1.0, num / (np.pi * np.where(d == 0.0, 1.0, d)))
    return out if out.ndim else float(out)


class Neumaier:
    """Running compensated sum over arrays of a fixed shape."""

    def __init__(self, shape=()):
        self.s = np.zeros(shape)
        self.c = np.zeros(shape)

    def add(self, x) -> None:
        s = self.s
        t = s + x
        self.c += np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)
        self.s = t

    @property
    def value(self) -> np.ndarray:
        return self.s + self.c


def compensated_sum(columns: Iterable, shape) -> np.ndarray:
    acc = Neumaier(shape)
    for x in columns:
        acc.add(x)
    return acc.value


def _series(ks: np.ndarray, cs: np.ndarray, t, term):
    """Sum ``cs[j] * term(t, ks[j])`` over j at every point of ``t``."""
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        if ks.size == 0:
            return 0.0
        return math.fsum(cs * term(t, ks))
    acc = Neumaier(t.shape)
    for k, c in zip(ks, cs):
        acc.add(c * term(t, k))
    return acc.value


def shannon_partial(s: SampleSequence, N: int, t):
    """``sum_{k=-N}^{N} s(k) sinc(t - k)``."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    ks, cs = s.window(-N, N)
    return _series(ks, cs, t, sinc_kernel)


def shannon_one_sided(s: SampleSequence, N: int, t):
    """``sum_{k=0}^{N} s(k) sinc(t - k)``."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    ks, cs = s.window(0, N)
    return _series(ks, cs, t, sinc_kernel)


def reconstruct(s: SampleSequence, t):
    """The full (finite) sinc series through all samples of ``s``."""
    return _series(s.indices, s.coefficients, t, sinc_kernel)


def half_integer_closed_form(g: SampleSequence, N: int) -> float:
    """``(1/pi) sum_{k=-N}^{N} g(k) / (N + 1/2 - k)``.

    For ``g >= 0`` this is ``|shannon_partial(modulate_alternating(g), N, N + 1/2)|``.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    ks, cs = g.window(-N, N)
    return math.fsum(cs / (N + 0.5 - ks)) / math.pi


def valiron_partial(s: SampleSequence, f_t0: float, t0: float, N: int, t):
    """Truncated Valiron series anchored at the non-integer point ``t0``."""
    if float(t0) == round(t0):
        raise DomainError(f"anchor t0={t0} must not be an integer")
    if N < 0:
        raise ValueError("N must be nonnegative")
    t = np.asarray(t, dtype=float)
    ks, cs = s.window(-N, N)
    series = _series(ks, cs / (ks - t0), t, sinc_kernel)
    out = f_t0 * sin_pi(t) / sin_pi(t0) + (t - t0) * series
    return out if np.ndim(out) else float(out)


def fourier_partial(s: SampleSequence, N: int, omega, one_sided: bool = False):
    """``sum_k s(k) exp(i omega k)`` over ``|k| <= N`` (or ``0 <= k <= N``)."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    ks, cs = s.window(0 if one_sided else -N, N)
    omega = np.asarray(omega, dtype=float)
    re = _series(ks, cs, omega, lambda w, k: np.cos(w * k))
    im = _series(ks, cs, omega, lambda w, k: np.sin(w * k))
    out = np.asarray(re) + 1j * np.asarray(im)
    return out if out.ndim else complex(out)


def one_sided_partials(s: SampleSequence, subseq: Sequence[int], omega) -> np.ndarray:
    """Moduli of the one-sided Fourier partial sums at every ``N`` in ``subseq``.

    Returns an array of shape ``(len(subseq),) + omega.shape``; a single pass
    over ``k`` snapshots the running sum at each requested ``N``.
    """
    subseq = [int(n) for n in subseq]
    omega = np.asarray(omega, dtype=float)
    out = np.empty((len(subseq),) + omega.shape)
    re, im = Neumaier(omega.shape), Neumaier(omega.shape)
    order = sorted(range(len(subseq)), key=lambda i: subseq[i])
    k = 0
    for i in order:
        n = subseq[i]
        while k <= n:
            c = s[k]
            if c:
                re.add(c * np.cos(omega * k))
                im.add(c * np.sin(omega * k))
            k += 1
        out[i] = np.hypot(re.value, im.value)
    return out


def maximal_operator(s: SampleSequence, subseq: Sequence[int], omega):
    """``max_l |sum_{k=0}^{N_l} s(k) exp(i omega k)|`` over the given subsequence."""
    subseq = list(subseq)
    if not subseq:
        raise ValueError("subsequence must be nonempty")
    if any(b <= a for a, b in zip(subseq, subseq[1:])) or subseq[0] < 0:
        raise ValueError(f"subsequence must be increasing and nonnegative: {subseq}")
    out = one_sided_partials(s, subseq, omega).max(axis=0)
    return out if out.ndim else float(out)


def lacunary_check(subseq: Sequence[int]) -> tuple[bool, float]:
    """Smallest growth ratio ``min N_{l+1}/N_l`` and whether it exceeds one."""
    subseq = [int(n) for n in subseq]
    if len(subseq) < 2:
        raise ValueError("need at least two indices")
    if subseq[0] < 1 or any(b <= a for a, b in zip(subseq, subseq[1:])):
        raise ValueError(f"indices must be strictly increasing positive integers: {subseq}")
    lam = min(b / a for a, b in zip(subseq, subseq[1:]))
    return lam > 1.0, lam
