"""Generating functions of finitely perturbed integer zero sets.

With zeros ``t_k = k + delta_k`` where only finitely many ``delta_k`` are
nonzero, the canonical product factors exactly as

    phi(z) = sin(pi z)/pi * c * prod_{k in P} (z - t_k) / (z - k),
    c = prod_{k in P, k != 0} k / t_k,

where ``P`` is the set of perturbed indices.  The infinite tail of unperturbed
integer factors is absorbed into ``sin(pi z)/pi``, so nothing is truncated and
an unperturbed set gives ``sin(pi z)/pi`` exactly.  Near an integer ``m`` the
factor ``sin(pi z)`` is written as ``(-1)**m (z - m) pi sinc(z - m)`` and the
``(z - m)`` is cancelled against the matching denominator when ``m`` is in
``P``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .engines import Neumaier, sinc_kernel
from .errors import DomainError
from .signals import SampleSequence, fmt


@dataclass(frozen=True, eq=False)
class ZeroSequence:
    """Zeros ``t_k = k + delta_k``; ``delta_k = 0`` outside ``[-window, window]``."""

    window: int
    perturbations: np.ndarray = field(repr=False)
    separation: float = field(init=False)
    max_perturbation: float = field(init=False)

    def __post_init__(self):
        d = np.array(self.perturbations, dtype=float).ravel()
        if d.size != 2 * self.window + 1:
            raise ValueError(f"need {2 * self.window + 1} perturbations for window {self.window}")
        if not np.all(np.isfinite(d)):
            raise ValueError("perturbations must be finite")
        d.setflags(write=False)
        object.__setattr__(self, "perturbations", d)
        # gaps including the unperturbed neighbours just outside the window
        padded = np.concatenate([[0.0], d, [0.0]])
        gaps = 1.0 + np.diff(padded)
        if np.any(gaps <= 0):
            raise ValueError("zeros are not strictly increasing")
        object.__setattr__(self, "separation", float(gaps.min()))
        object.__setattr__(self, "max_perturbation", float(np.abs(d).max()))

    def delta(self, k):
        k = np.asarray(k, dtype=np.int64)
        out = np.zeros(k.shape)
        inside = np.abs(k) <= self.window
        out[inside] = self.perturbations[k[inside] + self.window]
        return out if out.ndim else float(out)

    def t(self, k):
        """Zero locations ``t_k`` (vectorised)."""
        return np.asarray(k, dtype=float) + self.delta(k)

    @property
    def perturbed(self) -> np.ndarray:
        return np.flatnonzero(self.perturbations) - self.window

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "t_k"])
        for k in range(-self.window, self.window + 1):
            w.writerow([k, fmt(k + self.perturbations[k + self.window])])
        return buf.getvalue()


def perturbed_zeros(g: SampleSequence, window: int | None = None) -> ZeroSequence:
    """Zeros ``t_k = k + g(k)``; requires ``max |g(k)| < 1/2``."""
    if g.max_abs() >= 0.5:
        raise ValueError(f"max |g(k)| = {g.max_abs()} must be below 1/2")
    K = max(g.extent, window or 0)
    return ZeroSequence(K, g.at(np.arange(-K, K + 1)))


class GeneratingProduct:
    """Generating function of a :class:`ZeroSequence` with cached derivatives.

    Evaluations are accepted on ``|z| <= domain`` (default ``window / 2``).
    ``tail_bound`` estimates the relative rounding error of one evaluation;
    there is no truncation error because the integer tail is folded exactly.
    """

    def __init__(self, zeros: ZeroSequence, domain: float | None = None):
        self.zeros = zeros
        self.radius = zeros.window
        self.domain = float(zeros.window / 2 if domain is None else domain)
        P = zeros.perturbed
        self._p = P.astype(np.int64)
        self._tp = zeros.t(P) if P.size else np.zeros(0)
        nz = P != 0
        self._const = math.prod((P[nz] / self._tp[nz]).tolist()) if nz.any() else 1.0
        self.tail_bound = (4 * P.size + 8) * np.finfo(float).eps
        ks = np.arange(-zeros.window, zeros.window + 1)
        self._dphi = self._derivative(ks)

    def _check(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if np.any(np.abs(z) > self.domain) or not np.all(np.isfinite(z)):
            raise DomainError(f"evaluation point outside trusted domain |z| <= {self.domain}")
        return z

    def _eval(self, z: np.ndarray) -> np.ndarray:
        m = np.rint(z)
        sgn = np.where(np.fmod(m, 2.0) == 0.0, 1.0, -1.0)
        out = sgn * sinc_kernel(z, m) * self._const
        base = z - m
        for j, tj in zip(self._p, self._tp):
            hit = m == j
            # at the nearest integer the sin factor's (z - m) cancels (z - j)
            out = out * np.where(hit, z - tj, (z - tj) / np.where(hit, 1.0, z - j))
            base = np.where(hit, 1.0, base)
        return out * base

    def _derivative(self, k: np.ndarray) -> np.ndarray:
        # phi(z)/(z - t_k) evaluated at z = t_k, using the factored form
        k = np.asarray(k, dtype=np.int64)
        tk = self.zeros.t(k)
        out = np.where(k % 2 == 0, 1.0, -1.0) * sinc_kernel(tk, k) * self._const
        for j, tj in zip(self._p, self._tp):
            same = k == j
            out = out * np.where(same, 1.0, (tk - tj) / np.where(same, 1.0, tk - j))
        return out

    def phi(self, z):
        """Generating function value; zero exactly at every ``t_k``."""
        out = self._eval(self._check(z))
        return out if out.ndim else float(out)

    def phi_prime(self, k):
        """``phi'(t_k)`` from the leave-one-out product."""
        k = np.asarray(k, dtype=np.int64)
        if np.any(np.abs(self.zeros.t(k)) > self.domain):
            raise DomainError(f"zero index outside trusted domain |t_k| <= {self.domain}")
        out = self._dphi[k + self.zeros.window]
        return out if out.ndim else float(out)

    def phi_k(self, k: int, t):
        """Interpolating function ``phi(t) / (phi'(t_k)(t - t_k))``."""
        z = self._check(t)
        tk = float(self.zeros.t(k))
        d = self.phi_prime(k)
        num = self._eval(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(z == tk, 1.0, num / (d * np.where(z == tk, 1.0, z - tk)))
        return out if out.ndim else float(out)

    def series(self, samples: SampleSequence, N: int, t):
        """``sum_{k=-N}^{N} samples(k) phi_k(t)`` with compensated summation."""
        z = self._check(t)
        if N > self.zeros.window:
            raise DomainError(f"N={N} exceeds zero window {self.zeros.window}")
        ks = np.arange(-N, N + 1)
        cs = samples.at(ks)
        keep = cs != 0
        ks, cs = ks[keep], cs[keep]
        tks = self.zeros.t(ks)
        # the cached derivatives are exact for every k in the window
        weights = cs / self._dphi[ks + self.zeros.window]
        ph = self._eval(z)
        acc = Neumaier(z.shape)
        hit = np.zeros(z.shape, dtype=bool)
        hitval = np.zeros(z.shape)
        for tk, w, c in zip(tks, weights, cs):
            d = z - tk
            at = d == 0.0
            hit |= at
            hitval = np.where(at, c, hitval)
            acc.add(np.where(at, 0.0, w / np.where(at, 1.0, d)))
        out = np.where(hit, hitval, ph * acc.value)
        return out if out.ndim else float(out)


def phi_eval(gp: GeneratingProduct, z):
    return gp.phi(z)


def phi_prime_at_zero(gp: GeneratingProduct, k):
    return gp.phi_prime(k)


def phi_k_eval(gp: GeneratingProduct, k: int, t):
    return gp.phi_k(k, t)


def interpolation_partial(gp: GeneratingProduct, samples: SampleSequence, N: int, t):
    """Partial interpolation sum; ``samples(k)`` is the value at ``t_k``."""
    return gp.series(samples, N, t)


def crossing_samples(zeros: ZeroSequence, N: int) -> SampleSequence:
    """``sin(pi t_k) = (-1)**k sin(pi delta_k)`` for ``|k| <= N``."""
    ks = np.arange(-N, N + 1)
    vals = np.where(ks % 2 == 0, 1.0, -1.0) * np.sin(np.pi * zeros.delta(ks))
    return SampleSequence(-N, N, vals)


def sine_crossing_partial(gp: GeneratingProduct, N: int, t):
    """Interpolation of the sine-wave-crossing samples ``sin(pi t_k)``."""
    if N > gp.zeros.window:
        raise DomainError(f"N={N} exceeds zero window {gp.zeros.window}")
    return gp.series(crossing_samples(gp.zeros, N), N, t)


def midpoint_probe(zeros: ZeroSequence, N: int) -> float:
    """Midpoint of ``(t_N, t_{N+1})``."""
    if abs(N) > zeros.window or abs(N + 1) > zeros.window:
        raise IndexError(f"N={N} needs zeros up to index {N + 1}, window is {zeros.window}")
    return float((zeros.t(N) + zeros.t(N + 1)) / 2)
