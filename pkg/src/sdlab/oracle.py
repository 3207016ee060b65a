"""Extended-precision reference evaluations (mpmath, 50 digits by default).

These follow the textbook formulas term by term with no argument reduction,
folding or vectorisation, so they serve as an independent check of the
double-precision engines.
"""

from __future__ import annotations

import mpmath as mp

from .signals import SampleSequence

DPS = 50


def _mpf(x):
    return mp.mpf(x) if not isinstance(x, mp.mpf) else x


def sinc(t, k):
    with mp.workdps(DPS):
        d = _mpf(t) - k
        if d == 0:
            return mp.mpf(1)
        return mp.sin(mp.pi * d) / (mp.pi * d)


def shannon_partial(s: SampleSequence, N: int, t, lo: int | None = None):
    lo = -N if lo is None else lo
    with mp.workdps(DPS):
        return mp.fsum(_mpf(s[k]) * sinc(t, k) for k in range(lo, N + 1) if s[k])


def reconstruct(s: SampleSequence, t):
    with mp.workdps(DPS):
        return mp.fsum(_mpf(c) * sinc(t, int(k)) for k, c in zip(s.indices, s.coefficients) if c)


def half_integer_closed_form(g: SampleSequence, N: int):
    with mp.workdps(DPS):
        h = mp.mpf(N) + mp.mpf(1) / 2
        return mp.fsum(_mpf(g[k]) / (h - k) for k in range(-N, N + 1) if g[k]) / mp.pi


def valiron_partial(s: SampleSequence, f_t0, t0, N: int, t):
    with mp.workdps(DPS):
        t, t0 = _mpf(t), _mpf(t0)
        head = _mpf(f_t0) * mp.sin(mp.pi * t) / mp.sin(mp.pi * t0)
        body = mp.fsum(
            _mpf(s[k]) * (t - t0) / (k - t0) * mp.sin(mp.pi * (t - k)) / (mp.pi * (t - k))
            if t != k
            else _mpf(s[k]) * (t - t0) / (k - t0)
            for k in range(-N, N + 1)
            if s[k]
        )
        return head + body


def fourier_partial(s: SampleSequence, N: int, omega, one_sided: bool = False):
    with mp.workdps(DPS):
        w = _mpf(omega)
        lo = 0 if one_sided else -N
        return mp.fsum(_mpf(s[k]) * mp.expj(w * k) for k in range(lo, N + 1) if s[k])


def harmonic_half(n_terms: int, start: int = 0):
    """``sum_{k=start}^{start+n_terms-1} 1/(k + 1/2)``."""
    with mp.workdps(DPS):
        return mp.fsum(1 / (mp.mpf(k) + mp.mpf(1) / 2) for k in range(start, start + n_terms))


def generating_phi(zeros, z, radius: int | None = None):
    """``(z - t_0) prod_{0<|k|<=R} (1 - z/t_k)`` times the exact gamma-function tail.

    The tail ``prod_{|k|>R} (1 - z/k) = Gamma(R+1)^2 / (Gamma(R+1-z) Gamma(R+1+z))``
    holds because all zeros beyond the window are integers.
    """
    R = zeros.window if radius is None else radius
    with mp.workdps(DPS):
        z = _mpf(z)

        def t(k):
            return mp.mpf(k) + (_mpf(zeros.delta(k)) if abs(k) <= zeros.window else 0)

        p = z - t(0)
        for k in range(1, R + 1):
            p *= (1 - z / t(k)) * (1 - z / t(-k))
        tail = mp.gamma(R + 1) ** 2 / (mp.gamma(R + 1 - z) * mp.gamma(R + 1 + z))
        return p * tail
