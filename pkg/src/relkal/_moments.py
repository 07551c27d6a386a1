"""Trigonometric moment integrals for turning-motion closed forms.

Everything closed-form about constant-turn propagation reduces to

    C_k = integral_0^t s^k cos(psi0 + omega*s) ds
    S_k = integral_0^t s^k sin(psi0 + omega*s) ds      (k = 0..4)

which this module evaluates in a scale-free form C_k = t^(k+1) *
(cos(psi0)*c_k(u) - sin(psi0)*s_k(u)) with u = omega*t.  The kernels c_k, s_k
are entire in u; the textbook recurrence divides by u once per order and is
catastrophically cancellation-prone for small u, so below |u| = 0.5 a Taylor
series (converged to double precision) is used instead.  Both branches agree
to ~1e-13 at the switch, which keeps every downstream quantity continuous
across it.

Useful derivative identities (used for analytic Jacobians):

    dC_k/dpsi0 = -S_k        dC_k/domega = -S_(k+1)
    dS_k/dpsi0 =  C_k        dS_k/domega =  C_(k+1)
"""

from __future__ import annotations

import math

__all__ = ["trig_moments", "KMAX"]

#: Highest moment order provided (s^4 terms appear in noise cross terms).
KMAX = 4

#: |omega*t| below which the series branch is used.
_SERIES_SWITCH = 0.5

#: Series terms; u^(2*11)/22! at |u|=0.5 is ~2e-28, far below double epsilon.
_SERIES_TERMS = 11


def _series_coeffs():
    fact = [1.0]
    for i in range(1, 2 * _SERIES_TERMS + 2):
        fact.append(fact[-1] * i)
    # c_k(u) = sum_j z^j / ((2j)! (k+2j+1)),  s_k(u) = u * sum_j z^j / ((2j+1)! (k+2j+2))
    # with z = -u^2 (the alternating sign folded into z).
    cc = [[1.0 / (fact[2 * j] * (k + 2 * j + 1)) for j in range(_SERIES_TERMS)] for k in range(KMAX + 1)]
    cs = [[1.0 / (fact[2 * j + 1] * (k + 2 * j + 2)) for j in range(_SERIES_TERMS)] for k in range(KMAX + 1)]
    return cc, cs


_COEF_C, _COEF_S = _series_coeffs()


def _kernels_series(u: float) -> tuple[list[float], list[float]]:
    z = -u * u
    zp = [1.0] * _SERIES_TERMS
    for j in range(1, _SERIES_TERMS):
        zp[j] = zp[j - 1] * z
    c = [0.0] * (KMAX + 1)
    s = [0.0] * (KMAX + 1)
    for k in range(KMAX + 1):
        ck = _COEF_C[k]
        sk = _COEF_S[k]
        acc_c = 0.0
        acc_s = 0.0
        for j in range(_SERIES_TERMS):
            acc_c += ck[j] * zp[j]
            acc_s += sk[j] * zp[j]
        c[k] = acc_c
        s[k] = u * acc_s
    return c, s


def _kernels_closed(u: float) -> tuple[list[float], list[float]]:
    sin_u = math.sin(u)
    c = [0.0] * (KMAX + 1)
    s = [0.0] * (KMAX + 1)
    c[0] = sin_u / u
    s[0] = 2.0 * math.sin(0.5 * u) ** 2 / u  # (1 - cos u)/u without cancellation
    cos_u = math.cos(u)
    for k in range(1, KMAX + 1):
        c[k] = (sin_u - k * s[k - 1]) / u
        s[k] = (k * c[k - 1] - cos_u) / u
    return c, s


def trig_moments(psi0: float, omega: float, t: float) -> tuple[list[float], list[float]]:
    """Return ([C_0..C_4], [S_0..S_4]) for base angle psi0, rate omega, time t.

    Exact in the t -> 0 and omega -> 0 limits (C_k -> cos(psi0) t^(k+1)/(k+1),
    S_k -> sin(psi0) t^(k+1)/(k+1)).
    """
    if t == 0.0:
        return [0.0] * (KMAX + 1), [0.0] * (KMAX + 1)
    u = omega * t
    if abs(u) < _SERIES_SWITCH:
        ck, sk = _kernels_series(u)
    else:
        ck, sk = _kernels_closed(u)
    cp, sp = math.cos(psi0), math.sin(psi0)
    tp = t
    C = [0.0] * (KMAX + 1)
    S = [0.0] * (KMAX + 1)
    for k in range(KMAX + 1):
        C[k] = tp * (cp * ck[k] - sp * sk[k])
        S[k] = tp * (sp * ck[k] + cp * sk[k])
        tp *= t
    return C, S
