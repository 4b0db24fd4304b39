"""Adaptive quadrature helpers for improper radial integrals.

Panels are integrated with scipy's adaptive Gauss-Kronrod rule.  Two
recurring difficulties are handled here once:

* an integrable power singularity x^e (e in (-1, 0)) at the left endpoint
  of a panel starting at 0, removed by the substitution x = b u^s with
  s = 2/(1 + e), which turns the leading behaviour into plain u;
* infinite upper limits, mapped to (0, 1/a] by u = 1/x so that tails decay
  like a known power of u (again possibly singular at u = 0).
"""

from __future__ import annotations

from scipy.integrate import quad

_EPSABS = 1e-12
_EPSREL = 1e-12
_LIMIT = 200


def quad_panel(f, a: float, b: float, left_exponent: float | None = None) -> float:
    """Integrate f over [a, b]; ``left_exponent`` declares f ~ x^e at a = 0."""
    if b <= a:
        return 0.0
    if left_exponent is not None and left_exponent < 0.0 and a == 0.0:
        e = float(left_exponent)
        if e <= -1.0:
            raise ValueError(f"non-integrable endpoint exponent {e}")
        s = 2.0 / (1.0 + e)

        def transformed(u: float) -> float:
            x = b * u**s
            return f(x) * b * s * u ** (s - 1.0)

        val, _ = quad(transformed, 0.0, 1.0, epsabs=_EPSABS, epsrel=_EPSREL, limit=_LIMIT)
        return val
    val, _ = quad(f, a, b, epsabs=_EPSABS, epsrel=_EPSREL, limit=_LIMIT)
    return val


def quad_to_infinity(f, a: float, u_exponent: float | None = None) -> float:
    """Integrate f over [a, inf) via the inversion u = 1/x.

    ``u_exponent`` declares the transformed integrand f(1/u)/u^2 ~ u^e as
    u -> 0, needed when e < 0.
    """
    if a <= 0.0:
        raise ValueError("inversion requires a positive lower limit")

    def inverted(u: float) -> float:
        return f(1.0 / u) / (u * u)

    return quad_panel(inverted, 0.0, 1.0 / a, left_exponent=u_exponent)
