"""Radial stretch maps and their exact integral behaviour.

A stretch map is f(z) = g(r) e^{i theta} with g nonnegative, locally
Lipschitz, g(0+) = 0 and g(r) -> 0 at infinity.  Its complex derivatives
satisfy

    df    = (g' + g/r) / 2,
    dfbar = (g' - g/r) / 2 * e^{2 i theta},
    |df| + |dfbar| = max(g/r, |g'|),

so integrals of rotation-invariant integrands reduce to one-dimensional
radial integrals: integral over C equals 2 pi * integral of r * (radial
integrand) dr.  Two representable profile families are provided:

* :class:`PowerProfile`: g = c r^alpha on (0, 1], c r^(-beta) beyond, with
  c > 0 and alpha, beta in (0, 1].  The slope bound |g'| <= g/r holds
  everywhere, and closed forms exist for all the integrals.
* :class:`SampledProfile`: piecewise linear between knots, with a power
  decay tail.  Integrals are evaluated by adaptive quadrature on panels
  aligned with the knots and with the radii where the integrand switches
  branch.

The L integral vanishes identically on slope-dominated profiles and is
nonnegative on all stretch profiles; both facts are exercised numerically
by the callers of this module.  Energy convergence is automatic for the L
integral (both families are built with finite Dirichlet energy); the
Phi_p integrals check the p-dependent decay conditions and reject
divergent combinations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._quadrature import quad_panel, quad_to_infinity
from .core import Exponent, _L_from_moduli, _phi_from_moduli

__all__ = [
    "DominationReport",
    "PowerProfile",
    "SampledProfile",
    "SteepInterval",
    "burkholder_integral",
    "fixed_point_radius",
    "load_profile",
    "phi_integral",
    "profile_from_json",
    "profile_to_json",
    "saturation_ratio",
    "save_profile",
    "slope_domination",
    "steep_interval_terms",
    "stretch_moduli",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PowerProfile:
    """g(r) = c r^alpha for r <= 1 and c r^(-beta) for r >= 1."""

    c: float
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.c) and self.c > 0.0):
            raise ValueError("c must be positive")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (np.isfinite(v) and 0.0 < v <= 1.0):
                raise ValueError(f"{name} must lie in (0, 1]")

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= 1.0, self.c * r**self.alpha, self.c * r ** (-self.beta))[()]

    def slope(self, r):
        """Right derivative; at r = 1 the decaying branch applies."""
        r = np.asarray(r, dtype=float)
        inner = self.c * self.alpha * r ** (self.alpha - 1.0)
        outer = -self.c * self.beta * r ** (-self.beta - 1.0)
        return np.where(r < 1.0, inner, outer)[()]

    def knots(self) -> tuple[float, ...]:
        return (1.0,)

    def tail(self) -> tuple[float, float, float]:
        """(start radius, coefficient, decay exponent) of the tail piece."""
        return 1.0, self.c, self.beta

    def diagonal_crossings(self) -> tuple[float, ...]:
        """Radii with g(r) = r, which bound the region where g/r > 1."""
        out = []
        if self.c > 1.0:
            out.append(self.c ** (1.0 / (1.0 + self.beta)))
        elif self.c == 1.0:
            out.append(1.0)
        elif self.alpha < 1.0:
            out.append(self.c ** (1.0 / (1.0 - self.alpha)))
        return tuple(out)

    def slope_unit_crossings(self) -> tuple[float, ...]:
        # |g'| <= g/r for this family, so the branch of the integrand is
        # governed by the diagonal crossings alone.
        return ()


@dataclass(frozen=True)
class SampledProfile:
    """Piecewise-linear profile on knots 0 = r_0 < ... < r_K, power tail.

    Values g_k >= 0 with g_0 = 0 are interpolated linearly; beyond r_K the
    profile decays as g_K (r_K / r)^tail_exponent with tail_exponent in
    (0, 1].  Such a profile is automatically locally Lipschitz with finite
    Dirichlet energy.
    """

    radii: tuple[float, ...]
    values: tuple[float, ...]
    tail_exponent: float

    def __post_init__(self) -> None:
        radii = tuple(float(r) for r in self.radii)
        values = tuple(float(v) for v in self.values)
        if len(radii) != len(values) or len(radii) < 2:
            raise ValueError("need matching radii/values with at least two knots")
        if radii[0] != 0.0 or values[0] != 0.0:
            raise ValueError("the profile must start at g(0) = 0")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly increasing")
        if not all(np.isfinite(v) and v >= 0.0 for v in values):
            raise ValueError("values must be finite and nonnegative")
        if not (np.isfinite(self.tail_exponent) and 0.0 < self.tail_exponent <= 1.0):
            raise ValueError("tail_exponent must lie in (0, 1]")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "tail_exponent", float(self.tail_exponent))

    @property
    def _r(self) -> np.ndarray:
        return np.asarray(self.radii)

    @property
    def _g(self) -> np.ndarray:
        return np.asarray(self.values)

    @property
    def slopes(self) -> np.ndarray:
        r, g = self._r, self._g
        return np.diff(g) / np.diff(r)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        r_k, g_k = self._r, self._g
        inside = np.interp(r, r_k, g_k)
        r_last, g_last = r_k[-1], g_k[-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = g_last * (r_last / np.maximum(r, r_last)) ** self.tail_exponent
        return np.where(r <= r_last, inside, tail)[()]

    def slope(self, r):
        """Right derivative (segment slope; tail formula from r_K on)."""
        r = np.asarray(r, dtype=float)
        r_k = self._r
        idx = np.minimum(np.searchsorted(r_k, r, side="right"), len(r_k) - 1) - 1
        idx = np.maximum(idx, 0)
        seg = self.slopes[idx]
        r_last, g_last = r_k[-1], self._g[-1]
        b = self.tail_exponent
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = -b * g_last * r_last**b * np.maximum(r, r_last) ** (-b - 1.0)
        return np.where(r < r_last, seg, tail)[()]

    def knots(self) -> tuple[float, ...]:
        return self.radii[1:]

    def tail(self) -> tuple[float, float, float]:
        r_last, g_last = self.radii[-1], self.values[-1]
        return r_last, g_last * r_last**self.tail_exponent, self.tail_exponent

    def diagonal_crossings(self) -> tuple[float, ...]:
        out = []
        r_k, g_k = self._r, self._g
        diff = g_k - r_k
        for i in range(len(r_k) - 1):
            d0, d1 = diff[i], diff[i + 1]
            if d0 == 0.0 and r_k[i] > 0.0:
                out.append(float(r_k[i]))
            if (d0 > 0.0 > d1) or (d0 < 0.0 < d1):
                out.append(float(r_k[i] + (r_k[i + 1] - r_k[i]) * d0 / (d0 - d1)))
        r_last, g_last = r_k[-1], g_k[-1]
        if g_last > 0.0:
            b = self.tail_exponent
            r_t = (g_last * r_last**b) ** (1.0 / (1.0 + b))
            if r_t > r_last:
                out.append(float(r_t))
        elif g_last == r_last and r_last > 0.0:
            out.append(float(r_last))
        return tuple(sorted(set(out)))

    def slope_unit_crossings(self) -> tuple[float, ...]:
        # segment slopes are constant, so only the tail can cross |g'| = 1
        r_last, g_last = self.radii[-1], self.values[-1]
        if g_last <= 0.0:
            return ()
        b = self.tail_exponent
        r_c = (b * g_last * r_last**b) ** (1.0 / (1.0 + b))
        return (float(r_c),) if r_c > r_last else ()


Profile = PowerProfile | SampledProfile


# ---------------------------------------------------------------------------
# pointwise quantities
# ---------------------------------------------------------------------------


def stretch_moduli(profile: Profile, r):
    """(|df|, |dfbar|) of the stretch map at radius r > 0.

    |df| = |g' + g/r| / 2 and |dfbar| = |g' - g/r| / 2; the phase factors
    do not matter to any rotation-invariant integrand.  At a knot the right
    derivative is used.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("radius must be positive")
    g = profile.value(r)
    s = profile.slope(r)
    h = g / r
    return (0.5 * np.abs(s + h))[()], (0.5 * np.abs(s - h))[()]


@dataclass(frozen=True)
class DominationReport:
    """Outcome of the slope-domination test |g'| <= g/r."""

    dominated: bool
    margin: float  # sup of |g'| - g/r; nonpositive when the bound holds


def slope_domination(profile: Profile, tol: float = 1e-12) -> DominationReport:
    """Check |g'(r)| <= g(r)/r almost everywhere, reporting the worst margin.

    Power profiles are checked piece by piece in closed form.  For sampled
    profiles the chord g/r is monotone on each linear segment, so one-sided
    evaluation at the segment endpoints is exact; the tail satisfies
    |g'| = tail_exponent * g/r <= g/r automatically.
    """
    if isinstance(profile, PowerProfile):
        # piecewise: sup of (alpha - 1) c r^(alpha-1) on (0, 1] is at r = 1,
        # sup of (beta - 1) c r^(-beta-1) on [1, inf) is at r = 1
        margin = profile.c * (max(profile.alpha, profile.beta) - 1.0)
        return DominationReport(margin <= tol, float(margin))

    r_k, g_k = profile._r, profile._g
    slopes = profile.slopes
    margin = -np.inf
    for i, s in enumerate(slopes):
        lo, hi = r_k[i], r_k[i + 1]
        h_hi = g_k[i + 1] / hi
        h_lo = s if lo == 0.0 else g_k[i] / lo
        margin = max(margin, abs(s) - min(h_lo, h_hi))
    # the tail has |g'| = tail_exponent * g/r <= g/r, never a violation
    return DominationReport(margin <= tol, float(margin))


def fixed_point_radius(profile: Profile) -> float:
    """sup{r : g(r) >= r}, or 0 when the set is empty; g(R) = R when R > 0."""
    if isinstance(profile, PowerProfile):
        c, a, b = profile.c, profile.alpha, profile.beta
        if c > 1.0:
            return c ** (1.0 / (1.0 + b))
        if c == 1.0:
            return 1.0
        return c ** (1.0 / (1.0 - a)) if a < 1.0 else 0.0

    r_k, g_k = profile._r, profile._g
    r_last, g_last = r_k[-1], g_k[-1]
    if g_last >= r_last and g_last > 0.0:
        bt = profile.tail_exponent
        return float((g_last * r_last**bt) ** (1.0 / (1.0 + bt)))
    diff = g_k - r_k
    for i in range(len(r_k) - 2, -1, -1):
        if diff[i] >= 0.0:
            if diff[i] == 0.0:
                root = r_k[i]
            else:
                root = r_k[i] + (r_k[i + 1] - r_k[i]) * diff[i] / (diff[i] - diff[i + 1])
            return float(root)
    return 0.0


@dataclass(frozen=True)
class SteepInterval:
    """One maximal interval of {r > R : |g'| > 1} with constant slope sign.

    ``term`` is the telescoped contribution of the interval to the radial
    L integral, ((r1 -+ g(r1))^2 - (r2 -+ g(r2))^2) / 2 with the sign
    matching the sign of g'; each term is nonnegative.
    """

    r1: float
    r2: float
    slope_sign: int
    term: float


def steep_interval_terms(profile: Profile) -> list[SteepInterval]:
    """The per-interval telescoped quantities over {r > R : |g'| > 1}."""
    if isinstance(profile, PowerProfile):
        return []  # slope-dominated, so |g'| < 1 beyond the fixed radius

    big_r = fixed_point_radius(profile)
    r_k = list(profile._r)
    slopes = list(profile.slopes)
    pieces: list[tuple[float, float, int]] = []
    for i, s in enumerate(slopes):
        if abs(s) > 1.0:
            lo, hi = max(r_k[i], big_r), r_k[i + 1]
            if hi > lo:
                pieces.append((lo, hi, 1 if s > 0 else -1))
    crossings = profile.slope_unit_crossings()
    if crossings:
        lo = max(r_k[-1], big_r)
        hi = crossings[0]
        if hi > lo:
            pieces.append((lo, hi, -1))  # the decaying tail has g' < 0

    merged: list[list] = []
    for lo, hi, sign in sorted(pieces):
        if merged and merged[-1][2] == sign and merged[-1][1] == lo:
            merged[-1][1] = hi
        else:
            merged.append([lo, hi, sign])

    out = []
    for lo, hi, sign in merged:
        g1, g2 = float(profile.value(lo)), float(profile.value(hi))
        if sign > 0:
            term = 0.5 * ((lo - g1) ** 2 - (hi - g2) ** 2)
        else:
            term = 0.5 * ((lo + g1) ** 2 - (hi + g2) ** 2)
        out.append(SteepInterval(float(lo), float(hi), sign, float(term)))
    return out


# ---------------------------------------------------------------------------
# the integrals
# ---------------------------------------------------------------------------


def _phi_divergence_check(profile: Profile, exp: Exponent) -> None:
    p = exp.p
    if isinstance(profile, PowerProfile):
        if (profile.alpha - 1.0) * p + 2.0 <= 0.0:
            raise ValueError(
                f"p-energy diverges at the origin for alpha={profile.alpha}, p={p}"
            )
        tail_b = profile.beta
    else:
        tail_b = profile.tail_exponent
        if profile.values[-1] == 0.0:
            return
    if (tail_b + 1.0) * p - 2.0 <= 0.0:
        raise ValueError(f"p-energy diverges at infinity for tail exponent {tail_b}, p={p}")


def _panel_edges(profile: Profile) -> list[float]:
    pts = {0.0}
    pts.update(profile.knots())
    pts.update(profile.diagonal_crossings())
    pts.update(profile.slope_unit_crossings())
    return sorted(pts)


def _radial_quadrature(profile: Profile, radial_integrand, inner_exponent, tail_exponent) -> float:
    """2 pi * integral of r * radial_integrand(r) dr over (0, inf).

    Panels follow the knots and branch crossings; the unbounded piece is
    mapped to a bounded panel by inversion (``tail_exponent`` declares the
    power behaviour there).  Compactly supported profiles skip the tail.
    """

    def integrand(r: float) -> float:
        return _TWO_PI * r * radial_integrand(r)

    edges = _panel_edges(profile)
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        total += quad_panel(integrand, a, b, left_exponent=inner_exponent if a == 0.0 else None)
    last = edges[-1]
    if isinstance(profile, SampledProfile) and profile.values[-1] == 0.0:
        return total  # identically zero beyond the last knot
    total += quad_to_infinity(integrand, last, u_exponent=tail_exponent)
    return total


def _closed_burkholder_power(profile: PowerProfile) -> float:
    # On the region where g/r > 1 the radial value of L is g/r + g' - 1 and
    # r * L has antiderivative r g - r^2/2; elsewhere r * L = g g' with
    # antiderivative g^2/2.  The region is (0, r_c) with g(r_c) = r_c.
    crossings = profile.diagonal_crossings()
    if not crossings:
        return 0.0
    r_c = crossings[-1]
    g_c = float(profile.value(r_c))
    return _TWO_PI * (r_c * g_c - 0.5 * r_c * r_c - 0.5 * g_c * g_c)


def burkholder_integral(profile: Profile, method: str = "auto") -> float:
    """Integral of L(df, dfbar) over the plane for a stretch map.

    ``method`` selects the evaluation route: "closed" (power profiles
    only), "quadrature", or "auto" (closed form when available).  Both
    routes integrate 2 pi r L(|df|, |dfbar|) dr; the quadrature route
    evaluates the integrand directly from the profile and is kept
    independent of the closed form.
    """
    if method == "auto":
        method = "closed" if isinstance(profile, PowerProfile) else "quadrature"
    if method == "closed":
        if not isinstance(profile, PowerProfile):
            raise ValueError("closed form is only available for power profiles")
        return _closed_burkholder_power(profile)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")

    def radial_value(r: float) -> float:
        dz, dw = stretch_moduli(profile, r)
        return float(_L_from_moduli(dz, dw))

    # the integrand is bounded near 0 for both families: with alpha < 1 the
    # origin lies in the steep branch where r * L = r g' + g - r -> 0, and
    # with alpha = 1 (or a linear first segment) r * L = g g' is linear
    _, _, b = profile.tail()
    return _radial_quadrature(profile, radial_value, None, 2.0 * b - 1.0)


def _closed_phi_power(profile: PowerProfile, exp: Exponent, swap: bool) -> float:
    c, a, b = profile.c, profile.alpha, profile.beta
    p = exp.p
    # moduli are exact powers of r on each piece; Phi_p is p-homogeneous,
    # so the radial integrand is Phi_p(coefficients) times a power of r
    inner_pair = (0.5 * c * (1.0 + a), 0.5 * c * (1.0 - a))
    outer_pair = (0.5 * c * (1.0 - b), 0.5 * c * (1.0 + b))
    if swap:
        inner_pair = inner_pair[::-1]
        outer_pair = outer_pair[::-1]
    c_in = float(_phi_from_moduli(inner_pair[0], inner_pair[1], exp))
    c_out = float(_phi_from_moduli(outer_pair[0], outer_pair[1], exp))
    den_in = (a - 1.0) * p + 2.0
    den_out = (b + 1.0) * p - 2.0
    return _TWO_PI * (c_in / den_in + c_out / den_out)


def phi_integral(
    profile: Profile,
    p,
    swap: bool = False,
    method: str = "auto",
) -> float:
    """Integral of Phi_p over the plane for a stretch map.

    With ``swap=True`` the two derivative moduli are exchanged, which is
    the value taken by the complex conjugate of the map.  Divergent
    p-energies are rejected.
    """
    exp = Exponent.ensure(p)
    _phi_divergence_check(profile, exp)
    if method == "auto":
        method = "closed" if isinstance(profile, PowerProfile) else "quadrature"
    if method == "closed":
        if not isinstance(profile, PowerProfile):
            raise ValueError("closed form is only available for power profiles")
        return _closed_phi_power(profile, exp, swap)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    return _phi_quadrature(profile, exp, swap, weight=None)


def _phi_quadrature(profile: Profile, exp: Exponent, swap: bool, weight=None) -> float:
    """Quadrature route for the Phi_p integral, with an optional radial weight.

    The weight multiplies the integrand pointwise (used for holomorphic
    composites, where it is an angular mean depending on g(r)); it must be
    bounded so the decay analysis is unchanged.
    """

    def radial_value(r: float) -> float:
        dz, dw = stretch_moduli(profile, r)
        if swap:
            dz, dw = dw, dz
        value = float(_phi_from_moduli(dz, dw, exp))
        if weight is not None:
            value *= weight(r)
        return value

    p = exp.p
    if isinstance(profile, PowerProfile):
        # full integrand ~ r^(1 + (alpha-1) p) near the origin
        e_total = 1.0 + (profile.alpha - 1.0) * p
        inner_exp = e_total if e_total < 0.0 else None
    else:
        inner_exp = None
    _, _, b = profile.tail()
    tail_exp = (b + 1.0) * p - 3.0
    return _radial_quadrature(profile, radial_value, inner_exp, tail_exp)


# ---------------------------------------------------------------------------
# the saturating family z |z|^(-2 a) inside the disk, 1/zbar outside
# ---------------------------------------------------------------------------


def saturation_ratio(p, a: float) -> float:
    """Ratio of the p-th moduli integrals for the map z |z|^(-2a) / 1/zbar.

    Inside the disk |df| = (1 - a) r^(-2a) and |dfbar| = a r^(-2a); outside
    df = 0 and |dfbar| = r^(-2).  The closed-form radial integrals give

        ratio = (1-a)^p / (a^p + (2 - 2 a p) / (2 p - 2)),

    which tends to (p - 1)^p as a -> 1/p.  Requires 0 < a < 1/p.
    """
    exp = Exponent.ensure(p)
    p = exp.p
    if not (0.0 < a < 1.0 / p):
        raise ValueError(f"parameter must lie in (0, 1/p) = (0, {1.0 / p}), got {a}")
    numerator = (1.0 - a) ** p / (2.0 - 2.0 * a * p)
    denominator = a**p / (2.0 - 2.0 * a * p) + 1.0 / (2.0 * p - 2.0)
    return numerator / denominator


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def profile_to_json(profile: Profile) -> dict:
    if isinstance(profile, PowerProfile):
        return {"kind": "power", "c": profile.c, "alpha": profile.alpha, "beta": profile.beta}
    return {
        "kind": "sampled",
        "radii": list(profile.radii),
        "values": list(profile.values),
        "tail_exponent": profile.tail_exponent,
    }


def profile_from_json(record: dict) -> Profile:
    kind = record.get("kind")
    if kind == "power":
        return PowerProfile(record["c"], record["alpha"], record["beta"])
    if kind == "sampled":
        return SampledProfile(
            tuple(record["radii"]), tuple(record["values"]), record["tail_exponent"]
        )
    raise ValueError(f"unknown profile kind {kind!r}")


def save_profile(profile: Profile, path) -> None:
    with open(str(path), "w", encoding="utf-8") as fh:
        json.dump(profile_to_json(profile), fh)


def load_profile(path) -> Profile:
    with open(str(path), "r", encoding="utf-8") as fh:
        return profile_from_json(json.load(fh))
