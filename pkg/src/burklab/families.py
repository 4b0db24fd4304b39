"""Integral identities, the sharp upper bound, rank-one convexity probes,
and explicit families glued across the unit circle.

Dilation identities.  Averaging L and M over dilations ties them to Phi_p:

    integral_0^inf t^(p-1) L(z/t, w/t) dt = Phi_p(z, w) / (p (2-p) alpha_p / 2)
        for 1 < p < 2,
    integral_0^inf t^(p-1) M(w/t, z/t) dt = Phi_p(z, w) / (p (p-1) (p-2) alpha_p / 2)
        for 2 < p < inf

(note the swapped arguments of M).  The left sides are evaluated here by
adaptive quadrature with the branch radius t = |z| + |w| as a panel edge,
the right sides in closed form, so each call cross-checks the identity.

Rank-one convexity.  Along any line A + t B with rank B = 1 the matrix
integrand is piecewise {affine, 2|z1 + t w1| - 1}, hence convex.  The probe
draws random (A, B), samples the line on a symmetric grid, checks midpoint
convexity of the direct evaluation and compares it against the piecewise
closed form.  B is built as an outer product of vectors whose components
are rounded to 26 significand bits; the two cross products of such a matrix
round identically, so its floating-point determinant is exactly zero and
the affine branch carries no spurious quadratic term.

Glued families.  Three constructions on the plane, each reflected through
the unit circle where applicable, with their plane integrals reduced to
polar quadrature:

* power blends a z^k + b zbar^k inside, a zbar^(-k) + b z^(-k) outside
  (closed-form radial piecing for the L integral);
* harmonic inside/outside pairs g(z) + conj(h(z)) and the circle
  reflection f(1/zbar), for the Phi_p integral with p > 2, via circle
  means of |g'| (|g'|+|h'|)^(p-1) and |h'| (|g'|+|h'|)^(p-1);
* holomorphic composites F(f1) of a stretch map f1, using the chain rule
  d(F o f1) = F'(f1) df1 and p-homogeneity of Phi_p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from ._quadrature import quad_panel, quad_to_infinity
from .core import (
    Exponent,
    _phi_from_moduli,
    burkholder,
    burkholder_excess,
    burkholder_matrix,
    burkholder_phi,
    wirtinger_pair,
)
from .radial import PowerProfile, SampledProfile, _phi_quadrature, _phi_divergence_check

__all__ = [
    "HarmonicReflectionMap",
    "PowerReflectionMap",
    "RankOneProbe",
    "RankOneReport",
    "StretchCompositeMap",
    "circle_means",
    "dilation_identity_L",
    "dilation_identity_M",
    "harmonic_reflection_integral",
    "holomorphic_composite_integral",
    "phi_upper_bound_gap",
    "power_reflection_integral",
    "random_rank_one_probe",
    "rank_one_convexity_report",
]

_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# dilation identities and the upper bound
# ---------------------------------------------------------------------------


def dilation_identity_L(z: complex, w: complex, p: float) -> tuple[float, float]:
    """Both sides of the dilation identity for L, valid for 1 < p < 2.

    Returns (lhs, rhs) where lhs is the quadrature value of
    integral t^(p-1) L(z/t, w/t) dt and rhs the closed form
    Phi_p(z, w) / (p (2-p) alpha_p / 2).  The two must agree.
    """
    p = float(p)
    if not 1.0 < p < 2.0:
        raise ValueError(f"the L identity needs 1 < p < 2, got {p}")
    z, w = complex(z), complex(w)
    s = abs(z) + abs(w)
    if s == 0.0:
        raise ValueError("(z, w) must not both vanish")

    def integrand(t: float) -> float:
        return t ** (p - 1.0) * float(burkholder(z / t, w / t))

    # outer branch of L on t < s makes the integrand ~ t^(p-2) at 0;
    # beyond s it decays like t^(p-3)
    lhs = quad_panel(integrand, 0.0, s, left_exponent=p - 2.0)
    lhs += quad_to_infinity(integrand, s, u_exponent=1.0 - p)

    exp = Exponent(p)
    rhs = float(burkholder_phi(z, w, exp)) / (0.5 * p * (2.0 - p) * exp.alpha)
    return lhs, rhs


def dilation_identity_M(z: complex, w: complex, p: float) -> tuple[float, float]:
    """Both sides of the dilation identity for M, valid for 2 < p < inf.

    The integrand is t^(p-1) M(w/t, z/t), with the arguments swapped; it
    vanishes identically for t >= |z| + |w|, so the integral is over a
    bounded interval.
    """
    p = float(p)
    if not p > 2.0:
        raise ValueError(f"the M identity needs p > 2, got {p}")
    z, w = complex(z), complex(w)
    s = abs(z) + abs(w)
    if s == 0.0:
        raise ValueError("(z, w) must not both vanish")

    def integrand(t: float) -> float:
        return t ** (p - 1.0) * float(burkholder_excess(w / t, z / t))

    exponent = p - 3.0 if p < 3.0 else None
    lhs = quad_panel(integrand, 0.0, s, left_exponent=exponent)

    exp = Exponent(p)
    rhs = float(burkholder_phi(z, w, exp)) / (0.5 * p * (p - 1.0) * (p - 2.0) * exp.alpha)
    return lhs, rhs


def phi_upper_bound_gap(z, w, p):
    """(p* - 1)^p |z|^p - |w|^p - Phi_p(z, w); nonnegative everywhere.

    Identically zero at p = 2.  Broadcasts over arrays.
    """
    exp = Exponent.ensure(p)
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    az, aw = np.abs(z), np.abs(w)
    bound = (exp.p_star - 1.0) ** exp.p * az**exp.p - aw**exp.p
    return (bound - _phi_from_moduli(az, aw, exp))[()]


# ---------------------------------------------------------------------------
# rank-one convexity of the matrix integrand
# ---------------------------------------------------------------------------


def _quantize(x, bits: int = 26):
    """Round floats to ``bits`` significand bits (exactly representable)."""
    mantissa, exponent = np.frexp(np.asarray(x, dtype=np.float64))
    scale = float(1 << bits)
    return np.ldexp(np.round(mantissa * scale) / scale, exponent)


@dataclass(frozen=True)
class RankOneProbe:
    """A base matrix, a rank-one direction, and the sampling grid.

    ``b_mat`` must be a nonzero matrix with exactly vanishing float
    determinant, so the affine branch of the line evaluation is exact.
    """

    a_mat: np.ndarray
    b_mat: np.ndarray
    t_grid: np.ndarray = field(
        default_factory=lambda: np.linspace(-5.0, 5.0, 101)
    )

    def __post_init__(self) -> None:
        a = np.asarray(self.a_mat, dtype=np.float64)
        b = np.asarray(self.b_mat, dtype=np.float64)
        t = np.asarray(self.t_grid, dtype=np.float64)
        if a.shape != (2, 2) or b.shape != (2, 2):
            raise ValueError("probe matrices must be 2x2")
        if b[0, 0] * b[1, 1] != b[0, 1] * b[1, 0]:
            raise ValueError("direction matrix must have exactly zero determinant")
        if not np.any(b):
            raise ValueError("direction matrix must be nonzero")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("t_grid must be strictly increasing")
        object.__setattr__(self, "a_mat", a)
        object.__setattr__(self, "b_mat", b)
        object.__setattr__(self, "t_grid", t)


def random_rank_one_probe(
    rng: np.random.Generator,
    scale_low: float = 1e-2,
    scale_high: float = 1e2,
) -> RankOneProbe:
    """Draw A with standard normal entries and B = (s u) v^T.

    u and v are uniform on the unit circle and s is log-uniform on
    [scale_low, scale_high]; the factors are quantized to 26 significand
    bits so every entry product u_i v_j is exact and det B is exactly 0 in
    floating point.
    """
    a = rng.standard_normal((2, 2))
    phi_u, phi_v = rng.uniform(0.0, _TWO_PI, 2)
    s = math.exp(rng.uniform(math.log(scale_low), math.log(scale_high)))
    left = _quantize(s * np.array([math.cos(phi_u), math.sin(phi_u)]))
    right = _quantize(np.array([math.cos(phi_v), math.sin(phi_v)]))
    return RankOneProbe(a_mat=a, b_mat=np.outer(left, right))


def _even_pair_indices(n_points: int):
    i, j = np.triu_indices(n_points, k=2)
    keep = (i + j) % 2 == 0
    return i[keep], j[keep]


@dataclass
class RankOneReport:
    """Aggregate of a batch of line-convexity probes.

    ``max_midpoint_excess`` is the largest value of
    g((t1+t2)/2) - (g(t1)+g(t2))/2 seen (convexity keeps it <= 0 up to
    rounding); ``max_formula_gap`` the largest |direct - closed form|;
    ``violations`` lists (A, B, t1, t2) for every midpoint failure beyond
    the tolerance.
    """

    trials: int
    tolerance: float
    max_midpoint_excess: float
    max_formula_gap: float
    violations: list[tuple[np.ndarray, np.ndarray, float, float]]


def rank_one_convexity_report(
    trials: int,
    seed: int,
    tolerance: float = 1e-12,
    t_grid: np.ndarray | None = None,
) -> RankOneReport:
    """Probe convexity of the matrix integrand along random rank-one lines.

    For each trial, the direct evaluation g(t) = L1(A + t B) on the grid is
    checked for midpoint convexity over all grid pairs with an on-grid
    midpoint, and compared against the piecewise closed form: affine
    a + b t where |z1 + t w1| + |z2 + t w2| < 1 (a, b from the split of A
    and B), and 2 |z1 + t w1| - 1 elsewhere.
    """
    if int(trials) < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng([int(seed), 0x51A])
    grid = np.linspace(-5.0, 5.0, 101) if t_grid is None else np.asarray(t_grid)
    i_idx, j_idx = _even_pair_indices(grid.size)
    mid_idx = (i_idx + j_idx) // 2

    worst_mid = -np.inf
    worst_gap = 0.0
    violations: list[tuple[np.ndarray, np.ndarray, float, float]] = []

    for _ in range(int(trials)):
        probe = random_rank_one_probe(rng)
        a_mat, b_mat, ts = probe.a_mat, probe.b_mat, probe.t_grid if t_grid is None else grid

        mats = a_mat[None, :, :] + ts[:, None, None] * b_mat[None, :, :]
        direct = np.asarray(burkholder_matrix(mats), dtype=float)

        z1, z2 = wirtinger_pair(a_mat)
        w1, w2 = wirtinger_pair(b_mat)
        z1t = z1 + ts * w1
        z2t = z2 + ts * w2
        affine_a = abs(z1) ** 2 - abs(z2) ** 2
        affine_b = 2.0 * (z1 * np.conj(w1) - z2 * np.conj(w2)).real
        inside = np.abs(z1t) + np.abs(z2t) < 1.0
        closed = np.where(inside, affine_a + affine_b * ts, 2.0 * np.abs(z1t) - 1.0)

        worst_gap = max(worst_gap, float(np.max(np.abs(direct - closed))))
        excess = direct[mid_idx] - 0.5 * (direct[i_idx] + direct[j_idx])
        trial_worst = float(np.max(excess))
        worst_mid = max(worst_mid, trial_worst)
        if trial_worst > tolerance:
            k = int(np.argmax(excess))
            violations.append((a_mat, b_mat, float(ts[i_idx[k]]), float(ts[j_idx[k]])))

    return RankOneReport(
        trials=int(trials),
        tolerance=float(tolerance),
        max_midpoint_excess=float(worst_mid),
        max_formula_gap=float(worst_gap),
        violations=violations,
    )


# ---------------------------------------------------------------------------
# the power blend family, reflected through the unit circle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerReflectionMap:
    """f = a z^k + b zbar^k inside the unit disk, f(1/zbar) outside."""

    a: complex
    b: complex
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.a == 0 and self.b == 0:
            raise ValueError("(a, b) must not both vanish")

    def inside(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.a * z**self.k + self.b * np.conj(z) ** self.k)[()]

    def outside(self, z):
        z = np.asarray(z, dtype=complex)
        return self.inside(1.0 / np.conj(z))

    def boundary_gap(self, samples: int = 360) -> float:
        theta = np.linspace(0.0, _TWO_PI, samples, endpoint=False)
        ring = np.exp(1j * theta)
        return float(np.max(np.abs(self.inside(ring) - self.outside(ring))))


def power_reflection_integral(a: complex, b: complex, k: int) -> float:
    """Plane integral of L(df, dfbar) for the power blend map, closed form.

    Inside the disk |df| = |a| k r^(k-1) and |dfbar| = |b| k r^(k-1);
    outside |df| = |b| k r^(-k-1) and |dfbar| = |a| k r^(-k-1).  The
    radial integrand switches branch where the sum of moduli crosses 1,
    and every piece has an elementary antiderivative.
    """
    fam = PowerReflectionMap(complex(a), complex(b), int(k))
    a_mod, b_mod, k = abs(fam.a), abs(fam.b), fam.k
    a1, b1 = a_mod * k, b_mod * k  # inner moduli coefficients of r^(k-1)
    a2, b2 = b_mod * k, a_mod * k  # outer moduli coefficients of r^(-k-1)
    s_tot = a1 + b1

    def inner_quad_piece(r_lo: float, r_hi: float) -> float:
        # antiderivative of 2 pi r (a1^2 - b1^2) r^(2k-2)
        prim = lambda r: math.pi * (a1**2 - b1**2) * r ** (2 * k) / k
        return prim(r_hi) - prim(r_lo)

    def inner_steep_piece(r_lo: float, r_hi: float) -> float:
        # antiderivative of 2 pi (2 a1 r^k - r)
        prim = lambda r: 4.0 * math.pi * a1 * r ** (k + 1) / (k + 1) - math.pi * r * r
        return prim(r_hi) - prim(r_lo)

    def outer_quad_piece(r_lo: float, r_hi: float) -> float:
        # antiderivative of 2 pi r (a2^2 - b2^2) r^(-2k-2); vanishes at infinity
        prim = lambda r: -math.pi * (a2**2 - b2**2) * r ** (-2 * k) / k
        top = 0.0 if math.isinf(r_hi) else prim(r_hi)
        return top - prim(r_lo)

    def outer_steep_piece(r_lo: float, r_hi: float) -> float:
        # antiderivative of 2 pi (2 a2 r^(-k) - r)
        if k == 1:
            prim = lambda r: 4.0 * math.pi * a2 * math.log(r) - math.pi * r * r
        else:
            prim = lambda r: 4.0 * math.pi * a2 * r ** (1 - k) / (1 - k) - math.pi * r * r
        return prim(r_hi) - prim(r_lo)

    total = 0.0
    # inside: the moduli sum s_tot r^(k-1) is constant for k = 1 and
    # increasing otherwise
    if k == 1:
        total += inner_steep_piece(0.0, 1.0) if s_tot > 1.0 else inner_quad_piece(0.0, 1.0)
    else:
        if s_tot > 1.0:
            r_c = s_tot ** (-1.0 / (k - 1.0))
            total += inner_quad_piece(0.0, r_c) + inner_steep_piece(r_c, 1.0)
        else:
            total += inner_quad_piece(0.0, 1.0)
    # outside: the moduli sum s_tot r^(-k-1) decreases from s_tot
    if s_tot > 1.0:
        r_c = s_tot ** (1.0 / (k + 1.0))
        total += outer_steep_piece(1.0, r_c) + outer_quad_piece(r_c, math.inf)
    else:
        total += outer_quad_piece(1.0, math.inf)
    return total


# ---------------------------------------------------------------------------
# harmonic inside/outside pairs glued by circle reflection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HarmonicReflectionMap:
    """f = g(z) + conj(h(z)) inside the unit disk, f(1/zbar) outside.

    ``g_coeffs`` and ``h_coeffs`` are polynomial coefficients in ascending
    order.  The map is harmonic off the unit circle and continuous across
    it (both pieces agree there by construction).
    """

    g_coeffs: tuple[complex, ...]
    h_coeffs: tuple[complex, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "g_coeffs", tuple(complex(c) for c in self.g_coeffs))
        object.__setattr__(self, "h_coeffs", tuple(complex(c) for c in self.h_coeffs))

    def inside(self, z):
        z = np.asarray(z, dtype=complex)
        g = npoly.polyval(z, self.g_coeffs) if self.g_coeffs else 0.0
        h = npoly.polyval(z, self.h_coeffs) if self.h_coeffs else 0.0
        return (g + np.conj(h))[()]

    def outside(self, z):
        z = np.asarray(z, dtype=complex)
        return self.inside(1.0 / np.conj(z))

    def boundary_gap(self, samples: int = 360) -> float:
        theta = np.linspace(0.0, _TWO_PI, samples, endpoint=False)
        ring = np.exp(1j * theta)
        return float(np.max(np.abs(self.inside(ring) - self.outside(ring))))


def circle_means(g_coeffs, h_coeffs, p, radii, n_theta: int = 512):
    """Circle means of |g'| (|g'|+|h'|)^(p-1) and |h'| (|g'|+|h'|)^(p-1).

    Both integrands are moduli of functions with subharmonic logarithm, so
    the means are nondecreasing in the radius.  Trapezoidal averaging over
    equispaced angles is spectrally accurate for these smooth periodic
    functions.
    """
    exp = Exponent.ensure(p)
    gp = npoly.polyder(np.asarray(g_coeffs, dtype=complex)) if len(g_coeffs) > 1 else np.zeros(1, complex)
    hp = npoly.polyder(np.asarray(h_coeffs, dtype=complex)) if len(h_coeffs) > 1 else np.zeros(1, complex)
    theta = np.arange(n_theta) * (_TWO_PI / n_theta)
    ring = np.exp(1j * theta)
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    first = np.empty_like(radii)
    second = np.empty_like(radii)
    for idx, r in enumerate(radii):
        pts = r * ring
        g_mod = np.abs(npoly.polyval(pts, gp))
        h_mod = np.abs(npoly.polyval(pts, hp))
        base = (g_mod + h_mod) ** (exp.p - 1.0)
        first[idx] = np.mean(g_mod * base)
        second[idx] = np.mean(h_mod * base)
    return first, second


def harmonic_reflection_integral(g_coeffs, h_coeffs, p, n_theta: int = 512) -> float:
    """Plane integral of Phi_p for the harmonic reflection map, p > 2.

    Substituting the reflection into the outer integral reduces everything
    to the unit disk:

        integral = alpha_p * 2 pi * integral_0^1 [ ((p-1) - r^(2p-4)) I1(r)
                   + ((p-1) r^(2p-4) - 1) I2(r) ] r dr

    with I1, I2 the circle means above.
    """
    exp = Exponent.ensure(p)
    p = exp.p
    if not p > 2.0:
        raise ValueError(f"the harmonic family evaluation needs p > 2, got {p}")

    def integrand(r: float) -> float:
        first, second = circle_means(g_coeffs, h_coeffs, exp, r, n_theta)
        weight = r ** (2.0 * p - 4.0)
        value = ((p - 1.0) - weight) * first[0] + ((p - 1.0) * weight - 1.0) * second[0]
        return value * r

    return exp.alpha * _TWO_PI * quad_panel(integrand, 0.0, 1.0)


# ---------------------------------------------------------------------------
# holomorphic composites of stretch maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StretchCompositeMap:
    """F(f1) for a polynomial F and stretch map f1, optionally conjugated."""

    f_coeffs: tuple[complex, ...]
    profile: PowerProfile | SampledProfile
    conjugate: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "f_coeffs", tuple(complex(c) for c in self.f_coeffs))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        with np.errstate(invalid="ignore", divide="ignore"):
            phase = np.where(r > 0.0, z / np.where(r > 0.0, r, 1.0), 0.0)
        f1 = self.profile.value(r) * phase
        out = npoly.polyval(f1, self.f_coeffs)
        return (np.conj(out) if self.conjugate else out)[()]


def holomorphic_composite_integral(
    f_coeffs,
    profile: PowerProfile | SampledProfile,
    p,
    conjugate: bool = False,
    n_theta: int = 512,
) -> float:
    """Plane integral of Phi_p for F composed with a stretch map.

    The chain rule gives d(F o f1) = F'(f1) df1 and dbar(F o f1) =
    F'(f1) dbarf1, so by p-homogeneity the integrand is |F'(f1)|^p times
    the stretch integrand.  |F'(f1)| depends on the angle through
    e^{i theta} only, and its angular p-th mean is folded into the radial
    quadrature as a bounded weight.  Conjugating the map swaps the two
    moduli.
    """
    exp = Exponent.ensure(p)
    _phi_divergence_check(profile, exp)
    coeffs = np.asarray(f_coeffs, dtype=complex)
    deriv = npoly.polyder(coeffs) if coeffs.size > 1 else np.zeros(1, dtype=complex)
    theta = np.arange(n_theta) * (_TWO_PI / n_theta)
    ring = np.exp(1j * theta)

    def weight(r: float) -> float:
        values = npoly.polyval(float(profile.value(r)) * ring, deriv)
        return float(np.mean(np.abs(values) ** exp.p))

    return _phi_quadrature(profile, exp, swap=bool(conjugate), weight=weight)
