"""Scalar building blocks: the Burkholder integrand and its relatives.

The central object is the piecewise function

    L(z, w) = |z|^2 - |w|^2   if |z| + |w| <= 1,
            = 2|z| - 1        if |z| + |w| > 1,

defined for complex z, w.  Alongside it live

    M(z, w)     = L(z, w) - (|z|^2 - |w|^2)
                = (|w|^2 - (|z| - 1)^2) * 1[|z| + |w| > 1],
    Phi_p(z, w) = alpha_p * ((p* - 1)|z| - |w|) * (|z| + |w|)^(p - 1),

where p* = max(p, p/(p-1)) and alpha_p = p (1 - 1/p*)^(p-1).  All three
depend on (z, w) only through |z| and |w|, so they are invariant under
independent rotations of the two arguments, and Phi_p is p-homogeneous:
Phi_p(c z, c w) = |c|^p Phi_p(z, w) for complex c.

On the matrix side, a real 2x2 matrix A = [[a, b], [c, d]] splits into the
conformal and anticonformal parts of the linear map it represents,

    z1 = ((a + d) + i(c - b)) / 2,    z2 = ((a - d) + i(c + b)) / 2.

When A is the gradient matrix of a map f: C -> C in the usual real
representation, (z1, z2) are the complex derivatives (df/dz, df/dzbar).
The matrix integrand is L composed with this splitting; it equals det A on
the region where sqrt(|A|^2 + 2 det A) + sqrt(|A|^2 - 2 det A) <= 2 and
sqrt(|A|^2 + 2 det A) - 1 outside of it.

Every function accepts scalars or numpy arrays and broadcasts; scalar
inputs give 0-d numpy scalars back.  Non-finite inputs are rejected.
All functions here are pure and safe to call from any number of threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Exponent",
    "Mat2",
    "burkholder",
    "burkholder_excess",
    "burkholder_gradient",
    "burkholder_matrix",
    "burkholder_matrix_via_det",
    "burkholder_phi",
    "wirtinger_pair",
]


def _check_finite(*arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite input")


@dataclass(frozen=True)
class Exponent:
    """An integrability exponent p in (1, inf) with its derived constants.

    Attributes
    ----------
    p : float
        The exponent itself, strictly greater than 1.
    conjugate : float
        p' with 1/p + 1/p' = 1.
    p_star : float
        max(p, p'); always >= 2 and symmetric under p <-> p'.
    alpha : float
        The normalizing constant p (1 - 1/p*)^(p-1) of Phi_p.
    """

    p: float

    def __post_init__(self) -> None:
        p = float(self.p)
        if not np.isfinite(p) or p <= 1.0:
            raise ValueError(f"exponent must satisfy p > 1, got {self.p!r}")
        object.__setattr__(self, "p", p)

    @property
    def conjugate(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def p_star(self) -> float:
        return max(self.p, self.conjugate)

    @property
    def alpha(self) -> float:
        return self.p * (1.0 - 1.0 / self.p_star) ** (self.p - 1.0)

    @classmethod
    def ensure(cls, p: "Exponent | float") -> "Exponent":
        return p if isinstance(p, Exponent) else cls(float(p))


@dataclass(frozen=True)
class Mat2:
    """A real 2x2 matrix [[a, b], [c, d]] with finite entries."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self) -> None:
        _check_finite([self.a, self.b, self.c, self.d])

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def norm_sq(self) -> float:
        return self.a**2 + self.b**2 + self.c**2 + self.d**2

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "Mat2":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {arr.shape}")
        return cls(arr[0, 0], arr[0, 1], arr[1, 0], arr[1, 1])


# ---------------------------------------------------------------------------
# moduli-level formulas, shared by the scalar API and the mesh assembly
# ---------------------------------------------------------------------------


def _L_from_moduli(az, aw):
    return np.where(az + aw <= 1.0, az * az - aw * aw, 2.0 * az - 1.0)


def _M_from_moduli(az, aw):
    return np.where(az + aw <= 1.0, 0.0, aw * aw - (az - 1.0) ** 2)


def _phi_from_moduli(az, aw, exp: Exponent):
    factor = (exp.p_star - 1.0) * az - aw
    return exp.alpha * factor * (az + aw) ** (exp.p - 1.0)


def _L_gradient_fields(z, w):
    """Complex-packed gradient of L: (gz, gw) with gz = dL/dRe z + i dL/dIm z.

    The closed region |z| + |w| <= 1 uses the quadratic branch (convention
    on the kink set), and the subgradient 0 is selected at z = 0 outside.
    """
    az = np.abs(z)
    aw = np.abs(w)
    inner = az + aw <= 1.0
    safe = np.where(az > 0.0, az, 1.0)
    gz = np.where(inner, 2.0 * z, np.where(az > 0.0, 2.0 * z / safe, 0.0 + 0.0j))
    gw = np.where(inner, -2.0 * w, 0.0 + 0.0j)
    return gz, gw


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def burkholder(z, w):
    """Evaluate L(z, w).

    Continuous across the interface |z| + |w| = 1, where both branches give
    the same value.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    _check_finite(z, w)
    return _L_from_moduli(np.abs(z), np.abs(w))[()]


def burkholder_excess(z, w):
    """Evaluate M(z, w) = L(z, w) - (|z|^2 - |w|^2).

    Vanishes on |z| + |w| <= 1 and equals |w|^2 - (|z| - 1)^2 outside.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    _check_finite(z, w)
    return _M_from_moduli(np.abs(z), np.abs(w))[()]


def burkholder_phi(z, w, p):
    """Evaluate Phi_p(z, w) = alpha_p ((p* - 1)|z| - |w|) (|z| + |w|)^(p-1).

    At p = 2 the formula collapses to |z|^2 - |w|^2.  ``p`` may be a float
    or an :class:`Exponent`.
    """
    exp = Exponent.ensure(p)
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    _check_finite(z, w)
    return _phi_from_moduli(np.abs(z), np.abs(w), exp)[()]


def burkholder_gradient(z, w):
    """Gradient of L with respect to (Re z, Im z, Re w, Im w).

    Returns an array whose last axis has length 4.  The quadratic branch
    gives (2 Re z, 2 Im z, -2 Re w, -2 Im w); the outer branch gives
    (2 Re z/|z|, 2 Im z/|z|, 0, 0).  On the interface |z| + |w| = 1 the
    quadratic branch is used, and at z = 0 in the outer region the z-part
    is set to 0.  Away from those measure-zero sets L is differentiable and
    this is its true gradient.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    _check_finite(z, w)
    gz, gw = _L_gradient_fields(z, w)
    return np.stack(
        [np.real(gz), np.imag(gz), np.real(gw), np.imag(gw)], axis=-1
    )


def _matrix_entries(mat):
    if isinstance(mat, Mat2):
        mat = mat.as_array()
    arr = np.asarray(mat, dtype=float)
    if arr.ndim < 2 or arr.shape[-2:] != (2, 2):
        raise ValueError(f"expected shape (..., 2, 2), got {arr.shape}")
    _check_finite(arr)
    return arr[..., 0, 0], arr[..., 0, 1], arr[..., 1, 0], arr[..., 1, 1]


def wirtinger_pair(mat):
    """Split a real 2x2 matrix into its conformal/anticonformal parts.

    Returns (z1, z2) with z1 = ((a+d) + i(c-b))/2 and z2 = ((a-d) + i(c+b))/2.
    For the gradient matrix of f: C -> C this is (df/dz, df/dzbar).  A rank
    one matrix always yields |z1| = |z2|.  Accepts a :class:`Mat2` or any
    array of shape (..., 2, 2) and broadcasts.
    """
    a, b, c, d = _matrix_entries(mat)
    z1 = 0.5 * ((a + d) + 1j * (c - b))
    z2 = 0.5 * ((a - d) + 1j * (c + b))
    return z1[()], z2[()]


def burkholder_matrix(mat):
    """Evaluate L on the conformal/anticonformal split of a 2x2 matrix."""
    z1, z2 = wirtinger_pair(mat)
    return _L_from_moduli(np.abs(z1), np.abs(z2))[()]


def burkholder_matrix_via_det(mat):
    """Same value as :func:`burkholder_matrix`, from determinant data only.

    Uses the identities 2|z1| = sqrt(|A|^2 + 2 det A) and
    2|z2| = sqrt(|A|^2 - 2 det A): the value is det A when the two square
    roots sum to at most 2, and sqrt(|A|^2 + 2 det A) - 1 otherwise.  Kept
    as an independent route so the two formulas can be checked against each
    other.
    """
    a, b, c, d = _matrix_entries(mat)
    det = a * d - b * c
    norm_sq = a * a + b * b + c * c + d * d
    # clip tiny negative arguments produced by roundoff when |A|^2 ~ 2|det A|
    plus = np.sqrt(np.maximum(norm_sq + 2.0 * det, 0.0))
    minus = np.sqrt(np.maximum(norm_sq - 2.0 * det, 0.0))
    return np.where(plus + minus <= 2.0, det, plus - 1.0)[()]
