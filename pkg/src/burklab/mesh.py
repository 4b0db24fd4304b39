"""Piecewise-linear finite elements on the unit torus.

The torus is [0, 1]^2 with opposite edges identified and total measure 1.
For a resolution N >= 2 the nodes sit at (m/N, n/N), 0 <= m, n < N, and the
square cells are cut into 2 N^2 triangles:

    up triangle (m, n):   corners (p_m, p_n), (p_{m+1}, p_n), (p_m, p_{n+1})
    down triangle (m, n): corners (p_m, p_n), (p_{m-1}, p_n), (p_m, p_{n-1})

with indices mod N and p_n the fractional part of n/N.  Every triangle has
area 1/(2 N^2).  A continuous function that is linear on each triangle is
determined by its nodal values, so the space of such functions with complex
values has 2 N^2 real dimensions.  The coefficient layout is fixed once and
for all: row-major over (m, n), real part then imaginary part per node.
This is the layout used by the real-vector view, the JSON export and the
little-endian binary export alike.

On each triangle the interpolant is affine, so its derivatives are constant:

    up (m, n):   f_x = N (f[m+1, n] - f[m, n]),  f_y = N (f[m, n+1] - f[m, n])
    down (m, n): f_x = N (f[m, n] - f[m-1, n]),  f_y = N (f[m, n] - f[m, n-1])

and the complex derivatives are df = (f_x - i f_y)/2, dfbar = (f_x + i f_y)/2.
Per-triangle integration of any function of (df, dfbar) is therefore exact,
and the Jacobian integral sum(area * (|df|^2 - |dfbar|^2)) vanishes for every
periodic nodal vector.

All reductions are plain ``np.sum`` over fixed-shape arrays, so results are
bit-identical across runs and thread counts.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import Exponent, _L_from_moduli, _L_gradient_fields, _phi_from_moduli

__all__ = [
    "GridFunction",
    "Triangle",
    "TriangleDerivatives",
    "energy",
    "energy_gradient",
    "grid_from_bytes",
    "grid_from_json",
    "grid_to_bytes",
    "grid_to_json",
    "load_grid",
    "null_lagrangian",
    "phi_energy",
    "save_grid",
    "triangle_derivatives",
    "triangulate",
]


@dataclass(frozen=True)
class Triangle:
    """One triangle of the periodic triangulation.

    ``sign`` is +1 for up triangles and -1 for down triangles.  Corner
    coordinates are unwrapped (they may leave [0, 1)); corner node indices
    are reduced mod N.
    """

    sign: int
    m: int
    n: int
    grid_n: int

    @property
    def area(self) -> float:
        return 1.0 / (2.0 * self.grid_n**2)

    @property
    def corner_nodes(self) -> tuple[tuple[int, int], ...]:
        m, n, N = self.m, self.n, self.grid_n
        s = self.sign
        return (
            (m % N, n % N),
            ((m + s) % N, n % N),
            (m % N, (n + s) % N),
        )

    @property
    def corners(self) -> tuple[tuple[float, float], ...]:
        m, n, N = self.m, self.n, self.grid_n
        s = self.sign
        return (
            (m / N, n / N),
            ((m + s) / N, n / N),
            (m / N, (n + s) / N),
        )


def triangulate(n: int) -> list[Triangle]:
    """All 2 n^2 triangles of the resolution-n torus mesh."""
    n = int(n)
    if n < 2:
        raise ValueError(f"grid resolution must be at least 2, got {n}")
    tris = [Triangle(+1, m, k, n) for m in range(n) for k in range(n)]
    tris += [Triangle(-1, m, k, n) for m in range(n) for k in range(n)]
    return tris


@dataclass
class GridFunction:
    """Complex nodal values on the N x N periodic grid.

    ``values[m, n]`` is the function value at (m/N, n/N).  The equivalent
    real coefficient vector has length 2 N^2 and the fixed interleaved
    layout described in the module docstring; the round trip through
    :meth:`to_real_vector` and :meth:`from_real_vector` is the identity.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
            raise ValueError(f"values must be square with N >= 2, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite nodal values")
        self.values = np.ascontiguousarray(arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "GridFunction":
        return cls(np.zeros((n, n), dtype=complex))

    @classmethod
    def from_real_vector(cls, x) -> "GridFunction":
        x = np.ascontiguousarray(x, dtype=np.float64)
        n_sq, rem = divmod(x.size, 2)
        n = int(round(np.sqrt(n_sq)))
        if rem or n * n != n_sq:
            raise ValueError(f"coefficient vector length {x.size} is not 2 N^2")
        return cls(x.view(np.complex128).reshape(n, n).copy())

    def to_real_vector(self) -> np.ndarray:
        return self.values.ravel().view(np.float64).copy()

    def copy(self) -> "GridFunction":
        return GridFunction(self.values.copy())


# ---------------------------------------------------------------------------
# derivatives and energies
# ---------------------------------------------------------------------------


def _wirtinger_fields(values: np.ndarray, n: int):
    """Constant (df, dfbar) per triangle, as four (n, n) arrays."""
    fx_up = n * (np.roll(values, -1, axis=0) - values)
    fy_up = n * (np.roll(values, -1, axis=1) - values)
    fx_dn = n * (values - np.roll(values, 1, axis=0))
    fy_dn = n * (values - np.roll(values, 1, axis=1))
    z_up = 0.5 * (fx_up - 1j * fy_up)
    w_up = 0.5 * (fx_up + 1j * fy_up)
    z_dn = 0.5 * (fx_dn - 1j * fy_dn)
    w_dn = 0.5 * (fx_dn + 1j * fy_dn)
    return z_up, w_up, z_dn, w_dn


@dataclass(frozen=True)
class TriangleDerivatives:
    """Per-triangle complex derivatives, exactly 2 n^2 records.

    ``z[0]`` and ``w[0]`` hold df and dfbar on the up triangles, indexed
    [m, n]; ``z[1]`` and ``w[1]`` the down triangles.  Areas are all equal
    and sum to 1.
    """

    n: int
    z: np.ndarray
    w: np.ndarray

    @property
    def area(self) -> float:
        return 1.0 / (2.0 * self.n**2)

    def __len__(self) -> int:
        return 2 * self.n**2

    def records(self) -> Iterator[tuple[int, int, int, complex, complex, float]]:
        """Yield (sign, m, n, df, dfbar, area) for every triangle."""
        area = self.area
        for idx, sign in ((0, +1), (1, -1)):
            for m in range(self.n):
                for k in range(self.n):
                    yield sign, m, k, complex(self.z[idx, m, k]), complex(self.w[idx, m, k]), area


def triangle_derivatives(f: GridFunction) -> TriangleDerivatives:
    """Exact per-triangle (df, dfbar) of the piecewise-linear interpolant."""
    z_up, w_up, z_dn, w_dn = _wirtinger_fields(f.values, f.n)
    return TriangleDerivatives(
        n=f.n,
        z=np.stack([z_up, z_dn]),
        w=np.stack([w_up, w_dn]),
    )


def _energy_values(values: np.ndarray, n: int) -> float:
    z_up, w_up, z_dn, w_dn = _wirtinger_fields(values, n)
    area = 1.0 / (2.0 * n * n)
    total = np.sum(_L_from_moduli(np.abs(z_up), np.abs(w_up)))
    total += np.sum(_L_from_moduli(np.abs(z_dn), np.abs(w_dn)))
    return float(area * total)


def energy(f: GridFunction) -> float:
    """Integral of L(df, dfbar) over the torus; exact per-triangle sums."""
    return _energy_values(f.values, f.n)


def null_lagrangian(f: GridFunction) -> float:
    """Integral of the Jacobian |df|^2 - |dfbar|^2; zero for every f.

    The integrand is the Jacobian determinant of the interpolant and its
    integral over the torus telescopes to zero in exact arithmetic, for
    every periodic nodal vector.  The returned float is therefore pure
    rounding noise.
    """
    z_up, w_up, z_dn, w_dn = _wirtinger_fields(f.values, f.n)
    area = 1.0 / (2.0 * f.n**2)
    total = np.sum(np.abs(z_up) ** 2 - np.abs(w_up) ** 2)
    total += np.sum(np.abs(z_dn) ** 2 - np.abs(w_dn) ** 2)
    return float(area * total)


def phi_energy(f: GridFunction, p) -> float:
    """Integral of Phi_p(df, dfbar) over the torus.

    At p = 2 this coincides with :func:`null_lagrangian`.
    """
    exp = Exponent.ensure(p)
    z_up, w_up, z_dn, w_dn = _wirtinger_fields(f.values, f.n)
    area = 1.0 / (2.0 * f.n**2)
    total = np.sum(_phi_from_moduli(np.abs(z_up), np.abs(w_up), exp))
    total += np.sum(_phi_from_moduli(np.abs(z_dn), np.abs(w_dn), exp))
    return float(area * total)


def _energy_gradient_values(values: np.ndarray, n: int) -> np.ndarray:
    """Gradient of the energy wrt nodal values, complex-packed (n, n).

    Real part is the derivative wrt Re f[m, n], imaginary part wrt
    Im f[m, n].  Chain rule through the per-triangle linear maps: with
    gz = dL/d(df) and gw = dL/d(dfbar) complex-packed, the derivative wrt
    f_x is (gz + gw)/2 and wrt f_y is i (gz - gw)/2, and each nodal value
    receives the six contributions of the triangles containing it.
    """
    z_up, w_up, z_dn, w_dn = _wirtinger_fields(values, n)
    gz_up, gw_up = _L_gradient_fields(z_up, w_up)
    gz_dn, gw_dn = _L_gradient_fields(z_dn, w_dn)

    gfx_up = 0.5 * (gz_up + gw_up)
    gfy_up = 0.5j * (gz_up - gw_up)
    gfx_dn = 0.5 * (gz_dn + gw_dn)
    gfy_dn = 0.5j * (gz_dn - gw_dn)

    coef = 1.0 / (2.0 * n)  # area * N
    grad = np.roll(gfx_up, 1, axis=0) + np.roll(gfy_up, 1, axis=1) - gfx_up - gfy_up
    grad += gfx_dn + gfy_dn - np.roll(gfx_dn, -1, axis=0) - np.roll(gfy_dn, -1, axis=1)
    return coef * grad


def energy_gradient(f: GridFunction) -> np.ndarray:
    """Exact gradient of :func:`energy` in the real coefficient layout.

    Uses the same branch convention as the scalar gradient (quadratic
    branch on the closed region |df| + |dfbar| <= 1).
    """
    grad = _energy_gradient_values(f.values, f.n)
    return np.ascontiguousarray(grad).ravel().view(np.float64).copy()


# ---------------------------------------------------------------------------
# serialization: JSON and little-endian binary, same flat record
# ---------------------------------------------------------------------------

_BINARY_HEADER = struct.Struct("<Q")


def grid_to_json(f: GridFunction) -> dict:
    """Flat record {n, coefficients}: N followed by the 2 N^2 coefficients."""
    return {"n": f.n, "coefficients": f.to_real_vector().tolist()}


def grid_from_json(record: dict) -> GridFunction:
    n = int(record["n"])
    coeffs = np.asarray(record["coefficients"], dtype=np.float64)
    if coeffs.size != 2 * n * n:
        raise ValueError(f"expected {2 * n * n} coefficients for n={n}, got {coeffs.size}")
    return GridFunction.from_real_vector(coeffs)


def grid_to_bytes(f: GridFunction) -> bytes:
    """Little-endian binary: uint64 N, then 2 N^2 float64 coefficients."""
    payload = f.to_real_vector().astype("<f8").tobytes()
    return _BINARY_HEADER.pack(f.n) + payload


def grid_from_bytes(blob: bytes) -> GridFunction:
    (n,) = _BINARY_HEADER.unpack_from(blob)
    coeffs = np.frombuffer(blob, dtype="<f8", offset=_BINARY_HEADER.size)
    if coeffs.size != 2 * n * n:
        raise ValueError(f"expected {2 * n * n} coefficients for n={n}, got {coeffs.size}")
    return GridFunction.from_real_vector(coeffs.astype(np.float64))


def save_grid(f: GridFunction, path, fmt: str = "json") -> None:
    path = str(path)
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(grid_to_json(f), fh)
    elif fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(grid_to_bytes(f))
    else:
        raise ValueError(f"unknown grid format {fmt!r}")


def load_grid(path, fmt: str = "json") -> GridFunction:
    path = str(path)
    if fmt == "json":
        with open(path, "r", encoding="utf-8") as fh:
            return grid_from_json(json.load(fh))
    if fmt == "binary":
        with open(path, "rb") as fh:
            return grid_from_bytes(fh.read())
    raise ValueError(f"unknown grid format {fmt!r}")
