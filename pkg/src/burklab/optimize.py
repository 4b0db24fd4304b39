"""Nonlinear conjugate-gradient minimization and the torus experiment.

The minimizer is the classic Polak-Ribiere scheme with a nonnegativity
clamp on the momentum coefficient (the direction is reset to steepest
descent whenever the coefficient would go negative) and a periodic hard
restart.  The line search is derivative-free: an expanding golden-ratio
bracket followed by Brent refinement (golden section plus parabolic
interpolation).  That combination is deliberately robust to objectives
that are Lipschitz but not continuously differentiable, which is exactly
the regime of the torus energy with its branch interface.

Determinism contract: every start of :func:`multistart` draws its initial
point from a dedicated generator seeded from (master_seed, start index),
runs independently, and results are assembled in start order.  Outputs are
bit-identical for any thread count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .mesh import GridFunction, _energy_gradient_values, _energy_values

__all__ = [
    "CgOptions",
    "GRADIENT_SMALL",
    "FUNCTION_STALLED",
    "ITERATION_CAP",
    "MinimizationResult",
    "NonFiniteError",
    "RayProfile",
    "gradient_check",
    "initial_point",
    "minimize_cg",
    "multistart",
    "ray_profile",
    "small_ray_bound",
    "start_seed",
    "torus_objective",
]

GRADIENT_SMALL = "gradient-small"
FUNCTION_STALLED = "function-stalled"
ITERATION_CAP = "iteration-cap"


class NonFiniteError(RuntimeError):
    """A non-finite objective or gradient value was encountered."""


@dataclass(frozen=True)
class CgOptions:
    """Stopping and line-search parameters for :func:`minimize_cg`.

    ``max_iterations`` and ``restart_interval`` default to 20 x dimension
    and dimension respectively when left as None; the other defaults are
    the recorded reference values so that reported numbers are
    reproducible.
    """

    max_iterations: int | None = None
    gradient_tolerance: float = 1e-10
    function_tolerance: float = 1e-12
    line_search_tolerance: float = 1e-8
    restart_interval: int | None = None

    def __post_init__(self) -> None:
        for name in ("gradient_tolerance", "function_tolerance", "line_search_tolerance"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        for name in ("max_iterations", "restart_interval"):
            value = getattr(self, name)
            if value is not None and int(value) < 1:
                raise ValueError(f"{name} must be at least 1")

    def resolved(self, dimension: int) -> "CgOptions":
        return replace(
            self,
            max_iterations=self.max_iterations or 20 * dimension,
            restart_interval=self.restart_interval or dimension,
        )


@dataclass
class MinimizationResult:
    """Outcome of one minimization run.

    ``start_seed`` and ``n`` are caller-supplied labels (the derived start
    seed and grid resolution for torus runs, 0 for plain calls).  Descent
    is monotone: ``final_value <= initial_value`` always holds.
    """

    start_seed: int
    n: int
    initial_value: float
    final_value: float
    final_gradient_norm: float
    iterations: int
    termination: str
    wall_time: float
    x: np.ndarray


# ---------------------------------------------------------------------------
# derivative-free line search: golden-ratio bracketing + Brent refinement
# ---------------------------------------------------------------------------

_GOLD = 1.618034
_GLIMIT = 100.0
_TINY = 1e-20
_CGOLD = 0.381966
_ZEPS = 1e-18
_BRENT_ITMAX = 200


def _bracket(phi, f0: float):
    """Expand from (0, 1) until a minimum is bracketed.

    Returns (ax, bx, cx, fb) with phi(bx) <= min(phi(ax), phi(cx)) and the
    walk started downhill from 0, so fb <= f0.
    """
    ax, bx = 0.0, 1.0
    fa, fb = f0, phi(bx)
    if fb > fa:
        ax, bx, fa, fb = bx, ax, fb, fa
    cx = bx + _GOLD * (bx - ax)
    fc = phi(cx)
    while fb > fc:
        r = (bx - ax) * (fb - fc)
        q = (bx - cx) * (fb - fa)
        denom = 2.0 * np.copysign(max(abs(q - r), _TINY), q - r)
        u = bx - ((bx - cx) * q - (bx - ax) * r) / denom
        ulim = bx + _GLIMIT * (cx - bx)
        if (bx - u) * (u - cx) > 0.0:
            fu = phi(u)
            if fu < fc:
                return bx, u, cx, fu
            if fu > fb:
                return ax, bx, u, fb
            u = cx + _GOLD * (cx - bx)
            fu = phi(u)
        elif (cx - u) * (u - ulim) > 0.0:
            fu = phi(u)
            if fu < fc:
                bx, cx, u = cx, u, u + _GOLD * (u - cx)
                fb, fc, fu = fc, fu, phi(u)
        elif (u - ulim) * (ulim - cx) >= 0.0:
            u = ulim
            fu = phi(u)
        else:
            u = cx + _GOLD * (cx - bx)
            fu = phi(u)
        ax, bx, cx = bx, cx, u
        fa, fb, fc = fb, fc, fu
    return ax, bx, cx, fb


def _brent(phi, ax: float, bx: float, cx: float, fb: float, tol: float):
    """Brent minimization inside the bracket (ax, bx, cx); returns (x, f)."""
    a, b = (ax, cx) if ax < cx else (cx, ax)
    x = w = v = bx
    fx = fw = fv = fb
    d = e = 0.0
    for _ in range(_BRENT_ITMAX):
        xm = 0.5 * (a + b)
        tol1 = tol * abs(x) + _ZEPS
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (b - a):
            return x, fx
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            e_prev = e
            e = d
            if abs(p) >= abs(0.5 * q * e_prev) or p <= q * (a - x) or p >= q * (b - x):
                e = a - x if x >= xm else b - x
                d = _CGOLD * e
            else:
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = np.copysign(tol1, xm - x)
        else:
            e = a - x if x >= xm else b - x
            d = _CGOLD * e
        u = x + d if abs(d) >= tol1 else x + np.copysign(tol1, d)
        fu = phi(u)
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, fx


def _line_minimize(phi, f0: float, tol: float):
    ax, bx, cx, fb = _bracket(phi, f0)
    alpha, f_min = _brent(phi, ax, bx, cx, fb, tol)
    if f_min > f0:
        return 0.0, f0
    return alpha, f_min


# ---------------------------------------------------------------------------
# the minimizer
# ---------------------------------------------------------------------------


def minimize_cg(
    objective,
    gradient,
    x0,
    options: CgOptions | None = None,
    *,
    seed: int = 0,
    n: int = 0,
) -> MinimizationResult:
    """Minimize with Polak-Ribiere conjugate gradients.

    ``objective`` maps a real vector to a float and ``gradient`` returns its
    gradient; the caller is responsible for their consistency (see
    :func:`gradient_check`).  The momentum coefficient is clamped at zero,
    the direction is hard-reset every ``restart_interval`` iterations, and
    each step is a derivative-free bracketing line search refined to
    ``line_search_tolerance``.  The objective value never increases.

    Raises :class:`NonFiniteError` if a non-finite value shows up at any
    evaluated point, identifying the iteration.
    """
    x = np.array(x0, dtype=np.float64, copy=True)
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("non-finite entries in the starting point")
    dim = x.size
    opts = (options or CgOptions()).resolved(dim)
    start_time = time.perf_counter()

    iteration = 0

    def evaluate(point: np.ndarray) -> float:
        value = float(objective(point))
        if not np.isfinite(value):
            raise NonFiniteError(f"non-finite objective value at iteration {iteration}")
        return value

    def evaluate_gradient(point: np.ndarray) -> np.ndarray:
        grad = np.asarray(gradient(point), dtype=np.float64)
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError(f"non-finite gradient at iteration {iteration}")
        return grad

    f = evaluate(x)
    initial_value = f
    g = evaluate_gradient(x)
    direction = -g
    termination = ITERATION_CAP

    while True:
        gradient_norm = float(np.max(np.abs(g))) if dim else 0.0
        if gradient_norm < opts.gradient_tolerance:
            termination = GRADIENT_SMALL
            break
        if iteration >= opts.max_iterations:
            termination = ITERATION_CAP
            break
        iteration += 1
        if iteration % opts.restart_interval == 0 or float(direction @ g) >= 0.0:
            direction = -g

        def phi(alpha: float, _d=direction, _x=x) -> float:
            return evaluate(_x + alpha * _d)

        alpha, f_new = _line_minimize(phi, f, opts.line_search_tolerance)
        if not f_new < f:
            termination = FUNCTION_STALLED
            break
        x = x + alpha * direction
        stalled = 2.0 * abs(f - f_new) <= opts.function_tolerance * (
            abs(f) + abs(f_new) + 1e-10
        )
        g_new = evaluate_gradient(x)
        if stalled:
            f, g = f_new, g_new
            termination = FUNCTION_STALLED
            break
        beta = max(0.0, float((g_new - g) @ g_new) / max(float(g @ g), _TINY))
        direction = -g_new + beta * direction
        f, g = f_new, g_new

    return MinimizationResult(
        start_seed=int(seed),
        n=int(n),
        initial_value=initial_value,
        final_value=f,
        final_gradient_norm=float(np.max(np.abs(g))) if dim else 0.0,
        iterations=iteration,
        termination=termination,
        wall_time=time.perf_counter() - start_time,
        x=x,
    )


def gradient_check(objective, gradient, x, step: float = 1e-6) -> float:
    """Worst relative error of ``gradient`` against central differences.

    For each coordinate the error is |g_i - fd_i| / max(|g_i|, |fd_i|), so
    a sign-flipped gradient scores about 2.
    """
    if not step > 0.0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(gradient(x), dtype=np.float64)
    fd = np.empty_like(g)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        fd[i] = (objective(x + e) - objective(x - e)) / (2.0 * step)
    denom = np.maximum(np.maximum(np.abs(g), np.abs(fd)), 1e-300)
    return float(np.max(np.abs(g - fd) / denom))


# ---------------------------------------------------------------------------
# the torus experiment: seeded multistart and ray profiles
# ---------------------------------------------------------------------------


def torus_objective(n: int):
    """(objective, gradient) closures over the 2 n^2 real coefficients."""
    n = int(n)
    if n < 2:
        raise ValueError(f"grid resolution must be at least 2, got {n}")

    def unpack(x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        return x.view(np.complex128).reshape(n, n)

    def objective(x: np.ndarray) -> float:
        return _energy_values(unpack(x), n)

    def gradient(x: np.ndarray) -> np.ndarray:
        grad = _energy_gradient_values(unpack(x), n)
        return np.ascontiguousarray(grad).ravel().view(np.float64).copy()

    return objective, gradient


def start_seed(master_seed: int, index: int) -> int:
    """Deterministic 64-bit seed for one start of a multistart run."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def initial_point(seed: int, dimension: int, amplitude: float) -> np.ndarray:
    """Coordinates independently uniform on [-amplitude, amplitude]."""
    rng = np.random.default_rng(int(seed))
    return rng.uniform(-amplitude, amplitude, int(dimension))


def multistart(
    n: int,
    starts: int,
    master_seed: int,
    amplitude: float = 5.0,
    options: CgOptions | None = None,
    threads: int = 1,
) -> list[MinimizationResult]:
    """Independent seeded minimizations of the torus energy.

    Start k draws its initial point from the generator seeded with
    :func:`start_seed`(master_seed, k); results come back in start order
    regardless of how the work was scheduled.
    """
    if int(starts) < 1:
        raise ValueError("starts must be at least 1")
    objective, gradient = torus_objective(n)
    dimension = 2 * n * n

    def one(index: int) -> MinimizationResult:
        seed = start_seed(master_seed, index)
        x0 = initial_point(seed, dimension, amplitude)
        try:
            return minimize_cg(objective, gradient, x0, options, seed=seed, n=n)
        except NonFiniteError as exc:
            raise NonFiniteError(f"start {index} (seed {seed}): {exc}") from exc

    if int(threads) > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            return list(pool.map(one, range(int(starts))))
    return [one(k) for k in range(int(starts))]


@dataclass
class RayProfile:
    """The one-dimensional profile h(t) = energy(t * direction).

    ``rise_violation`` is the largest decrease between consecutive grid
    points with t >= 0 (expected ~0: the profile rises away from the
    origin), ``fall_violation`` the analogue on t <= 0.  ``sign_changes``
    lists the t locations where the second difference switches sign beyond
    rounding noise; any switch witnesses non-convexity of the profile.
    """

    t: np.ndarray
    h: np.ndarray
    rise_violation: float
    fall_violation: float
    sign_changes: tuple[float, ...]


def ray_profile(direction: GridFunction, t_values) -> RayProfile:
    """Evaluate the energy along the ray t -> t * direction with diagnostics."""
    t = np.asarray(t_values, dtype=np.float64)
    if not np.all(np.isfinite(t)):
        raise ValueError("non-finite t values")
    if np.any(np.diff(t) < 0.0):
        raise ValueError("t values must be sorted")
    n = direction.n
    h = np.array([_energy_values(tk * direction.values, n) for tk in t])

    rise = 0.0
    fall = 0.0
    for i in range(t.size - 1):
        if t[i] >= 0.0:
            rise = max(rise, h[i] - h[i + 1])
        if t[i + 1] <= 0.0:
            fall = max(fall, h[i + 1] - h[i])

    changes: list[float] = []
    if t.size >= 3:
        d2 = h[:-2] - 2.0 * h[1:-1] + h[2:]
        noise = 1e-12 * max(1.0, float(np.max(np.abs(h))))
        last_sign = 0
        for i, v in enumerate(d2):
            if abs(v) <= noise:
                continue
            sign = 1 if v > 0 else -1
            if last_sign and sign != last_sign:
                changes.append(float(t[i + 1]))
            last_sign = sign

    return RayProfile(
        t=t,
        h=h,
        rise_violation=rise,
        fall_violation=fall,
        sign_changes=tuple(changes),
    )


def small_ray_bound(direction: GridFunction) -> float:
    """Largest |t| keeping every triangle of t * direction in the quadratic branch.

    Below this bound h(t) equals t^2 times the vanishing Jacobian integral,
    hence is zero up to rounding.
    """
    from .mesh import triangle_derivatives

    derivs = triangle_derivatives(direction)
    peak = float(np.max(np.abs(derivs.z) + np.abs(derivs.w)))
    if peak == 0.0:
        return np.inf
    return 1.0 / peak
