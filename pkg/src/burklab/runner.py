"""Batch experiment orchestration with seeded, replayable runs.

Every suite draws its randomness from generators derived deterministically
from the master seed, executes a batch of checks, and reports a worst
margin together with a pass verdict against the thresholds below.  A run
persists a self-contained record (configuration included) as JSON; CSV
export carries the same numeric payload.  Replaying a record re-executes
the embedded configuration and reports any numeric drift, ignoring only
the volatile wall-clock fields.
"""

from __future__ import annotations

import csv
import datetime
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import families as fam
from . import mesh, optimize, radial

__all__ = [
    "ExperimentConfig",
    "SUITE_NAMES",
    "families_suite",
    "identities_suite",
    "load_identity_grid",
    "minimize_suite",
    "random_power_profile",
    "random_sampled_profile",
    "ray_suite",
    "rankone_suite",
    "replay",
    "run",
    "stretch_suite",
    "write_csv",
]

RECORD_VERSION = 1
VOLATILE_KEYS = frozenset({"created", "wall_time"})

# pass thresholds, fixed once so reported verdicts are reproducible
MIN_FINAL_VALUE = -1e-7
RAY_TOLERANCE = 1e-10
ZERO_CLOSED_TOLERANCE = 1e-10
ZERO_QUADRATURE_TOLERANCE = 1e-6
STRETCH_MIN = -1e-8
STEEP_TERM_MIN = -1e-12
PHI_ZERO_TOLERANCE = 1e-6
SATURATION_RELATIVE = 0.05
IDENTITY_RELATIVE_TOLERANCE = 1e-6
UPPER_BOUND_MIN = -1e-10
MIDPOINT_TOLERANCE = 1e-12
FORMULA_TOLERANCE = 1e-12
BLEND_MIN = -1e-8
HARMONIC_MIN = -1e-6
COMPOSITE_MIN = -1e-6

SUITE_NAMES = ("minimize", "ray", "stretch", "identities", "rankone", "families")

UPPER_BOUND_EXPONENTS = (1.2, 1.5, 2.0, 3.0, 5.0)
IDENTITY_MODULI = (0.3, 0.7, 1.1, 1.9, 3.2)
IDENTITY_EXPONENTS = (1.5, 3.0, 5.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; embedded verbatim in the record."""

    suite: str = "all"
    n_list: tuple[int, ...] = (6, 8, 12, 16)
    starts: int = 20
    master_seed: int = 20240901
    amplitude: float = 5.0
    p_list: tuple[float, ...] = (1.2, 1.5, 3.0, 5.0)
    tolerances: optimize.CgOptions = field(default_factory=optimize.CgOptions)
    output_path: str = "runrecord.json"
    format: str = "json"
    threads: int = 1
    ray_fixture: str | None = None
    identity_fixture: str | None = None

    def __post_init__(self) -> None:
        if self.suite not in SUITE_NAMES + ("all",):
            raise ValueError(f"unknown suite {self.suite!r}")
        if self.format not in ("json", "csv"):
            raise ValueError(f"unknown format {self.format!r}")
        if not self.n_list:
            raise ValueError("n_list must be nonempty")
        if any(int(n) < 2 for n in self.n_list):
            raise ValueError("grid resolutions must be at least 2")
        if any(float(p) <= 1.0 for p in self.p_list):
            raise ValueError("every exponent must be greater than 1")
        if int(self.starts) < 1:
            raise ValueError("starts must be at least 1")
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "p_list", tuple(float(p) for p in self.p_list))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["n_list"] = list(self.n_list)
        out["p_list"] = list(self.p_list)
        return out

    @classmethod
    def from_dict(cls, record: dict) -> "ExperimentConfig":
        data = dict(record)
        data["tolerances"] = optimize.CgOptions(**data.get("tolerances", {}))
        data["n_list"] = tuple(data.get("n_list", ()))
        data["p_list"] = tuple(data.get("p_list", ()))
        return cls(**data)


# ---------------------------------------------------------------------------
# random instance generators (deterministic per derived stream)
# ---------------------------------------------------------------------------


def random_power_profile(rng: np.random.Generator, alpha_low: float = 0.02, beta_low: float = 0.02):
    return radial.PowerProfile(
        c=float(rng.uniform(0.05, 2.0)),
        alpha=float(rng.uniform(alpha_low, 1.0)),
        beta=float(rng.uniform(beta_low, 1.0)),
    )


def random_sampled_profile(rng: np.random.Generator):
    knots = int(rng.integers(3, 9))
    radii = np.concatenate([[0.0], np.cumsum(rng.uniform(0.15, 0.9, knots))])
    values = np.concatenate([[0.0], rng.uniform(0.0, 2.5, knots)])
    if rng.random() < 0.5:
        # steepen one knot so slopes beyond 1 show up regularly
        j = int(rng.integers(1, knots + 1))
        values[j] *= rng.uniform(1.5, 3.0)
    return radial.SampledProfile(
        tuple(radii), tuple(values), float(rng.uniform(0.3, 1.0))
    )


def _stream(master_seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng([int(master_seed), *[int(p) for p in path]])


def _margin_ratio(worst: float, tolerance: float) -> float:
    """Fraction of a check's tolerance consumed; > 1 means the check failed.

    Works for both upper-bound checks (worst small positive, tolerance
    positive) and lower-bound checks (worst and tolerance both negative
    near failure).
    """
    return max(0.0, float(worst) / float(tolerance))


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def minimize_suite(
    n_list,
    starts: int,
    master_seed: int,
    amplitude: float = 5.0,
    options: optimize.CgOptions | None = None,
    threads: int = 1,
) -> dict:
    """Seeded multistart minimization; the worst margin is the lowest final value."""
    items = []
    worst = np.inf
    for n in n_list:
        results = optimize.multistart(
            int(n), int(starts), master_seed, amplitude, options, threads=threads
        )
        for k, res in enumerate(results):
            worst = min(worst, res.final_value)
            items.append(
                {
                    "n": int(n),
                    "start": k,
                    "seed": res.start_seed,
                    "initial_value": res.initial_value,
                    "final_value": res.final_value,
                    "final_gradient_norm": res.final_gradient_norm,
                    "iterations": res.iterations,
                    "termination": res.termination,
                    "wall_time": res.wall_time,
                }
            )
    return {
        "suite": "minimize",
        "pass": bool(worst >= MIN_FINAL_VALUE),
        "worst": float(worst),
        "items": items,
    }


def ray_suite(
    n_list,
    directions: int,
    master_seed: int,
    amplitude: float = 5.0,
    t_span: float = 10.0,
    t_points: int = 401,
    fixture: mesh.GridFunction | None = None,
) -> dict:
    """Monotonicity of the energy along rays; logs non-convexity witnesses."""
    t_values = np.linspace(-t_span, t_span, int(t_points))
    items = []
    profiles = []
    worst = 0.0
    witnesses = 0

    def probe(direction: mesh.GridFunction, n: int, index: int, keep_table: bool):
        nonlocal worst, witnesses
        prof = optimize.ray_profile(direction, t_values)
        worst = max(worst, prof.rise_violation, prof.fall_violation)
        witnesses += len(prof.sign_changes)
        items.append(
            {
                "n": int(n),
                "direction": index,
                "rise_violation": prof.rise_violation,
                "fall_violation": prof.fall_violation,
                "sign_changes": len(prof.sign_changes),
                "witness_ts": list(prof.sign_changes),
            }
        )
        if keep_table:
            profiles.append({"n": int(n), "t": prof.t.tolist(), "h": prof.h.tolist()})

    if fixture is not None:
        probe(fixture, fixture.n, 0, keep_table=True)
    else:
        for n in n_list:
            rng = _stream(master_seed, 7, int(n))
            for k in range(int(directions)):
                vec = rng.uniform(-amplitude, amplitude, 2 * int(n) * int(n))
                probe(mesh.GridFunction.from_real_vector(vec), int(n), k, keep_table=k == 0)

    return {
        "suite": "ray",
        "pass": bool(worst < RAY_TOLERANCE),
        "worst": float(worst),
        "witnesses": int(witnesses),
        "items": items,
        "profiles": profiles,
    }


def stretch_suite(master_seed: int, count: int = 200) -> dict:
    """Radial integral checks for both profile families.

    Covers the vanishing of the L integral on slope-dominated power
    profiles (closed form and quadrature), its nonnegativity on sampled
    profiles together with the per-interval telescoped terms, the
    vanishing Phi_p combinations, and the saturating ratio limit.
    """
    checks = []

    rng = _stream(master_seed, 11)
    worst_closed = 0.0
    worst_quad = 0.0
    for _ in range(int(count)):
        profile = random_power_profile(rng)
        worst_closed = max(worst_closed, abs(radial.burkholder_integral(profile, "closed")))
        worst_quad = max(worst_quad, abs(radial.burkholder_integral(profile, "quadrature")))
    checks.append(
        {
            "check": "slope_dominated_zero_closed",
            "count": int(count),
            "worst": worst_closed,
            "tolerance": ZERO_CLOSED_TOLERANCE,
            "pass": bool(worst_closed < ZERO_CLOSED_TOLERANCE),
        }
    )
    checks.append(
        {
            "check": "slope_dominated_zero_quadrature",
            "count": int(count),
            "worst": worst_quad,
            "tolerance": ZERO_QUADRATURE_TOLERANCE,
            "pass": bool(worst_quad < ZERO_QUADRATURE_TOLERANCE),
        }
    )

    rng = _stream(master_seed, 12)
    lowest = np.inf
    lowest_term = np.inf
    for _ in range(int(count)):
        profile = random_sampled_profile(rng)
        lowest = min(lowest, radial.burkholder_integral(profile, "quadrature"))
        for interval in radial.steep_interval_terms(profile):
            lowest_term = min(lowest_term, interval.term)
    if not np.isfinite(lowest_term):
        lowest_term = 0.0
    checks.append(
        {
            "check": "stretch_nonnegative",
            "count": int(count),
            "worst": float(lowest),
            "tolerance": STRETCH_MIN,
            "pass": bool(lowest >= STRETCH_MIN),
        }
    )
    checks.append(
        {
            "check": "steep_interval_terms_nonnegative",
            "count": int(count),
            "worst": float(lowest_term),
            "tolerance": STEEP_TERM_MIN,
            "pass": bool(lowest_term >= STEEP_TERM_MIN),
        }
    )

    # vanishing Phi_p combinations: plain arguments for p < 2, swapped
    # beyond; the profile parameters keep the p-energy finite
    rng = _stream(master_seed, 13)
    worst_phi = 0.0
    for _ in range(int(count)):
        low = random_power_profile(rng, beta_low=1.0 / 3.0 + 0.02)
        worst_phi = max(worst_phi, abs(radial.phi_integral(low, 1.5, swap=False, method="closed")))
        high = random_power_profile(rng, alpha_low=1.0 / 3.0 + 0.02)
        worst_phi = max(worst_phi, abs(radial.phi_integral(high, 3.0, swap=True, method="closed")))
    checks.append(
        {
            "check": "phi_zero_combinations",
            "count": 2 * int(count),
            "worst": worst_phi,
            "tolerance": PHI_ZERO_TOLERANCE,
            "pass": bool(worst_phi < PHI_ZERO_TOLERANCE),
        }
    )

    limit = 8.0
    ratio = radial.saturation_ratio(3.0, 1.0 / 3.0 - 1e-4)
    sequence = [radial.saturation_ratio(3.0, a) for a in (0.2, 0.3, 0.33, 0.333)]
    monotone = all(b > a for a, b in zip(sequence, sequence[1:]))
    rel = abs(ratio - limit) / limit
    checks.append(
        {
            "check": "saturation_ratio",
            "worst": rel,
            "tolerance": SATURATION_RELATIVE,
            "ratio": ratio,
            "sequence": sequence,
            "pass": bool(rel < SATURATION_RELATIVE and monotone),
        }
    )

    return {
        "suite": "stretch",
        "pass": all(c["pass"] for c in checks),
        "worst": max(_margin_ratio(c["worst"], c["tolerance"]) for c in checks),
        "items": checks,
    }


def load_identity_grid(path) -> tuple[list[complex], list[complex], list[float]]:
    """Fixture file {z: [[re, im], ...], w: [[re, im], ...], p: [...]}."""
    with open(str(path), "r", encoding="utf-8") as fh:
        record = json.load(fh)
    zs = [complex(re, im) for re, im in record["z"]]
    ws = [complex(re, im) for re, im in record["w"]]
    ps = [float(p) for p in record["p"]]
    return zs, ws, ps


def identities_suite(
    master_seed: int,
    samples: int = 100_000,
    p_list=UPPER_BOUND_EXPONENTS,
    grid: tuple[list[complex], list[complex], list[float]] | None = None,
) -> dict:
    """Dilation identities on a moduli grid plus the sharp upper bound."""
    if grid is None:
        zs = [m * np.exp(0.11j) for m in IDENTITY_MODULI]
        ws = [m * np.exp(0.37j) for m in IDENTITY_MODULI]
        ps = list(IDENTITY_EXPONENTS)
    else:
        zs, ws, ps = grid

    items = []
    worst_rel = 0.0
    for p in ps:
        for z in zs:
            for w in ws:
                if p < 2.0:
                    lhs, rhs = fam.dilation_identity_L(z, w, p)
                else:
                    lhs, rhs = fam.dilation_identity_M(z, w, p)
                rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
                worst_rel = max(worst_rel, rel)
                items.append(
                    {
                        "kind": "dilation",
                        "abs_z": abs(z),
                        "abs_w": abs(w),
                        "p": float(p),
                        "lhs": lhs,
                        "rhs": rhs,
                        "relative_error": rel,
                    }
                )

    rng = _stream(master_seed, 17)
    min_gap = np.inf
    for p in p_list:
        z = rng.standard_normal(int(samples)) + 1j * rng.standard_normal(int(samples))
        w = rng.standard_normal(int(samples)) + 1j * rng.standard_normal(int(samples))
        gaps = np.asarray(fam.phi_upper_bound_gap(z, w, p), dtype=float)
        p_min = float(np.min(gaps))
        min_gap = min(min_gap, p_min)
        items.append({"kind": "upper_bound", "p": float(p), "min_gap": p_min, "samples": int(samples)})

    ok = worst_rel < IDENTITY_RELATIVE_TOLERANCE and min_gap >= UPPER_BOUND_MIN
    return {
        "suite": "identities",
        "pass": bool(ok),
        "worst": max(
            _margin_ratio(worst_rel, IDENTITY_RELATIVE_TOLERANCE),
            _margin_ratio(min_gap, UPPER_BOUND_MIN),
        ),
        "items": items,
    }


def rankone_suite(master_seed: int, trials: int = 10_000) -> dict:
    """Line-convexity probes of the matrix integrand."""
    report = fam.rank_one_convexity_report(trials, master_seed, tolerance=MIDPOINT_TOLERANCE)
    ok = (
        not report.violations
        and report.max_midpoint_excess <= MIDPOINT_TOLERANCE
        and report.max_formula_gap <= FORMULA_TOLERANCE
    )
    item = {
        "trials": report.trials,
        "max_midpoint_excess": report.max_midpoint_excess,
        "max_formula_gap": report.max_formula_gap,
        "violations": len(report.violations),
    }
    return {
        "suite": "rankone",
        "pass": bool(ok),
        "worst": float(max(report.max_midpoint_excess, report.max_formula_gap)),
        "items": [item],
    }


def families_suite(
    master_seed: int,
    blends: int = 500,
    harmonics: int = 100,
    composites: int = 50,
) -> dict:
    """Nonnegativity of the plane integrals for the three glued families."""
    checks = []

    rng = _stream(master_seed, 23)
    lowest = np.inf
    for _ in range(int(blends)):
        a = rng.standard_normal() + 1j * rng.standard_normal()
        b = rng.standard_normal() + 1j * rng.standard_normal()
        k = int(rng.integers(1, 6))
        lowest = min(lowest, fam.power_reflection_integral(a, b, k))
    checks.append(
        {
            "check": "power_blend_nonnegative",
            "count": int(blends),
            "worst": float(lowest),
            "tolerance": BLEND_MIN,
            "pass": bool(lowest >= BLEND_MIN),
        }
    )

    rng = _stream(master_seed, 29)
    lowest = np.inf
    mean_drop = 0.0
    radii = np.linspace(0.05, 1.0, 20)
    for _ in range(int(harmonics)):
        g_coeffs = 0.8 * (rng.standard_normal(5) + 1j * rng.standard_normal(5))
        h_coeffs = 0.8 * (rng.standard_normal(5) + 1j * rng.standard_normal(5))
        lowest = min(lowest, fam.harmonic_reflection_integral(g_coeffs, h_coeffs, 3.0))
        first, second = fam.circle_means(g_coeffs, h_coeffs, 3.0, radii)
        scale = max(1.0, float(np.max(first)), float(np.max(second)))
        mean_drop = max(
            mean_drop,
            float(np.max(-np.diff(first))) / scale,
            float(np.max(-np.diff(second))) / scale,
        )
    checks.append(
        {
            "check": "harmonic_nonnegative",
            "count": int(harmonics),
            "worst": float(lowest),
            "tolerance": HARMONIC_MIN,
            "pass": bool(lowest >= HARMONIC_MIN),
        }
    )
    checks.append(
        {
            "check": "circle_means_nondecreasing",
            "count": int(harmonics),
            "worst": float(mean_drop),
            "tolerance": 1e-10,
            "pass": bool(mean_drop < 1e-10),
        }
    )

    rng = _stream(master_seed, 31)
    lowest = np.inf
    for j in range(int(composites)):
        degree = int(rng.integers(1, 4))
        coeffs = 0.7 * (rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1))
        if j % 2 == 0:
            profile = random_power_profile(rng, beta_low=1.0 / 3.0 + 0.02)
            p, conj = 1.5, False
        else:
            profile = random_power_profile(rng, alpha_low=1.0 / 3.0 + 0.02)
            p, conj = 3.0, bool(rng.integers(0, 2))
        lowest = min(
            lowest, fam.holomorphic_composite_integral(coeffs, profile, p, conjugate=conj)
        )
    checks.append(
        {
            "check": "composite_nonnegative",
            "count": int(composites),
            "worst": float(lowest),
            "tolerance": COMPOSITE_MIN,
            "pass": bool(lowest >= COMPOSITE_MIN),
        }
    )

    return {
        "suite": "families",
        "pass": all(c["pass"] for c in checks),
        "worst": max(_margin_ratio(c["worst"], c["tolerance"]) for c in checks),
        "items": checks,
    }


# ---------------------------------------------------------------------------
# run, persist, replay
# ---------------------------------------------------------------------------


def _execute_suite(name: str, config: ExperimentConfig) -> dict:
    seed = config.master_seed
    if name == "minimize":
        return minimize_suite(
            config.n_list,
            config.starts,
            seed,
            config.amplitude,
            config.tolerances,
            threads=config.threads,
        )
    if name == "ray":
        fixture = mesh.load_grid(config.ray_fixture) if config.ray_fixture else None
        return ray_suite(
            config.n_list, config.starts, seed, config.amplitude, fixture=fixture
        )
    if name == "stretch":
        return stretch_suite(seed)
    if name == "identities":
        grid = load_identity_grid(config.identity_fixture) if config.identity_fixture else None
        return identities_suite(seed, p_list=config.p_list, grid=grid)
    if name == "rankone":
        return rankone_suite(seed)
    if name == "families":
        return families_suite(seed)
    raise ValueError(f"unknown suite {name!r}")


def run(config: ExperimentConfig) -> dict:
    """Execute the configured suite(s), persist and return the record."""
    names = SUITE_NAMES if config.suite == "all" else (config.suite,)
    suites: dict[str, dict] = {}
    for name in names:
        result = _execute_suite(name, config)
        suites[name] = result
        status = "PASS" if result["pass"] else "FAIL"
        print(f"[{name}] worst={result['worst']:.3e} {status}")

    record = {
        "record_version": RECORD_VERSION,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": config.to_dict(),
        "suites": suites,
        "pass": all(s["pass"] for s in suites.values()),
    }
    with open(config.output_path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=1)
    if config.format == "csv":
        write_csv(record, _csv_path(config.output_path))
    return record


def _csv_path(output_path: str) -> str:
    return output_path[: -len(".json")] + ".csv" if output_path.endswith(".json") else output_path + ".csv"


def write_csv(record: dict, path: str) -> None:
    """One row per suite item, with a header naming each column."""
    rows = []
    keys: set[str] = set()
    for name, suite in record["suites"].items():
        for index, item in enumerate(suite["items"]):
            row = {"suite": name, "index": index}
            for key, value in item.items():
                if isinstance(value, (list, tuple)):
                    value = json.dumps(value)
                row[key] = value
            keys.update(row)
            rows.append(row)
    header = ["suite", "index"] + sorted(keys - {"suite", "index"})
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, restval="")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def _compare(old, new, path: str, drift: list) -> None:
    if isinstance(old, dict) and isinstance(new, dict):
        for key in sorted(set(old) | set(new)):
            if key in VOLATILE_KEYS:
                continue
            if key not in old or key not in new:
                drift.append((f"{path}/{key}", old.get(key), new.get(key)))
                continue
            _compare(old[key], new[key], f"{path}/{key}", drift)
    elif isinstance(old, list) and isinstance(new, list):
        if len(old) != len(new):
            drift.append((path, f"length {len(old)}", f"length {len(new)}"))
            return
        for i, (a, b) in enumerate(zip(old, new)):
            _compare(a, b, f"{path}[{i}]", drift)
    else:
        if old != new:
            drift.append((path, old, new))


def replay(record_path) -> tuple[dict, list]:
    """Re-execute a stored record's config; returns (new record, drift list).

    Drift is any field differing from the stored values, volatile
    wall-clock fields excepted; a correct deterministic build reports none.
    """
    with open(str(record_path), "r", encoding="utf-8") as fh:
        stored = json.load(fh)
    config = ExperimentConfig.from_dict(stored["config"])
    names = SUITE_NAMES if config.suite == "all" else (config.suite,)
    suites = {name: _execute_suite(name, config) for name in names}
    fresh = {
        "record_version": RECORD_VERSION,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": config.to_dict(),
        "suites": suites,
        "pass": all(s["pass"] for s in suites.values()),
    }
    drift: list = []
    _compare(stored, fresh, "", drift)
    return fresh, drift
