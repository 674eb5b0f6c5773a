"""Poisson point process on hyperbolic balls, conditionings and thinning."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any

import numpy as np
from scipy.spatial import cKDTree

from . import rng
from .hypgeo import RAD_CAP, TWO_PI, GuardError, HPoint, ball_area, dist_h_many
from .parallel import map_ordered

NONE = "none"
ROOT_AT_ORIGIN = "root_at_origin"
SKELETON_VERTEX = "skeleton_vertex_at_origin"
CONDITIONINGS = (NONE, ROOT_AT_ORIGIN, SKELETON_VERTEX)

# radial tolerance for "points on the boundary of the smallest disk"
RADIAL_TOL = 1e-9
_CHUNK = 1 << 16


class SampleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Sample:
    """A realization of the process in the ball B(0, window_r).

    Points are stored as polar arrays ``rad`` and ``theta``; ``points``
    materializes them as ``HPoint`` objects on demand.
    """

    lam: float
    window_r: float
    seed: int
    conditioning: str
    rad: np.ndarray
    theta: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        rad = np.ascontiguousarray(self.rad, dtype=np.float64)
        theta = np.ascontiguousarray(self.theta, dtype=np.float64)
        if rad.shape != theta.shape or rad.ndim != 1:
            raise SampleError("rad and theta must be 1-d arrays of equal length")
        if self.conditioning not in CONDITIONINGS:
            raise SampleError(f"conditioning={self.conditioning!r} not in {CONDITIONINGS}")
        rad.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "rad", rad)
        object.__setattr__(self, "theta", theta)

    def __len__(self) -> int:
        return int(self.rad.shape[0])

    @property
    def n(self) -> int:
        return len(self)

    @cached_property
    def z(self) -> np.ndarray:
        """Poincare coordinates as a complex array."""
        return np.tanh(0.5 * self.rad) * np.exp(1j * self.theta)

    @cached_property
    def points(self) -> list[HPoint]:
        return [HPoint(r, t) for r, t in zip(self.rad.tolist(), self.theta.tolist())]

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda": float(self.lam),
            "window_r": float(self.window_r),
            "seed": int(self.seed),
            "conditioning": self.conditioning,
            "points": [[r, t] for r, t in zip(self.rad.tolist(), self.theta.tolist())],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Sample":
        for key in ("lambda", "window_r", "seed", "conditioning", "points"):
            if key not in d:
                raise SampleError(f"sample JSON missing field {key!r}")
        pts = np.asarray(d["points"], dtype=np.float64).reshape(-1, 2)
        if np.any(pts[:, 0] < 0) or np.any(pts[:, 0] > float(d["window_r"]) + 1e-12):
            raise SampleError("points: rad_h outside [0, window_r]")
        return cls(float(d["lambda"]), float(d["window_r"]), int(d["seed"]), d["conditioning"],
                   pts[:, 0].copy(), pts[:, 1].copy())

    @classmethod
    def from_json(cls, text: str) -> "Sample":
        return cls.from_dict(json.loads(text))


def _check_window(window_r: float) -> None:
    if not (window_r > 0.0):
        raise SampleError(f"window_r={window_r!r} must be > 0")
    if window_r > RAD_CAP:
        raise GuardError(f"window_r={window_r!r} exceeds RAD_CAP={RAD_CAP}")


def _draw_points(seed: int, stream: int, extra: tuple, count: int, c_in: float, c_out: float,
                 threads: int | None) -> tuple[np.ndarray, np.ndarray]:
    # radius by inverse CDF of the area measure between radii with cosh = c_in, c_out
    def chunk(start: int):
        m = min(_CHUNK, count - start)
        u = rng.uniforms(seed, stream, start, m, 2, extra)
        return np.arccosh(c_in + u[:, 0] * (c_out - c_in)), TWO_PI * u[:, 1]

    parts = map_ordered(chunk, range(0, count, _CHUNK), threads)
    if not parts:
        return np.zeros(0), np.zeros(0)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def sample_ball(lam: float, window_r: float, seed: int, threads: int | None = None) -> Sample:
    """Poisson process of intensity lam (per unit hyperbolic area) on B(0, window_r)."""
    if not (lam >= 0.0):
        raise SampleError(f"lambda={lam!r} must be >= 0")
    _check_window(window_r)
    mean = lam * ball_area(window_r)
    count = int(rng.generator(seed, rng.COUNT).poisson(mean)) if mean > 0 else 0
    rad, theta = _draw_points(seed, rng.POINTS, (), count, 1.0, math.cosh(window_r), threads)
    np.minimum(rad, window_r, out=rad)
    return Sample(float(lam), float(window_r), int(seed), NONE, rad, theta)


def sample_annulus(lam: float, r_in: float, r_out: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Independent Poisson points in the annulus r_in < rad_h <= r_out.

    Union with a sample of B(0, r_in) gives a sample of B(0, r_out).
    """
    _check_window(r_out)
    if not (0.0 <= r_in < r_out):
        raise SampleError(f"annulus radii must satisfy 0 <= r_in < r_out, got {r_in}, {r_out}")
    extra = (rng.float_key(r_in), rng.float_key(r_out))
    mean = lam * (ball_area(r_out) - ball_area(r_in))
    count = int(rng.generator(seed, rng.ANNULUS, *extra).poisson(mean)) if mean > 0 else 0
    rad, theta = _draw_points(seed, rng.ANNULUS, extra, count, math.cosh(r_in), math.cosh(r_out), None)
    return np.clip(rad, r_in, r_out), theta


def condition_root(s: Sample) -> Sample:
    """Prepend the origin as a point of the process."""
    if s.conditioning != NONE:
        raise SampleError(f"sample already conditioned ({s.conditioning})")
    return replace(s, conditioning=ROOT_AT_ORIGIN,
                   rad=np.concatenate([[0.0], s.rad]), theta=np.concatenate([[0.0], s.theta]))


def condition_skeleton_vertex(s: Sample, seed: int | None = None) -> Sample:
    """Add two uniform points on the circle about 0 through the nearest point.

    The origin then is a vertex of the Voronoi 1-skeleton: three points of
    the process lie on the boundary of the smallest disk about 0.
    """
    if s.conditioning != NONE:
        raise SampleError(f"sample already conditioned ({s.conditioning})")
    if len(s) == 0:
        raise SampleError("cannot condition an empty sample on a skeleton vertex")
    seed = s.seed if seed is None else seed
    rho0 = float(s.rad.min())
    angles = TWO_PI * rng.uniforms(seed, rng.SKELETON, 0, 2, 1)[:, 0]
    return replace(s, conditioning=SKELETON_VERTEX,
                   rad=np.concatenate([s.rad, [rho0, rho0]]),
                   theta=np.concatenate([s.theta, angles]))


def skeleton_boundary_count(s: Sample, tol: float = RADIAL_TOL) -> int:
    """Number of points on the boundary of the smallest disk about 0 holding a point."""
    if len(s) == 0:
        return 0
    return int(np.count_nonzero(s.rad <= s.rad.min() + tol))


def hardcore_thin(s: Sample, min_sep: float) -> Sample:
    """Sequential thinning to a min_sep-separated subset.

    Points are scanned in a random order derived from the sample seed and
    kept when no already-kept point lies within hyperbolic distance
    min_sep.  Under root conditioning the origin is scanned first.
    """
    if not (min_sep > 0.0):
        raise SampleError(f"min_sep={min_sep!r} must be > 0")
    n = len(s)
    if n == 0:
        return s
    order = rng.generator(s.seed, rng.THIN_ORDER, rng.float_key(min_sep)).permutation(n)
    if s.conditioning == ROOT_AT_ORIGIN:
        order = np.concatenate([[0], order[order != 0]])
    z = s.z
    xy = np.column_stack([z.real, z.imag])
    tree = cKDTree(xy)
    # Euclidean image of the hyperbolic ball B(p, min_sep): center c, radius R
    e = np.tanh(0.5 * s.rad)
    t = math.tanh(0.5 * min_sep)
    lo = (e - t) / (1 - e * t)
    hi = (e + t) / (1 + e * t)
    cen = 0.5 * (lo + hi)
    rad_e = 0.5 * (hi - lo)
    unit = np.exp(1j * s.theta)
    kept = np.zeros(n, dtype=bool)
    for i in order.tolist():
        c = cen[i] * unit[i]
        cand = tree.query_ball_point([c.real, c.imag], rad_e[i] + 1e-12)
        cand = [j for j in cand if kept[j]]
        if cand and np.any(dist_h_many(np.full(len(cand), z[i]), z[cand]) < min_sep):
            continue
        kept[i] = True
    idx = np.flatnonzero(kept)
    meta = dict(s.meta, thinned_min_sep=float(min_sep))
    return replace(s, rad=s.rad[idx], theta=s.theta[idx], meta=meta)
