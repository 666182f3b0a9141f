"""Poisson user drops, nearest-user selection and nearest-distance laws."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError
from .geometry import GroundPoint


@dataclass(frozen=True)
class UserDrop:
    """One realisation of the user process on a disk.

    ``xy`` holds one row per user (metres, relative to the sub-satellite
    point). The disk is centred at ``center``.
    """

    xy: np.ndarray
    intensity: float
    region_radius_m: float
    center: tuple[float, float] = (0.0, 0.0)

    @property
    def users(self) -> list[GroundPoint]:
        return [GroundPoint(float(x), float(y)) for x, y in self.xy]

    def __len__(self) -> int:
        return len(self.xy)


@dataclass(frozen=True)
class BeamFootprint:
    center: GroundPoint
    radius_m: float

    def __post_init__(self):
        if not self.radius_m > 0:
            raise ArgumentError(f"footprint radius must be > 0, got {self.radius_m}")


def _uniform_disk(rng: np.random.Generator, n: int, radius: float):
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, n))
    a = rng.uniform(0.0, 2.0 * math.pi, n)
    return r * np.cos(a), r * np.sin(a)


def sample_ppp(lam: float, radius_m: float, rng: np.random.Generator,
               center: tuple[float, float] = (0.0, 0.0)) -> UserDrop:
    """Homogeneous PPP of intensity ``lam`` (per m^2) on a disk."""
    if not (lam > 0 and radius_m > 0):
        raise ArgumentError(f"need lam > 0 and radius > 0, got {lam}, {radius_m}")
    n = rng.poisson(lam * math.pi * radius_m**2)
    dx, dy = _uniform_disk(rng, n, radius_m)
    xy = np.column_stack([dx + center[0], dy + center[1]])
    return UserDrop(xy, lam, radius_m, center)


def nearest_user(drop: UserDrop, beam: BeamFootprint):
    """User inside the footprint closest to its centre, with its distance.

    Ties go to the lowest index in the drop. Returns None when the footprint
    holds no user.
    """
    if len(drop) == 0:
        return None
    d2 = (drop.xy[:, 0] - beam.center.x_m) ** 2 + (drop.xy[:, 1] - beam.center.y_m) ** 2
    inside = d2 <= beam.radius_m**2
    if not inside.any():
        return None
    d2 = np.where(inside, d2, np.inf)
    i = int(np.argmin(d2))  # argmin returns the first minimum
    return GroundPoint(float(drop.xy[i, 0]), float(drop.xy[i, 1])), math.sqrt(d2[i])


def nearest_offsets_batch(lam: float, radius_m: float, n_trials: int,
                          rng: np.random.Generator):
    """Nearest-to-centre user offsets for ``n_trials`` independent disk drops.

    Each trial draws a Poisson count and uniform positions exactly like
    :func:`sample_ppp`, then keeps the nearest point (first index on ties).
    Returns ``(dx, dy)`` arrays with NaN for empty drops.
    """
    counts = rng.poisson(lam * math.pi * radius_m**2, n_trials)
    total = int(counts.sum())
    dx, dy = _uniform_disk(rng, total, radius_m)
    out_x = np.full(n_trials, np.nan)
    out_y = np.full(n_trials, np.nan)
    nonempty = counts > 0
    if total:
        d2 = dx * dx + dy * dy
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])[nonempty]
        seg_min = np.minimum.reduceat(d2, starts)
        # first index attaining each segment's minimum
        idx = np.where(d2 == np.repeat(seg_min, counts[nonempty]), np.arange(total), total)
        pick = np.minimum.reduceat(idx, starts)
        out_x[nonempty] = dx[pick]
        out_y[nonempty] = dy[pick]
    return out_x, out_y


def nearest_distance_band_prob(lam: float, r_a: float, r_b: float) -> float:
    """P[r_a < nearest distance < r_b] (unconditional on the disk being nonempty)."""
    if not 0 <= r_a <= r_b:
        raise ArgumentError(f"need 0 <= r_a <= r_b, got {r_a}, {r_b}")
    return math.exp(-lam * math.pi * r_a**2) - math.exp(-lam * math.pi * r_b**2)


def prob_nonempty(lam: float, radius_m: float) -> float:
    return -math.expm1(-lam * math.pi * radius_m**2)


def nearest_distance_pdf(lam: float, radius_m: float, r):
    """Density of the nearest distance given at least one user in the disk."""
    r = np.asarray(r, dtype=float)
    norm = prob_nonempty(lam, radius_m)
    out = np.where((r >= 0) & (r <= radius_m),
                   2.0 * lam * math.pi * r * np.exp(-lam * math.pi * r * r) / norm, 0.0)
    return out if out.ndim else float(out)


def nearest_distance_cdf(lam: float, radius_m: float, r):
    """CDF matching :func:`nearest_distance_pdf`."""
    r = np.clip(np.asarray(r, dtype=float), 0.0, radius_m)
    out = -np.expm1(-lam * math.pi * r * r) / prob_nonempty(lam, radius_m)
    return out if out.ndim else float(out)


def write_drop(path, drop: UserDrop, seed=None) -> None:
    """Line format: ``# key=value`` header lines, then one ``x_m y_m`` per user."""
    lines = [
        f"# lambda_per_m2={float(drop.intensity)!r}",
        f"# r_cov_m={float(drop.region_radius_m)!r}",
        f"# center_m={float(drop.center[0])!r},{float(drop.center[1])!r}",
        f"# seed={seed}",
    ]
    lines += [f"{x!r} {y!r}" for x, y in drop.xy.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_drop(path) -> tuple[UserDrop, int | None]:
    meta = {}
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        elif line.strip():
            x, y = line.split()
            rows.append((float(x), float(y)))
    cx, cy = (float(v) for v in meta["center_m"].split(","))
    xy = np.array(rows, dtype=float).reshape(-1, 2)
    seed = None if meta.get("seed") in (None, "None") else int(meta["seed"])
    drop = UserDrop(xy, float(meta["lambda_per_m2"]), float(meta["r_cov_m"]), (cx, cy))
    return drop, seed
