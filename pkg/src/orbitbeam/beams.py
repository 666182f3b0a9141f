"""Fixed-beam grid in direction-cosine space and the beam-gain kernels."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ArgumentError, ConfigurationError
from .geometry import GroundPoint, SystemParams, direction_cosines, sin_to_ground_radius
from .specfun import bessel_j

# u-scaling constant of the tapered-feed reflector pattern (u = 2.07123 at the 3 dB angle)
REFLECTOR_U_3DB = 2.07123
MAX_STEERING_SIDE = 64


@dataclass(frozen=True)
class Beam:
    index_n: int
    index_m: int
    cos_x: float
    cos_y: float
    ground_center: GroundPoint
    footprint_radius_m: float


@dataclass(frozen=True)
class BeamGrid:
    m_side: int
    ell: float
    beams: tuple[Beam, ...]

    @property
    def k(self) -> int:
        return len(self.beams)

    def __len__(self) -> int:
        return len(self.beams)

    @cached_property
    def cos_xy(self) -> np.ndarray:
        """(K, 2) array of beam direction cosines."""
        return np.array([[b.cos_x, b.cos_y] for b in self.beams])

    @cached_property
    def centers_xy(self) -> np.ndarray:
        return np.array([[b.ground_center.x_m, b.ground_center.y_m] for b in self.beams])

    @cached_property
    def footprint_radii(self) -> np.ndarray:
        return np.array([b.footprint_radius_m for b in self.beams])

    @property
    def is_symmetric(self) -> bool:
        """True when the index set is invariant under the square's symmetry group."""
        idx = {(b.index_n, b.index_m) for b in self.beams}
        return all({(m, n), (-n, m), (n, -m)} <= idx for n, m in idx)

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "n", "m", "cos_x", "cos_y", "ground_x_m", "ground_y_m",
                    "footprint_radius_m"])
        for k, b in enumerate(self.beams):
            w.writerow([k, b.index_n, b.index_m, repr(b.cos_x), repr(b.cos_y),
                        repr(b.ground_center.x_m), repr(b.ground_center.y_m),
                        repr(b.footprint_radius_m)])


def footprint_radius(m_side: int, ell: float, altitude_m: float) -> float:
    """Ground radius whose off-nadir sine equals half the beam pitch, H / sqrt(M^(2l) - 1)."""
    return float(sin_to_ground_radius(1.0 / m_side**ell, altitude_m))


def build_grid(m_side: int, ell: float, r_cov_m: float, sys: SystemParams,
               max_index: int | None = None) -> BeamGrid:
    """Beams at cosines (2n/M^l, 2m/M^l) whose ground centres fall inside r_cov.

    ``max_index`` further restricts to |n|, |m| <= max_index (square grids).
    The nadir beam comes first; the rest are ordered by cosine radius, then (n, m).
    """
    if m_side < 2:
        raise ArgumentError(f"M must be >= 2, got {m_side}")
    if not 0 < ell <= 1:
        raise ArgumentError(f"ell must be in (0, 1], got {ell}")
    if not r_cov_m > 0:
        raise ConfigurationError(f"coverage radius must be > 0, got {r_cov_m}")
    pitch = 2.0 / m_side**ell
    bound = math.ceil(m_side**ell / 2.0)
    if max_index is not None:
        bound = min(bound, max_index)
    h = sys.altitude_m
    r_fp = footprint_radius(m_side, ell, h)
    cands = []
    for n in range(-bound, bound + 1):
        for m in range(-bound, bound + 1):
            cx, cy = n * pitch, m * pitch
            s2 = cx * cx + cy * cy
            if s2 >= 1.0:
                continue
            scale = h / math.sqrt(1.0 - s2)
            gx, gy = cx * scale, cy * scale
            if math.hypot(gx, gy) > r_cov_m:
                continue
            cands.append((s2, n, m, cx, cy, gx, gy))
    if not cands:
        raise ConfigurationError("no beam centre fits inside the coverage radius")
    cands.sort(key=lambda c: (c[0], c[1], c[2]))
    beams = tuple(Beam(n, m, cx, cy, GroundPoint(gx, gy), r_fp)
                  for _, n, m, cx, cy, gx, gy in cands)
    return BeamGrid(m_side, ell, beams)


def fejer_kernel(m_side: int, delta):
    """(1/M) |sin(pi M d / 2) / sin(pi d / 2)|, equal to 1 where d is a multiple of 2."""
    delta = np.asarray(delta, dtype=float)
    den = np.sin(0.5 * np.pi * delta)
    num = np.sin(0.5 * np.pi * m_side * delta)
    tiny = np.abs(den) < 1e-300
    out = np.abs(num / np.where(tiny, 1.0, m_side * den))
    out = np.where(tiny, 1.0, np.minimum(out, 1.0))
    return out if out.ndim else float(out)


def dirichlet_complex(m_side: int, delta):
    """v(a)^H v(b) for a - b = delta; its magnitude is :func:`fejer_kernel`."""
    delta = np.asarray(delta, dtype=float)
    den = np.sin(0.5 * np.pi * delta)
    num = np.sin(0.5 * np.pi * m_side * delta)
    tiny = np.abs(den) < 1e-300
    # at delta = 2k the ratio tends to (-1)^{k(M-1)} M, which the phase already carries
    real = np.where(tiny, 1.0, num / np.where(tiny, 1.0, m_side * den))
    phase = np.where(tiny, 1.0 + 0j, np.exp(0.5j * np.pi * (m_side - 1) * delta))
    out = phase * real
    return out if out.ndim else complex(out)


def phased_gain_cos(m_side: int, ux, uy, cx, cy):
    """F^2(ux - cx) F^2(uy - cy) on direction cosines; broadcasts."""
    fx = fejer_kernel(m_side, np.subtract(ux, cx))
    fy = fejer_kernel(m_side, np.subtract(uy, cy))
    return (fx * fy) ** 2


def phased_gain(m_side: int, user: GroundPoint, beam_cos: tuple[float, float],
                sys: SystemParams) -> float:
    """Normalised UPA beam gain of ``user`` for the beam steered to ``beam_cos``."""
    ux, uy = direction_cosines(user, sys)
    return float(phased_gain_cos(m_side, ux, uy, beam_cos[0], beam_cos[1]))


def reflector_pattern(u: float) -> float:
    """|J1(u)/(2u) + 36 J3(u)/u^3|^2 with its u -> 0 limit of 1."""
    if u == 0.0:
        return 1.0
    return (bessel_j(1, u) / (2.0 * u) + 36.0 * bessel_j(3, u) / u**3) ** 2


def reflector_gain(r: float, phi: float, theta_3db: float, sys: SystemParams) -> float:
    """Tapered-feed parabolic reflector gain at ground radius r (azimuth-independent)."""
    if r < 0:
        raise ArgumentError(f"r must be >= 0, got {r}")
    sin_t = r / math.hypot(r, sys.altitude_m)
    return reflector_pattern(REFLECTOR_U_3DB * sin_t / math.sin(theta_3db))


def phased_half_power_sine(m_side: int) -> float:
    """Off-nadir sine (phi = 0) where the nadir beam's gain falls to 1/2."""
    lo, hi = 0.0, 2.0 / m_side
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fejer_kernel(m_side, mid) ** 2 > 0.5:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def default_theta_3db(m_side: int) -> float:
    """Reflector 3 dB angle matched to the phased array's half-power angle."""
    return math.asin(phased_half_power_sine(m_side))


def steering_vector(m_side: int, cos_value: float) -> np.ndarray:
    """Explicit (1/sqrt(M)) exp(-j pi k cos) vector; validation use only."""
    if m_side > MAX_STEERING_SIDE:
        raise ArgumentError(
            f"steering vectors are only materialised for M <= {MAX_STEERING_SIDE}")
    k = np.arange(m_side)
    return np.exp(-1j * np.pi * k * cos_value) / math.sqrt(m_side)


def upa_steering_vector(m_side: int, cos_x: float, cos_y: float) -> np.ndarray:
    """Kronecker product v(cos_x) (x) v(cos_y), length M^2."""
    return np.kron(steering_vector(m_side, cos_x), steering_vector(m_side, cos_y))
