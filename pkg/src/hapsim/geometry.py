"""Sector-array geometry for a high-altitude platform base station.

The platform carries a cylindrical arrangement of n_sectors vertical
uniform planar arrays (UPAs), each serving a wedge of a ground disk of
radius coverage_radius from altitude haps_altitude.

Conventions, pinned once and used by every other module:

* Elevation theta is measured from the horizontal plane at the platform,
  so a user at nadir has theta = pi/2 and a user at ground distance r has
  theta = arctan(h / r).
* Azimuth phi is measured relative to the serving sector's boresight.
* Spatial (beam-space) coordinates of a direction:
      mu_phi = sin(theta) * cos(phi),   mu_h = cos(theta).
  Over the disk, mu_h spans [0, sin(arctan(R/h))].
* UPA elements lie in the local y-z plane. Element m (1-based) has
  horizontal index i = (m-1) mod m_x and vertical index j = (m-1) // m_x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class ArrayConfig:
    """Per-sector UPA layout and carrier."""

    m_x: int = 4            # horizontal elements
    m_y: int = 4            # vertical elements
    d_h: float = 0.5        # horizontal spacing, multiples of wavelength
    d_v: float = 0.5        # vertical spacing, multiples of wavelength
    n_sectors: int = 6
    carrier_freq: float = 2.5e9  # Hz

    def __post_init__(self):
        if self.m_x < 1 or self.m_y < 1:
            raise ValueError("array needs at least one element per axis")
        if self.n_sectors < 1:
            raise ValueError("n_sectors must be >= 1")
        if self.d_h <= 0 or self.d_v <= 0:
            raise ValueError("element spacings must be positive")
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def m_total(self) -> int:
        return self.m_x * self.m_y

    @property
    def sector_width(self) -> float:
        """Azimuth width delta of one sector wedge, radians."""
        return 2.0 * np.pi / self.n_sectors


@dataclass(frozen=True)
class UserPosition:
    """Ground-plane position, platform directly above the disk center."""

    ground_x: float
    ground_y: float
    haps_altitude: float

    @property
    def ground_distance(self) -> float:
        return float(np.hypot(self.ground_x, self.ground_y))

    @property
    def distance_3d(self) -> float:
        return float(np.hypot(self.ground_distance, self.haps_altitude))


@dataclass(frozen=True)
class AngularCoordinates:
    """Boresight-relative direction of one user plus its mu coordinates."""

    azimuth: float    # phi, relative to serving sector boresight, radians
    elevation: float  # theta, from the platform's horizontal plane, radians
    mu_phi: float
    mu_h: float


def element_indices(cfg: ArrayConfig) -> tuple[np.ndarray, np.ndarray]:
    """(i, j) index arrays for all M elements in enumeration order."""
    m = np.arange(cfg.m_total)
    return m % cfg.m_x, m // cfg.m_x


def element_position(m: int, cfg: ArrayConfig) -> np.ndarray:
    """Coordinates of element m (1-based) in meters: [0, i*d_h*lam, j*d_v*lam]."""
    if not 1 <= m <= cfg.m_total:
        raise ValueError(f"element index {m} outside 1..{cfg.m_total}")
    i = (m - 1) % cfg.m_x
    j = (m - 1) // cfg.m_x
    lam = cfg.wavelength
    return np.array([0.0, i * cfg.d_h * lam, j * cfg.d_v * lam])


def wave_vector(azimuth: float, elevation: float, wavelength: float) -> np.ndarray:
    """Propagation vector (2*pi/lam) * [cos(th)cos(ph), cos(th)sin(ph), sin(th)]."""
    k = 2.0 * np.pi / wavelength
    ct = np.cos(elevation)
    return k * np.array([ct * np.cos(azimuth), ct * np.sin(azimuth), np.sin(elevation)])


def array_wave_vector(azimuth: float, elevation: float, wavelength: float) -> np.ndarray:
    """Wave vector producing the array's beam-space phases for a ground direction.

    The per-element phase convention is exp(-j*pi*(i*mu_phi + j*mu_h)) at
    half-wavelength spacing. Feeding the raw ground-view angles into
    wave_vector does not reproduce that; shifting both angles by a quarter
    turn does, uniquely:

        y component -> -(2*pi/lam) * sin(theta)cos(phi) = -(2*pi/lam) * mu_phi
        z component -> -(2*pi/lam) * cos(theta)         = -(2*pi/lam) * mu_h

    (elements have x = 0, so the x component never enters a phase).
    """
    return wave_vector(azimuth - np.pi / 2.0, elevation - np.pi / 2.0, wavelength)


def user_angles(user: UserPosition, boresight_azimuth: float) -> AngularCoordinates:
    """Boresight-relative angles and mu coordinates of one user."""
    r = user.ground_distance
    h = user.haps_altitude
    d = float(np.hypot(r, h))
    if d == 0.0:
        raise ValueError("user coincides with the platform")
    elevation = float(np.arctan2(h, r))  # r=0 (nadir) -> pi/2
    global_az = float(np.arctan2(user.ground_y, user.ground_x)) % (2.0 * np.pi)
    phi = (global_az - boresight_azimuth + np.pi) % (2.0 * np.pi) - np.pi
    # sin(theta) = h/d and cos(theta) = r/d, exact for theta = arctan(h/r)
    mu_phi = (h / d) * float(np.cos(phi))
    mu_h = r / d
    return AngularCoordinates(azimuth=phi, elevation=elevation, mu_phi=mu_phi, mu_h=mu_h)


def sector_of(global_azimuth: float, n_sectors: int) -> int:
    """1-based index of the sector wedge containing a global azimuth."""
    width = 2.0 * np.pi / n_sectors
    az = global_azimuth % (2.0 * np.pi)
    n = int(az // width) + 1
    return min(n, n_sectors)  # az within one ulp of 2*pi can overshoot


def sector_boresight(sector: int, n_sectors: int) -> float:
    """Boresight azimuth of a 1-based sector index (wedge center)."""
    if not 1 <= sector <= n_sectors:
        raise ValueError(f"sector {sector} outside 1..{n_sectors}")
    return (sector - 0.5) * 2.0 * np.pi / n_sectors


def drop_users(
    count: int,
    coverage_radius: float,
    haps_altitude: float,
    rng: np.random.Generator,
) -> list[UserPosition]:
    """i.i.d. uniform user positions over the coverage disk."""
    if count < 0:
        raise ValueError("count must be >= 0")
    if coverage_radius < 0:
        raise ValueError("coverage_radius must be >= 0")
    radii = coverage_radius * np.sqrt(rng.random(count))
    azimuths = 2.0 * np.pi * rng.random(count)
    return [
        UserPosition(
            ground_x=float(r * np.cos(a)),
            ground_y=float(r * np.sin(a)),
            haps_altitude=haps_altitude,
        )
        for r, a in zip(radii, azimuths)
    ]
