"""Downlink channel model: LoS steering, one-ring scattering, shadowed path loss.

A user's channel to its serving UPA is Rician-style:

    h = h_los + h_nlos,   h_los deterministic from the user direction,
                          h_nlos ~ CN(0, C) from a one-ring scatterer model.

The second-order NLoS statistics come from integrating the array response
over a small angular box (azimuth spread x elevation spread) around the
user direction. Large-scale gains beta_los / beta_nlos follow free-space
path loss with independent lognormal shadowing and an extra NLoS penalty.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import SPEED_OF_LIGHT, AngularCoordinates, ArrayConfig, element_indices


@dataclass(frozen=True)
class LargeScaleFading:
    """Linear power gains of the LoS and scattered components."""

    beta_los: float
    beta_nlos: float

    def __post_init__(self):
        if self.beta_los < 0 or self.beta_nlos < 0:
            raise ValueError("power gains must be nonnegative")


@dataclass(frozen=True)
class FadingModel:
    """Shadowing deviations (dB) and the extra NLoS attenuation (dB)."""

    sigma_sf_los: float = 4.0
    sigma_sf_nlos: float = 6.0
    nlos_penalty_db: float = 10.0


@dataclass(frozen=True)
class ScatteringSpread:
    """Half-widths of the one-ring angular box, radians."""

    delta_phi: float
    delta_theta: float

    def __post_init__(self):
        if self.delta_phi < 0 or self.delta_theta < 0:
            raise ValueError("angular spreads must be >= 0")


@dataclass(frozen=True)
class ChannelStats:
    """First and second moments of one user's channel vector."""

    mean: np.ndarray        # (M,) complex
    covariance: np.ndarray  # (M, M) complex Hermitian PSD


class InvalidCovarianceError(ValueError):
    pass


def steering(mu: float, m: int) -> np.ndarray:
    """Unit-norm ULA steering vector, entry p = exp(-j*pi*p*mu)/sqrt(m)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return np.exp(-1j * np.pi * np.arange(m) * mu) / np.sqrt(m)


def composite_steering(mu_phi: float, mu_h: float, cfg: ArrayConfig) -> np.ndarray:
    """Unit-norm UPA steering vector in element-enumeration order.

    Element m-1 = j*m_x + i carries phase -pi*(i*mu_phi + j*mu_h), so the
    elevation factor is the slow (outer) Kronecker factor. Spelled as an
    outer product; np.kron dominates the precoder hot path otherwise.
    """
    outer = steering(mu_h, cfg.m_y)[:, None] * steering(mu_phi, cfg.m_x)[None, :]
    return outer.ravel()


def los_channel(
    fading: LargeScaleFading, angles: AngularCoordinates, cfg: ArrayConfig
) -> np.ndarray:
    """Deterministic LoS component sqrt(beta_los) * v(mu_phi, mu_h); norm sqrt(beta_los)."""
    return np.sqrt(fading.beta_los) * composite_steering(angles.mu_phi, angles.mu_h, cfg)


@lru_cache(maxsize=16)
def _reference_nodes(n: int, rule: str):
    """Nodes and weights on [-1, 1]; cached, node generation dominates otherwise."""
    if rule == "gauss":
        t, w = np.polynomial.legendre.leggauss(n)
    elif rule == "midpoint":
        t = (2.0 * np.arange(n) + 1.0) / n - 1.0
        w = np.full(n, 2.0 / n)
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def _axis_nodes(center: float, half_width: float, n: int, rule: str):
    """Quadrature nodes and normalized weights (summing to 1) on [c-hw, c+hw]."""
    if half_width == 0.0:
        return np.array([center]), np.array([1.0])
    t, w = _reference_nodes(n, rule)
    return center + half_width * t, w / 2.0


def correlation_matrices(
    angles: list[AngularCoordinates],
    spread: ScatteringSpread,
    beta_nlos: np.ndarray,
    cfg: ArrayConfig,
    quadrature_points: int = 32,
    rule: str = "gauss",
) -> np.ndarray:
    """Batched one-ring covariance matrices, shape (len(angles), M, M).

    Entry (a, b) of matrix u is

        beta_u / (4*dphi*dth) * integral over [phi_u +- dphi] x [th_u +- dth]
        of exp(j * k(phi, th)^T (pos_a - pos_b)) dphi dth

    with k the array wave vector, evaluated by a tensor-product rule. The
    normalized-weight outer-product form C = beta * V diag(w) V^H makes every
    matrix Hermitian PSD by construction with diagonal exactly beta.
    """
    if quadrature_points < 1:
        raise ValueError("quadrature_points must be >= 1")
    beta_nlos = np.asarray(beta_nlos, dtype=float)
    if beta_nlos.shape != (len(angles),):
        raise ValueError("need one beta_nlos per angle set")
    if np.any(beta_nlos < 0):
        raise ValueError("beta_nlos must be >= 0")

    i_idx, j_idx = element_indices(cfg)
    mats = np.empty((len(angles), cfg.m_total, cfg.m_total), dtype=complex)
    for u, ang in enumerate(angles):
        phis, w_phi = _axis_nodes(ang.azimuth, spread.delta_phi, quadrature_points, rule)
        thes, w_th = _axis_nodes(ang.elevation, spread.delta_theta, quadrature_points, rule)
        # mu grids on the flattened (phi, theta) tensor product
        mu_phi = (np.sin(thes)[None, :] * np.cos(phis)[:, None]).ravel()
        mu_h = np.broadcast_to(np.cos(thes)[None, :], (len(phis), len(thes))).ravel()
        w = np.outer(w_phi, w_th).ravel()
        # array wave vector y/z components reduce to -2*pi*(d*index*mu) phases
        phase = cfg.d_h * np.outer(i_idx, mu_phi) + cfg.d_v * np.outer(j_idx, mu_h)
        v = np.exp(-2j * np.pi * phase)
        c = (v * w) @ v.conj().T
        mats[u] = 0.5 * beta_nlos[u] * (c + c.conj().T)
    return mats


def correlation_matrix(
    angles: AngularCoordinates,
    spread: ScatteringSpread,
    beta_nlos: float,
    cfg: ArrayConfig,
    quadrature_points: int = 32,
    rule: str = "gauss",
) -> np.ndarray:
    """One-ring covariance for a single user; see correlation_matrices."""
    return correlation_matrices(
        [angles], spread, np.array([float(beta_nlos)]), cfg, quadrature_points, rule
    )[0]


def path_loss_db(distance_3d: float, carrier_freq: float) -> float:
    """Free-space path loss 20*log10(4*pi*d*f/c), dB."""
    if distance_3d <= 0 or carrier_freq <= 0:
        raise ValueError("distance and frequency must be positive")
    return 20.0 * np.log10(4.0 * np.pi * distance_3d * carrier_freq / SPEED_OF_LIGHT)


def large_scale_fading(
    distance_3d: float,
    carrier_freq: float,
    model: FadingModel,
    rng: np.random.Generator,
) -> LargeScaleFading:
    """Draw shadowed LoS/NLoS gains for one link.

    beta_los  = 10^-((PL + X_los) / 10),          X_los  ~ N(0, sigma_los^2) dB
    beta_nlos = 10^-((PL + penalty + X_nlos)/10), X_nlos ~ N(0, sigma_nlos^2) dB
    """
    pl = path_loss_db(distance_3d, carrier_freq)
    x_los = rng.normal(0.0, model.sigma_sf_los)
    x_nlos = rng.normal(0.0, model.sigma_sf_nlos)
    return LargeScaleFading(
        beta_los=10.0 ** (-(pl + x_los) / 10.0),
        beta_nlos=10.0 ** (-(pl + model.nlos_penalty_db + x_nlos) / 10.0),
    )


def sample_channel(stats: ChannelStats, rng: np.random.Generator) -> np.ndarray:
    """Draw h = mean + C^(1/2) z with z circularly-symmetric standard Gaussian.

    Eigenvalues below 1e-12 * trace are clamped to zero; an eigenvalue below
    -1e-10 * trace means the covariance is not PSD and raises.
    """
    c = np.asarray(stats.covariance)
    mean = np.asarray(stats.mean)
    m = mean.shape[0]
    if c.shape != (m, m):
        raise ValueError("covariance shape does not match mean")
    w, u = np.linalg.eigh(c)
    trace = float(np.real(np.trace(c)))
    if np.min(w) < -1e-10 * max(trace, 0.0):
        raise InvalidCovarianceError(
            f"covariance has eigenvalue {np.min(w):.3e} below -1e-10 * trace"
        )
    w = np.where(w < 1e-12 * trace, 0.0, w)
    z = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / np.sqrt(2.0)
    return mean + u @ (np.sqrt(w) * z)
