"""Transmit array geometry and near-field line-of-sight channel synthesis.

All lengths are in meters. The array hangs from the ceiling and radiates
downwards, so the boresight axis is -z.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, SingularGeometryError

DOWN = np.array([0.0, 0.0, -1.0])


@dataclass(frozen=True)
class ArrayGeometry:
    element_positions: np.ndarray  # (N, 3)
    wavelength: float
    spacing: float
    boresight_gain: float
    boresight_axis: np.ndarray = field(default_factory=lambda: DOWN.copy())

    @property
    def n_elements(self):
        return self.element_positions.shape[0]

    @property
    def gain_tx(self):
        """Transmit antenna gain G_t = 2(g + 1)."""
        return 2.0 * (self.boresight_gain + 1.0)


@dataclass(frozen=True)
class UserLayout:
    positions: np.ndarray  # (K, 3)

    @property
    def n_users(self):
        return self.positions.shape[0]


@dataclass(frozen=True)
class ChannelMatrix:
    coefficients: np.ndarray  # (N, K) complex, column k is a_k
    gains: np.ndarray
    distances: np.ndarray
    elevation: np.ndarray
    azimuth: np.ndarray  # stored only; the element pattern ignores it

    @property
    def shape(self):
        return self.coefficients.shape

    def column(self, k):
        return self.coefficients[:, k]


def build_upa_geometry(rows, cols, spacing, center, wavelength, boresight_gain=2.0):
    """Square/rectangular planar grid in the z = center[2] plane, centered on `center`."""
    if rows < 1 or cols < 1:
        raise InvalidParameterError(f"grid must be at least 1x1, got {rows}x{cols}")
    if spacing <= 0:
        raise InvalidParameterError(f"spacing must be positive, got {spacing}")
    if wavelength <= 0:
        raise InvalidParameterError(f"wavelength must be positive, got {wavelength}")
    center = np.asarray(center, dtype=float)
    # offsets (i - (rows-1)/2) * spacing are exactly symmetric about zero
    ox = (np.arange(cols) - (cols - 1) / 2.0) * spacing
    oy = (np.arange(rows) - (rows - 1) / 2.0) * spacing
    gx, gy = np.meshgrid(ox, oy, indexing="xy")
    pos = np.column_stack([
        center[0] + gx.ravel(),
        center[1] + gy.ravel(),
        np.full(rows * cols, center[2]),
    ])
    return ArrayGeometry(pos, float(wavelength), float(spacing), float(boresight_gain))


def radiation_profile(theta, gain_tx):
    """Element power pattern: G_t cos(theta)^(G_t/2 - 1) on [0, pi/2], zero elsewhere."""
    theta = np.asarray(theta, dtype=float)
    inside = (theta >= 0.0) & (theta <= np.pi / 2)
    c = np.clip(np.cos(theta), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = gain_tx * c ** (gain_tx / 2.0 - 1.0)
    out = np.where(inside, val, 0.0)
    return out if out.ndim else float(out)


def channel_matrix(geom, users):
    g = geom.element_positions
    e = users.positions if isinstance(users, UserLayout) else np.asarray(users, dtype=float)
    diff = e[None, :, :] - g[:, None, :]  # (N, K, 3)
    h = np.linalg.norm(diff, axis=-1)
    if np.any(h == 0.0):
        raise SingularGeometryError("a user coincides with an array element")

    axis = np.asarray(geom.boresight_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    cos_t = np.clip(diff @ axis / h, -1.0, 1.0)
    theta = np.arccos(cos_t)
    azimuth = np.arctan2(diff[..., 1], diff[..., 0])

    gains = np.sqrt(radiation_profile(theta, geom.gain_tx)) * geom.wavelength / (4 * np.pi * h)
    phase = np.exp(-2j * np.pi * h / geom.wavelength)
    return ChannelMatrix(gains * phase, gains, h, theta, azimuth)


def default_user_ring(K, center=(2.5, 2.5), radius=2.0, height=2.0):
    """K devices evenly spaced on a horizontal circle (k-th at angle 2*pi*k/K)."""
    if K < 1:
        raise InvalidParameterError(f"need at least one user, got K={K}")
    ang = 2 * np.pi * np.arange(K) / K
    pos = np.column_stack([
        center[0] + radius * np.cos(ang),
        center[1] + radius * np.sin(ang),
        np.full(K, float(height)),
    ])
    return UserLayout(pos)
