"""Macrospin device model: parameters, fields, torque and magnetoresistance.

Units are SI throughout. Magnetic fields are expressed in tesla (the
permeability of free space is absorbed into the anisotropy constants),
magnetization is the unit vector m, currents in amperes.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .constants import E_CHARGE, GAMMA_DEFAULT, HBAR
from .errors import ConfigError

__all__ = [
    "DeviceParams",
    "effective_field",
    "spin_torque_prefactor",
    "llgs_rhs",
    "mtj_resistance",
    "unit",
]


def unit(v) -> np.ndarray:
    """Normalize a 3-vector to unit length."""
    a = np.asarray(v, dtype=np.float64)
    n = np.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
    if n == 0.0 or not np.isfinite(n):
        raise ConfigError("cannot normalize zero or non-finite vector")
    return a / n


def _vec3(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.shape != (3,):
        raise ConfigError(f"{name} must be a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigError(f"{name} must be finite")
    return a


def check_magnetization(m, tol: float = 1e-9) -> np.ndarray:
    """Validate |m| = 1 within tol and return the array."""
    a = _vec3(m, "m")
    n = np.sqrt(a @ a)
    if abs(n - 1.0) > tol:
        raise ConfigError(f"magnetization must be unit length, |m| = {n!r}")
    return a


@dataclass
class DeviceParams:
    """Parameters of one magnetic tunnel junction oscillator.

    alpha        Gilbert damping constant (dimensionless, > 0)
    gamma        gyromagnetic ratio [rad s^-1 T^-1]
    ms           saturation magnetization [A/m]
    volume       free-layer volume [m^3]
    epsilon      spin-torque polarization efficiency (dimensionless)
    k1           anisotropy tensor diagonal [T per unit m]; the default
                 is an easy axis along x
    k2           demagnetization-like tensor diagonal [T per unit m];
                 the default is an easy plane (z penalized)
    m_p          unit polarizer / reference-layer direction
    r_p, r_ap    parallel / antiparallel resistance [ohm]
    temperature  bath temperature [K]
    """

    alpha: float = 0.045
    gamma: float = GAMMA_DEFAULT
    ms: float = 8.0e5
    volume: float = 5.04e-23
    epsilon: float = 0.5
    k1: np.ndarray = field(default_factory=lambda: np.array([1.3e-3, 0.0, 0.0]))
    k2: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -1.0]))
    m_p: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    r_p: float = 250.0
    r_ap: float = 750.0
    temperature: float = 300.0

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if not self.gamma > 0.0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if not self.ms > 0.0:
            raise ConfigError(f"ms must be > 0, got {self.ms}")
        if not self.volume > 0.0:
            raise ConfigError(f"volume must be > 0, got {self.volume}")
        if self.temperature < 0.0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")
        self.k1 = _vec3(self.k1, "k1")
        self.k2 = _vec3(self.k2, "k2")
        self.m_p = _vec3(self.m_p, "m_p")
        n = np.sqrt(self.m_p @ self.m_p)
        if abs(n - 1.0) > 1e-12:
            raise ConfigError(f"m_p must be unit length within 1e-12, |m_p| = {n!r}")
        if not 0.0 < self.r_p < self.r_ap:
            raise ConfigError(
                f"resistances must satisfy 0 < r_p < r_ap, got r_p={self.r_p}, r_ap={self.r_ap}")

    @property
    def r_av(self) -> float:
        """Mean resistance (r_p + r_ap)/2 [ohm]."""
        return 0.5 * (self.r_p + self.r_ap)

    @property
    def dr(self) -> float:
        """Resistance swing r_ap - r_p [ohm]."""
        return self.r_ap - self.r_p


def effective_field(m, p: DeviceParams, h_ext=None) -> np.ndarray:
    """Effective field h_ext + K1 m + K2 m [T].

    K1 and K2 act componentwise as tensor diagonals, so the default
    device contributes (k1 m_x, 0, -k2 m_z). The field extends linearly
    off the unit sphere, so m is only checked for finiteness here;
    integrator entry points enforce unit length.
    """
    m = _vec3(m, "m")
    if h_ext is None:
        hx = hy = hz = 0.0
    else:
        h = _vec3(h_ext, "h_ext")
        hx, hy, hz = h[0], h[1], h[2]
    fx, fy, fz = _kernels.field_core(
        m[0], m[1], m[2],
        p.k1[0], p.k1[1], p.k1[2],
        p.k2[0], p.k2[1], p.k2[2],
        hx, hy, hz)
    return np.array([fx, fy, fz])


def spin_torque_prefactor(i_bias: float, p: DeviceParams) -> float:
    """Spin-torque field amplitude beta = hbar I / (2 e Ms V) [T].

    Linear in the instantaneous current, so network code evaluates it
    per step from the total current.
    """
    return HBAR * i_bias / (2.0 * E_CHARGE * p.ms * p.volume)


def stt_coefficient(p: DeviceParams) -> float:
    """beta * epsilon per ampere of current [T/A]; kernel-side constant."""
    return HBAR * p.epsilon / (2.0 * E_CHARGE * p.ms * p.volume)


def llgs_rhs(m, h_eff, beta: float, p: DeviceParams) -> np.ndarray:
    """dm/dt [rad/s] of the explicit-form equation of motion.

    Landau-Lifshitz form with the 1/(1+alpha^2) prefactor, including the
    in-plane spin-torque term beta*epsilon m x (m_p x m) and its
    damping-induced field-like correction. beta is the spin-torque field
    amplitude [T] (see spin_torque_prefactor).
    """
    m = check_magnetization(m)
    h = _vec3(h_eff, "h_eff")
    ox, oy, oz = _kernels.rhs_core(
        m[0], m[1], m[2], h[0], h[1], h[2],
        p.m_p[0], p.m_p[1], p.m_p[2],
        p.alpha, p.gamma, beta * p.epsilon)
    return np.array([ox, oy, oz])


def mtj_resistance(m, p: DeviceParams) -> float:
    """Tunnel junction resistance R(m) = R_av - (dR/2) (m . m_p) [ohm].

    Linear in m . m_p: parallel alignment gives r_p, antiparallel r_ap.
    """
    m = check_magnetization(m)
    mdotp = float(m @ p.m_p)
    return float(_kernels.resistance_core(mdotp, p.r_av, 0.5 * p.dr))
