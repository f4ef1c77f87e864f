"""Exact linear algebra for the three-level NV / 13C subspace.

Everything in this package lives on the effective three-level manifold
spanned by (|0>, |2>, |3>), in that fixed row/column order.  |0> and |2>
are connected by the microwave (MW) transition, |2> and |3> by the
radio-frequency (RF) transition; level |1> is decoupled and never
represented.

All quantities are dimensionless: amplitudes in units of the maximum
Rabi amplitude Lambda, times in units of 1/Lambda.  Only the product
amplitude*time enters any propagator, so physical units are applied at
the presentation layer (CLI) and nowhere else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LEVELS",
    "ket",
    "sigma",
    "sigma_x",
    "sigma_y",
    "sigma_z",
    "SIGMA_X_20",
    "SIGMA_Y_20",
    "SIGMA_X_23",
    "SIGMA_Y_23",
    "SIGMA_Z_20",
    "SIGMA_Z_23",
    "Z_TOTAL",
    "IDENTITY",
    "effective_hamiltonian",
    "expm_unitary",
    "compose",
    "gate_fidelity",
    "PhysicalConstants",
    "NV_CONSTANTS",
]

# Physical level labels and their row/column positions.
LEVELS = (0, 2, 3)
_ROW = {0: 0, 2: 1, 3: 2}

# Hermiticity tolerance for generators handed to expm_unitary.
HERMITIAN_ATOL = 1e-10


def ket(level: int) -> np.ndarray:
    """Basis column vector for one of the levels 0, 2, 3."""
    if level not in _ROW:
        raise ValueError(f"level must be one of {LEVELS}, got {level!r}")
    v = np.zeros(3, dtype=complex)
    v[_ROW[level]] = 1.0
    return v


def sigma(p: int, q: int) -> np.ndarray:
    """Transition operator |p><q| on the (|0>,|2>,|3>) basis."""
    if p not in _ROW or q not in _ROW:
        raise ValueError(f"level indices must be in {LEVELS}, got ({p!r}, {q!r})")
    m = np.zeros((3, 3), dtype=complex)
    m[_ROW[p], _ROW[q]] = 1.0
    return m


def sigma_x(p: int, q: int) -> np.ndarray:
    """sigma_x^pq = |p><q| + |q><p|."""
    return sigma(p, q) + sigma(q, p)


def sigma_y(p: int, q: int) -> np.ndarray:
    """sigma_y^pq = i(|p><q| - |q><p|).

    With the fixed basis order this equals the standard Pauli y on the
    (0,2) block but minus the standard Pauli y on the (2,3) block; the
    sign asymmetry is what puts the printed signs into the sequential
    gate, so do not "fix" it.
    """
    return 1j * (sigma(p, q) - sigma(q, p))


def sigma_z(p: int, q: int) -> np.ndarray:
    """sigma_z^pq = |p><p| - |q><q|."""
    return sigma(p, p) - sigma(q, q)


SIGMA_X_20 = sigma_x(2, 0)
SIGMA_Y_20 = sigma_y(2, 0)
SIGMA_X_23 = sigma_x(2, 3)
SIGMA_Y_23 = sigma_y(2, 3)
SIGMA_Z_20 = sigma_z(2, 0)
SIGMA_Z_23 = sigma_z(2, 3)

# Z_TOTAL = diag(-1, 2, -1); the detuning drift acts through Z_TOTAL/3.
Z_TOTAL = SIGMA_Z_20 + SIGMA_Z_23

IDENTITY = np.eye(3, dtype=complex)


def effective_hamiltonian(
    delta: float, u_m: float, theta_m: float, u_r: float, theta_r: float
) -> np.ndarray:
    """Effective three-level Hamiltonian of the doubly driven system.

    Parameters
    ----------
    delta : float
        Common detuning of both drives, in units of Lambda.
    u_m, u_r : float
        MW and RF Rabi amplitudes (>= 0), in units of Lambda.
    theta_m, theta_r : float
        Drive phases in radians.

    Returns
    -------
    ndarray
        Hermitian 3x3 matrix
        (delta/3) Z_TOTAL
        - (u_m/2)(cos(theta_m) sigma_x^20 + sin(theta_m) sigma_y^20)
        - (u_r/2)(cos(theta_r) sigma_x^23 + sin(theta_r) sigma_y^23).
    """
    if u_m < 0 or u_r < 0:
        raise ValueError(f"amplitudes must be non-negative, got u_m={u_m}, u_r={u_r}")
    h = (delta / 3.0) * Z_TOTAL
    h = h - (u_m / 2.0) * (np.cos(theta_m) * SIGMA_X_20 + np.sin(theta_m) * SIGMA_Y_20)
    h = h - (u_r / 2.0) * (np.cos(theta_r) * SIGMA_X_23 + np.sin(theta_r) * SIGMA_Y_23)
    return h


def expm_unitary(hamiltonian: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(-i * t * H) for a Hermitian generator H.

    Uses the eigendecomposition of H, which is exact for these 3x3
    generators (no series truncation), so products of many propagators
    stay unitary to machine precision.
    """
    h = np.asarray(hamiltonian, dtype=complex)
    if h.shape != (3, 3):
        raise ValueError(f"expected a 3x3 generator, got shape {h.shape}")
    if np.max(np.abs(h - h.conj().T)) > HERMITIAN_ATOL:
        raise ValueError("generator is not Hermitian within tolerance")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def compose(factors) -> np.ndarray:
    """Time-ordered product of propagators.

    ``factors[0]`` acts first, so the result is U_N ... U_2 U_1.
    """
    mats = list(factors)
    if not mats:
        raise ValueError("compose needs at least one factor")
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = np.asarray(m, dtype=complex) @ out
    return out


def _check_unitary(u: np.ndarray, name: str, atol: float = 1e-8) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got shape {u.shape}")
    if np.max(np.abs(u.conj().T @ u - IDENTITY)) > atol:
        raise ValueError(f"{name} is not unitary within tolerance {atol}")
    return u


def gate_fidelity(u_actual: np.ndarray, u_ideal: np.ndarray) -> float:
    """Gate overlap fidelity F = |Tr(U_a^dag U_i) / 3|^(1/2).

    The outer square root is deliberate: it is the convention under
    which the sequential gate's quadratic loss coefficient comes out as
    5 pi^2 / 96, and all robustness curves in this package use it.
    """
    ua = _check_unitary(u_actual, "u_actual")
    ui = _check_unitary(u_ideal, "u_ideal")
    overlap = abs(np.trace(ua.conj().T @ ui)) / 3.0
    # |Tr| <= 3 for unitaries; tiny float overshoot is clipped.
    return float(min(np.sqrt(overlap), 1.0))


@dataclass(frozen=True)
class PhysicalConstants:
    """Documented NV transition frequencies (annotation only).

    The effective model is frequency-free; these values never enter a
    computation.  They are the measured |0>-|2> (MW), |2>-|3> (RF) and
    |0>-|1> (hyperfine) splittings used when annotating outputs with
    physical units.
    """

    mw_transition_hz: float = 2.88e9
    rf_transition_hz: float = 130e6
    hyperfine_splitting_hz: float = 2e6


NV_CONSTANTS = PhysicalConstants()
