"""Shared oracle constants and random-matrix helpers for the test suite."""

import numpy as np
import pytest

SQRT2 = np.sqrt(2.0)

# The target entangling gate written out by hand, independent of the
# library's exponential-based construction.
USQ = (
    np.array(
        [[1.0, 1.0, 0.0], [0.0, 0.0, -SQRT2], [-1.0, 1.0, 0.0]],
        dtype=complex,
    )
    / SQRT2
)

# Bare transition operators, built from scratch so operator tests do not
# lean on the module under test.  Basis row order (|0>, |2>, |3>).
def op(row: int, col: int) -> np.ndarray:
    m = np.zeros((3, 3), dtype=complex)
    m[row, col] = 1.0
    return m


Y20 = 1j * (op(1, 0) - op(0, 1))
Y23 = 1j * (op(1, 2) - op(2, 1))
X20 = op(1, 0) + op(0, 1)
X23 = op(1, 2) + op(2, 1)
ZHAT = np.diag([-1.0, 2.0, -1.0]).astype(complex)


def random_hermitian(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    return scale * 0.5 * (a + a.conj().T)


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


@pytest.fixture
def usq() -> np.ndarray:
    return USQ.copy()


def probe_gradient_fd(schedule, target, kind, fractions, penalty, n_probes, rng, h=1e-6):
    """Analytic gradient entries paired with central finite differences.

    Probes random (bin, control) coordinates of the penalized objective.
    Returns an (n_probes, 2) array of (analytic, finite-difference) pairs.
    """
    from pulseforge import ControlSchedule, gradient, penalized_performance

    g = gradient(schedule, target, kind, fractions, penalty)
    pairs = []
    for _ in range(n_probes):
        j = int(rng.integers(schedule.bins))
        k = int(rng.integers(4))
        up = schedule.u.copy()
        up[j, k] += h
        um = schedule.u.copy()
        um[j, k] -= h
        jp = penalized_performance(
            ControlSchedule(up, schedule.dt), target, kind, fractions, penalty
        )
        jm = penalized_performance(
            ControlSchedule(um, schedule.dt), target, kind, fractions, penalty
        )
        pairs.append((g[j, k], (jp - jm) / (2 * h)))
    return np.asarray(pairs)
