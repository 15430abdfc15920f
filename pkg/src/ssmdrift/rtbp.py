"""Spatial circular restricted three-body problem in the rotating frame.

Conventions (important, since many references flip them): the larger
primary sits at P1 = (mu, 0, 0) and the smaller at P2 = (mu - 1, 0, 0),
with the collinear point L1 between them.  States are float64 arrays
``[X, Y, Z, VX, VY, VZ]``; momentum states are ``[X, Y, Z, PX, PY, PZ]``
with PX = VX - Y, PY = VY + X, PZ = VZ.  All quantities are adimensional
(primary separation 1, primary period 2*pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

#: Sun-Earth mass ratio (smaller primary / total).
SUN_EARTH_MU = 3.040423398444176e-6

#: Hard floor on the distance to either primary.
SINGULARITY_RADIUS = _kernels.SINGULARITY_RADIUS


class SingularityError(ValueError):
    """State is within the guard radius of a primary."""


class EigenstructureError(RuntimeError):
    """L1 spectrum is not one real pair plus two imaginary pairs."""


@dataclass(frozen=True)
class Frequencies:
    """Linear rates at L1: real saddle rate and the two center frequencies."""

    nu_h: float
    nu_p: float
    nu_v: float


def check_mu(mu: float) -> float:
    if not 0.0 < mu < 0.5:
        raise ValueError(f"mass ratio must lie in (0, 0.5), got {mu}")
    return float(mu)


def _primary_distances(pos, mu):
    x, y, z = pos[0], pos[1], pos[2]
    r1 = math.sqrt((x - mu) ** 2 + y * y + z * z)
    r2 = math.sqrt((x - mu + 1.0) ** 2 + y * y + z * z)
    return r1, r2


def _check_not_singular(pos, mu):
    r1, r2 = _primary_distances(pos, mu)
    if r1 < SINGULARITY_RADIUS or r2 < SINGULARITY_RADIUS:
        raise SingularityError(
            f"point within {SINGULARITY_RADIUS} of a primary (r1={r1:.3e}, "
            f"r2={r2:.3e})"
        )
    return r1, r2


def effective_potential(pos, mu: float) -> float:
    """Omega(X, Y, Z) = (X^2 + Y^2)/2 + (1-mu)/r1 + mu/r2."""
    r1, r2 = _check_not_singular(pos, mu)
    x, y = pos[0], pos[1]
    return 0.5 * (x * x + y * y) + (1.0 - mu) / r1 + mu / r2


def potential_gradient(pos, mu: float) -> np.ndarray:
    """Analytic gradient of the effective potential."""
    r1, r2 = _check_not_singular(pos, mu)
    x, y, z = pos[0], pos[1], pos[2]
    inv13 = 1.0 / r1**3
    inv23 = 1.0 / r2**3
    omu = 1.0 - mu
    gx = x - omu * (x - mu) * inv13 - mu * (x - mu + 1.0) * inv23
    gy = y - omu * y * inv13 - mu * y * inv23
    gz = -omu * z * inv13 - mu * z * inv23
    return np.array([gx, gy, gz])


def vector_field(state, mu: float) -> np.ndarray:
    """Time derivative of a rotating-frame state.

    (VX, VY, VZ, Omega_X + 2 VY, Omega_Y - 2 VX, Omega_Z).
    """
    _check_not_singular(state, mu)
    out = np.empty(6)
    _kernels.rtbp_field(np.asarray(state, dtype=float), mu, out)
    return out


def jacobi_constant(state, mu: float) -> float:
    """C = 2 Omega - (VX^2 + VY^2 + VZ^2); related to H by H = -C/2."""
    v2 = state[3] ** 2 + state[4] ** 2 + state[5] ** 2
    return 2.0 * effective_potential(state, mu) - v2


def to_momenta(state) -> np.ndarray:
    """Velocity state -> momentum state (exact linear change)."""
    s = np.asarray(state, dtype=float)
    return np.array(
        [s[0], s[1], s[2], s[3] - s[1], s[4] + s[0], s[5]]
    )


def to_velocities(mstate) -> np.ndarray:
    """Momentum state -> velocity state (inverse of :func:`to_momenta`)."""
    m = np.asarray(mstate, dtype=float)
    return np.array(
        [m[0], m[1], m[2], m[3] + m[1], m[4] - m[0], m[5]]
    )


def hamiltonian(mstate, mu: float) -> float:
    """H = (PX^2+PY^2+PZ^2)/2 + Y PX - X PY - (1-mu)/r1 - mu/r2."""
    r1, r2 = _check_not_singular(mstate, mu)
    x, y = mstate[0], mstate[1]
    px, py, pz = mstate[3], mstate[4], mstate[5]
    kin = 0.5 * (px * px + py * py + pz * pz)
    return kin + y * px - x * py - (1.0 - mu) / r1 - mu / r2


def _dOmega_dX_axis(x, mu):
    # on the X axis; signs handled via the absolute distances
    d1 = x - mu
    d2 = x - mu + 1.0
    r1 = abs(d1)
    r2 = abs(d2)
    return x - (1.0 - mu) * d1 / r1**3 - mu * d2 / r2**3


def _d2Omega_dX2_axis(x, mu):
    r1 = abs(x - mu)
    r2 = abs(x - mu + 1.0)
    return 1.0 + 2.0 * (1.0 - mu) / r1**3 + 2.0 * mu / r2**3


def locate_L1(mu: float) -> float:
    """X coordinate of the collinear point between the primaries.

    Root of dOmega/dX on (mu-1, mu): bisection down to a 1e-10 bracket,
    then a few Newton steps.  The residual is driven below 1e-14.
    """
    check_mu(mu)
    pad = 1e-9
    lo = mu - 1.0 + pad
    hi = mu - pad
    flo = _dOmega_dX_axis(lo, mu)
    fhi = _dOmega_dX_axis(hi, mu)
    if not (flo < 0.0 < fhi):
        raise RuntimeError("L1 bracket failed; mass ratio out of expected range")
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        fm = _dOmega_dX_axis(mid, mu)
        if fm == 0.0:
            return mid
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(5):
        fx = _dOmega_dX_axis(x, mu)
        if fx == 0.0:
            break
        x -= fx / _d2Omega_dX2_axis(x, mu)
    if abs(_dOmega_dX_axis(x, mu)) >= 1e-14:
        raise RuntimeError("L1 Newton polish did not reach 1e-14 residual")
    return x


def l1_state(mu: float) -> np.ndarray:
    """Zero-velocity state at L1."""
    return np.array([locate_L1(mu), 0.0, 0.0, 0.0, 0.0, 0.0])


def linear_frequencies(mu: float) -> Frequencies:
    """Eigen-rates of the linearization at L1.

    The 6x6 system splits into a planar 4x4 block and a decoupled vertical
    2x2 block, so the spectrum comes from a quadratic in lambda^2 plus
    lambda^2 = Omega_ZZ; no general eigensolver is needed.
    """
    x = locate_L1(mu)
    r1 = abs(x - mu)
    r2 = abs(x - mu + 1.0)
    c2 = (1.0 - mu) / r1**3 + mu / r2**3
    if c2 <= 1.0:
        raise EigenstructureError(
            f"expected saddle x center x center at L1 (c2={c2:.6f} <= 1)"
        )
    # planar block: Lam^2 + (2 - c2) Lam + (1 + 2 c2)(1 - c2) = 0
    disc = 9.0 * c2 * c2 - 8.0 * c2
    sq = math.sqrt(disc)
    lam_pos = 0.5 * ((c2 - 2.0) + sq)
    lam_neg = 0.5 * ((c2 - 2.0) - sq)
    if not (lam_pos > 0.0 > lam_neg):
        raise EigenstructureError("planar block is not of saddle x center type")
    return Frequencies(
        nu_h=math.sqrt(lam_pos),
        nu_p=math.sqrt(-lam_neg),
        nu_v=math.sqrt(c2),
    )
