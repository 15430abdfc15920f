"""Adaptive RKF7(8) integration of the RTBP field with section events.

The per-step tolerance is absolute, measured in the max norm of the
embedded error estimate.  The propagated solution is the 8th-order one
(local extrapolation), so the actual per-step error is typically far
below the estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .rtbp import SingularityError


class StepUnderflowError(RuntimeError):
    """Step control drove h below h_min."""


class NoCrossingError(RuntimeError):
    """No section crossing found within the search horizon."""


@dataclass(frozen=True)
class IntegratorConfig:
    local_tol: float = 1e-14
    h_init: float = 1e-3
    h_min: float = 1e-12
    h_max: float = 0.5
    #: event-search horizon; several section returns at nu_p ~ 2.08
    t_max: float = 50.0

    def __post_init__(self):
        if self.local_tol <= 0.0:
            raise ValueError("local_tol must be positive")
        if not self.h_min <= self.h_init <= self.h_max:
            raise ValueError("require h_min <= h_init <= h_max")


@dataclass(frozen=True)
class SectionEvent:
    """XZ-plane crossing (Y = 0) with required sign of VY."""

    direction: int = +1

    def __post_init__(self):
        if self.direction not in (+1, -1):
            raise ValueError("direction must be +1 or -1")


def _raise_for_status(status, context):
    if status == _kernels.STATUS_UNDERFLOW:
        raise StepUnderflowError(f"step size underflow during {context}")
    if status == _kernels.STATUS_SINGULAR:
        raise SingularityError(f"trajectory hit the singularity guard during {context}")


def integrate(state, mu: float, t_final: float,
              cfg: IntegratorConfig = IntegratorConfig()) -> np.ndarray:
    """State after a signed duration ``t_final`` (0 returns a copy)."""
    y0 = np.asarray(state, dtype=float).copy()
    y, _h, status = _kernels.propagate(
        y0, mu, float(t_final), cfg.local_tol, cfg.h_init, cfg.h_min,
        cfg.h_max,
    )
    _raise_for_status(status, "integration")
    return y


def integrate_to_section(state, mu: float, ev: SectionEvent = SectionEvent(),
                         cfg: IntegratorConfig = IntegratorConfig()):
    """Next XZ-plane crossing with sign(VY) = ev.direction.

    Returns (state at the crossing, crossing time).  The refined state
    satisfies |Y| < 1e-12.  A crossing already at t = 0 is skipped.
    """
    y0 = np.asarray(state, dtype=float).copy()
    y, t_cross, status = _kernels.section_crossing(
        y0, mu, ev.direction, cfg.local_tol, cfg.h_init, cfg.h_min,
        cfg.h_max, cfg.t_max,
    )
    if status == _kernels.STATUS_NO_CROSSING:
        raise NoCrossingError(
            f"no XZ-plane crossing with sign(VY)={ev.direction:+d} within "
            f"t_max={cfg.t_max}"
        )
    _raise_for_status(status, "section search")
    if abs(y[1]) >= 1e-12:
        raise NoCrossingError(
            f"event refinement stalled at |Y|={abs(y[1]):.3e}"
        )
    return y, t_cross
