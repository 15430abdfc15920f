"""Inner twist map on the reduced invariant manifold, and transitions.

The inner map is the integrable shift (I, phi) -> (I, phi + nu(I)); one
application costs one section return, t_in = 2*pi / nu_p(I).  A
transition is the flow-realizable composition inner ∘ scattering ∘ inner
and costs one homoclinic flight time t_out.

nu(I) and nu_p(I) come from a data file (``I,nu,nu_p`` columns) since the
normal-form pipeline that produces them is upstream of this package; a
calibrated default table ships for demos (nu linear 6.1054 -> 6.0944 over
I in [0, 7], nu_p constant 2.0772 — approximate by construction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .newton_poly import NewtonPoly, newton_interpolate
from .ssm import (DEFAULT_FP_TOL, DEFAULT_MAX_ITER, OutOfRangeError, SSMModel,
                  apply_sm, wrap_2pi)

INNER_HEADER = "I,nu,nu_p"

#: paper-calibrated homoclinic flight-time interval
T_OUT_MIN = 5.936738
T_OUT_MAX = 6.000688

#: default planar frequency (midpoint of the calibrated interval)
NU_P_DEFAULT = 2.0772


class InnerRangeError(ValueError):
    """Action outside the inner model's tabulated range."""


class DomainExitError(RuntimeError):
    """A transition stage received a point outside its domain."""

    def __init__(self, stage: str, I: float):
        self.stage = stage
        self.I = I
        super().__init__(f"left the domain at the {stage} stage (I={I})")


@dataclass(frozen=True)
class InnerModel:
    """Interpolants of the inner shift nu(I) and planar frequency nu_p(I)."""

    nu: NewtonPoly
    nu_p: NewtonPoly

    def __post_init__(self):
        lo, hi = self.I_range
        scan = np.linspace(lo, hi, 257)
        if np.any(np.diff(self.nu(scan)) >= 0.0):
            raise ValueError("inner shift nu(I) must be strictly decreasing")
        nup = self.nu_p(scan)
        if np.any(nup <= 2.0) or np.any(nup >= 2.2):
            raise ValueError("planar frequency must stay within (2.0, 2.2)")

    @property
    def I_range(self):
        return float(np.min(self.nu.nodes)), float(np.max(self.nu.nodes))

    def check_I(self, I: float) -> float:
        I = float(I)
        lo, hi = self.I_range
        if not lo <= I <= hi:
            raise InnerRangeError(
                f"I={I} outside inner-model range [{lo}, {hi}]"
            )
        return I


def default_inner_model(I_top: float = 7.0) -> InnerModel:
    """Calibrated demo table: affine nu, constant nu_p."""
    nodes = np.linspace(0.0, I_top, 8)
    nu_vals = 6.1054 + (6.0944 - 6.1054) * nodes / 7.0
    nup_vals = np.full(nodes.size, NU_P_DEFAULT)
    return InnerModel(newton_interpolate(nodes, nu_vals),
                      newton_interpolate(nodes, nup_vals))


def load_inner_model(path) -> InnerModel:
    """Read an ``I,nu,nu_p`` table and interpolate it."""
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != INNER_HEADER:
            raise ValueError(
                f"{path}:1: expected header '{INNER_HEADER}', got '{header}'"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 values")
            rows.append([float(p) for p in parts])
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two table rows")
    rows.sort(key=lambda r: r[0])
    arr = np.array(rows)
    return InnerModel(newton_interpolate(arr[:, 0], arr[:, 1]),
                      newton_interpolate(arr[:, 0], arr[:, 2]))


def save_inner_model(im: InnerModel, path) -> None:
    nodes = im.nu.nodes
    with open(path, "w", encoding="ascii") as fh:
        fh.write(INNER_HEADER + "\n")
        for x in nodes:
            fh.write(
                f"{x:.17g},{float(im.nu(x)):.17g},{float(im.nu_p(x)):.17g}\n"
            )


def apply_inner(im: InnerModel, I: float, phi: float):
    """(I, phi) -> (I, phi + nu(I)); the action is returned bit-identical."""
    im.check_I(I)
    return I, float(wrap_2pi(phi + float(im.nu(I))))


def inner_time(im: InnerModel, I: float) -> float:
    """Section-return time 2*pi / nu_p(I)."""
    nup = float(im.nu_p(I))
    if nup <= 0.0:
        raise ValueError(f"nu_p({I}) = {nup} is not positive")
    return 2.0 * math.pi / nup


class TransitionResult(NamedTuple):
    I: float
    phi: float
    clipped: bool


def apply_transition(m: SSMModel, im: InnerModel, I: float, phi: float,
                     tol: float = DEFAULT_FP_TOL,
                     max_iter: int = DEFAULT_MAX_ITER) -> TransitionResult:
    """Inner, then scattering, then inner.

    The first inner step preserves I, so only the scattering stage can
    leave the domain (raised as DomainExitError).  An image with I above
    the domain top is still pushed through the closing inner step (nu
    extrapolates smoothly) and returned with ``clipped=True``.
    """
    I1, phi1 = apply_inner(im, I, phi)
    try:
        m.check_I(I1)
    except OutOfRangeError:
        raise DomainExitError("scattering", I1) from None
    I2, phi2 = apply_sm(m, I1, phi1, tol=tol, max_iter=max_iter)
    clipped = I2 > m.I_max
    # closing inner step; evaluate nu directly so a clipped action (slightly
    # past the top node) does not trip the range check
    phi3 = float(wrap_2pi(phi2 + float(im.nu(I2))))
    return TransitionResult(I2, phi3, clipped)


@dataclass(frozen=True)
class TimeModel:
    """Per-step time accounting for drift orbits.

    ``t_in`` is one section return, ``t_out`` one homoclinic flight.  The
    default t_out is the conservative top of the calibrated interval, so
    planner times are upper estimates.
    """

    t_in: float = 2.0 * math.pi / NU_P_DEFAULT
    t_out: float = T_OUT_MAX

    def __post_init__(self):
        if self.t_in <= 0.0:
            raise ValueError("t_in must be positive")
        if not T_OUT_MIN <= self.t_out <= T_OUT_MAX:
            raise ValueError(
                f"t_out must lie in [{T_OUT_MIN}, {T_OUT_MAX}]"
            )

    @classmethod
    def from_inner_model(cls, im: InnerModel, I: float | None = None,
                         t_out: float = T_OUT_MAX) -> "TimeModel":
        if I is None:
            lo, hi = im.I_range
            I = 0.5 * (lo + hi)
        return cls(t_in=inner_time(im, I), t_out=t_out)
