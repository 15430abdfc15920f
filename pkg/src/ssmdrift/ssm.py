"""Series model of the scattering map on the reduced invariant manifold.

The map (I, phi) -> (I', phi') derives from a generating function
``I*phi' + Omega(I) + Ltilde(I, phi')`` whose oscillatory part is a
Fourier series in phi' (even harmonics only, by the Z -> -Z symmetry)
with Newton-polynomial coefficients in I:

    Ltilde(I, phi') = sum_n [ -B_n(I)/n cos(n phi') + A_n(I)/n sin(n phi') ]

so that dLtilde/dphi' = sum_n [ A_n cos(n phi') + B_n sin(n phi') ].
The map itself is implicit:

    phi = phi' + omega(I) + dLtilde/dI(I, phi'),    omega = Omega'
    I'  = I + dLtilde/dphi'(I, phi')

and is applied by fixed-point iteration in phi'.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels
from .grid import ScatteringGrid
from .newton_poly import NewtonPoly, divided_differences

_TWO_PI = 2.0 * math.pi

#: open lower bound of the model domain in I
I_DOMAIN_FLOOR = 1e-9

DEFAULT_FP_TOL = 1e-5
DEFAULT_MAX_ITER = 50
DIAG_FP_TOL = 1e-9


class FitError(ValueError):
    """Requested degrees incompatible with the available grid."""


class ConvergenceError(RuntimeError):
    """Fixed-point iteration for phi' did not converge."""


class OutOfRangeError(ValueError):
    """Query outside the model's fitted I-interval."""


class SingularDenominatorError(ZeroDivisionError):
    """Twist denominator 1 + d2L/dphi'dI vanished."""


class ResonanceError(ValueError):
    """Rotation number resonant for one of the model harmonics."""


def wrap_2pi(x):
    return np.mod(x, _TWO_PI)


def wrap_pm_pi(x):
    """Reduce an angle difference to [-pi, pi)."""
    return np.mod(np.asarray(x) + math.pi, _TWO_PI) - math.pi


@dataclass(frozen=True, eq=False)
class SSMModel:
    """Fitted scattering-map series.

    ``a[k]``/``b[k]`` hold the I-polynomials of the cosine/sine coefficient
    of harmonic ``harmonics[k]`` (of dLtilde/dphi').  All a/b polynomials
    share one node vector; when that vector starts at I=0 the leading
    divided differences must vanish (the map degenerates to a pure phase
    shift on the bottom circle).
    """

    harmonics: tuple
    a: tuple
    b: tuple
    omega: NewtonPoly
    I_max: float
    fit_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ns = tuple(int(n) for n in self.harmonics)
        if not ns or any(n <= 0 or n % 2 for n in ns):
            raise ValueError("harmonics must be positive even integers")
        if list(ns) != sorted(set(ns)):
            raise ValueError("harmonics must be strictly increasing")
        if len(self.a) != len(ns) or len(self.b) != len(ns):
            raise ValueError("one coefficient polynomial pair per harmonic")
        nodes = self.a[0].nodes
        for p in (*self.a, *self.b):
            if p.nodes.shape != nodes.shape or np.any(p.nodes != nodes):
                raise ValueError("all harmonic polynomials must share nodes")
            if nodes[0] == 0.0 and p.dd[0] != 0.0:
                raise ValueError("coefficients must vanish at I=0")
        if self.I_max <= 0.0:
            raise ValueError("I_max must be positive")
        object.__setattr__(self, "harmonics", ns)
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "b", tuple(self.b))

    @property
    def N(self) -> int:
        return max(self.harmonics)

    @property
    def L(self) -> int:
        return self.a[0].degree

    @cached_property
    def _packed(self):
        n_arr = np.array(self.harmonics, dtype=np.int64)
        a_dd = np.ascontiguousarray([p.dd for p in self.a])
        b_dd = np.ascontiguousarray([p.dd for p in self.b])
        ab_nodes = self.a[0].nodes
        return n_arr, a_dd, b_dd, ab_nodes, self.omega.dd, self.omega.nodes

    def coeff(self, n: int):
        """(A_n poly, B_n poly) for harmonic ``n``."""
        k = self.harmonics.index(n)
        return self.a[k], self.b[k]

    def check_I(self, I: float) -> float:
        I = float(I)
        if not I_DOMAIN_FLOOR < I <= self.I_max:
            raise OutOfRangeError(
                f"I={I} outside model domain ({I_DOMAIN_FLOOR}, {self.I_max}]"
            )
        return I


@dataclass(frozen=True)
class SeriesDerivs:
    gen_tilde: float
    d_dphi: float
    d_dI: float
    d2_dI2: float
    d2_dphi_dI: float


@dataclass(frozen=True)
class ErrorReport:
    """Max discrepancies of the series against a sample grid."""

    eps_I: float
    eps_phi: float
    per_torus: tuple  # (I_level, eps_I, eps_phi) rows

    def __post_init__(self):
        if self.eps_I < 0.0 or self.eps_phi < 0.0:
            raise ValueError("error magnitudes are non-negative")


# ---------------------------------------------------------------------------
# fitting


def fit_fourier_torus(phi_prime, g):
    """Real Fourier coefficients of equispaced samples ``g``.

    Returns (A, B) arrays of length M/2 + 1; entry n holds the harmonic-n
    coefficient, entry 0 the sample mean (B[0] = 0).  A possible common
    offset of the phi' ladder is compensated exactly; at the Nyquist
    harmonic only the cosine part is observable.
    """
    phi_prime = np.asarray(phi_prime, dtype=float)
    g = np.asarray(g, dtype=float)
    m = g.size
    if m < 2 or m % 2 or phi_prime.shape != g.shape:
        raise ValueError("need an even number of paired samples")
    spec = np.fft.rfft(g)
    half = m // 2
    A = np.zeros(half + 1)
    B = np.zeros(half + 1)
    A[0] = spec[0].real / m
    phi0 = phi_prime[0]
    for n in range(1, half + 1):
        c = 2.0 * spec[n] / m
        if phi0 != 0.0:
            c *= cmath.exp(-1j * n * phi0)
        if n == half:
            A[n] = 0.5 * c.real
        else:
            A[n] = c.real
            B[n] = -c.imag
    return A, B


def _dd_truncated(nodes, values, degree):
    dd = divided_differences(nodes, values)
    return NewtonPoly(nodes[: degree + 1], dd[: degree + 1])


def fit_ssm(grid: ScatteringGrid, N: int, L: int,
            L_omega: int | None = None) -> SSMModel:
    """Fit the series model to a sample grid.

    Per torus, the action change I' - I is Fourier-transformed; odd
    harmonics are hard-zeroed (their pre-zeroing magnitude is kept in
    ``fit_meta['odd_max']`` as a data-quality metric).  Coefficients are
    then interpolated across I in Newton form, with a free (0, 0) node
    prepended when L >= 1.  The frequency is extracted last, per torus, as
    the sample average of phi - phi' - dLtilde/dI using the completed
    series, then interpolated over the torus levels themselves.
    """
    tori = grid.tori
    T = len(tori)
    if L_omega is None:
        L_omega = min(L, T - 1)
    if N < 2 or N % 2:
        raise FitError(f"Fourier degree N={N} must be a positive even integer")
    min_count = min(t.count for t in tori)
    if N > min_count // 2:
        raise FitError(
            f"degree too high: N={N} exceeds samples/2 = {min_count // 2}"
        )
    if L < 0 or L_omega < 0:
        raise FitError("polynomial degrees must be non-negative")
    if T < L:
        raise FitError(f"insufficient tori: need >= {L} for degree L={L}")
    if T < L_omega + 1:
        raise FitError(
            f"insufficient tori: need >= {L_omega + 1} for omega degree "
            f"{L_omega}"
        )

    levels = grid.I_levels
    coeffs = [fit_fourier_torus(t.phi_prime, t.I_prime - t.I_level)
              for t in tori]
    odd_max = 0.0
    for A, B in coeffs:
        for n in range(1, A.size, 2):
            odd_max = max(odd_max, abs(A[n]), abs(B[n]))

    harmonics = tuple(range(2, N + 1, 2))
    if L >= 1:
        ab_nodes = np.concatenate(([0.0], levels))
        pad = [0.0]
    else:
        ab_nodes = levels
        pad = []
    a_polys = []
    b_polys = []
    for n in harmonics:
        a_vals = np.array(pad + [c[0][n] for c in coeffs])
        b_vals = np.array(pad + [c[1][n] for c in coeffs])
        a_polys.append(_dd_truncated(ab_nodes, a_vals, L))
        b_polys.append(_dd_truncated(ab_nodes, b_vals, L))

    # frequency: needs dLtilde/dI from the completed harmonic series
    n_arr = np.array(harmonics, dtype=np.int64)
    a_dd = np.ascontiguousarray([p.dd for p in a_polys])
    b_dd = np.ascontiguousarray([p.dd for p in b_polys])
    nodes_trunc = a_polys[0].nodes
    w_vals = np.empty(T)
    w_spread = np.empty(T)
    for t_idx, t in enumerate(tori):
        est_sin = 0.0
        est_cos = 0.0
        raw = np.empty(t.count)
        for j in range(t.count):
            _g, _dp, dI, _d2, _dpd = _kernels.series_eval(
                t.I_level, t.phi_prime[j], n_arr, a_dd, b_dd, nodes_trunc
            )
            r = t.phi[j] - t.phi_prime[j] - dI
            raw[j] = r
            est_sin += math.sin(r)
            est_cos += math.cos(r)
        w = math.atan2(est_sin, est_cos) % _TWO_PI
        w_vals[t_idx] = w
        w_spread[t_idx] = np.max(np.abs(wrap_pm_pi(raw - w)))
    omega = _dd_truncated(levels, w_vals, L_omega)

    meta = {
        "n_tori": T,
        "samples": tuple(int(t.count) for t in tori),
        "levels": tuple(float(lv) for lv in levels),
        "odd_max": float(odd_max),
        "omega_spread": tuple(float(s) for s in w_spread),
    }
    return SSMModel(harmonics, tuple(a_polys), tuple(b_polys), omega,
                    I_max=float(levels[-1]), fit_meta=meta)


# ---------------------------------------------------------------------------
# evaluation


def eval_derivs(m: SSMModel, I: float, phi_prime: float) -> SeriesDerivs:
    """Oscillatory term and the four partials used by the map and twist."""
    n_arr, a_dd, b_dd, ab_nodes, _wd, _wn = m._packed
    gen, dphi, dI, dI2, dpd = _kernels.series_eval(
        float(I), float(phi_prime), n_arr, a_dd, b_dd, ab_nodes
    )
    return SeriesDerivs(gen, dphi, dI, dI2, dpd)


def apply_sm(m: SSMModel, I: float, phi: float, tol: float = DEFAULT_FP_TOL,
             max_iter: int = DEFAULT_MAX_ITER):
    """One application of the scattering map; returns (I', phi' mod 2pi)."""
    I = m.check_I(I)
    n_arr, a_dd, b_dd, ab_nodes, w_dd, w_nodes = m._packed
    Ip, phip, iters, ok = _kernels.sm_apply(
        I, float(phi), n_arr, a_dd, b_dd, ab_nodes, w_dd, w_nodes,
        float(tol), int(max_iter),
    )
    if not ok:
        raise ConvergenceError(
            f"fixed point for phi' did not reach {tol} in {max_iter} "
            f"iterations at (I={I}, phi={phi})"
        )
    return Ip, float(wrap_2pi(phip))


def approximation_error(m: SSMModel, grid: ScatteringGrid,
                        tol: float = DIAG_FP_TOL) -> ErrorReport:
    """Max |I' - I'_data| and |phi' - phi'_data| over all grid points."""
    if not grid.tori:
        raise ValueError("grid is empty")
    per = []
    eps_I = 0.0
    eps_phi = 0.0
    for t in grid.tori:
        ei = 0.0
        ep = 0.0
        for j in range(t.count):
            Ip, phip = apply_sm(m, t.I_level, t.phi[j], tol=tol)
            ei = max(ei, abs(Ip - t.I_prime[j]))
            ep = max(ep, abs(float(wrap_pm_pi(phip - t.phi_prime[j]))))
        per.append((t.I_level, ei, ep))
        eps_I = max(eps_I, ei)
        eps_phi = max(eps_phi, ep)
    return ErrorReport(eps_I, eps_phi, tuple(per))


def phase_shift_bounds(m: SSMModel, I: float, n_samples: int = 256):
    """Enclosure of the angle advance: -omega(I) -+ max |dLtilde/dI|."""
    if n_samples < 64:
        raise ValueError("need at least 64 samples for the enclosure")
    w = float(m.omega(I))
    mx = 0.0
    for phip in np.linspace(0.0, _TWO_PI, n_samples, endpoint=False):
        mx = max(mx, abs(eval_derivs(m, I, phip).d_dI))
    return (-w - mx, -w + mx)


def twist(m: SSMModel, I: float, phi_prime: float) -> float:
    """dphi'/dI = -(omega' + d2L/dI2) / (1 + d2L/dphi'dI)."""
    d = eval_derivs(m, I, phi_prime)
    denom = 1.0 + d.d2_dphi_dI
    if abs(denom) <= 1e-8:
        raise SingularDenominatorError(
            f"twist denominator {denom:.3e} at (I={I}, phi'={phi_prime})"
        )
    _w, w1, _w2 = m.omega.eval_with_derivs(I)
    return -(w1 + d.d2_dI2) / denom


def kam_first_order(m: SSMModel, I0: float) -> dict:
    """First-order invariant-curve coefficients h_n, n = +-harmonics.

    With C_n = (A_n(I0) - i B_n(I0)) / 2, the curve I = I0 + h(phi) with
    h(phi) = sum h_n e^{i n phi} has h_n = -C_n / (e^{i n omega0} - 1),
    h_{-n} = conj(h_n), valid away from resonances.
    """
    w0 = float(m.omega(I0))
    h = {}
    for k, n in enumerate(m.harmonics):
        denom = cmath.exp(1j * n * w0) - 1.0
        if abs(denom) <= 1e-6:
            raise ResonanceError(
                f"harmonic n={n} resonant at omega={w0:.6f} "
                f"(|e^(i n omega) - 1| = {abs(denom):.2e})"
            )
        C = 0.5 * (float(m.a[k](I0)) - 1j * float(m.b[k](I0)))
        h[n] = -C / denom
        h[-n] = h[n].conjugate()
    return h


def kam_curve(h: dict, phi) -> np.ndarray:
    """Real curve offset h(phi) = sum h_n e^{i n phi}."""
    phi = np.asarray(phi, dtype=float)
    out = np.zeros(phi.shape, dtype=complex)
    for n, hn in h.items():
        out += hn * np.exp(1j * n * phi)
    out = out.real
    return out if out.shape else float(out)


def locate_resonance(m: SSMModel, p: int, q: int,
                     scan_points: int = 2048) -> float:
    """I with omega(I)/pi = p/q, by bisection on the frequency polynomial."""
    if q <= 0:
        raise ValueError("q must be positive")
    target = math.pi * p / q
    lo = float(np.min(m.omega.nodes))
    hi = float(np.max(m.omega.nodes))
    Is = np.linspace(lo, hi, scan_points)
    vals = np.asarray(m.omega(Is)) - target
    idx = None
    for i in range(scan_points - 1):
        if vals[i] == 0.0:
            return float(Is[i])
        if vals[i] * vals[i + 1] < 0.0:
            idx = i
            break
    if idx is None:
        if vals[-1] == 0.0:
            return float(Is[-1])
        raise OutOfRangeError(
            f"omega/pi never reaches {p}/{q} on [{lo}, {hi}]"
        )
    a, b = float(Is[idx]), float(Is[idx + 1])
    fa = float(vals[idx])
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        fm = float(m.omega(mid)) - target
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (fa < 0.0):
            a, fa = mid, fm
        else:
            b = mid
    I_star = 0.5 * (a + b)
    if abs(float(m.omega(I_star)) / math.pi - p / q) > 1e-10:
        raise OutOfRangeError(
            f"bisection stalled for resonance {p}/{q}"
        )
    return I_star


@dataclass(frozen=True)
class Portrait:
    """Iterates of the map from seeds on the phi = 0 line.

    ``points`` has one row (orbit_id, iterate, I, phi) per iterate
    (iterate >= 1); orbits that left the domain are truncated at the
    exiting point and listed in ``left_domain``.
    """

    points: np.ndarray
    left_domain: tuple


def phase_portrait(m: SSMModel, n_orbits: int = 100, n_iters: int = 1000,
                   I_top: float | None = None, tol: float = DEFAULT_FP_TOL,
                   max_iter: int = DEFAULT_MAX_ITER) -> Portrait:
    """Deterministic point cloud from seeds equidistributed on (0, I_top]."""
    if I_top is None:
        I_top = m.I_max
    seeds = I_top * (np.arange(1, n_orbits + 1) / n_orbits)
    n_arr, a_dd, b_dd, ab_nodes, w_dd, w_nodes = m._packed
    pts, lengths, flags = _kernels.portrait(
        seeds, int(n_iters), n_arr, a_dd, b_dd, ab_nodes, w_dd, w_nodes,
        float(tol), int(max_iter), I_DOMAIN_FLOOR, float(I_top),
    )
    if np.any(flags == 2):
        bad = int(np.nonzero(flags == 2)[0][0])
        raise ConvergenceError(f"orbit {bad} hit a non-converging fixed point")
    rows = []
    left = []
    for j in range(seeds.size):
        n_rows = int(lengths[j]) - 1  # iterates only, seeds excluded
        for k in range(1, n_rows + 1):
            rows.append((float(j), float(k), pts[j, k, 0], pts[j, k, 1]))
        if flags[j] == 1:
            left.append(j)
    return Portrait(np.array(rows), tuple(left))


# ---------------------------------------------------------------------------
# model file I/O (round-trips exactly; 17 significant digits)

MODEL_HEADER = "# scattering-map series model"


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _fmt_arr(arr) -> str:
    return ",".join(_fmt(v) for v in arr)


def save_model(m: SSMModel, path) -> None:
    lines = [MODEL_HEADER]
    if m.fit_meta:
        lines.append(f"# fit: {m.fit_meta}")
    lines.append(f"N={m.N}")
    lines.append(f"L={m.L}")
    lines.append(f"I_max={_fmt(m.I_max)}")
    lines.append(f"ab_nodes={_fmt_arr(m.a[0].nodes)}")
    lines.append(f"omega_nodes={_fmt_arr(m.omega.nodes)}")
    for k, n in enumerate(m.harmonics):
        lines.append(f"harmonic={n}")
        lines.append(f"a={_fmt_arr(m.a[k].dd)}")
        lines.append(f"b={_fmt_arr(m.b[k].dd)}")
    lines.append(f"omega={_fmt_arr(m.omega.dd)}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


class ModelFormatError(ValueError):
    pass


def load_model(path) -> SSMModel:
    fields = {}
    harmonics = []
    a_dd = []
    b_dd = []
    pending = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ModelFormatError(f"{path}:{lineno}: expected key=value")
            key, val = line.split("=", 1)
            if key == "harmonic":
                harmonics.append(int(val))
                pending = len(harmonics) - 1
            elif key == "a":
                if pending is None or len(a_dd) != pending:
                    raise ModelFormatError(f"{path}:{lineno}: stray 'a' line")
                a_dd.append([float(v) for v in val.split(",")])
            elif key == "b":
                if pending is None or len(b_dd) != pending:
                    raise ModelFormatError(f"{path}:{lineno}: stray 'b' line")
                b_dd.append([float(v) for v in val.split(",")])
            else:
                fields[key] = val
    try:
        ab_nodes = np.array([float(v) for v in fields["ab_nodes"].split(",")])
        w_nodes = np.array(
            [float(v) for v in fields["omega_nodes"].split(",")]
        )
        w_dd = np.array([float(v) for v in fields["omega"].split(",")])
        I_max = float(fields["I_max"])
    except KeyError as exc:
        raise ModelFormatError(f"{path}: missing field {exc}") from None
    if len(a_dd) != len(harmonics) or len(b_dd) != len(harmonics):
        raise ModelFormatError(f"{path}: incomplete harmonic blocks")
    a_polys = tuple(NewtonPoly(ab_nodes, np.array(dd)) for dd in a_dd)
    b_polys = tuple(NewtonPoly(ab_nodes, np.array(dd)) for dd in b_dd)
    return SSMModel(tuple(harmonics), a_polys, b_polys,
                    NewtonPoly(w_nodes, w_dd), I_max=I_max)
