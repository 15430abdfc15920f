"""Scattering-map sample grids: validation and text I/O.

File format: comma-separated text with header ``I,phi,I_prime,phi_prime``,
angles in radians, one row per sample, tori grouped and sorted by I.
Floats are written with 17 significant digits, so save -> load -> save is
byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRID_HEADER = "I,phi,I_prime,phi_prime"

_TWO_PI = 2.0 * np.pi
_EQUISPACING_TOL = 1e-9


class GridFormatError(ValueError):
    """Malformed grid file; the message carries the offending line number."""


class GridInvariantError(ValueError):
    """Structurally valid file violating a grid invariant; names the torus."""


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TorusSamples:
    """Samples of one torus: phi' equispaced on [0, 2*pi)."""

    I_level: float
    phi: np.ndarray
    phi_prime: np.ndarray
    I_prime: np.ndarray

    def __post_init__(self):
        for name in ("phi", "phi_prime", "I_prime"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "I_level", float(self.I_level))

    @property
    def count(self) -> int:
        return self.phi_prime.size


@dataclass(frozen=True)
class ScatteringGrid:
    tori: tuple

    def __post_init__(self):
        object.__setattr__(self, "tori", tuple(self.tori))
        validate_grid(self)

    @property
    def I_levels(self) -> np.ndarray:
        return np.array([t.I_level for t in self.tori])

    def torus(self, I_level: float) -> TorusSamples:
        for t in self.tori:
            if t.I_level == I_level:
                return t
        raise KeyError(f"no torus at I={I_level}")


def validate_grid(grid: ScatteringGrid) -> None:
    if not grid.tori:
        raise GridInvariantError("grid has no tori")
    levels = [t.I_level for t in grid.tori]
    if any(lv <= 0.0 for lv in levels):
        raise GridInvariantError(f"non-positive action level in {levels}")
    if sorted(levels) != levels or len(set(levels)) != len(levels):
        raise GridInvariantError("tori must be sorted by strictly increasing I")
    for t in grid.tori:
        m = t.count
        if not _is_power_of_two(m):
            raise GridInvariantError(
                f"torus I={t.I_level}: sample count {m} is not a power of two"
            )
        if not (t.phi.shape == t.phi_prime.shape == t.I_prime.shape):
            raise GridInvariantError(f"torus I={t.I_level}: ragged columns")
        step = _TWO_PI / m
        expected = t.phi_prime[0] + step * np.arange(m)
        if np.any(np.diff(t.phi_prime) <= 0.0):
            raise GridInvariantError(
                f"torus I={t.I_level}: phi_prime not strictly increasing"
            )
        dev = np.max(np.abs(t.phi_prime - expected))
        if dev > _EQUISPACING_TOL:
            raise GridInvariantError(
                f"torus I={t.I_level}: phi_prime not equispaced "
                f"(max deviation {dev:.3e})"
            )
        if not (0.0 <= t.phi_prime[0] < step):
            raise GridInvariantError(
                f"torus I={t.I_level}: phi_prime must start in [0, 2*pi/M)"
            )
        for name, col in (("phi", t.phi), ("I_prime", t.I_prime)):
            if not np.all(np.isfinite(col)):
                raise GridInvariantError(
                    f"torus I={t.I_level}: non-finite {name} value"
                )


def make_grid(rows) -> ScatteringGrid:
    """Group (I, phi, I', phi') rows into tori, sorted by I."""
    by_level: dict = {}
    for I, phi, Ip, phip in rows:
        by_level.setdefault(I, []).append((phi, phip, Ip))
    tori = []
    for lv in sorted(by_level):
        samples = by_level[lv]
        samples.sort(key=lambda s: s[1])
        phi = np.array([s[0] for s in samples])
        phip = np.array([s[1] for s in samples])
        Ip = np.array([s[2] for s in samples])
        tori.append(TorusSamples(lv, phi, phip, Ip))
    return ScatteringGrid(tuple(tori))


def load_grid(path) -> ScatteringGrid:
    """Parse and validate a grid file."""
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != GRID_HEADER:
            raise GridFormatError(
                f"{path}:1: expected header '{GRID_HEADER}', got '{header}'"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise GridFormatError(
                    f"{path}:{lineno}: expected 4 comma-separated values"
                )
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise GridFormatError(f"{path}:{lineno}: {exc}") from None
            rows.append(vals)
    if not rows:
        raise GridFormatError(f"{path}: no data rows")
    return make_grid(rows)


def _fmt(x: float) -> str:
    return format(x, ".17g")


def save_grid(grid: ScatteringGrid, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(GRID_HEADER + "\n")
        for t in grid.tori:
            for j in range(t.count):
                fh.write(
                    f"{_fmt(t.I_level)},{_fmt(t.phi[j])},"
                    f"{_fmt(t.I_prime[j])},{_fmt(t.phi_prime[j])}\n"
                )
