"""Drift-orbit construction for the iterated function system.

Two orbit builders: a greedy walk on {inner, scattering} that jumps
whenever the jump gains action, and a shortest-time planner on
{inner, transition-1, transition-2} that discretizes the domain into
cells, builds a directed graph of center-point images weighted by step
times, and follows Dijkstra-informed edges from the exact point.

Time accounting: inner steps cost t_in, jump steps (scattering or
transition alike) cost t_out - each jump is realized by one homoclinic
excursion.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .inner import InnerModel, TimeModel, apply_inner, apply_transition
from .ssm import SSMModel, apply_sm, eval_derivs, wrap_2pi
from .ssm import DEFAULT_FP_TOL, DEFAULT_MAX_ITER, ConvergenceError

GAIN, NEUTRAL, LOSS = 1, 0, -1

#: |dLtilde/dphi'| below this counts as neutral
NEUTRAL_BAND = 1e-9

INNER_LABEL = "F"
SIGMA_LABELS = ("S1", "S2")
TAU_LABELS = ("T1", "T2")
_LABEL_RANK = {"F": 0, "T1": 1, "T2": 2, "S1": 1, "S2": 2}


class UnreachableError(RuntimeError):
    """No path to the target cell."""


class LivelockError(RuntimeError):
    """The informed walk revisited a (cell, map) pair beyond its bound."""


class MaxStepsExceededError(RuntimeError):
    """Greedy walk exhausted its step budget; carries the partial orbit."""

    def __init__(self, message, orbit):
        super().__init__(message)
        self.orbit = orbit


@dataclass(frozen=True)
class DriftStep:
    label: str
    I: float
    phi: float
    clipped: bool = False


@dataclass(frozen=True)
class DriftOrbit:
    """Itinerary of IFS steps; each step records the point after it."""

    start: tuple
    steps: tuple

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        labels = {s.label for s in self.steps}
        if labels & set(SIGMA_LABELS) and labels & set(TAU_LABELS):
            raise ValueError(
                "an itinerary is either scattering-only or flow-realizable,"
                " not both"
            )
        for s in self.steps[:-1]:
            if s.clipped:
                raise ValueError("only the final step may be clip-flagged")

    @property
    def n0(self) -> int:
        return sum(1 for s in self.steps if s.label == INNER_LABEL)

    @property
    def n1(self) -> int:
        return sum(1 for s in self.steps if s.label in ("S1", "T1"))

    @property
    def n2(self) -> int:
        return sum(1 for s in self.steps if s.label in ("S2", "T2"))

    @property
    def final(self):
        if not self.steps:
            return self.start
        last = self.steps[-1]
        return (last.I, last.phi)


def drift_time(orbit: DriftOrbit, tm: TimeModel) -> float:
    """n0 t_in + (n1 + n2) t_out, recomputed from the step labels."""
    return orbit.n0 * tm.t_in + (orbit.n1 + orbit.n2) * tm.t_out


# ---------------------------------------------------------------------------
# domain partition


def classify(m: SSMModel, I: float, phi: float, tol: float = DEFAULT_FP_TOL,
             max_iter: int = DEFAULT_MAX_ITER) -> int:
    """Sign of the action change of one scattering jump at (I, phi).

    +1 gain, -1 loss, 0 neutral within the 1e-9 band; determined by
    dLtilde/dphi' at the solved image angle, which is I' - I exactly.
    """
    _Ip, phip = apply_sm(m, I, phi, tol=tol, max_iter=max_iter)
    d = eval_derivs(m, I, phip).d_dphi
    if d > NEUTRAL_BAND:
        return GAIN
    if d < -NEUTRAL_BAND:
        return LOSS
    return NEUTRAL


def greedy_drift(m: SSMModel, im: InnerModel, start, I_target: float,
                 max_steps: int = 10000, sigma_label: str = "S1",
                 tol: float = DEFAULT_FP_TOL) -> DriftOrbit:
    """Jump whenever the jump gains action, else rotate with the inner map.

    Every jump step strictly increases I; inner steps preserve it.  Stops
    as soon as I >= I_target.  A jump beyond the domain top ends the orbit
    as its clip-flagged final step.
    """
    if sigma_label not in SIGMA_LABELS:
        raise ValueError(f"sigma_label must be one of {SIGMA_LABELS}")
    I, phi = float(start[0]), float(start[1])
    m.check_I(I)
    steps = []
    for _ in range(max_steps):
        if I >= I_target:
            return DriftOrbit((start[0], start[1]), tuple(steps))
        Ip, phip = apply_sm(m, I, phi, tol=tol)
        if Ip - I > NEUTRAL_BAND:
            clipped = Ip > m.I_max
            steps.append(DriftStep(sigma_label, Ip, phip, clipped))
            I, phi = Ip, phip
            if clipped:
                return DriftOrbit((start[0], start[1]), tuple(steps))
        else:
            I, phi = apply_inner(im, I, phi)
            steps.append(DriftStep(INNER_LABEL, I, phi))
    orbit = DriftOrbit((start[0], start[1]), tuple(steps))
    raise MaxStepsExceededError(
        f"I_target={I_target} not reached in {max_steps} steps (at I={I})",
        orbit,
    )


# ---------------------------------------------------------------------------
# cell graph


@dataclass(frozen=True)
class CellGrid:
    """Uniform m x n cells over (0, I_top] x [0, pi)."""

    m: int = 30
    n: int = 30
    I_top: float = 7.0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("cell counts must be >= 1")

    @property
    def dI(self) -> float:
        return self.I_top / self.m

    @property
    def dphi(self) -> float:
        return math.pi / self.n

    @property
    def size(self) -> int:
        return self.m * self.n

    def cell_index(self, I: float, phi: float) -> int:
        """Cell containing (I, phi); actions above the top clip to the
        top row (angles are taken mod pi)."""
        row = int(math.ceil(I / self.dI)) - 1
        row = min(max(row, 0), self.m - 1)
        col = int((phi % math.pi) / self.dphi)
        col = min(max(col, 0), self.n - 1)
        return row * self.n + col

    def center(self, idx: int):
        row, col = divmod(idx, self.n)
        return ((row + 0.5) * self.dI, (col + 0.5) * self.dphi)


@dataclass(frozen=True)
class Edge:
    dst: int
    label: str
    time: float


@dataclass(frozen=True)
class CellGraph:
    grid: CellGrid
    edges: tuple  # edges[src] = tuple of Edge, in F < T1 < T2 order
    nonconverged_cells: int = 0

    def reverse_adjacency(self):
        rev = [[] for _ in range(self.grid.size)]
        for src, out in enumerate(self.edges):
            for e in out:
                rev[e.dst].append((src, e.time))
        return rev


def build_cell_graph(m1: SSMModel, m2: SSMModel, im: InnerModel,
                     tm: TimeModel, grid: CellGrid,
                     tol: float = DEFAULT_FP_TOL) -> CellGraph:
    """Map every cell center by F, T1, T2 and record the landing cells.

    A transition landing in the same cell as the inner image is dropped
    (the inner edge is cheaper); likewise T2 is dropped on a T1 collision
    (equal cost, deterministic preference).  Cells where the scattering
    fixed point fails contribute only their inner edge and are counted.
    """
    edges = []
    bad = 0
    for idx in range(grid.size):
        I, phi = grid.center(idx)
        out = []
        taken = set()
        _If, phif = apply_inner(im, I, phi)
        dst_f = grid.cell_index(_If, phif)
        out.append(Edge(dst_f, INNER_LABEL, tm.t_in))
        taken.add(dst_f)
        failed = False
        for label, model in (("T1", m1), ("T2", m2)):
            try:
                res = apply_transition(model, im, I, phi, tol=tol)
            except ConvergenceError:
                failed = True
                continue
            dst = grid.cell_index(res.I, res.phi)
            if dst in taken:
                continue
            out.append(Edge(dst, label, tm.t_out))
            taken.add(dst)
        if failed:
            bad += 1
        edges.append(tuple(out))
    return CellGraph(grid, tuple(edges), bad)


def dijkstra(g: CellGraph, s: int, t: int):
    """Shortest path s -> t; returns (list of (src, dst, label, time), total).

    Ties are deterministic: the heap orders by (distance, cell index) and
    relaxation is strict, so reruns reproduce the identical path.
    """
    n = g.grid.size
    if not (0 <= s < n and 0 <= t < n):
        raise ValueError("cell index out of range")
    dist = [math.inf] * n
    prev: list = [None] * n
    dist[s] = 0.0
    heap = [(0.0, s)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        if u == t:
            break
        for e in g.edges[u]:
            nd = d + e.time
            if nd < dist[e.dst]:
                dist[e.dst] = nd
                prev[e.dst] = (u, e.label, e.time)
                heapq.heappush(heap, (nd, e.dst))
    if math.isinf(dist[t]):
        raise UnreachableError(f"cell {t} unreachable from cell {s}")
    path = []
    node = t
    while node != s:
        u, label, w = prev[node]
        path.append((u, node, label, w))
        node = u
    path.reverse()
    return path, dist[t]


def _times_to_target(g: CellGraph, t: int):
    """Dijkstra on the reversed graph: time-to-target for every cell."""
    rev = g.reverse_adjacency()
    n = g.grid.size
    dist = [math.inf] * n
    dist[t] = 0.0
    heap = [(0.0, t)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for src, w in rev[u]:
            nd = d + w
            if nd < dist[src]:
                dist[src] = nd
                heapq.heappush(heap, (nd, src))
    return dist


def _informed_edge(g: CellGraph, dist, u: int):
    """First edge of a shortest path from u, with deterministic ties
    (total time, then destination index, then map order F < T1 < T2)."""
    best = None
    best_key = None
    for e in g.edges[u]:
        if math.isinf(dist[e.dst]):
            continue
        key = (e.time + dist[e.dst], e.dst, _LABEL_RANK[e.label])
        if best_key is None or key < best_key:
            best, best_key = e, key
    return best


def neighborhood_distance(p, q) -> float:
    """Euclidean distance in (I, phi) with the angle part taken mod pi."""
    dI = p[0] - q[0]
    dphi = (p[1] - q[1]) % math.pi
    if dphi > 0.5 * math.pi:
        dphi -= math.pi
    return math.hypot(dI, dphi)


def orbit_shortest_time(m1: SSMModel, m2: SSMModel, im: InnerModel,
                        tm: TimeModel, grid: CellGrid, x, y,
                        radius: float = 0.25, livelock_factor: int = 4,
                        tol: float = DEFAULT_FP_TOL,
                        graph: CellGraph | None = None) -> DriftOrbit:
    """Shortest-time orbit from x into the radius-neighborhood of y.

    One reverse Dijkstra from the target cell supplies time-to-target for
    every cell; each iterate then takes the informed first edge and
    applies that map to the exact point (not the cell center).  A clipped
    transition image ends the orbit as its final step.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    if graph is None:
        graph = build_cell_graph(m1, m2, im, tm, grid, tol=tol)
    t_cell = grid.cell_index(y[0], y[1])
    dist = _times_to_target(graph, t_cell)
    models = {"T1": m1, "T2": m2}
    bound = livelock_factor * grid.size
    visits: dict = {}
    point = (float(x[0]), float(x[1]))
    start = point
    steps = []
    while neighborhood_distance(point, y) > radius:
        u = grid.cell_index(point[0], point[1])
        if math.isinf(dist[u]):
            raise UnreachableError(
                f"target cell {t_cell} unreachable from cell {u}"
            )
        e = _informed_edge(graph, dist, u)
        if e is None:
            raise UnreachableError(f"cell {u} has no usable outgoing edge")
        key = (u, e.label)
        visits[key] = visits.get(key, 0) + 1
        if visits[key] > bound:
            raise LivelockError(
                f"(cell {u}, map {e.label}) revisited more than {bound} times"
            )
        if e.label == INNER_LABEL:
            I, phi = apply_inner(im, point[0], point[1])
            steps.append(DriftStep(INNER_LABEL, I, phi))
            point = (I, phi)
        else:
            res = apply_transition(models[e.label], im, point[0], point[1],
                                   tol=tol)
            steps.append(DriftStep(e.label, res.I, res.phi, res.clipped))
            point = (res.I, res.phi)
            if res.clipped:
                break
    return DriftOrbit(start, tuple(steps))


# ---------------------------------------------------------------------------
# text output


ORBIT_HEADER = "step,map,I,phi,t_cum"
GRAPH_HEADER = "src_cell,dst_cell,map,time"


def save_orbit(orbit: DriftOrbit, tm: TimeModel, path) -> None:
    """Write ``step,map,I,phi,t_cum`` rows (step 0 is the start point)."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(ORBIT_HEADER + "\n")
        fh.write(f"0,-,{orbit.start[0]:.17g},{orbit.start[1]:.17g},0\n")
        t = 0.0
        for k, s in enumerate(orbit.steps, start=1):
            t += tm.t_in if s.label == INNER_LABEL else tm.t_out
            fh.write(f"{k},{s.label},{s.I:.17g},{s.phi:.17g},{t:.17g}\n")


def save_graph(g: CellGraph, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(GRAPH_HEADER + "\n")
        for src, out in enumerate(g.edges):
            for e in out:
                fh.write(f"{src},{e.dst},{e.label},{e.time:.17g}\n")
