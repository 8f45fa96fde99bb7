"""Discrete globally hyperbolic spacetime: a finite time interval times a
spatial circle.

The lattice Z_{n_t} x Z_{n_x} carries the Lorentzian product structure
(signature (-,+)): time slices are Cauchy surfaces, the spatial circle is
compact, and causal structure is generated by unit-speed steps
(t, x) -> (t+1, x + d) with |d| <= 1, matching the stencil adjacency of
every operator shipped in `ghqlab.ops`.  All causal-support statements in
the Green's-operator layer are exact set statements against these cones.

Points are plain `(t, x)` integer tuples; regions are sets of points.
Volume weight per point is dt*dx, area weight per slice point is dx.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Point = tuple[int, int]


@dataclass(frozen=True)
class LatticeSpacetime:
    """Product lattice: `n_t` time slices times a circle of `n_x` sites."""

    n_t: int
    n_x: int
    dt: float
    dx: float

    def __post_init__(self):
        if self.n_t < 8:
            raise ValueError(f"n_t must be >= 8, got {self.n_t}")
        if self.n_x < 4:
            raise ValueError(f"n_x must be >= 4, got {self.n_x}")
        if self.dt <= 0 or self.dx <= 0:
            raise ValueError("spacings must be positive")

    @property
    def dV(self) -> float:
        return self.dt * self.dx

    @property
    def dA(self) -> float:
        return self.dx

    @property
    def n_points(self) -> int:
        return self.n_t * self.n_x

    def points(self):
        for t in range(self.n_t):
            for x in range(self.n_x):
                yield (t, x)

    def check_point(self, p: Point) -> None:
        t, x = p
        if not (0 <= t < self.n_t and 0 <= x < self.n_x):
            raise ValueError(f"point {p} outside lattice {self.n_t}x{self.n_x}")

    def circ_dist(self, x0: int, x1: int) -> int:
        d = (x0 - x1) % self.n_x
        return min(d, self.n_x - d)

    def slice_points(self, t: int) -> set[Point]:
        return {(t, x) for x in range(self.n_x)}


@dataclass
class Region:
    """Arbitrary nonempty point set with lazily cached causal flags."""

    members: frozenset[Point]
    _causally_compatible: bool | None = field(default=None, repr=False)
    _contains_cauchy_slice: bool | None = field(default=None, repr=False)

    def __post_init__(self):
        self.members = frozenset(self.members)
        if not self.members:
            raise ValueError("region must be nonempty")

    def __contains__(self, p: Point) -> bool:
        return p in self.members

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def sorted_points(self) -> list[Point]:
        return sorted(self.members)


@dataclass(frozen=True)
class CausalCone:
    """Causal future/past of a single apex, at cell speed 1."""

    apex: Point
    direction: str  # "future" | "past"
    members: frozenset[Point]


def _cone_members(lat: LatticeSpacetime, apex: Point, direction: str) -> frozenset[Point]:
    t0, x0 = apex
    pts = []
    if direction == "future":
        ts = range(t0, lat.n_t)
    elif direction == "past":
        ts = range(t0, -1, -1)
    else:
        raise ValueError(f"direction must be 'future' or 'past', got {direction!r}")
    for t in ts:
        reach = abs(t - t0)
        for x in range(lat.n_x):
            if lat.circ_dist(x, x0) <= reach:
                pts.append((t, x))
    return frozenset(pts)


def causal_cone(lat: LatticeSpacetime, apex: Point, direction: str) -> CausalCone:
    lat.check_point(apex)
    return CausalCone(apex, direction, _cone_members(lat, apex, direction))


def causal_future(lat: LatticeSpacetime, a: set[Point] | frozenset[Point]) -> set[Point]:
    """J_+(a): union of future cones of the members of `a`."""
    if not a:
        raise ValueError("causal_future of empty set")
    out: set[Point] = set()
    for p in a:
        lat.check_point(p)
        out |= _cone_members(lat, p, "future")
    return out


def causal_past(lat: LatticeSpacetime, a: set[Point] | frozenset[Point]) -> set[Point]:
    """J_-(a): union of past cones of the members of `a`."""
    if not a:
        raise ValueError("causal_past of empty set")
    out: set[Point] = set()
    for p in a:
        lat.check_point(p)
        out |= _cone_members(lat, p, "past")
    return out


def causal_hull(lat: LatticeSpacetime, a) -> set[Point]:
    """J(a) = J_+(a) u J_-(a)."""
    return causal_future(lat, a) | causal_past(lat, a)


def _bfs_cone_in_region(lat: LatticeSpacetime, region: frozenset[Point],
                        start: Point, step: int) -> set[Point]:
    # one causal step = (t+step, x+d), |d| <= 1; closure restricted to region
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for (t, x) in frontier:
            tt = t + step
            if not (0 <= tt < lat.n_t):
                continue
            for d in (-1, 0, 1):
                q = (tt, (x + d) % lat.n_x)
                if q in region and q not in seen:
                    seen.add(q)
                    nxt.append(q)
        frontier = nxt
    return seen


def is_causally_compatible(lat: LatticeSpacetime, r: Region) -> bool:
    """Whether internal cones (BFS over stencil adjacency inside `r`) equal
    ambient cones intersected with `r`, for every base point and direction."""
    if r._causally_compatible is not None:
        return r._causally_compatible
    mem = r.members
    ok = True
    for p in mem:
        fut_in = _bfs_cone_in_region(lat, mem, p, +1)
        if fut_in != (_cone_members(lat, p, "future") & mem):
            ok = False
            break
        past_in = _bfs_cone_in_region(lat, mem, p, -1)
        if past_in != (_cone_members(lat, p, "past") & mem):
            ok = False
            break
    r._causally_compatible = ok
    return ok


def is_cauchy_slice_region(lat: LatticeSpacetime, r: Region) -> bool:
    """True iff `r` contains a complete constant-time slice."""
    if r._contains_cauchy_slice is not None:
        return r._contains_cauchy_slice
    by_t: dict[int, int] = {}
    for (t, _x) in r.members:
        by_t[t] = by_t.get(t, 0) + 1
    ok = any(c == lat.n_x for c in by_t.values())
    r._contains_cauchy_slice = ok
    return ok


def causally_disjoint(lat: LatticeSpacetime, r1: Region, r2: Region) -> bool:
    """True iff no causal curve joins `r1` and `r2`: J(r1) does not meet r2."""
    hull = causal_hull(lat, set(r1.members))
    return not (hull & r2.members)


def time_band(lat: LatticeSpacetime, t_lo: int, t_hi: int) -> Region:
    """The region [t_lo, t_hi] x circle (causally compatible by construction)."""
    if not (0 <= t_lo <= t_hi < lat.n_t):
        raise ValueError(f"band [{t_lo},{t_hi}] outside lattice")
    pts = {(t, x) for t in range(t_lo, t_hi + 1) for x in range(lat.n_x)}
    return Region(frozenset(pts))


def diamond(lat: LatticeSpacetime, bottom: Point, top: Point) -> Region:
    """J_+(bottom) intersected with J_-(top)."""
    lat.check_point(bottom)
    lat.check_point(top)
    pts = _cone_members(lat, bottom, "future") & _cone_members(lat, top, "past")
    if not pts:
        raise ValueError(f"empty diamond between {bottom} and {top}")
    return Region(pts)


def spacetime_pairing(lat: LatticeSpacetime, pairing, phi, psi) -> complex | float:
    """Integral pairing sum_{t,x} <phi(t,x), psi(t,x)> dt dx.

    `pairing` is a FiberPairing from ghqlab.ops; sesquilinear pairings are
    linear in `phi` and conjugate-linear in `psi`.
    """
    if phi.values.shape != psi.values.shape:
        raise ValueError(f"shape mismatch {phi.values.shape} vs {psi.values.shape}")
    if phi.fiber_dim != pairing.dim:
        raise ValueError("fiber dimension does not match pairing")
    b = pairing.matrix
    if pairing.sesquilinear:
        val = np.einsum("txj,jk,txk->", psi.values.conj(), b, phi.values)
    else:
        val = np.einsum("txj,jk,txk->", psi.values, b, phi.values)
    return val * lat.dV
