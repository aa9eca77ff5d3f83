"""Geometry of point sequences in R^d.

Separation structure, half-open cube counting, sliding-window maxima and
finite-window density profiles for finite point sets, together with the
generator descriptors (lattices, reciprocal families, tagged unions) that
back truncation growth studies.

All coordinates are double precision and every membership test is an exact
half-open comparison (no epsilon), so counts are deterministic.
"""

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError, PreconditionError


def pt(*coords) -> "Point":
    """Shorthand: pt(1.0, 2.0) == Point((1.0, 2.0))."""
    return Point(tuple(coords))


@dataclass(frozen=True)
class Point:
    coords: tuple

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if not coords:
            raise PreconditionError("a point needs at least one coordinate")
        for c in coords:
            if not math.isfinite(c):
                raise PreconditionError(f"point coordinates must be finite, got {coords}")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def distance_to(self, other: "Point") -> float:
        if other.dim != self.dim:
            raise DimensionMismatchError(
                f"cannot measure distance between dimensions {self.dim} and {other.dim}"
            )
        return math.sqrt(sum((a - b) ** 2 for a, b in zip(self.coords, other.coords)))

    def shifted(self, offset: Sequence[float]) -> "Point":
        off = tuple(float(o) for o in offset)
        if len(off) != self.dim:
            raise DimensionMismatchError("offset dimension mismatch")
        return Point(tuple(c + o for c, o in zip(self.coords, off)))

    def __getitem__(self, i):
        return self.coords[i]

    def __iter__(self):
        return iter(self.coords)


@dataclass(frozen=True)
class Cube:
    """Half-open axis-aligned cube prod_i [c_i - side/2, c_i + side/2)."""

    center: Point
    side: float

    def __post_init__(self):
        side = float(self.side)
        if not (math.isfinite(side) and side > 0):
            raise PreconditionError(f"cube side must be a positive finite real, got {side}")
        object.__setattr__(self, "side", side)

    @property
    def dim(self) -> int:
        return self.center.dim

    @property
    def lower(self) -> tuple:
        return tuple(c - self.side / 2 for c in self.center)

    @property
    def upper(self) -> tuple:
        return tuple(c + self.side / 2 for c in self.center)

    def contains(self, p: Point) -> bool:
        if p.dim != self.dim:
            raise DimensionMismatchError(
                f"point dimension {p.dim} does not match cube dimension {self.dim}"
            )
        return all(l <= x < u for l, x, u in zip(self.lower, p.coords, self.upper))


# ---------------------------------------------------------------------------
# provenance descriptors


@dataclass(frozen=True)
class LatticeProvenance:
    """Truncation of a (possibly shifted) lattice: points B·n + offset (or
    a·n + offset) with every |coord| <= window."""

    window: float
    dimension: int
    spacing: Optional[float] = None
    basis: Optional[tuple] = None  # tuple of d basis vectors (row tuples)
    offset: Optional[tuple] = None

    kind = "lattice"
    truncated_family = True

    @property
    def window_extent(self) -> float:
        # full side of the populated region [-window, window]^d
        return 2.0 * self.window

    def regenerate(self, window: float) -> "PointSet":
        if self.spacing is not None:
            return make_lattice(self.spacing, window, self.dimension, offset=self.offset)
        return make_lattice_basis(self.basis, window, offset=self.offset)


@dataclass(frozen=True)
class ReciprocalProvenance:
    """Truncation {1/n : 1 <= n <= count} of the reciprocal family in R."""

    count: int

    kind = "reciprocal"
    truncated_family = True
    # the omitted tail lives inside (0, 1/count); the outer hull [0, 1] is complete
    window_extent = None

    def regenerate(self, count) -> "PointSet":
        return make_reciprocal(int(count))


@dataclass(frozen=True)
class UnionProvenance:
    """Tagged finite union of sub-sets (the disjoint-union index structure)."""

    members: tuple  # ((label, PointSet), ...)

    kind = "union"

    @property
    def truncated_family(self) -> bool:
        return any(
            m.provenance is not None and m.provenance.truncated_family for _, m in self.members
        )

    @property
    def window_extent(self):
        extents = [
            m.provenance.window_extent
            for _, m in self.members
            if m.provenance is not None and m.provenance.window_extent is not None
        ]
        return min(extents) if extents else None

    def regenerate(self, param) -> "PointSet":
        regrown = []
        for label, member in self.members:
            if member.provenance is not None and hasattr(member.provenance, "regenerate"):
                regrown.append((label, member.provenance.regenerate(param)))
            else:
                regrown.append((label, member))  # explicit members stay fixed
        return union_point_sets(regrown)


@dataclass(frozen=True)
class PointSet:
    """Finite list of distinct points of a common dimension.

    Duplicates are rejected at construction: a repeated point would force the
    separation constant to 0 and make local counts multiset-dependent.
    """

    points: tuple
    provenance: object = None
    dimension: Optional[int] = None

    def __post_init__(self):
        pts = tuple(p if isinstance(p, Point) else Point(tuple(p)) for p in self.points)
        if pts:
            dims = {p.dim for p in pts}
            if len(dims) != 1:
                raise DimensionMismatchError(f"mixed point dimensions {sorted(dims)}")
            dim = dims.pop()
            if self.dimension is not None and self.dimension != dim:
                raise DimensionMismatchError(
                    f"declared dimension {self.dimension} but points have dimension {dim}"
                )
        else:
            if self.dimension is None:
                raise PreconditionError("an empty point set needs an explicit dimension")
            dim = int(self.dimension)
        seen = {}
        for i, p in enumerate(pts):
            if p.coords in seen:
                raise PreconditionError(
                    f"duplicate point {p.coords} at positions {seen[p.coords]} and {i}"
                )
            seen[p.coords] = i
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dimension", dim)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @cached_property
    def as_array(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, self.dimension))
        return np.array([p.coords for p in self.points], dtype=float)


def make_lattice(
    spacing: float, window: float, dimension: int = 1, offset: Optional[Sequence[float]] = None
) -> PointSet:
    """All points of spacing*Z^d + offset whose coordinates satisfy |x_i| <= window."""
    spacing = float(spacing)
    window = float(window)
    if spacing <= 0 or window <= 0:
        raise PreconditionError("lattice spacing and window must be positive")
    off = tuple(float(o) for o in offset) if offset is not None else (0.0,) * dimension
    if len(off) != dimension:
        raise DimensionMismatchError("lattice offset dimension mismatch")
    kmax = int(math.ceil((window + max(abs(o) for o in off)) / spacing)) + 1
    axes = [
        [k * spacing + o for k in range(-kmax, kmax + 1) if abs(k * spacing + o) <= window]
        for o in off
    ]
    pts = [Point(c) for c in itertools.product(*axes)]
    prov = LatticeProvenance(
        window=window,
        dimension=dimension,
        spacing=spacing,
        offset=off if any(off) else None,
    )
    return PointSet(tuple(pts), provenance=prov)


def make_lattice_basis(basis, window: float, offset: Optional[Sequence[float]] = None) -> PointSet:
    """Lattice {B n + offset : n in Z^d} truncated to |x_i| <= window, basis rows."""
    rows = tuple(tuple(float(c) for c in row) for row in basis)
    d = len(rows)
    if any(len(r) != d for r in rows):
        raise PreconditionError("lattice basis must be a d x d set of vectors")
    window = float(window)
    off = np.array(offset, dtype=float) if offset is not None else np.zeros(d)
    if off.shape != (d,):
        raise DimensionMismatchError("lattice offset dimension mismatch")
    mat = np.array(rows, dtype=float).T  # columns are basis vectors
    inv = np.linalg.inv(mat)
    bounds = [
        int(math.ceil((window + float(np.abs(off).max())) * np.abs(inv[i]).sum())) + 1
        for i in range(d)
    ]
    pts = []
    for n in itertools.product(*(range(-b, b + 1) for b in bounds)):
        x = mat @ np.array(n, dtype=float) + off
        if np.all(np.abs(x) <= window):
            pts.append(Point(tuple(x)))
    pts.sort(key=lambda p: p.coords)
    prov = LatticeProvenance(
        window=window,
        dimension=d,
        basis=rows,
        offset=tuple(off) if off.any() else None,
    )
    return PointSet(tuple(pts), provenance=prov)


def make_reciprocal(count: int) -> PointSet:
    """The truncated reciprocal family {1/n : 1 <= n <= count} in R."""
    count = int(count)
    if count < 1:
        raise PreconditionError("reciprocal family needs count >= 1")
    pts = tuple(Point((1.0 / n,)) for n in range(count, 0, -1))
    return PointSet(pts, provenance=ReciprocalProvenance(count=count))


def union_point_sets(members: Sequence[tuple]) -> PointSet:
    """Union of labelled point sets; coinciding points are kept once.

    Generator tags keep the disjoint-union index structure; the merged set is
    the plain geometric union used for counting.
    """
    members = tuple((str(label), ps) for label, ps in members)
    if not members:
        raise PreconditionError("union needs at least one member")
    dims = {ps.dimension for _, ps in members}
    if len(dims) != 1:
        raise DimensionMismatchError(f"union members have mixed dimensions {sorted(dims)}")
    seen = set()
    pts = []
    for _, ps in members:
        for p in ps.points:
            if p.coords not in seen:
                seen.add(p.coords)
                pts.append(p)
    pts.sort(key=lambda p: p.coords)
    return PointSet(tuple(pts), provenance=UnionProvenance(members=members))


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class SeparationReport:
    min_gap: float
    delta: float
    part_count: int
    parts: tuple  # tuple of index tuples, partition of range(len(s))


@dataclass(frozen=True)
class DensityRow:
    h: float
    nu_lower: int
    nu_upper: int
    ratio_lower: float
    ratio_upper: float
    exact: bool


@dataclass(frozen=True)
class DensityProfile:
    rows: tuple
    density_estimate: float
    truncation_bias: bool


class NuPlusBound(NamedTuple):
    lower: int
    upper: int
    exact: bool


# ---------------------------------------------------------------------------
# operations


def min_separation(s: PointSet) -> float:
    """inf over i != j of the Euclidean distance |p_i - p_j|."""
    n = len(s)
    if n < 2:
        raise PreconditionError("undefined separation: need at least 2 points")
    arr = s.as_array
    best = math.inf
    chunk = 512
    for i0 in range(0, n, chunk):
        block = arr[i0 : i0 + chunk]
        d2 = ((block[:, None, :] - arr[None, :, :]) ** 2).sum(axis=-1)
        for r in range(block.shape[0]):
            d2[r, i0 + r] = np.inf
        best = min(best, float(d2.min()))
    return math.sqrt(best)


def decompose_separated(s: PointSet, delta: float) -> SeparationReport:
    """Greedy first-fit partition into delta-separated parts.

    Points are taken in lexicographic coordinate order and each is placed in
    the first part whose members all lie at distance >= delta (non-strict, so
    boundary gaps are deterministic).  The part count is an upper bound on the
    chromatic number of the conflict graph with edges at distance < delta.
    """
    delta = float(delta)
    if not (math.isfinite(delta) and delta > 0):
        raise PreconditionError(f"delta must be positive, got {delta}")
    n = len(s)
    arr = s.as_array
    order = sorted(range(n), key=lambda i: s.points[i].coords)
    d2_min = delta * delta
    parts: list = []  # list of (index list, coordinate row list)
    for i in order:
        row = arr[i]
        placed = False
        for idxs, rows in parts:
            d2 = ((np.array(rows) - row) ** 2).sum(axis=1)
            if float(d2.min()) >= d2_min:
                idxs.append(i)
                rows.append(row)
                placed = True
                break
        if not placed:
            parts.append(([i], [row]))
    min_gap = min_separation(s) if n >= 2 else math.inf
    return SeparationReport(
        min_gap=min_gap,
        delta=delta,
        part_count=len(parts),
        parts=tuple(tuple(sorted(idxs)) for idxs, _ in parts),
    )


def count_in_cube(s: PointSet, q: Cube) -> int:
    """Exact number of points in the half-open cube."""
    if s.dimension != q.dim:
        raise DimensionMismatchError(
            f"point set dimension {s.dimension} does not match cube dimension {q.dim}"
        )
    if not len(s):
        return 0
    arr = s.as_array
    lo = np.array(q.lower)
    up = np.array(q.upper)
    inside = np.all((arr >= lo) & (arr < up), axis=1)
    return int(inside.sum())


def grid_occupancy(s: PointSet, h: float) -> dict:
    """Counts per grid cube Q_h(h n), n in Z^d; keys are the integer vectors n.

    The grid cubes tile R^d, so the counts sum to len(s).  Bucket membership
    is snapped to the same half-open comparisons count_in_cube uses.
    """
    h = float(h)
    if not (math.isfinite(h) and h > 0):
        raise PreconditionError(f"h must be positive, got {h}")
    if not len(s):
        return {}
    arr = s.as_array
    keys = np.floor(arr / h + 0.5).astype(np.int64)
    centers = keys * h
    keys += (arr >= centers + h / 2).astype(np.int64)
    keys -= (arr < centers - h / 2).astype(np.int64)
    occ: dict = {}
    for row in keys:
        k = tuple(int(v) for v in row)
        occ[k] = occ.get(k, 0) + 1
    return occ


def _nu_plus_1d(xs: np.ndarray, h: float) -> int:
    xs = np.sort(xs)
    counts = np.searchsorted(xs, xs + h, side="left") - np.arange(xs.size)
    return int(counts.max())


def nu_plus(s: PointSet, h: float) -> NuPlusBound:
    """Largest number of points in any half-open side-h cube.

    d = 1: exact; the supremum over windows [a, a+h) is attained with the left
    edge anchored at a point, so a scan over point anchors suffices.
    d = 2: exact; the optimal cube can be slid until each lower face passes
    through a point coordinate, giving O(n) x-anchors each with a 1-d scan.
    d >= 3: sandwich (N_h, 2^d N_h) from the grid-cube maximum N_h, since any
    side-h cube is covered by at most 2^d grid-aligned side-h cubes.
    """
    h = float(h)
    if not (math.isfinite(h) and h > 0):
        raise PreconditionError(f"h must be positive, got {h}")
    n = len(s)
    if n == 0:
        return NuPlusBound(0, 0, True)
    d = s.dimension
    arr = s.as_array
    if d == 1:
        m = _nu_plus_1d(arr[:, 0], h)
        return NuPlusBound(m, m, True)
    if d == 2:
        order = np.lexsort((arr[:, 1], arr[:, 0]))
        xs = arr[order, 0]
        ys = arr[order, 1]
        best = 1
        for ax in np.unique(xs):
            lo = np.searchsorted(xs, ax, side="left")
            hi = np.searchsorted(xs, ax + h, side="left")
            slab = np.sort(ys[lo:hi])
            if slab.size:
                best = max(best, _nu_plus_1d(slab, h))
        return NuPlusBound(best, best, True)
    occ = grid_occupancy(s, h)
    n_h = max(occ.values())
    return NuPlusBound(n_h, (2**d) * n_h, False)


def density_profile(s: PointSet, h_values: Sequence[float]) -> DensityProfile:
    """Per-h counting table plus a finite-window density estimate.

    The estimate is the maximum of nu_lower/h^d over the top third of the h
    values: a labelled desk-scale surrogate for the h -> infinity limsup, not
    the limit itself.  Truncated generator provenance sets a bias flag.
    """
    hs = [float(h) for h in h_values]
    if not hs:
        raise PreconditionError("h_values must be nonempty")
    if any(not (math.isfinite(h) and h > 0) for h in hs):
        raise PreconditionError("h_values must be positive reals")
    if any(b <= a for a, b in zip(hs, hs[1:])):
        raise PreconditionError("h_values must be strictly increasing")
    prov = s.provenance
    extent = prov.window_extent if prov is not None else None
    if extent is not None and max(hs) > extent:
        raise PreconditionError(
            f"window too small: h={max(hs)} exceeds the generator window extent {extent}"
        )
    d = s.dimension
    rows = []
    for h in hs:
        lower, upper, exact = nu_plus(s, h)
        rows.append(DensityRow(h, lower, upper, lower / h**d, upper / h**d, exact))
    top = max(1, math.ceil(len(rows) / 3))
    estimate = max(r.ratio_lower for r in rows[-top:])
    bias = bool(prov is not None and prov.truncated_family)
    return DensityProfile(rows=tuple(rows), density_estimate=estimate, truncation_bias=bias)


def detect_accumulation(s: PointSet, radius: float, threshold: int) -> list:
    """Points whose open radius-ball holds >= threshold other points of s.

    A finite-truncation witness heuristic for accumulation, not a decision
    procedure: growing truncations of a family with an accumulation point
    produce such witnesses for any fixed radius.
    """
    radius = float(radius)
    if not (math.isfinite(radius) and radius > 0):
        raise PreconditionError(f"radius must be positive, got {radius}")
    threshold = int(threshold)
    if threshold < 2:
        raise PreconditionError(f"threshold must be >= 2, got {threshold}")
    n = len(s)
    if n == 0:
        return []
    arr = s.as_array
    r2 = radius * radius
    out = []
    for i in range(n):
        d2 = ((arr - arr[i]) ** 2).sum(axis=1)
        if int((d2 < r2).sum()) - 1 >= threshold:
            out.append(s.points[i])
    return out
