"""Exact Lp(R^d) calculus on compactly supported piecewise-constant functions.

The representative class is complex-valued step functions over finitely many
pairwise-disjoint half-open boxes.  It is closed under translation, cube
restriction and finite sums, and every stored operation (norms, dual
pairings, pairings against modulated indicators) has a closed form, so no
quadrature is involved anywhere.
"""

import cmath
import itertools
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

from .errors import DimensionMismatchError, PreconditionError
from .pointset import Cube, Point


def _coords(x, dim: Optional[int] = None) -> tuple:
    if isinstance(x, Point):
        c = x.coords
    elif isinstance(x, (int, float)):
        c = (float(x),)
    else:
        c = tuple(float(v) for v in x)
    if dim is not None and len(c) != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {len(c)}")
    return c


@dataclass(frozen=True)
class Box:
    """Half-open product box prod_i [lower_i, upper_i) with positive volume."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        up = tuple(float(v) for v in self.upper)
        if len(lo) != len(up) or not lo:
            raise PreconditionError("box corners must share a dimension >= 1")
        for a, b in zip(lo, up):
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise PreconditionError(f"box needs lower < upper componentwise, got {lo} .. {up}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        v = 1.0
        for a, b in zip(self.lower, self.upper):
            v *= b - a
        return v

    def translate(self, offset: Sequence[float]) -> "Box":
        off = _coords(offset, self.dim)
        return Box(
            tuple(a + o for a, o in zip(self.lower, off)),
            tuple(b + o for b, o in zip(self.upper, off)),
        )

    def overlap_volume(self, other: "Box") -> float:
        v = 1.0
        for a0, a1, b0, b1 in zip(self.lower, self.upper, other.lower, other.upper):
            w = min(a1, b1) - max(a0, b0)
            if w <= 0.0:
                return 0.0
            v *= w
        return v

    def intersection(self, other: "Box") -> Optional["Box"]:
        lo = tuple(max(a, b) for a, b in zip(self.lower, other.lower))
        up = tuple(min(a, b) for a, b in zip(self.upper, other.upper))
        if any(a >= b for a, b in zip(lo, up)):
            return None
        return Box(lo, up)

    def contains(self, x: Sequence[float]) -> bool:
        c = _coords(x, self.dim)
        return all(a <= v < b for a, v, b in zip(self.lower, c, self.upper))


def _cube_box(region: Union[Cube, Box]) -> Box:
    if isinstance(region, Box):
        return region
    return Box(region.lower, region.upper)


@dataclass(frozen=True)
class PiecewiseFn:
    """Complex step function: finitely many disjoint boxes with constant values.

    Zero-valued pieces are dropped and pieces are kept in lexicographic order
    of their lower corners, so equal functions built in different ways compare
    piece-for-piece.  The empty piece list is the zero function.
    """

    pieces: tuple  # ((Box, complex), ...)
    dimension: int

    def __post_init__(self):
        cleaned = []
        for box, v in self.pieces:
            if not isinstance(box, Box):
                box = Box(*box)
            v = complex(v)
            if box.dim != self.dimension:
                raise DimensionMismatchError(
                    f"piece dimension {box.dim} does not match function dimension {self.dimension}"
                )
            if v != 0:
                cleaned.append((box, v))
        cleaned.sort(key=lambda bv: (bv[0].lower, bv[0].upper))
        for i, (bi, _) in enumerate(cleaned):
            for bj, _ in cleaned[i + 1 :]:
                if bi.overlap_volume(bj) > 0.0:
                    raise PreconditionError(
                        f"overlapping pieces {bi.lower}..{bi.upper} and {bj.lower}..{bj.upper}; "
                        "use canonicalize() to merge raw piece lists"
                    )
        object.__setattr__(self, "pieces", tuple(cleaned))

    @property
    def is_zero(self) -> bool:
        return not self.pieces

    @cached_property
    def support_box(self) -> Optional[Box]:
        if not self.pieces:
            return None
        lo = tuple(
            min(b.lower[j] for b, _ in self.pieces) for j in range(self.dimension)
        )
        up = tuple(
            max(b.upper[j] for b, _ in self.pieces) for j in range(self.dimension)
        )
        return Box(lo, up)

    @cached_property
    def min_piece_side(self) -> Optional[float]:
        if not self.pieces:
            return None
        return min(
            b.upper[j] - b.lower[j] for b, _ in self.pieces for j in range(self.dimension)
        )

    def value_at(self, x) -> complex:
        c = _coords(x, self.dimension)
        for box, v in self.pieces:
            if box.contains(c):
                return v
        return 0j


def _build(pieces: Sequence[tuple], dimension: int) -> PiecewiseFn:
    # internal fast path for operations that preserve disjointness
    fn = object.__new__(PiecewiseFn)
    object.__setattr__(fn, "pieces", tuple(sorted(pieces, key=lambda bv: (bv[0].lower, bv[0].upper))))
    object.__setattr__(fn, "dimension", dimension)
    return fn


def zero_fn(dimension: int) -> PiecewiseFn:
    return _build((), dimension)


def indicator(region: Union[Cube, Box], value: complex = 1.0) -> PiecewiseFn:
    box = _cube_box(region)
    return PiecewiseFn(((box, complex(value)),), box.dim)


def indicator_interval(lo: float, hi: float, value: complex = 1.0) -> PiecewiseFn:
    """chi_{[lo, hi)} scaled by value, on the line."""
    return indicator(Box((lo,), (hi,)), value)


@dataclass(frozen=True)
class ExponentPair:
    """Conjugate exponents 1/p + 1/q = 1 with 1 < p < infinity; q is derived."""

    p: float
    q: float = field(init=False)

    def __post_init__(self):
        p = float(self.p)
        if not (math.isfinite(p) and p > 1):
            raise PreconditionError(f"exponent p must lie in (1, inf), got {p}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", p / (p - 1))


def conjugate_exponent(p: float) -> float:
    p = float(p)
    if not (math.isfinite(p) and p > 1):
        raise PreconditionError(f"exponent must lie in (1, inf), got {p}")
    return p / (p - 1)


# ---------------------------------------------------------------------------
# operations


def translate(f: PiecewiseFn, gamma) -> PiecewiseFn:
    """(T_gamma f)(x) = f(x - gamma): every box shifts by gamma, values unchanged."""
    off = _coords(gamma, f.dimension)
    return _build(tuple((box.translate(off), v) for box, v in f.pieces), f.dimension)


def lp_norm_pow(f: PiecewiseFn, p: float) -> float:
    """sum |v|^p vol over the pieces: the p-th power of the Lp norm, computed
    without the root/power round trip (keeps dyadic masses exact)."""
    p = float(p)
    if not (math.isfinite(p) and p >= 1):
        raise PreconditionError(f"lp norms need p >= 1, got {p}")
    total = 0.0
    for box, v in f.pieces:
        total += abs(v) ** p * box.volume
    return total


def lp_norm(f: PiecewiseFn, p: float) -> float:
    """(sum |v|^p vol)^{1/p} over the pieces; p >= 1."""
    return lp_norm_pow(f, p) ** (1.0 / float(p))


def restrict(f: PiecewiseFn, region: Union[Cube, Box]) -> PiecewiseFn:
    """Pointwise multiplication by the indicator of a half-open cube or box."""
    clip = _cube_box(region)
    if clip.dim != f.dimension:
        raise DimensionMismatchError(
            f"restriction region dimension {clip.dim} does not match function dimension {f.dimension}"
        )
    out = []
    for box, v in f.pieces:
        cut = box.intersection(clip)
        if cut is not None:
            out.append((cut, v))
    return _build(tuple(out), f.dimension)


def pair(h: PiecewiseFn, f: PiecewiseFn) -> complex:
    """Sesquilinear dual pairing <h, f> = integral of h * conj(f).

    Exact: the integrand is constant on each box intersection, so the pairing
    is a finite sum of value products times overlap volumes, accumulated in
    lexicographic piece order for reproducibility.
    """
    if h.dimension != f.dimension:
        raise DimensionMismatchError(
            f"pairing dimensions differ: {h.dimension} vs {f.dimension}"
        )
    acc = 0j
    for bh, vh in h.pieces:
        lh, uh = bh.lower, bh.upper
        for bf, vf in f.pieces:
            vol = 1.0
            for a0, a1, b0, b1 in zip(lh, uh, bf.lower, bf.upper):
                w = min(a1, b1) - max(a0, b0)
                if w <= 0.0:
                    vol = 0.0
                    break
                vol *= w
            if vol:
                acc += vh * vf.conjugate() * vol
    return acc


def pair_modulated(f: PiecewiseFn, freq) -> complex:
    """<f, E_freq 1> = integral of f(x) e^{-2 pi i <freq, x>} dx, in closed form.

    Per box the integral factors into 1-d pieces (e^{-2 pi i b u} -
    e^{-2 pi i b l}) / (-2 pi i b), with the b -> 0 limit u - l.  Modulated
    functions are never materialized as step functions; only this pairing is
    available.
    """
    b = _coords(freq, f.dimension)
    acc = 0j
    for box, v in f.pieces:
        factor = 1 + 0j
        for lo, up, bj in zip(box.lower, box.upper, b):
            if bj == 0.0:
                factor *= up - lo
            else:
                tau = -2j * math.pi * bj
                factor *= (cmath.exp(tau * up) - cmath.exp(tau * lo)) / tau
        acc += v * factor
    return acc


def scale(f: PiecewiseFn, c: complex) -> PiecewiseFn:
    c = complex(c)
    if c == 0:
        return zero_fn(f.dimension)
    return _build(tuple((box, v * c) for box, v in f.pieces), f.dimension)


def normalize(f: PiecewiseFn, p: float) -> PiecewiseFn:
    """Scale so the Lp norm is 1."""
    if f.is_zero:
        raise PreconditionError("cannot normalize the zero function")
    return scale(f, 1.0 / lp_norm(f, p))


def canonicalize(pieces, dimension: Optional[int] = None) -> PiecewiseFn:
    """Merge an arbitrary (possibly overlapping) piece list into disjoint form.

    The piece endpoints induce an axis-aligned grid; overlapping values are
    summed per grid cell and exact-zero cells are dropped.  Pairings and norms
    of the result agree with the raw sum.  Accepts a PiecewiseFn or an
    iterable of (Box, value) pairs.
    """
    if isinstance(pieces, PiecewiseFn):
        dimension = pieces.dimension
        raw = list(pieces.pieces)
    else:
        raw = [(box if isinstance(box, Box) else Box(*box), complex(v)) for box, v in pieces]
    if not raw:
        if dimension is None:
            raise PreconditionError("empty piece list needs an explicit dimension")
        return zero_fn(dimension)
    d = raw[0][0].dim
    if dimension is not None and dimension != d:
        raise DimensionMismatchError(f"declared dimension {dimension} but pieces have {d}")
    if any(box.dim != d for box, _ in raw):
        raise DimensionMismatchError("mixed piece dimensions")
    cuts = []
    for j in range(d):
        vals = {box.lower[j] for box, _ in raw} | {box.upper[j] for box, _ in raw}
        cuts.append(sorted(vals))
    cells: dict = {}
    for box, v in raw:
        if v == 0:
            continue
        ranges = []
        for j in range(d):
            i0 = bisect_left(cuts[j], box.lower[j])
            i1 = bisect_left(cuts[j], box.upper[j])
            ranges.append(range(i0, i1))
        for idx in itertools.product(*ranges):
            cells[idx] = cells.get(idx, 0j) + v
    out = []
    for idx in sorted(cells):
        v = cells[idx]
        if v != 0:
            lo = tuple(cuts[j][i] for j, i in enumerate(idx))
            up = tuple(cuts[j][i + 1] for j, i in enumerate(idx))
            out.append((Box(lo, up), v))
    return _build(tuple(out), d)


def add(*fns: PiecewiseFn) -> PiecewiseFn:
    """Canonical sum of step functions."""
    if not fns:
        raise PreconditionError("add needs at least one function")
    d = fns[0].dimension
    raw = []
    for f in fns:
        if f.dimension != d:
            raise DimensionMismatchError("mixed function dimensions in sum")
        raw.extend(f.pieces)
    return canonicalize(raw, d)


# ---------------------------------------------------------------------------
# sampled closed-form functions

# name -> (pointwise evaluator on a coordinate tuple, per-dimension Lipschitz bound)
SAMPLER_CATALOG = {
    "gaussian": (lambda x: math.exp(-sum(t * t for t in x)), math.sqrt(2.0 / math.e)),
    "tent": (lambda x: math.prod(max(0.0, 1.0 - abs(t)) for t in x), 1.0),
}


def sample_catalog_function(name: str, step: float, support: Box, p: float):
    """Midpoint-sample a catalog function onto a grid of side `step`.

    Returns (PiecewiseFn, lp_error_bound).  The bound is the grid oscillation
    estimate L * sqrt(d)/2 * step times vol(support)^{1/p}, where L bounds the
    gradient norm of the sampled expression; dyadic steps keep the cell
    endpoints exact.
    """
    if name not in SAMPLER_CATALOG:
        raise PreconditionError(
            f"unknown catalog expression {name!r}; available: {sorted(SAMPLER_CATALOG)}"
        )
    step = float(step)
    if not (math.isfinite(step) and step > 0):
        raise PreconditionError(f"grid step must be positive, got {step}")
    func, lip_per_dim = SAMPLER_CATALOG[name]
    d = support.dim
    counts = [int(math.ceil((b - a) / step)) for a, b in zip(support.lower, support.upper)]
    pieces = []
    for idx in itertools.product(*(range(c) for c in counts)):
        lo = tuple(a + i * step for a, i in zip(support.lower, idx))
        up = tuple(min(b, a + (i + 1) * step) for a, b, i in zip(support.lower, support.upper, idx))
        mid = tuple((a + b) / 2 for a, b in zip(lo, up))
        v = func(mid)
        if v != 0:
            pieces.append((Box(lo, up), complex(v)))
    fn = _build(tuple(pieces), d)
    grad_bound = lip_per_dim * math.sqrt(d)
    error = grad_bound * (step * math.sqrt(d) / 2.0) * support.volume ** (1.0 / float(p))
    return fn, error
