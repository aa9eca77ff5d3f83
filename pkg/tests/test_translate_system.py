"""Translate-system analysis: Bessel sums, witnesses, required constants, mass."""

import math

import numpy as np
import pytest

from lpdensity import (
    Cube,
    DichotomyConfig,
    ExponentPair,
    Generator,
    PiecewiseFn,
    PointSet,
    PreconditionError,
    TranslateSystem,
    bessel_bound_estimate,
    bessel_sum,
    blowup_witness,
    cq_indicator_sweep,
    cq_required_constant,
    dichotomy_report,
    indicator_interval,
    localized_mass,
    lp_norm,
    make_lattice,
    make_reciprocal,
    mass_decay_sweep,
    pair,
    pt,
    scale,
    system_localized_mass,
    translate,
    union_point_sets,
)
from lpdensity.lpfunc import Box


UNIT = indicator_interval(0, 1)


def z_system(window=10, p=2.0, f=UNIT):
    return TranslateSystem((Generator(f, make_lattice(1.0, window, 1), "Z"),), ExponentPair(p))


def explicit_line(*xs):
    return PointSet(tuple(pt(x) for x in xs))


# ---------------------------------------------------------------------------
# bessel_sum


def test_bessel_sum_integer_translates_single_overlap():
    for p_prime in (1.5, 2.0, 3.0):
        assert bessel_sum(z_system(), UNIT, p_prime) == pytest.approx(1.0)


def test_bessel_sum_two_full_overlaps():
    assert bessel_sum(z_system(), indicator_interval(0, 2), 2.0) == pytest.approx(2.0)


def test_bessel_sum_partial_overlap():
    sys_ = TranslateSystem(
        (Generator(UNIT, explicit_line(0.0, 0.5), "g"),), ExponentPair(2.0)
    )
    # overlaps 1 at gamma=0 and 0.5 at gamma=0.5; direct integral oracle
    assert bessel_sum(sys_, UNIT, 2.0) == pytest.approx(1.0 + 0.25)


def test_bessel_sum_zero_test_rejected():
    from lpdensity import zero_fn

    with pytest.raises(PreconditionError):
        bessel_sum(z_system(), zero_fn(1), 2.0)


# ---------------------------------------------------------------------------
# bessel_bound_estimate


def test_bessel_estimate_unit_test():
    est = bessel_bound_estimate(z_system(), [UNIT], 2.0)
    assert est.bound_estimate == pytest.approx(1.0)


def test_bessel_estimate_two_tests():
    est = bessel_bound_estimate(z_system(), [UNIT, indicator_interval(0, 2)], 2.0)
    # ||chi_[0,2)||_2^2 = 2, sum = 2 -> ratio 1
    assert [r.ratio for r in est.per_test] == pytest.approx([1.0, 1.0])
    assert est.bound_estimate == pytest.approx(1.0)


def test_bessel_estimate_scale_invariant():
    rng = np.random.default_rng(21)
    sys_ = z_system()
    tests = [indicator_interval(0, 1.5), indicator_interval(-0.5, 2.0, 0.7)]
    for c in rng.uniform(0.1, 5.0, size=4):
        a = bessel_bound_estimate(sys_, tests, 2.0)
        b = bessel_bound_estimate(sys_, [scale(t, c) for t in tests], 2.0)
        assert b.bound_estimate == pytest.approx(a.bound_estimate, rel=1e-12)


# ---------------------------------------------------------------------------
# blowup_witness


def test_blowup_witness_dense_grid():
    gamma = PointSet(tuple(pt(k / 100) for k in range(100)))
    w = blowup_witness(UNIT, UNIT, gamma, 0.5, 2.0)
    # enumeration oracle at the returned center: tent(g - beta) > 1/2
    direct = sum(
        1 for g in gamma if max(0.0, 1.0 - abs(g.coords[0] - w.beta.coords[0])) > 0.5
    )
    assert w.count == direct
    assert w.count >= 95
    assert w.sum_lower_bound == pytest.approx(w.count * 0.25)


def test_blowup_witness_separated_lattice_count_one():
    w = blowup_witness(UNIT, UNIT, make_lattice(1.0, 10, 1), 0.5, 2.0)
    assert w.window_side < 1.0
    assert w.count == 1


def test_blowup_witness_single_point():
    w = blowup_witness(UNIT, UNIT, explicit_line(0.0), 0.99, 2.0)
    assert w.count == 1
    assert w.beta.coords[0] == pytest.approx(0.5, abs=0.5)


def test_blowup_witness_epsilon_precondition():
    with pytest.raises(PreconditionError):
        blowup_witness(UNIT, UNIT, explicit_line(0.0), 1.0, 2.0)


def test_blowup_witness_plane_grid():
    square = PiecewiseFn(((Box((0.0, 0.0), (1.0, 1.0)), 1.0),), 2)
    pts = PointSet(tuple(pt(i / 20, j / 20) for i in range(20) for j in range(20)))
    w = blowup_witness(square, square, pts, 0.5, 2.0)
    direct = sum(
        1
        for p in pts
        if abs(pair(translate(square, p), translate(square, w.beta.coords))) > 0.5
    )
    assert w.count == direct
    assert w.count >= 200  # most of the 400-point grid lands in the window
    assert w.sum_lower_bound == pytest.approx(w.count * 0.25)


def test_blowup_witness_sound_against_bessel_sum():
    for n in (50, 150):
        gamma = PointSet(tuple(pt(k / n) for k in range(n)))
        w = blowup_witness(UNIT, UNIT, gamma, 0.5, 2.0)
        sys_ = TranslateSystem((Generator(UNIT, gamma, "g"),), ExponentPair(2.0))
        direct = bessel_sum(sys_, translate(UNIT, w.beta), 2.0)
        assert w.sum_lower_bound <= direct


# ---------------------------------------------------------------------------
# cq_required_constant


def test_cq_required_closed_form():
    sys_ = z_system(window=20)
    for h in (0.25, 0.0625):
        test = indicator_interval(-h, h)
        assert cq_required_constant(sys_, test) == pytest.approx(h**-0.5, rel=1e-12)


def test_cq_required_translation_covariance():
    beta = 0.375
    sys_a = z_system(window=20)
    shifted = PointSet(tuple(pt(x.coords[0] + beta) for x in make_lattice(1.0, 20, 1)))
    sys_b = TranslateSystem((Generator(UNIT, shifted, "Z+b"),), ExponentPair(2.0))
    test = indicator_interval(-0.25, 0.25)
    assert cq_required_constant(sys_b, translate(test, (beta,))) == pytest.approx(
        cq_required_constant(sys_a, test), rel=1e-12
    )


def test_cq_required_unbounded_witness():
    sys_ = TranslateSystem((Generator(UNIT, explicit_line(100.0), "far"),), ExponentPair(2.0))
    assert cq_required_constant(sys_, indicator_interval(-0.25, 0.25)) == math.inf


# ---------------------------------------------------------------------------
# cq_indicator_sweep


def test_sweep_matches_closed_form_and_diverges():
    sw = cq_indicator_sweep(z_system(window=20), [2.0**-k for k in range(2, 11)])
    for row in sw.rows:
        assert row.k_required == pytest.approx(row.h**-0.5, abs=1e-9)
        # the exact proof inequality: power sum <= q-norm^p * localized mass
        assert row.p_power_sum <= row.q_norm**2 * row.localized_mass * (1 + 1e-12)
    assert sw.verdict == "divergent"
    assert sw.growth_exponent == pytest.approx(0.5, abs=1e-9)
    assert sw.r_squared > 0.999


def test_sweep_fixed_test_is_bounded():
    sw = cq_indicator_sweep(
        z_system(window=20), [2.0**-k for k in range(2, 8)], fixed_test=UNIT
    )
    ks = [r.k_required for r in sw.rows]
    assert max(ks) == pytest.approx(min(ks), rel=1e-12)
    assert sw.verdict == "bounded"


def test_sweep_empty_overlap_unbounded_rows():
    sys_ = TranslateSystem((Generator(UNIT, explicit_line(100.0), "far"),), ExponentPair(2.0))
    sw = cq_indicator_sweep(sys_, [0.25, 0.125])
    assert all(math.isinf(r.k_required) for r in sw.rows)
    assert sw.verdict == "divergent"


def test_sweep_reach_check_rejects_small_lattice_window():
    with pytest.raises(PreconditionError, match="truncation too small"):
        cq_indicator_sweep(z_system(window=1), [4.0, 2.0])


def test_sweep_reach_check_rejects_reciprocal():
    sys_ = TranslateSystem(
        (Generator(UNIT, make_reciprocal(100), "recip"),), ExponentPair(2.0)
    )
    with pytest.raises(PreconditionError, match="truncation too small"):
        cq_indicator_sweep(sys_, [0.25, 0.125])


def test_sweep_reach_check_recurses_into_unions():
    union = union_point_sets(
        [("wide", make_lattice(1.0, 20, 1)), ("narrow", make_lattice(1.0, 1, 1))]
    )
    sys_ = TranslateSystem((Generator(UNIT, union, "u"),), ExponentPair(2.0))
    with pytest.raises(PreconditionError, match="truncation too small"):
        cq_indicator_sweep(sys_, [4.0, 2.0])


# ---------------------------------------------------------------------------
# localized_mass / mass_decay_sweep


def test_localized_mass_tiling_identity():
    gen = Generator(UNIT, make_lattice(1.0, 30, 1), "Z")
    for center, h in ((0.0, 0.5), (0.3125, 0.5), (-2.25, 0.75)):
        rep = localized_mass(gen, Cube(pt(center), h), 2.0)
        assert rep.total == h  # integer translates of [0,1) tile the line
        assert rep.finiteness_bound is not None
        assert rep.total <= rep.finiteness_bound.value


def test_localized_mass_double_cover():
    gen = Generator(indicator_interval(0, 2), make_lattice(1.0, 30, 1), "Z")
    rep = localized_mass(gen, Cube(pt(0.0), 0.5), 2.0)
    # direct summation oracle: every point of the window lies in two supports
    oracle = sum(
        max(0.0, min(0.25, g + 2) - max(-0.25, g))
        for g in np.arange(-30.0, 31.0)
        if g + 2 > -0.25 and g < 0.25
    )
    assert rep.total == pytest.approx(oracle, abs=1e-15)
    assert rep.total == pytest.approx(1.0)


def test_mass_decay_halves_exactly():
    gen = Generator(UNIT, make_lattice(1.0, 30, 1), "Z")
    rows = mass_decay_sweep(gen, pt(0.0), [0.5, 0.25, 0.125, 0.0625], 2.0)
    for (_, a), (_, b) in zip(rows, rows[1:]):
        assert b == a / 2
    assert rows[-1][1] < 0.1


def test_mass_growth_for_reciprocal_family():
    h = 0.5
    masses = {}
    for n in (100, 200):
        gen = Generator(UNIT, make_reciprocal(n), "recip")
        rep = localized_mass(gen, Cube(pt(0.0), h), 2.0)
        # direct summation oracle over n <= N
        oracle = sum(
            max(0.0, min(h / 2, 1.0 / k + 1.0) - max(-h / 2, 1.0 / k))
            for k in range(1, n + 1)
        )
        assert rep.total == pytest.approx(oracle, rel=1e-12)
        masses[n] = rep.total
    assert masses[200] / masses[100] == pytest.approx(2.0, rel=0.1)


def test_mass_single_point_small():
    gen = Generator(UNIT, explicit_line(0.0), "one")
    rows = mass_decay_sweep(gen, pt(0.0), [0.5, 0.25], 2.0)
    assert rows[0][1] <= min(1.0, 0.5)
    assert rows[1][1] == rows[0][1] / 2


def test_localized_mass_translation_covariance():
    beta = 0.4375
    gamma = make_lattice(1.0, 10, 1)
    shifted = PointSet(tuple(pt(x.coords[0] + beta) for x in gamma))
    base = localized_mass(Generator(UNIT, gamma, "Z"), Cube(pt(0.25), 0.5), 2.0)
    moved = localized_mass(Generator(UNIT, shifted, "Z+b"), Cube(pt(0.25 + beta), 0.5), 2.0)
    assert moved.total == pytest.approx(base.total, rel=1e-12)


def test_localized_mass_tiling_2d():
    square = PiecewiseFn(((Box((0.0, 0.0), (1.0, 1.0)), 1.0),), 2)
    gen = Generator(square, make_lattice(1.0, 8, 2), "Z2")
    for center, h in (((0.0, 0.0), 0.5), ((0.25, -1.5), 1.25)):
        rep = localized_mass(gen, Cube(pt(*center), h), 2.0)
        assert rep.total == pytest.approx(h * h, abs=1e-15)


def test_bessel_sum_translation_covariance():
    beta = 0.375
    gamma = make_lattice(1.0, 10, 1)
    shifted = PointSet(tuple(pt(x.coords[0] + beta) for x in gamma))
    sys_a = TranslateSystem((Generator(UNIT, gamma, "Z"),), ExponentPair(2.0))
    sys_b = TranslateSystem((Generator(UNIT, shifted, "Z+b"),), ExponentPair(2.0))
    test = indicator_interval(-0.5, 1.25)
    assert bessel_sum(sys_b, translate(test, (beta,)), 2.0) == pytest.approx(
        bessel_sum(sys_a, test, 2.0), rel=1e-12
    )


def test_system_localized_mass_sums_generators():
    g1 = Generator(UNIT, make_lattice(1.0, 10, 1), "a")
    g2 = Generator(indicator_interval(0, 2), make_lattice(1.0, 10, 1), "b")
    sys_ = TranslateSystem((g1, g2), ExponentPair(2.0))
    cube = Cube(pt(0.0), 0.5)
    assert system_localized_mass(sys_, cube, 2.0) == pytest.approx(
        localized_mass(g1, cube, 2.0).total + localized_mass(g2, cube, 2.0).total
    )


# ---------------------------------------------------------------------------
# lq-budget synthesis oracle (p = q = 2): exhaustive least squares over the
# span must be consistent with the dual required constant.  If some test h has
# K_required(h) > K, then for the normalized target f = h/||h|| and any
# combination g with coefficient budget ||a||_2 <= K,
#   ||f - g|| >= |<h, f-g>|/||h|| >= 1 - K/K_required,
# so the best constrained approximation error cannot fall below that gap.


def budgeted_lsq_error(fns, target, budget):
    n = len(fns)
    gram = np.array([[pair(fj, fi) for fj in fns] for fi in fns])
    b = np.array([pair(target, fi) for fi in fns])
    t2 = pair(target, target).real

    def err_at(a):
        val = t2 - 2 * (np.conj(a) @ b).real + (np.conj(a) @ gram @ a).real
        return math.sqrt(max(0.0, val))

    a_free, *_ = np.linalg.lstsq(gram, b, rcond=None)
    if np.linalg.norm(a_free) <= budget:
        return err_at(a_free)
    lo, hi = 0.0, 1.0
    while np.linalg.norm(np.linalg.solve(gram + hi * np.eye(n), b)) > budget:
        hi *= 2
        if hi > 1e12:
            break
    for _ in range(200):
        mid = (lo + hi) / 2
        if np.linalg.norm(np.linalg.solve(gram + mid * np.eye(n), b)) > budget:
            lo = mid
        else:
            hi = mid
    return err_at(np.linalg.solve(gram + hi * np.eye(n), b))


def test_synthesis_oracle_consistent_with_required_constant():
    rng = np.random.default_rng(42)
    checked = 0
    for _ in range(100):
        m = int(rng.integers(2, 9))
        sites = np.sort(rng.uniform(-2, 2, size=m))
        gamma = PointSet(tuple(pt(float(x)) for x in np.unique(sites)))
        sys_ = TranslateSystem((Generator(UNIT, gamma, "g"),), ExponentPair(2.0))
        cuts = np.sort(rng.uniform(-2.5, 2.5, size=4))
        pieces = [
            (Box((float(a),), (float(c),)), complex(rng.normal(), rng.normal()))
            for a, c in zip(cuts, cuts[1:])
            if c > a
        ]
        if not pieces:
            continue
        test = PiecewiseFn(tuple(pieces), 1)
        k_req = cq_required_constant(sys_, test)
        if math.isinf(k_req):
            continue
        budget = 0.8 * k_req
        fns = [translate(UNIT, g) for g in gamma]
        target = scale(test, 1.0 / lp_norm(test, 2.0))
        err = budgeted_lsq_error(fns, target, budget)
        gap = 1.0 - budget / k_req
        assert err >= gap - 1e-9
        checked += 1
    assert checked >= 80


# ---------------------------------------------------------------------------
# dichotomy_report


def recip_system(p=2.0):
    return TranslateSystem(
        (Generator(UNIT, make_reciprocal(100), "recip"),), ExponentPair(p)
    )


def test_dichotomy_lattice_horn():
    rep = dichotomy_report(
        z_system(window=20),
        DichotomyConfig(
            truncation_radii=(5, 10, 20),
            sweep_h_values=tuple(2.0**-k for k in range(2, 9)),
            p_prime=2.0,
        ),
    )
    assert rep.bessel_bounded
    assert rep.cq_bounded is False
    assert rep.horn == "cq_divergent"
    assert rep.dichotomy_holds
    assert not rep.accumulation_detected


def test_dichotomy_reciprocal_horn():
    rep = dichotomy_report(
        recip_system(),
        DichotomyConfig(
            truncation_radii=(100, 200, 400),
            sweep_h_values=(0.25, 0.125),
            p_prime=2.0,
        ),
    )
    assert not rep.bessel_bounded
    assert rep.accumulation_detected
    assert rep.horn == "bessel_divergent"
    assert rep.cq_failure is not None and "truncation" in rep.cq_failure
    assert rep.dichotomy_holds
    # the counting table grows linearly with the truncation
    nus = [r.nu_plus_at_h for r in rep.density_rows]
    assert nus == [100, 200, 400]


def test_dichotomy_union_subadditivity_rows():
    gens = (
        Generator(UNIT, make_lattice(1.0, 20, 1), "Z"),
        Generator(indicator_interval(0, 2), make_lattice(1.0, 20, 1), "Z+"),
    )
    rep = dichotomy_report(
        TranslateSystem(gens, ExponentPair(2.0)),
        DichotomyConfig(
            truncation_radii=(10, 20),
            sweep_h_values=tuple(2.0**-k for k in range(2, 8)),
            p_prime=2.0,
        ),
    )
    assert rep.subadditivity_rows
    assert rep.subadditivity_holds
    assert rep.dichotomy_holds


def test_dichotomy_requires_provenance():
    sys_ = TranslateSystem(
        (Generator(UNIT, explicit_line(0.0, 1.0), "explicit"),), ExponentPair(2.0)
    )
    with pytest.raises(PreconditionError, match="provenance"):
        dichotomy_report(
            sys_,
            DichotomyConfig(
                truncation_radii=(1, 2), sweep_h_values=(0.5, 0.25), p_prime=2.0
            ),
        )
