"""Stabilizer computation: dual routes, closed-form families, bound reports."""

import itertools

import pytest

from sl2lab.gf import make_field, multiplicative_subgroup, subfield_elements
from sl2lab.plane import (
    IDENTITY,
    PointSet,
    mat_inv,
    mat_mul,
    proj_lines,
    sl2_materialize,
    sl2_order,
    sl2_unrank,
)
from sl2lab.rng import DetRng, nth_seed
from sl2lab.stabilizer import (
    Constants,
    all_subset_stabilizer_orders,
    bound_report,
    contained_in_line,
    line_partition,
    line_set_stabilizer,
    lines_meeting_count,
    stabilizer,
    stabilizer_brute,
    stabilizer_fast,
    subgroup_closure,
    subgroup_orbits,
    triple_count_audit,
)


def random_subset(q, seed):
    rng = DetRng(seed)
    while True:
        bits = rng.bits(q * q)
        if bits:
            return PointSet(q, bits)


@pytest.mark.parametrize("q", [2, 3])
def test_fast_equals_brute_exhaustive(fields, q):
    ctx = fields[q]
    for bits in range(1 << (q * q)):
        E = PointSet(q, bits)
        if E.nonzero_size:
            assert stabilizer_fast(ctx, E) == stabilizer_brute(ctx, E)
        else:
            assert stabilizer(ctx, E) == stabilizer_brute(ctx, E)


@pytest.mark.parametrize("q", [4, 5, 7, 8, 9])
def test_fast_equals_brute_random(fields, q):
    ctx = fields[q]
    for trial in range(60):
        E = random_subset(q, nth_seed(q, trial))
        assert stabilizer_fast(ctx, E) == stabilizer_brute(ctx, E)


def test_stabilizer_dispatch_and_group_structure(fields):
    ctx = fields[7]
    E = random_subset(7, 12345)
    stab = stabilizer(ctx, E)
    assert stab == stabilizer_brute(ctx, E)
    assert IDENTITY in stab
    some = sorted(stab)[:6]
    for a in some:
        assert mat_inv(ctx, a) in stab
        for b in some:
            assert mat_mul(ctx, a, b) in stab


@pytest.mark.parametrize("q", [5, 7])
def test_complement_invariance(fields, q):
    ctx = fields[q]
    for trial in range(8):
        E = random_subset(q, nth_seed(1000 + q, trial))
        assert stabilizer_fast(ctx, E) == stabilizer_fast(ctx, E.complement())


@pytest.mark.parametrize("q", [5, 8])
def test_origin_is_ignored(fields, q):
    ctx = fields[q]
    for trial in range(8):
        E = random_subset(q, nth_seed(2000 + q, trial))
        stab = stabilizer_fast(ctx, E)
        assert stab == stabilizer_fast(ctx, E.with_origin())
        assert stab == stabilizer_fast(ctx, E.without_origin())


@pytest.mark.parametrize("q", [3, 7])
def test_degenerate_sets_fixed_by_whole_group(fields, q):
    ctx = fields[q]
    whole = set(sl2_materialize(ctx))
    for E in (PointSet(q), PointSet.from_points(q, [(0, 0)]),
              PointSet.full(q), PointSet.full(q).without_origin()):
        assert stabilizer(ctx, E) == whole
    # the fast route refuses the empty-away-from-origin cases explicitly
    with pytest.raises(ValueError):
        stabilizer_fast(ctx, PointSet(q))


@pytest.mark.parametrize("q", [2, 3, 4, 5, 7, 8, 9])
def test_origin_line_order(fields, q):
    # a line through the origin is stabilized by exactly q^2 - q elements
    ctx = fields[q]
    for line in proj_lines(ctx):
        from sl2lab.plane import points_on_line
        E = PointSet.from_points(q, points_on_line(ctx, line))
        assert len(stabilizer_fast(ctx, E)) == q * q - q


@pytest.mark.parametrize("q", [3, 5, 7, 9])
def test_affine_line_order(fields, q):
    # a line missing the origin, e.g. x = 1, has stabilizer order q
    ctx = fields[q]
    E = PointSet.from_points(q, [(1, y) for y in range(q)])
    assert len(stabilizer_fast(ctx, E)) == q


@pytest.mark.parametrize("q,c", [(5, 2), (7, 2), (7, 3), (13, 3)])
def test_axis_subgroup_is_triangular_family(fields, q, c):
    ctx = fields[q]
    S = multiplicative_subgroup(ctx, c)
    E = PointSet.from_points(q, [(0, s) for s in S.members])
    stab = stabilizer_brute(ctx, E) if q <= 7 else stabilizer_fast(ctx, E)
    family = {(a, 0, t, ctx.inv(a)) for a in S.members for t in range(q)}
    assert stab == family
    assert len(stab) == q * (q - 1) // c


@pytest.mark.parametrize("p,r,r_sub", [(2, 2, 1), (3, 2, 1)])
def test_subfield_plane_order(p, r, r_sub):
    ctx = make_field(p, r)
    sub = subfield_elements(ctx, r_sub)
    E = PointSet.from_points(ctx.q, [(x, y) for x in sub.members for y in sub.members])
    stab = stabilizer_brute(ctx, E)
    s = p**r_sub
    assert len(stab) == s**3 - s
    embedded = {m for m in stab if all(x in sub.members for x in m)}
    assert len(embedded) == s**3 - s  # the whole stabilizer is the embedded copy


def test_line_partition(fields):
    ctx = fields[5]
    # two full axes minus origin plus one extra point off both
    pts = [(0, y) for y in range(1, 5)] + [(x, 0) for x in range(1, 5)] + [(1, 1)]
    E = PointSet.from_points(5, pts)
    part = line_partition(ctx, E)
    assert part.classes == {1: ((1, 1),), 4: ((1, 0), (0, 1))}
    assert part.lines_meeting == 3
    assert part.class_count(4) == 2
    assert part.class_count(2) == 0
    assert part.all_classes_small
    assert lines_meeting_count(ctx, E.bits) == 3
    part_full = line_partition(ctx, PointSet.full(5))
    assert part_full.classes == {4: tuple(proj_lines(ctx))}
    assert not part_full.all_classes_small


@pytest.mark.parametrize("q", [5, 7])
def test_line_set_stabilizer_matches_brute(fields, q):
    from sl2lab.plane import line_apply

    ctx = fields[q]
    lines = proj_lines(ctx)
    for lineset in [lines[:1], lines[:2], lines[:3], (lines[0], lines[2], lines[q]),
                    lines[:4], lines]:
        got = line_set_stabilizer(ctx, lineset)
        want = {
            m for m in sl2_materialize(ctx)
            if {line_apply(ctx, m, ln) for ln in lineset} == set(lineset)
        }
        assert got == want
    # known orders: one line q(q-1); the axis pair 2(q-1); all lines everything
    assert len(line_set_stabilizer(ctx, [lines[0]])) == q * (q - 1)
    assert len(line_set_stabilizer(ctx, [(1, 0), (0, 1)])) == 2 * (q - 1)
    assert len(line_set_stabilizer(ctx, lines)) == sl2_order(q)
    with pytest.raises(ValueError):
        line_set_stabilizer(ctx, [])


def test_line_set_stabilizer_cap(fields):
    ctx = fields[7]
    lines = proj_lines(ctx)
    for m in (3, 4, 5):
        for lineset in itertools.combinations(lines, m):
            assert len(line_set_stabilizer(ctx, lineset)) <= 2 * m**3 * (m - 1) ** 2


def test_subgroup_closure(fields):
    ctx = fields[5]
    # the two standard unipotents generate the whole group
    whole = subgroup_closure(ctx, [(1, 1, 0, 1), (1, 0, 1, 1)])
    assert len(whole) == sl2_order(5)
    single = subgroup_closure(ctx, [(1, 1, 0, 1)])
    assert single == frozenset((1, b, 0, 1) for b in range(5))
    assert subgroup_closure(ctx, []) == frozenset({IDENTITY})
    with pytest.raises(ValueError):
        subgroup_closure(ctx, [(1, 1, 0, 1), (1, 0, 1, 1)], limit=10)


def test_subgroup_orbits(fields):
    ctx = fields[5]
    H, orbits = subgroup_orbits(ctx, [(1, 1, 0, 1)])
    assert len(H) == 5
    covered = 0
    for orb in orbits:
        assert covered & orb.bits == 0
        covered |= orb.bits
        assert len(H) % len(orb) == 0  # orbit sizes divide the group order
    assert covered == (1 << 25) - 1
    assert orbits[0].bits == 1  # origin orbit listed first
    # every orbit is H-invariant
    from sl2lab.plane import apply_to_set
    for orb in orbits:
        for m in H:
            assert apply_to_set(ctx, m, orb) == orb


@pytest.mark.parametrize("q", [2, 3])
def test_all_subset_table_matches_brute(fields, q):
    ctx = fields[q]
    table = all_subset_stabilizer_orders(ctx)
    assert len(table) == 1 << (q * q)
    for bits in range(len(table)):
        assert table[bits] == len(stabilizer_brute(ctx, PointSet(q, bits)))


def test_all_subset_table_gf4_spots(fields):
    ctx = fields[4]
    table = all_subset_stabilizer_orders(ctx)
    assert table[0] == sl2_order(4)
    assert table[(1 << 16) - 1] == sl2_order(4)
    rng = DetRng(77)
    for _ in range(40):
        bits = rng.below(1 << 16)
        assert table[bits] == len(stabilizer_fast(ctx, PointSet(4, bits)))
    # the subfield plane: codes {0,1,4,5} = F_2 x F_2
    assert table[0b0000000000110011] == 6
    with pytest.raises(ValueError):
        all_subset_stabilizer_orders(fields[5])


def test_contained_in_line(fields):
    ctx = fields[5]
    assert contained_in_line(ctx, PointSet.from_points(5, [(0, 1), (0, 3)]))
    assert contained_in_line(ctx, PointSet.from_points(5, [(1, 2), (2, 4), (0, 0)]))
    assert contained_in_line(ctx, PointSet.from_points(5, [(1, 1)]))
    assert contained_in_line(ctx, PointSet(5))
    # any pair is collinear; a proper triangle is not
    assert contained_in_line(ctx, PointSet.from_points(5, [(1, 0), (0, 1)]))
    assert not contained_in_line(ctx, PointSet.from_points(5, [(1, 0), (0, 1), (1, 1)]))
    # affine line not through the origin still counts as a line
    assert contained_in_line(ctx, PointSet.from_points(5, [(1, y) for y in range(5)]))
    assert contained_in_line(
        ctx, PointSet.from_points(5, [(1, 0), (0, 1), (2, 4)]))  # x + y = 1


def test_constants_defaults():
    c = Constants()
    assert (c.c, c.c1, c.c2, c.alpha, c.beta) == (1.0, 1.0, 1.0, 0.5, 0.75)


def test_bound_report_subfield_plane(fields):
    ctx = fields[4]
    E = PointSet.from_points(4, [(0, 0), (0, 1), (1, 0), (1, 1)])
    rep = bound_report(ctx, E)
    assert rep.size == 4 and rep.size_nonzero == 3
    assert rep.stab_order == 6
    assert rep.lines_meeting == 3
    assert rep.ratio_full == pytest.approx(6 / 4**1.5)   # 0.75
    assert rep.ratio_nonzero == pytest.approx(6 / 3**1.5)
    by = {r.name: r for r in rep.rows}
    assert not by["two_lines"].applicable
    assert by["line_set"].applicable and by["line_set"].rhs == 2 * 27 * 4
    assert by["prime_power"].applicable and by["prime_power"].rhs == 8.0
    assert by["prime_power"].violated is False
    assert by["whole_plane"].violated is None
    assert by["three_halves"].violated is None
    assert rep.violations() == []
    assert not rep.contained_line


def test_bound_report_two_lines(fields):
    ctx = fields[5]
    E = PointSet.from_points(5, [(0, 1), (0, 2), (1, 0)])
    rep = bound_report(ctx, E)
    by = {r.name: r for r in rep.rows}
    assert rep.lines_meeting == 2
    assert by["two_lines"].applicable
    assert by["two_lines"].violated is False
    assert not by["line_set"].applicable
    assert rep.stab_order <= rep.size_nonzero


def test_bound_report_accepts_precomputed_order(fields):
    ctx = fields[5]
    E = random_subset(5, 9)
    want = len(stabilizer_fast(ctx, E))
    rep = bound_report(ctx, E, stab_order=want)
    assert rep.stab_order == want
    assert rep == bound_report(ctx, E)


def test_bound_report_exhaustive_gf3_no_violations(fields):
    ctx = fields[3]
    table = all_subset_stabilizer_orders(ctx)
    for bits in range(1 << 9):
        rep = bound_report(ctx, PointSet(3, bits), stab_order=table[bits])
        assert rep.violations() == []


def test_confirmation_logic(fields):
    ctx = fields[9]
    # small and line-rich: an origin line is confirmed contained
    from sl2lab.plane import points_on_line
    E = PointSet.from_points(9, points_on_line(ctx, (1, 0)))
    rep = bound_report(ctx, E, Constants(c1=10.0, c2=1.0))
    assert rep.small and rep.rich
    assert rep.confirmed is True
    # scattered set with trivial stabilizer is not rich, so no verdict
    E2 = PointSet.from_points(9, [(1, 2), (2, 5), (3, 1), (0, 4), (7, 7)])
    rep2 = bound_report(ctx, E2, Constants(c1=10.0, c2=1.0))
    assert rep2.confirmed is None or rep2.rich


GF9_SUBFIELD_AUDIT = dict(
    multiplicity=2, class_count=4, probe_count=2, target_count=4,
    preserver_count=24, mover_count=18, fixer_count=6, transport_total=24,
    fixer_part=8, mover_part=16, incidence_count=16, transport_lines=8,
    plane_max=4, lower_bound=0, pair_cap=8, class_cap=32, stab_order=24,
    skew_pairs=4, meeting_pairs=4, parallel_pairs=4, parallel_triples=0,
    final_cap_applies=False, final_cap_holds=True, normalizer=IDENTITY,
)


def test_audit_gf9_subfield_plane(fields):
    ctx = fields[9]
    sub = subfield_elements(ctx, 1)
    E = PointSet.from_points(9, [(x, y) for x in sub.members for y in sub.members])
    audit = triple_count_audit(ctx, E, 2)
    for name, want in GF9_SUBFIELD_AUDIT.items():
        assert getattr(audit, name) == want, name
    assert audit.plane_max <= 2 * audit.class_count
    assert audit.preserver_count == audit.mover_count + audit.fixer_count
    assert audit.transport_total == audit.fixer_part + audit.mover_part
    assert audit.mover_part == audit.incidence_count
    inst = audit.instance()
    assert (inst.class_count, inst.multiplicity) == (4, 2)
    assert len(inst.lines) == audit.transport_lines
    assert inst.plane_max == audit.plane_max


def test_audit_axis_pair(fields):
    # two axes in GF(7): class of multiplicity 6 has exactly 2 lines
    ctx = fields[7]
    E = PointSet.from_points(7, [(0, y) for y in range(1, 7)]
                             + [(x, 0) for x in range(1, 7)])
    audit = triple_count_audit(ctx, E, 6)
    assert audit.class_count == 2
    assert audit.lower_bound == 0  # m0 - 4 < 0
    assert audit.stab_order <= audit.preserver_count


def test_audit_random_uniform_sets(fields):
    from sl2lab.harness import random_uniform_class_set

    ctx = fields[7]
    for trial in range(10):
        E, m0, m1 = random_uniform_class_set(ctx, nth_seed(7000, trial))
        audit = triple_count_audit(ctx, E, m1)
        assert audit.class_count == m0
        assert audit.multiplicity == m1
        assert audit.plane_max <= 2 * m0
        assert audit.transport_total >= max(0, m0 - 4) * audit.preserver_count
        assert audit.fixer_part <= audit.pair_cap <= audit.class_cap


def test_audit_rejects_missing_multiplicity(fields):
    ctx = fields[7]
    E = PointSet.from_points(7, [(0, 1), (0, 2)])
    with pytest.raises(ValueError):
        triple_count_audit(ctx, E, 3)
