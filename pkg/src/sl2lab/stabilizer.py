"""Computing which SL2(F_q) elements preserve a plane point set.

The symmetry set of E is R(E) = {theta : theta(E) = E}; it is always a
subgroup, it ignores the origin (linear maps fix it), and it equals the
symmetry set of the complement.  Two independent routes compute it:

  * stabilizer_brute filters the whole group, testing theta(E) = E
    point by point.  Trustworthy and slow; this is the oracle.
  * stabilizer_fast picks a base point of E, enumerates for every
    possible image the q-element family of group elements carrying base
    to image (solving the two linear equations plus the determinant
    condition), and keeps the ones that preserve E.  Cost is about
    |E| * q candidates times an O(|E|) check, instead of q^3 filters.

The two must agree exactly; the test suite holds them together on every
subset of small planes and on random subsets of larger ones.

The rest of the module turns theorems about R(E) into checkable
reports: line partitions, the exact stabilizer of a set of directions,
orbit decompositions under a subgroup, per-set bound reports, and the
triple-count audit that replays the incidence-geometry argument behind
the |R(E)| <= 16 c^2 (m0 m1)^{3/2} cap, identity by identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .gf import FieldCtx
from .incidence3d import (
    build_instance,
    count_incidences,
    plane_richness,
    project_matrix,
    relation,
    transport_line,
    triple_coplanar,
)
from .plane import (
    IDENTITY,
    MATERIALIZE_LIMIT,
    PointSet,
    apply_to_set,
    line_apply,
    line_index,
    line_nonzero_masks,
    line_of_point,
    mat_apply,
    mat_inv,
    mat_mul,
    normalize_two_lines,
    point_permutation,
    proj_lines,
    sl2_elements,
    sl2_materialize,
    sl2_order,
)
from .rng import DetRng


def _group_spot_check(ctx: FieldCtx, mats: set, samples: int = 64) -> None:
    """Cheap group-property asserts: identity, inverses, sampled products."""
    assert IDENTITY in mats
    for m in mats:
        assert mat_inv(ctx, m) in mats
    if len(mats) > 1:
        rng = DetRng(len(mats))
        pool = sorted(mats)
        for _ in range(min(samples, len(mats) * 2)):
            a = pool[rng.below(len(pool))]
            b = pool[rng.below(len(pool))]
            assert mat_mul(ctx, a, b) in mats


def stabilizer_brute(ctx: FieldCtx, E: PointSet) -> set:
    """R(E) by filtering every group element (the oracle route)."""
    q = ctx.q
    nz = E.nonzero_codes
    bits = E.bits
    add, mul = ctx.add, ctx.mul
    source = (
        sl2_materialize(ctx) if sl2_order(q) <= MATERIALIZE_LIMIT else sl2_elements(ctx)
    )
    out = set()
    for m in source:
        a, b, c, d = m
        for code in nz:
            x, y = divmod(code, q)
            if not (bits >> (add(mul(a, x), mul(b, y)) * q + add(mul(c, x), mul(d, y)))) & 1:
                break
        else:
            out.add(m)
    _group_spot_check(ctx, out)
    return out


def _transport_candidates(ctx: FieldCtx, src, dst):
    """The q solutions of theta(src) = dst, for src with nonzero first coord.

    Solving a*u1 + b*v1 = u2 and c*u1 + d*v1 = v2 under ad - bc = 1
    leaves the single linear relation u2*d - v2*b = u1; whichever of
    u2, v2 is nonzero parametrizes the family.
    """
    q = ctx.q
    add, sub, mul, inv, neg = ctx.add, ctx.sub, ctx.mul, ctx.inv, ctx.neg
    u1, v1 = src
    u2, v2 = dst
    iu1 = inv(u1)
    out = []
    if u2 != 0:
        iu2 = inv(u2)
        for b in range(q):
            d = mul(add(u1, mul(v2, b)), iu2)
            a = mul(sub(u2, mul(b, v1)), iu1)
            c = mul(sub(v2, mul(d, v1)), iu1)
            out.append((a, b, c, d))
    else:
        b = neg(mul(u1, inv(v2)))
        a = mul(sub(u2, mul(b, v1)), iu1)
        for d in range(q):
            c = mul(sub(v2, mul(d, v1)), iu1)
            out.append((a, b, c, d))
    return out


def stabilizer_fast(ctx: FieldCtx, E: PointSet) -> set:
    """R(E) via transport families from a fixed base point of E.

    The base point is the member of E minus the origin with the
    smallest packed code; when it sits on the y-axis the whole set is
    first rotated by normalize_two_lines(y-axis, x-axis) so the base
    gets a nonzero first coordinate, and the result is conjugated back.
    Raises ValueError when E minus the origin is empty (the answer
    would be the whole group; see stabilizer()).
    """
    q = ctx.q
    nz = E.nonzero_codes
    if not nz:
        raise ValueError("E minus the origin is empty; its symmetry set is all of SL2")
    base = divmod(nz[0], q)
    rot = None
    if base[0] == 0:
        rot = normalize_two_lines(ctx, (0, 1), (1, 0))
        E = apply_to_set(ctx, rot, E)
        base = mat_apply(ctx, rot, base)
        nz = E.nonzero_codes
    bits = E.bits
    add, mul = ctx.add, ctx.mul
    found = set()
    for code in nz:
        dst = divmod(code, q)
        for m in _transport_candidates(ctx, base, dst):
            a, b, c, d = m
            for pc in nz:
                x, y = divmod(pc, q)
                if not (bits >> (add(mul(a, x), mul(b, y)) * q + add(mul(c, x), mul(d, y)))) & 1:
                    break
            else:
                found.add(m)
    if rot is not None:
        un = mat_inv(ctx, rot)
        found = {mat_mul(ctx, mat_mul(ctx, un, m), rot) for m in found}
    _group_spot_check(ctx, found)
    return found


def stabilizer(ctx: FieldCtx, E: PointSet) -> set:
    """R(E) for any E, including the degenerate whole-group cases."""
    if E.nonzero_size == 0:
        return set(sl2_materialize(ctx))
    return stabilizer_fast(ctx, E)


# ---------------------------------------------------------------------------
# Line partitions


@dataclass(frozen=True)
class LinePartition:
    """Directions through the origin grouped by |line  ∩ (E - 0)|.

    classes maps each multiplicity >= 1 to the tuple of canonical
    directions meeting E - 0 that many times, in pencil order; lines
    missing E entirely are not recorded.
    """

    classes: dict

    @property
    def lines_meeting(self) -> int:
        return sum(len(v) for v in self.classes.values())

    def class_count(self, multiplicity: int) -> int:
        return len(self.classes.get(multiplicity, ()))

    @property
    def all_classes_small(self) -> bool:
        """True when every multiplicity class holds at most two lines."""
        return all(len(v) <= 2 for v in self.classes.values())


def line_partition(ctx: FieldCtx, E: PointSet) -> LinePartition:
    masks = line_nonzero_masks(ctx)
    lines = proj_lines(ctx)
    by_mult: dict = {}
    covered = 0
    for line, mask in zip(lines, masks):
        m = (E.bits & mask).bit_count()
        if m:
            by_mult.setdefault(m, []).append(line)
            covered += m
    assert covered == E.nonzero_size, "pencil must partition the nonzero points"
    return LinePartition({k: tuple(by_mult[k]) for k in sorted(by_mult)})


def lines_meeting_count(ctx: FieldCtx, bits: int) -> int:
    """How many origin lines meet the bitset away from the origin."""
    return sum(1 for mask in line_nonzero_masks(ctx) if bits & mask)


def line_set_stabilizer(ctx: FieldCtx, lines) -> set:
    """All theta permuting the given set of directions among themselves.

    Exact brute filter over the group.  For three or more lines the
    result is asserted against the 2 m^3 (m-1)^2 cap, which holds for
    every set of directions.
    """
    lineset = frozenset(lines)
    if not lineset:
        raise ValueError("need at least one line")
    for ln in lineset:
        line_index(ctx, ln)  # validates canonical form
    out = set()
    for m in sl2_materialize(ctx):
        for ln in lineset:
            if line_apply(ctx, m, ln) not in lineset:
                break
        else:
            out.add(m)
    count = len(lineset)
    if count >= 3:
        assert len(out) <= 2 * count**3 * (count - 1) ** 2
    _group_spot_check(ctx, out)
    return out


# ---------------------------------------------------------------------------
# Subgroups and orbits


def subgroup_closure(ctx: FieldCtx, generators, limit: int = 1_000_000) -> frozenset:
    """The subgroup generated by the given matrices (BFS under products)."""
    for g in generators:
        from .plane import is_sl2

        if not is_sl2(ctx, g):
            raise ValueError(f"{g} is not in SL2")
    seen = {IDENTITY}
    frontier = [IDENTITY]
    gens = list(generators)
    while frontier:
        nxt = []
        for h in frontier:
            for g in gens:
                prod = mat_mul(ctx, h, g)
                if prod not in seen:
                    seen.add(prod)
                    nxt.append(prod)
        if len(seen) > limit:
            raise ValueError(f"subgroup closure exceeded {limit} elements")
        frontier = nxt
    return frozenset(seen)


def subgroup_orbits(ctx: FieldCtx, generators, limit: int = 1_000_000):
    """(subgroup, orbits): orbit PointSets of the generated subgroup.

    Orbits come back ordered by smallest packed code, each as a
    PointSet; the orbit-stabilizer identity |H| = |orbit| * |stab| is
    asserted for every orbit.
    """
    q = ctx.q
    H = subgroup_closure(ctx, generators, limit)
    perms = [point_permutation(ctx, g) for g in generators] or [list(range(q * q))]
    seen = [False] * (q * q)
    orbits = []
    for start in range(q * q):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        members = []
        while stack:
            cur = stack.pop()
            members.append(cur)
            for perm in perms:
                to = perm[cur]
                if not seen[to]:
                    seen[to] = True
                    stack.append(to)
        orbits.append(PointSet.from_codes(q, members))
    assert sum(len(o) for o in orbits) == q * q
    for orbit in orbits:
        rep = divmod(min(orbit.codes()), q)
        stab = sum(1 for h in H if mat_apply(ctx, h, rep) == rep)
        assert len(H) == len(orbit) * stab, "orbit-stabilizer identity"
    return H, orbits


# ---------------------------------------------------------------------------
# Whole-plane subset sweeps


def all_subset_stabilizer_orders(ctx: FieldCtx) -> list:
    """|R(E)| for every subset of the plane at once (q <= 4 only).

    For each group element the fixed subsets are exactly the unions of
    cycles of its point permutation, so one pass over the group fills
    the whole 2^(q^2) table; this is what makes exhaustive campaigns
    instant compared to per-subset filtering.
    """
    q = ctx.q
    n = q * q
    if n > 16:
        raise ValueError("exhaustive subset table needs q <= 4")
    counts = [0] * (1 << n)
    for m in sl2_materialize(ctx):
        perm = point_permutation(ctx, m)
        seen = [False] * n
        masks = [0]
        for s in range(n):
            if not seen[s]:
                cyc = 0
                t = s
                while not seen[t]:
                    seen[t] = True
                    cyc |= 1 << t
                    t = perm[t]
                masks += [mk | cyc for mk in masks]
        for mk in masks:
            counts[mk] += 1
    return counts


def contained_in_line(ctx: FieldCtx, E: PointSet) -> bool:
    """Whether E lies on a single line of the plane (affine lines count)."""
    pts = E.points()
    if len(pts) <= 2:
        return True
    sub, mul = ctx.sub, ctx.mul
    (x0, y0), (x1, y1) = pts[0], pts[1]
    dx, dy = sub(x1, x0), sub(y1, y0)
    for x, y in pts[2:]:
        if sub(mul(sub(x, x0), dy), mul(sub(y, y0), dx)) != 0:
            return False
    return True


# ---------------------------------------------------------------------------
# Bound reports


@dataclass(frozen=True)
class Constants:
    """Tunable constants for report columns.

    c scales the plane-richness incidence bound; c1/alpha and c2/beta
    are the thresholds |E| <= c1 q^alpha and |R(E)| >= c2 q^beta of the
    containment criterion (beta = 3 alpha / 2 is the interesting edge,
    so the defaults sit at alpha = 1/2, beta = 3/4).
    """

    c: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    alpha: float = 0.5
    beta: float = 0.75


@dataclass(frozen=True)
class BoundRow:
    """One observed-versus-bound comparison; violated is None for rows
    that only report a ratio (bounds with unspecified constants)."""

    name: str
    applicable: bool
    rhs: float
    ratio: float | None
    violated: bool | None


@dataclass(frozen=True)
class BoundReport:
    size: int
    size_nonzero: int
    lines_meeting: int
    stab_order: int
    contained_line: bool
    all_classes_small: bool
    ratio_full: float | None
    ratio_nonzero: float | None
    rows: tuple
    small: bool
    small_rhs: float
    rich: bool
    rich_rhs: float
    confirmed: bool | None

    def violations(self) -> list:
        return [r.name for r in self.rows if r.applicable and r.violated]


def bound_report(
    ctx: FieldCtx,
    E: PointSet,
    constants: Constants = Constants(),
    stab_order: int | None = None,
) -> BoundReport:
    """Compare |R(E)| against every bound with checkable hypotheses.

    stab_order may be supplied by campaigns that already know it (the
    exhaustive sweeps); otherwise it is computed via stabilizer().
    Cardinalities: size counts the origin when present, while every
    line hypothesis and the two-line bound use E minus the origin.
    """
    q = ctx.q
    if stab_order is None:
        stab_order = len(stabilizer(ctx, E))
    part = line_partition(ctx, E)
    lines = part.lines_meeting
    size = E.size
    size_nz = E.nonzero_size
    contained = contained_in_line(ctx, E)

    ratio_full = stab_order / size**1.5 if size else None
    ratio_nz = stab_order / size_nz**1.5 if size_nz else None

    rows = []

    def add(name, applicable, rhs, check):
        ratio = (stab_order / rhs) if rhs > 0 else None
        violated = (not check()) if (applicable and check is not None) else None
        if check is None:
            violated = None
        rows.append(BoundRow(name, applicable, rhs, ratio, violated))

    add("two_lines", lines == 2, float(size_nz), lambda: stab_order <= size_nz)
    cap = 2 * lines**3 * (lines - 1) ** 2
    add("line_set", lines >= 3, float(cap), lambda: stab_order <= cap)
    whole = q * q
    proper = 0 < size_nz < whole - 1
    pp_rhs = ctx.p ** (ctx.r - 1) * size
    add("prime_power", lines >= 2 and proper, float(pp_rhs), lambda: stab_order <= pp_rhs)
    add("whole_plane", proper, float(whole), None)
    add("three_halves", lines >= 2, size**1.5, None)

    c = constants
    small_rhs = c.c1 * q**c.alpha
    rich_rhs = c.c2 * q**c.beta
    small = size <= small_rhs
    rich = stab_order >= rich_rhs
    confirmed = contained if (small and rich) else None

    return BoundReport(
        size=size,
        size_nonzero=size_nz,
        lines_meeting=lines,
        stab_order=stab_order,
        contained_line=contained,
        all_classes_small=lines >= 2 and part.all_classes_small,
        ratio_full=ratio_full,
        ratio_nonzero=ratio_nz,
        rows=tuple(rows),
        small=small,
        small_rhs=small_rhs,
        rich=rich,
        rich_rhs=rich_rhs,
        confirmed=confirmed,
    )


# ---------------------------------------------------------------------------
# The triple-count audit


@dataclass(frozen=True)
class TripleCountAudit:
    """Every quantity of the triple-count argument for one (E, class).

    The argument bounds the set S of group elements permuting the
    chosen class sets among themselves (R(E) is contained in S).  It
    counts transports (probe, target, theta) with theta(probe) =
    target: at least (class_count - 4) |S| of them exist, the part from
    x-axis-fixing elements is at most probe_count * target_count, and
    the moving part equals an exact point-line incidence count in
    3-space, where no plane holds more than 2 * class_count of the
    transport lines.  All of those identities are asserted, so an audit
    that returns is an audit that passed.
    """

    multiplicity: int
    class_count: int
    normalizer: tuple
    base_codes: tuple
    probe_count: int
    target_count: int
    preserver_count: int
    mover_count: int
    fixer_count: int
    transport_total: int
    fixer_part: int
    mover_part: int
    incidence_count: int
    transport_lines: int
    plane_max: int
    lower_bound: int
    pair_cap: int
    class_cap: int
    mt_rhs: float
    final_cap_value: float
    final_cap_applies: bool
    final_cap_holds: bool
    stab_order: int
    skew_pairs: int
    meeting_pairs: int
    parallel_pairs: int
    parallel_triples: int

    def instance(self):
        """The audited incidence instance with partition data attached."""
        return self._inst  # set in triple_count_audit

    _inst: object = field(default=None, repr=False, compare=False)


def triple_count_audit(
    ctx: FieldCtx, E: PointSet, multiplicity: int, c: float = 1.0
) -> TripleCountAudit:
    """Replay the triple-count argument on E's class of the given
    multiplicity and assert every step.

    Coordinates are first normalized so two class lines become the axes
    (mirroring the argument's normalization) whenever the class has two
    or more lines and neither axis already belongs to it; the audited
    quantities are conjugation-invariant, so this only fixes which
    points get excluded as axis points.
    """
    q = ctx.q
    E = E.without_origin()
    part = line_partition(ctx, E)
    if multiplicity not in part.classes:
        raise ValueError(f"no line meets E - 0 in exactly {multiplicity} points")
    lines = part.classes[multiplicity]
    m0 = len(lines)

    axes = ((1, 0), (0, 1))
    normalizer = IDENTITY
    if m0 >= 2 and not any(ln in axes for ln in lines):
        normalizer = normalize_two_lines(ctx, lines[0], lines[1])
        E = apply_to_set(ctx, normalizer, E)
        part = line_partition(ctx, E)
        lines = part.classes[multiplicity]
        assert len(lines) == m0, "normalization must preserve multiplicities"

    masks = line_nonzero_masks(ctx)
    class_sets = []
    for ln in lines:
        bits = E.bits & masks[line_index(ctx, ln)]
        codes = []
        while bits:
            low = bits & -bits
            codes.append(low.bit_length() - 1)
            bits ^= low
        class_sets.append(tuple(codes))

    # S: elements permuting the class point sets among themselves
    frozen = {frozenset(cs) for cs in class_sets}
    add, mul = ctx.add, ctx.mul
    preservers = []
    for m in sl2_materialize(ctx):
        a, b, c_, d = m
        ok = True
        for cs in class_sets:
            img = frozenset(
                add(mul(a, x), mul(b, y)) * q + add(mul(c_, x), mul(d, y))
                for x, y in (divmod(code, q) for code in cs)
            )
            if img not in frozen:
                ok = False
                break
        if ok:
            preservers.append(m)
    movers = [m for m in preservers if m[2] != 0]  # these move the x-axis
    fixers = [m for m in preservers if m[2] == 0]

    def off_axes(code):
        x, y = divmod(code, q)
        return x != 0 and y != 0

    base_codes = tuple(min(cs) for cs in class_sets)
    probes = [code for code in base_codes if off_axes(code)]
    targets = sorted(code for cs in class_sets for code in cs if off_axes(code))
    target_set = set(targets)

    transport_total = 0
    fixer_part = 0
    for m in preservers:
        a, b, c_, d = m
        for code in probes:
            x, y = divmod(code, q)
            img = add(mul(a, x), mul(b, y)) * q + add(mul(c_, x), mul(d, y))
            if img in target_set:
                transport_total += 1
                if c_ == 0:
                    fixer_part += 1
    mover_part = transport_total - fixer_part

    lower = max(0, m0 - 4) * len(preservers)
    assert transport_total >= lower, "transport lower bound failed"
    pair_cap = len(probes) * len(targets)
    class_cap = m0 * m0 * multiplicity
    assert fixer_part <= pair_cap <= class_cap, "fixer-part cap failed"

    lines3 = {
        transport_line(ctx, divmod(u, q), divmod(v, q)) for u in probes for v in targets
    }
    assert len(lines3) == pair_cap, "transport lines must be pairwise distinct"
    proj = {project_matrix(m) for m in movers}
    assert len(proj) == len(movers), "projection must be injective off c = 0"
    inc = count_incidences(ctx, proj, lines3)
    assert inc == mover_part, "mover part must equal the incidence count"

    plane_max, _ = plane_richness(ctx, lines3)
    assert plane_max <= 2 * m0, "plane richness cap failed"

    # Skew / parallel structure of the transport lines from one probe:
    # same-origin-line targets give parallel lines (and no three of those
    # are coplanar); targets on distinct origin lines give skew lines
    # UNLESS they share their second coordinate, in which case both
    # lines pass through the one projected point that forgets the
    # upper-right entry of an axis-fixing transporter.  That exception
    # is real (not an artifact), so it is asserted too.
    by_pair = {}
    for u in probes:
        for v in targets:
            by_pair[(u, v)] = transport_line(ctx, divmod(u, q), divmod(v, q))

    skew_pairs = meeting_pairs = parallel_pairs = parallel_triples = 0
    for u in probes:
        by_dir: dict = {}
        for v in targets:
            by_dir.setdefault(line_of_point(ctx, divmod(v, q)), []).append(v)
        for d1, d2 in itertools.combinations(sorted(by_dir), 2):
            for v in by_dir[d1]:
                for w in by_dir[d2]:
                    rel = relation(ctx, by_pair[(u, v)], by_pair[(u, w)])
                    if v % q == w % q:  # equal second coordinates
                        assert rel == "intersecting"
                        meeting_pairs += 1
                    else:
                        assert rel == "skew"
                        skew_pairs += 1
        for d in sorted(by_dir):
            vs = by_dir[d]
            for v, w in itertools.combinations(vs, 2):
                assert relation(ctx, by_pair[(u, v)], by_pair[(u, w)]) == "parallel"
                parallel_pairs += 1
            for v, w, z in itertools.combinations(vs, 3):
                assert not triple_coplanar(
                    ctx, by_pair[(u, v)], by_pair[(u, w)], by_pair[(u, z)]
                )
                parallel_triples += 1

    # R(E) sits inside S
    stab = stabilizer_fast(ctx, E) if E.nonzero_size else set(sl2_materialize(ctx))
    pres_set = set(preservers)
    assert stab <= pres_set, "symmetries must permute the class sets"

    s_count = len(preservers)
    mt_rhs = 2 * c * (
        m0**1.75 * multiplicity**0.75 * s_count**0.5 + m0 * m0 * multiplicity + s_count
    )
    # The closing cap is reported rather than asserted: its constant
    # rides on the unspecified incidence constant c, which callers pick.
    final_cap = 16 * c * c * (m0 * multiplicity) ** 1.5
    applies = m0 > 8 + 4 * c
    holds = s_count <= final_cap

    inst = build_instance(ctx, proj, lines3, class_count=m0, multiplicity=multiplicity)
    return TripleCountAudit(
        multiplicity=multiplicity,
        class_count=m0,
        normalizer=normalizer,
        base_codes=base_codes,
        probe_count=len(probes),
        target_count=len(targets),
        preserver_count=s_count,
        mover_count=len(movers),
        fixer_count=len(fixers),
        transport_total=transport_total,
        fixer_part=fixer_part,
        mover_part=mover_part,
        incidence_count=inc,
        transport_lines=len(lines3),
        plane_max=plane_max,
        lower_bound=lower,
        pair_cap=pair_cap,
        class_cap=class_cap,
        mt_rhs=mt_rhs,
        final_cap_value=final_cap,
        final_cap_applies=applies,
        final_cap_holds=holds,
        stab_order=len(stab),
        skew_pairs=skew_pairs,
        meeting_pairs=meeting_pairs,
        parallel_pairs=parallel_pairs,
        parallel_triples=parallel_triples,
        _inst=inst,
    )
