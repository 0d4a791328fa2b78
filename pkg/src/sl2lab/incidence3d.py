"""Points, lines and planes of F_q^3, and the incidence counts behind the
stabilizer bounds.

The bridge from the group to 3-space is project_matrix: (a b; c d) maps
to (a, d, c), forgetting b.  On matrices with c != 0 the entry b is
recoverable as (ad - 1)/c, so the projection is injective there, and
the set of solutions of theta(src) = dst projects onto an explicit line
(transport_line).  Counting point-line incidences among such lines is
what turns stabilizer questions into 3-space geometry.

Lines are kept in a canonical form so that equal point sets compare
equal: the direction is scaled to make its first nonzero coordinate 1
(at index `lead`) and the base point is translated to have coordinate 0
there.  Planes are (normal, offset) pairs with the normal's first
nonzero coordinate scaled to 1; there are exactly q(q^2 + q + 1) of
them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .gf import FieldCtx
from .plane import sl2_elements, sl2_order, MATERIALIZE_LIMIT


def project_matrix(m) -> tuple:
    """(a b; c d) -> (a, d, c)."""
    a, b, c, d = m
    return (a, d, c)


def _dot(ctx, u, v):
    add, mul = ctx.add, ctx.mul
    return add(add(mul(u[0], v[0]), mul(u[1], v[1])), mul(u[2], v[2]))


def _det3(ctx, u, v, w):
    add, sub, mul = ctx.add, ctx.sub, ctx.mul
    m1 = sub(mul(v[1], w[2]), mul(v[2], w[1]))
    m2 = sub(mul(v[0], w[2]), mul(v[2], w[0]))
    m3 = sub(mul(v[0], w[1]), mul(v[1], w[0]))
    return add(sub(mul(u[0], m1), mul(u[1], m2)), mul(u[2], m3))


@dataclass(frozen=True)
class Line3:
    """A line of F_q^3 in canonical (base, dir) form; build via line3()."""

    base: tuple
    dir: tuple
    lead: int  # index of the first nonzero direction coordinate

    def __repr__(self):
        return f"Line3(base={self.base}, dir={self.dir})"


def line3(ctx: FieldCtx, base, dir) -> Line3:
    """Canonicalize (base, dir) so equal lines get equal representatives."""
    if dir == (0, 0, 0):
        raise ValueError("a line needs a nonzero direction")
    lead = 0 if dir[0] else (1 if dir[1] else 2)
    s = ctx.inv(dir[lead])
    mul, sub = ctx.mul, ctx.sub
    d = tuple(mul(s, x) for x in dir)
    t = base[lead]
    b = tuple(sub(base[i], mul(t, d[i])) for i in range(3))
    return Line3(b, d, lead)


def line_points(ctx: FieldCtx, line: Line3) -> list:
    add, mul = ctx.add, ctx.mul
    bx, by, bz = line.base
    dx, dy, dz = line.dir
    return [
        (add(bx, mul(t, dx)), add(by, mul(t, dy)), add(bz, mul(t, dz)))
        for t in range(ctx.q)
    ]


def on_line(ctx: FieldCtx, pt, line: Line3) -> bool:
    """Exact membership test; O(1) thanks to the canonical form."""
    t = pt[line.lead]  # base coord there is 0 and dir coord is 1
    add, mul = ctx.add, ctx.mul
    b, d = line.base, line.dir
    return all(pt[i] == add(b[i], mul(t, d[i])) for i in range(3))


def all_lines(ctx: FieldCtx):
    """Every line of F_q^3, canonical, q^2(q^2+q+1) of them (test support)."""
    seen = set()
    dirs = (
        [(1, a, b) for a in range(ctx.q) for b in range(ctx.q)]
        + [(0, 1, b) for b in range(ctx.q)]
        + [(0, 0, 1)]
    )
    for d in dirs:
        for x in range(ctx.q):
            for y in range(ctx.q):
                for z in range(ctx.q):
                    ln = line3(ctx, (x, y, z), d)
                    if ln not in seen:
                        seen.add(ln)
                        yield ln


# ---------------------------------------------------------------------------
# Transport of plane points and the line it projects to


def transport_set(ctx: FieldCtx, src, dst):
    """All theta in SL2 with theta(src) = dst, by brute filter (size q)."""
    from .plane import mat_apply

    if sl2_order(ctx.q) > MATERIALIZE_LIMIT:
        raise ValueError("field too large for the brute transport filter")
    out = {m for m in sl2_elements(ctx) if mat_apply(ctx, m, src) == dst}
    assert len(out) == ctx.q
    return out


def transport_line(ctx: FieldCtx, src, dst) -> Line3:
    """The projected image of the transport set as an explicit Line3.

    Requires src = (u1, v1), dst = (u2, v2) with u1 != 0, u2 != 0 and
    (v1, v2) != (0, 0); under those conditions the three defining
    equations (two linear, one determinant) project to the line
    base + b * dir with

      base = (u2/u1, u1/u2, v2/u1 - v1/u2)
      dir  = (-v1/u1, v2/u2, -v1*v2/(u1*u2)).
    """
    u1, v1 = src
    u2, v2 = dst
    if u1 == 0 or u2 == 0:
        raise ValueError("transport_line needs nonzero first coordinates")
    if v1 == 0 and v2 == 0:
        raise ValueError("transport_line needs (v1, v2) != (0, 0)")
    div, sub, neg, mul = ctx.div, ctx.sub, ctx.neg, ctx.mul
    base = (div(u2, u1), div(u1, u2), sub(div(v2, u1), div(v1, u2)))
    dir = (neg(div(v1, u1)), div(v2, u2), neg(div(mul(v1, v2), mul(u1, u2))))
    return line3(ctx, base, dir)


# ---------------------------------------------------------------------------
# Incidence counting


def count_incidences(ctx: FieldCtx, points, lines) -> int:
    """I(P, L) = number of (p, l) pairs with p on l.

    Walks the q points of each line against a hashed point set; the
    quadratic double loop lives in count_incidences_brute as the
    independent check.
    """
    pset = set(points)
    total = 0
    for ln in lines:
        for pt in line_points(ctx, ln):
            if pt in pset:
                total += 1
    assert 0 <= total <= len(pset) * len(set(lines))
    return total


def count_incidences_brute(ctx: FieldCtx, points, lines) -> int:
    return sum(1 for p in set(points) for ln in set(lines) if on_line(ctx, p, ln))


def canonical_normals(ctx: FieldCtx):
    """The q^2 + q + 1 plane normals with first nonzero coordinate 1."""
    q = ctx.q
    return (
        [(1, a, b) for a in range(q) for b in range(q)]
        + [(0, 1, b) for b in range(q)]
        + [(0, 0, 1)]
    )


def plane_count(q: int) -> int:
    return q * (q * q + q + 1)


def plane_contains_line(ctx: FieldCtx, plane, line: Line3) -> bool:
    normal, offset = plane
    return _dot(ctx, normal, line.dir) == 0 and _dot(ctx, normal, line.base) == offset


def plane_points(ctx: FieldCtx, plane):
    normal, offset = plane
    q = ctx.q
    return [
        (x, y, z)
        for x in range(q)
        for y in range(q)
        for z in range(q)
        if _dot(ctx, normal, (x, y, z)) == offset
    ]


def plane_richness(ctx: FieldCtx, lines):
    """(M, witness): the max number of the given lines lying in one plane.

    Each line lies in exactly q + 1 planes (the pencil of normals
    orthogonal to its direction), so scanning lines x normals is exact
    without enumerating all q(q^2+q+1) planes; ties break to the
    lexicographically smallest witness.  Empty input gives (0, None).
    """
    counts: dict = {}
    lines = set(lines)
    normals = canonical_normals(ctx)
    for ln in lines:
        for n in normals:
            if _dot(ctx, n, ln.dir) == 0:
                plane = (n, _dot(ctx, n, ln.base))
                counts[plane] = counts.get(plane, 0) + 1
    if not counts:
        return 0, None
    best = max(counts.values())
    witness = min(p for p, c in counts.items() if c == best)
    return best, witness


def relation(ctx: FieldCtx, l1: Line3, l2: Line3) -> str:
    """Classify a line pair: equal | parallel | intersecting | skew."""
    if l1 == l2:
        return "equal"
    if l1.dir == l2.dir:  # canonical directions, so proportional == equal
        return "parallel"
    gap = tuple(ctx.sub(l2.base[i], l1.base[i]) for i in range(3))
    if _det3(ctx, l1.dir, l2.dir, gap) == 0:
        return "intersecting"
    return "skew"


def triple_coplanar(ctx: FieldCtx, l1: Line3, l2: Line3, l3: Line3) -> bool:
    """Whether some plane contains all three lines (exact, O(q) planes)."""
    for n in canonical_normals(ctx):
        if _dot(ctx, n, l1.dir) == 0:
            plane = (n, _dot(ctx, n, l1.base))
            if plane_contains_line(ctx, plane, l2) and plane_contains_line(ctx, plane, l3):
                return True
    return False


# ---------------------------------------------------------------------------
# Bound reports for an incidence instance


@dataclass(frozen=True)
class IncidenceInstance:
    """A point set, line set, their incidence count and plane richness.

    class_count/multiplicity carry the line-partition shape of the
    plane-set problem the instance came from, when there is one; they
    feed the derived stabilizer-cap columns.
    """

    points: frozenset
    lines: frozenset
    incidences: int
    plane_max: int
    class_count: int | None = None
    multiplicity: int | None = None


def build_instance(ctx: FieldCtx, points, lines, class_count=None, multiplicity=None):
    pts = frozenset(points)
    lns = frozenset(lines)
    inc = count_incidences(ctx, pts, lns)
    rich, _ = plane_richness(ctx, lns)
    return IncidenceInstance(pts, lns, inc, rich, class_count, multiplicity)


@dataclass(frozen=True)
class IncidenceBoundRow:
    name: str
    applicable: bool
    observed: float | None
    rhs: float
    ratio: float | None


def incidence_bound_report(ctx: FieldCtx, inst: IncidenceInstance, c: float = 1.0):
    """Observed-versus-bound rows for one instance.

    The rows compare I(P, L) (or its deviation from the mean value
    |P||L|/q^2) against the standard upper bounds; `c` scales the
    plane-richness bound and the rich-plane applicability cutoff.
    Rows whose hypotheses fail keep their numbers but are flagged
    not applicable.
    """
    np_, nl = len(inst.points), len(inst.lines)
    q, p = ctx.q, ctx.p
    inc, rich = inst.incidences, inst.plane_max
    rows = []

    def add(name, applicable, observed, rhs):
        ratio = (observed / rhs) if (observed is not None and rhs > 0) else None
        rows.append(IncidenceBoundRow(name, applicable, observed, rhs, ratio))

    add(
        "plane_cap",
        True,
        float(inc),
        c * (np_**0.5 * nl**0.75 * rich**0.25 + np_ + nl),
    )
    mean = np_ * nl / q**2
    add("balanced_deviation", True, abs(inc - mean), q * (np_ * nl) ** 0.5)
    add(
        "rich_plane",
        rich <= c * nl**0.5,
        float(inc),
        nl * np_**0.4 + np_**1.2,
    )
    projection_ok = np_ > 0 and nl > 0 and np_**0.875 < nl < np_ ** (8 / 7)
    add("projection", projection_ok, float(inc), (np_ * nl) ** (11 / 15))
    # size of |P|^-2 |L|^13 relative to p^15, reported alongside the
    # projection row since its conclusion degrades when this is large
    if np_ > 0:
        add("projection_scale", projection_ok, np_**-2.0 * nl**13, float(p) ** 15)

    if inst.class_count is not None and inst.multiplicity is not None:
        m0, m1 = inst.class_count, inst.multiplicity
        add("cap_balanced", True, None, float(q * q * m1))
        add("cap_rich_plane", True, None, float((m0 * m1) ** (5 / 3)))
        add("cap_projection", True, None, float(m0**1.75 * m1**2.75))
    return rows
