"""The plane F_q^2 and the natural SL2(F_q) action on it.

Conventions used throughout the package:

  * points are (x, y) tuples of field codes; the packed code of a point
    is x*q + y, and subsets of the plane are PointSet bitsets over
    packed codes;
  * matrices are (a, b, c, d) tuples read row-major, acting on column
    vectors: (a b; c d)(x, y) = (a x + b y, c x + d y);
  * the q + 1 directions through the origin are canonical tuples
    (1, t) for t in F_q followed by (0, 1), so the y-axis sorts last.

sl2_elements() streams the group in a pinned order (the a = 0 sweep
first, then lexicographic (a, b, c) with d solved from the determinant),
which lets campaigns partition work by index range and restart without
changing output.
"""

from __future__ import annotations

import warnings

from .gf import FieldCtx

IDENTITY = (1, 0, 0, 1)

# Guards for whole-group work; override per call when you know better.
STREAM_LIMIT = 10**9
MATERIALIZE_LIMIT = 10**7


def pack_point(q: int, pt) -> int:
    return pt[0] * q + pt[1]


def unpack_point(q: int, code: int):
    return divmod(code, q)


def mat_apply(ctx: FieldCtx, m, pt):
    a, b, c, d = m
    x, y = pt
    add, mul = ctx.add, ctx.mul
    return (add(mul(a, x), mul(b, y)), add(mul(c, x), mul(d, y)))


def mat_mul(ctx: FieldCtx, m, n):
    a, b, c, d = m
    e, f, g, h = n
    add, mul = ctx.add, ctx.mul
    return (
        add(mul(a, e), mul(b, g)),
        add(mul(a, f), mul(b, h)),
        add(mul(c, e), mul(d, g)),
        add(mul(c, f), mul(d, h)),
    )


def mat_det(ctx: FieldCtx, m):
    a, b, c, d = m
    return ctx.sub(ctx.mul(a, d), ctx.mul(b, c))


def mat_inv(ctx: FieldCtx, m):
    """Inverse of a determinant-1 matrix: (d, -b; -c, a)."""
    a, b, c, d = m
    neg = ctx.neg
    return (d, neg(b), neg(c), a)


def is_sl2(ctx: FieldCtx, m) -> bool:
    return all(0 <= e < ctx.q for e in m) and mat_det(ctx, m) == 1


def mat_text(m) -> str:
    a, b, c, d = m
    return f"[{a},{b};{c},{d}]"


def parse_mat(text: str):
    """Parse "[a,b;c,d]" with integer codes."""
    body = text.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise ValueError(f"bad matrix literal {text!r}")
    rows = body[1:-1].split(";")
    if len(rows) != 2:
        raise ValueError(f"bad matrix literal {text!r}")
    out = []
    for row in rows:
        cells = row.split(",")
        if len(cells) != 2:
            raise ValueError(f"bad matrix literal {text!r}")
        out.extend(int(c) for c in cells)
    return tuple(out)


def parse_point(text: str):
    body = text.strip()
    if not (body.startswith("(") and body.endswith(")")):
        raise ValueError(f"bad point literal {text!r}")
    cells = body[1:-1].split(",")
    if len(cells) != 2:
        raise ValueError(f"bad point literal {text!r}")
    return (int(cells[0]), int(cells[1]))


# ---------------------------------------------------------------------------
# SL2 enumeration


def sl2_order(q: int) -> int:
    return q**3 - q


def sl2_unrank(ctx: FieldCtx, i: int):
    """The i-th matrix of the pinned SL2 enumeration.

    Index 0 .. q(q-1)-1: the a = 0 block, b ascending from 1 with
    c = -1/b forced, d sweeping F_q.  After that: a ascending from 1,
    then (b, c) lexicographic with d = (1 + b c) / a.
    """
    q = ctx.q
    head = q * (q - 1)
    if i < 0 or i >= sl2_order(q):
        raise IndexError(f"SL2 index {i} out of range")
    if i < head:
        b_idx, d = divmod(i, q)
        b = b_idx + 1
        return (0, b, ctx.neg(ctx.inv(b)), d)
    j = i - head
    a_idx, rem = divmod(j, q * q)
    a = a_idx + 1
    b, c = divmod(rem, q)
    d = ctx.mul(ctx.add(1, ctx.mul(b, c)), ctx.inv(a))
    return (a, b, c, d)


def sl2_elements(ctx: FieldCtx, start: int = 0, stop: int | None = None):
    """Stream SL2(F_q) in the pinned order, optionally an index slice."""
    q = ctx.q
    n = sl2_order(q)
    if n > STREAM_LIMIT:
        raise ValueError(f"|SL2| = {n} exceeds the streaming guard {STREAM_LIMIT}")
    if stop is None:
        stop = n
    if not (0 <= start <= stop <= n):
        raise IndexError(f"bad slice [{start}, {stop}) of {n}")
    add, mul, neg, inv = ctx.add, ctx.mul, ctx.neg, ctx.inv
    head = q * (q - 1)
    for i in range(start, min(stop, head)):
        b_idx, d = divmod(i, q)
        b = b_idx + 1
        yield (0, b, neg(inv(b)), d)
    for i in range(max(start, head), stop):
        j = i - head
        a_idx, rem = divmod(j, q * q)
        a = a_idx + 1
        b, c = divmod(rem, q)
        yield (a, b, c, mul(add(1, mul(b, c)), inv(a)))


def sl2_materialize(ctx: FieldCtx):
    """The whole group as a cached tuple (guarded by MATERIALIZE_LIMIT)."""
    cached = ctx._cache.get("sl2")
    if cached is None:
        n = sl2_order(ctx.q)
        if n > MATERIALIZE_LIMIT:
            raise ValueError(f"|SL2| = {n} exceeds the materialization guard")
        cached = tuple(sl2_elements(ctx))
        assert len(cached) == n
        ctx._cache["sl2"] = cached
    return cached


def point_permutation(ctx: FieldCtx, m) -> list:
    """Image of every packed point code under m, as a list."""
    q = ctx.q
    a, b, c, d = m
    add, mul = ctx.add, ctx.mul
    out = [0] * (q * q)
    for x in range(q):
        ax, cx = mul(a, x), mul(c, x)
        row = x * q
        for y in range(q):
            out[row + y] = add(ax, mul(b, y)) * q + add(cx, mul(d, y))
    return out


# ---------------------------------------------------------------------------
# Directions through the origin ("projective lines" of the pencil at 0)


def proj_lines(ctx: FieldCtx):
    """Canonical direction tuples: (1, 0), (1, 1), ..., (1, q-1), (0, 1)."""
    cached = ctx._cache.get("lines")
    if cached is None:
        cached = tuple((1, t) for t in range(ctx.q)) + ((0, 1),)
        ctx._cache["lines"] = cached
    return cached


def line_index(ctx: FieldCtx, line) -> int:
    """Position of a canonical direction in proj_lines order."""
    if line[0] == 1:
        return line[1]
    if line == (0, 1):
        return ctx.q
    raise ValueError(f"{line} is not a canonical direction")


def line_of_point(ctx: FieldCtx, pt):
    """The canonical direction of the origin line through pt != 0."""
    x, y = pt
    if x == 0 and y == 0:
        raise ValueError("the origin lies on every line of the pencil")
    if x != 0:
        return (1, ctx.div(y, x))
    return (0, 1)


def points_on_line(ctx: FieldCtx, line):
    """All q points of the origin line with the given direction."""
    dx, dy = line
    mul = ctx.mul
    return [(mul(t, dx), mul(t, dy)) for t in range(ctx.q)]


def line_nonzero_masks(ctx: FieldCtx):
    """For each canonical direction, the bitset of its q - 1 nonzero points."""
    cached = ctx._cache.get("line_masks")
    if cached is None:
        q = ctx.q
        masks = []
        for line in proj_lines(ctx):
            bits = 0
            for pt in points_on_line(ctx, line):
                if pt != (0, 0):
                    bits |= 1 << (pt[0] * q + pt[1])
            masks.append(bits)
        cached = tuple(masks)
        ctx._cache["line_masks"] = cached
    return cached


def line_apply(ctx: FieldCtx, m, line):
    """Image direction of an origin line under m, canonicalized."""
    return line_of_point(ctx, mat_apply(ctx, m, line))


def normalize_two_lines(ctx: FieldCtx, l1, l2):
    """A determinant-1 matrix sending l1 to the x-axis and l2 to the y-axis.

    Built from the canonical direction vectors u, v of the two lines:
    take the adjugate of the column matrix [u v] and scale its first row
    by 1/det to land in SL2.  The choice is deterministic, and mapping
    (x-axis, y-axis) to itself gives the identity.
    """
    if l1 == l2:
        raise ValueError("need two distinct lines")
    ux, uy = l1
    vx, vy = l2
    det = ctx.sub(ctx.mul(ux, vy), ctx.mul(uy, vx))
    idet = ctx.inv(det)
    return (ctx.mul(vy, idet), ctx.neg(ctx.mul(vx, idet)), ctx.neg(uy), ux)


def basis_map_to(ctx: FieldCtx, pt):
    """A deterministic g in SL2 with g(1, 0) = pt (pt must be nonzero)."""
    u, v = pt
    if u != 0:
        return (u, 0, v, ctx.inv(u))
    if v == 0:
        raise ValueError("no SL2 element maps (1, 0) to the origin")
    return (0, ctx.neg(ctx.inv(v)), v, 0)


def point_stabilizer(ctx: FieldCtx, pt):
    """All theta in SL2 with theta(pt) = pt, in closed form (size q).

    The stabilizer of (1, 0) is the unipotent family (1 a; 0 1); for any
    other nonzero point conjugate that family by basis_map_to.  Asking
    for the origin returns the whole group with a warning, since every
    linear map fixes it.
    """
    if pt == (0, 0):
        warnings.warn("stabilizer of the origin is all of SL2", stacklevel=2)
        return set(sl2_materialize(ctx))
    g = basis_map_to(ctx, pt)
    gi = mat_inv(ctx, g)
    out = {mat_mul(ctx, mat_mul(ctx, g, (1, a, 0, 1)), gi) for a in range(ctx.q)}
    assert len(out) == ctx.q
    return out


# ---------------------------------------------------------------------------
# Point sets


class PointSet:
    """An immutable subset of F_q^2 stored as a bitset over packed codes."""

    __slots__ = ("q", "bits", "size", "_nonzero_codes")

    def __init__(self, q: int, bits: int = 0):
        if bits < 0 or bits >> (q * q):
            raise ValueError("bitset has bits outside the plane")
        self.q = q
        self.bits = bits
        self.size = bits.bit_count()
        self._nonzero_codes = None

    @classmethod
    def from_points(cls, q: int, pts) -> "PointSet":
        bits = 0
        for x, y in pts:
            if not (0 <= x < q and 0 <= y < q):
                raise ValueError(f"point ({x}, {y}) outside the plane")
            bits |= 1 << (x * q + y)
        return cls(q, bits)

    @classmethod
    def from_codes(cls, q: int, codes) -> "PointSet":
        bits = 0
        for c in codes:
            if not 0 <= c < q * q:
                raise ValueError(f"packed code {c} outside the plane")
            bits |= 1 << c
        return cls(q, bits)

    @classmethod
    def full(cls, q: int) -> "PointSet":
        return cls(q, (1 << (q * q)) - 1)

    def __contains__(self, code: int) -> bool:
        return (self.bits >> code) & 1 == 1

    def has_point(self, pt) -> bool:
        return (self.bits >> (pt[0] * self.q + pt[1])) & 1 == 1

    def __len__(self):
        return self.size

    def __eq__(self, other):
        return isinstance(other, PointSet) and (self.q, self.bits) == (other.q, other.bits)

    def __hash__(self):
        return hash((self.q, self.bits))

    @property
    def nonzero_codes(self) -> tuple:
        """Packed codes of the nonorigin members, ascending (cached)."""
        if self._nonzero_codes is None:
            bits = self.bits & ~1  # the origin packs to code 0
            out = []
            while bits:
                low = bits & -bits
                out.append(low.bit_length() - 1)
                bits ^= low
            self._nonzero_codes = tuple(out)
        return self._nonzero_codes

    @property
    def nonzero_size(self) -> int:
        return (self.bits & ~1).bit_count()

    def codes(self) -> list:
        out = list(self.nonzero_codes)
        if self.bits & 1:
            out.insert(0, 0)
        return out

    def points(self) -> list:
        q = self.q
        return [divmod(c, q) for c in self.codes()]

    def complement(self) -> "PointSet":
        mask = (1 << (self.q * self.q)) - 1
        return PointSet(self.q, self.bits ^ mask)

    def with_origin(self) -> "PointSet":
        return PointSet(self.q, self.bits | 1)

    def without_origin(self) -> "PointSet":
        return PointSet(self.q, self.bits & ~1)

    def union(self, other: "PointSet") -> "PointSet":
        assert self.q == other.q
        return PointSet(self.q, self.bits | other.bits)

    def __repr__(self):
        return f"PointSet(q={self.q}, size={self.size})"

    def text(self) -> str:
        """Canonical literal: "points:(x,y);(x,y);..." in code order."""
        return "points:" + ";".join(f"({x},{y})" for x, y in self.points())


def apply_to_set(ctx: FieldCtx, m, ps: PointSet) -> PointSet:
    """The image point set m(E)."""
    q = ctx.q
    a, b, c, d = m
    add, mul = ctx.add, ctx.mul
    bits = ps.bits & 1  # origin maps to origin
    for code in ps.nonzero_codes:
        x, y = divmod(code, q)
        bits |= 1 << (add(mul(a, x), mul(b, y)) * q + add(mul(c, x), mul(d, y)))
    return PointSet(q, bits)
