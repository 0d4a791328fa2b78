"""Named point-set families and the text grammar that names them.

Every set the campaigns care about can be written down as a short
descriptor string, parsed back, and regenerated bit-for-bit:

    family:<name>[:<key>=<value>,...]     a named family
    points:(x,y);(x,y);...                an explicit point list

Examples: ``family:line-origin``, ``family:axis-subgroup:c=2``,
``family:subfield-plane:sub-r=1``, ``family:random:n=10,seed=42``,
``family:orbit-union:gens=[1,1;0,1]|[1,0;1,1],orbits=1|2``,
``family:complement:of=family:origin``, ``points:(1,0);(0,1)``.

Values never contain commas except inside ``[...]`` matrix brackets or
a nested ``of=`` descriptor, so splitting is bracket- and depth-aware.
"""

from __future__ import annotations

from dataclasses import dataclass

from .gf import FieldCtx, multiplicative_subgroup, subfield_elements
from .plane import PointSet, parse_mat, parse_point
from .rng import DetRng

FAMILY_NAMES = (
    "empty",
    "origin",
    "full",
    "full-minus-origin",
    "line-origin",
    "line-affine",
    "complement",
    "axis-subgroup",
    "subfield-plane",
    "orbit-union",
    "random",
    "explicit",
)


@dataclass(frozen=True)
class FamilySpec:
    """A parsed descriptor: family name plus its parameter mapping.

    params values are kept as strings exactly as written; gen_family
    interprets and validates them against the field, so a FamilySpec is
    field-independent and printable back to its canonical text.
    """

    name: str
    params: tuple = ()

    def get(self, key: str, default: str | None = None) -> str | None:
        for k, v in self.params:
            if k == key:
                return v
        return default

    def text(self) -> str:
        if self.name == "explicit":
            return "points:" + self.get("pts", "")
        if not self.params:
            return f"family:{self.name}"
        body = ",".join(f"{k}={v}" for k, v in self.params)
        return f"family:{self.name}:{body}"


def _split_top(s: str, sep: str) -> list:
    """Split on sep outside [...] brackets and nested descriptors."""
    parts = []
    depth = 0
    cur = []
    i = 0
    while i < len(s):
        ch = s[i]
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif depth == 0 and s.startswith("family:", i) and cur and cur[-1] == "=":
            # a nested descriptor swallows the rest of this part
            j = i
            cur.extend(s[i:])
            i = len(s)
            parts.append("".join(cur))
            cur = []
            break
        if depth == 0 and ch == sep:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
        i += 1
    if cur or not parts:
        parts.append("".join(cur))
    return parts


def parse_set_spec(text: str) -> FamilySpec:
    """Parse a descriptor string into a FamilySpec.

    Raises ValueError on unknown family names, malformed key=value
    parts, or text matching neither grammar production.
    """
    text = text.strip()
    if text.startswith("points:"):
        return FamilySpec("explicit", (("pts", text[len("points:"):]),))
    if not text.startswith("family:"):
        raise ValueError(f"descriptor must start with family: or points: ({text!r})")
    body = text[len("family:"):]
    head, _, rest = body.partition(":")
    if head not in FAMILY_NAMES or head == "explicit":
        raise ValueError(f"unknown family {head!r}")
    params = []
    if rest:
        for part in _split_top(rest, ","):
            key, eq, value = part.partition("=")
            if not eq or not key or not value:
                raise ValueError(f"malformed parameter {part!r} in {text!r}")
            params.append((key, value))
    return FamilySpec(head, tuple(params))


def _int_param(spec: FamilySpec, key: str, default: int | None = None) -> int:
    raw = spec.get(key)
    if raw is None:
        if default is None:
            raise ValueError(f"family {spec.name!r} needs parameter {key!r}")
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"parameter {key}={raw!r} is not an integer") from None


def gen_family(ctx: FieldCtx, spec: FamilySpec) -> PointSet:
    """Build the named set over ctx.  Deterministic per (spec, field).

    line-origin takes dir=<t> for the line {(x, t*x)} or dir=inf for
    the y-axis (the default, so it contrasts with line-affine's default
    {x = 1}: same size q, stabilizer order q**2 - q versus q).
    """
    q = ctx.q
    name = spec.name

    if name == "empty":
        return PointSet.from_codes(q, ())
    if name == "origin":
        return PointSet.from_codes(q, (0,))
    if name == "full":
        return PointSet.full(q)
    if name == "full-minus-origin":
        return PointSet.full(q).without_origin()

    if name == "line-origin":
        raw = spec.get("dir", "inf")
        if raw == "inf":
            codes = [0 * q + y for y in range(q)]
        else:
            t = int(raw)
            if not 0 <= t < q:
                raise ValueError(f"dir={t} outside field of size {q}")
            codes = [x * q + ctx.mul(t, x) for x in range(q)]
        return PointSet.from_codes(q, codes)

    if name == "line-affine":
        x = _int_param(spec, "x", 1)
        if not 0 <= x < q:
            raise ValueError(f"x={x} outside field of size {q}")
        return PointSet.from_codes(q, [x * q + y for y in range(q)])

    if name == "complement":
        inner = spec.get("of")
        if inner is None:
            raise ValueError("complement needs of=<descriptor>")
        return gen_family(ctx, parse_set_spec(inner)).complement()

    if name == "axis-subgroup":
        c = _int_param(spec, "c")
        sub = multiplicative_subgroup(ctx, c)  # validates c | q - 1
        return PointSet.from_codes(q, [y for y in sorted(sub.members)])

    if name == "subfield-plane":
        r_sub = _int_param(spec, "sub-r")
        elems = sorted(subfield_elements(ctx, r_sub).members)  # validates r_sub | r
        return PointSet.from_codes(q, [x * q + y for x in elems for y in elems])

    if name == "orbit-union":
        from .stabilizer import subgroup_orbits

        raw_gens = spec.get("gens")
        raw_orbits = spec.get("orbits")
        if raw_gens is None or raw_orbits is None:
            raise ValueError("orbit-union needs gens=<mat>|<mat>... and orbits=<i>|<j>...")
        gens = [parse_mat(part) for part in raw_gens.split("|")]
        picks = sorted({int(part) for part in raw_orbits.split("|")})
        _, orbits = subgroup_orbits(ctx, gens)
        if picks and not 0 <= picks[-1] < len(orbits):
            raise ValueError(f"orbit index {picks[-1]} out of range ({len(orbits)} orbits)")
        out = PointSet.from_codes(q, ())
        for i in picks:
            out = out.union(orbits[i])
        return out

    if name == "random":
        n = _int_param(spec, "n")
        seed = _int_param(spec, "seed")
        if not 0 <= n <= q * q:
            raise ValueError(f"n={n} exceeds plane size {q * q}")
        return PointSet.from_codes(q, DetRng(seed).sample(q * q, n))

    if name == "explicit":
        raw = spec.get("pts", "")
        pts = [parse_point(part) for part in raw.split(";") if part]
        for x, y in pts:
            if not (0 <= x < q and 0 <= y < q):
                raise ValueError(f"point ({x},{y}) outside plane of size {q}")
        return PointSet.from_points(q, pts)

    raise ValueError(f"unknown family {name!r}")


def default_battery(ctx: FieldCtx) -> list:
    """The family descriptors a family-verify campaign runs by default.

    Covers every named family that exists over ctx: the degenerate
    four, both line kinds, a complement, every proper axis-subgroup
    index, and every proper subfield plane.
    """
    specs = [
        "family:empty",
        "family:origin",
        "family:full",
        "family:full-minus-origin",
        "family:line-origin",
        "family:line-origin:dir=0",
        "family:line-affine",
        "family:complement:of=family:line-origin",
    ]
    q = ctx.q
    for c in range(2, q):
        if (q - 1) % c == 0:
            specs.append(f"family:axis-subgroup:c={c}")
    for r_sub in range(1, ctx.r):
        if ctx.r % r_sub == 0:
            specs.append(f"family:subfield-plane:sub-r={r_sub}")
    return [parse_set_spec(s) for s in specs]
