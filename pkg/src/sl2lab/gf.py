"""Exact arithmetic in GF(p^r) for small prime powers.

Field elements are plain integer codes in [0, q), q = p^r: the element
c_0 + c_1*t + ... + c_{r-1}*t^{r-1}  (mod m(t)) has code
c_0 + c_1*p + ... + c_{r-1}*p^{r-1}.  The modulus m(t) is chosen
deterministically: the monic irreducible polynomial of degree r over F_p
whose integer code (leading term included) is smallest.  Rebuilding a
field therefore yields identical tables on every platform, which the
campaign layer relies on for byte-identical output.

    ctx = make_field(3, 2)        # GF(9), modulus t^2 + 1
    ctx.mul(4, 7); ctx.inv(5); ctx.pow(2, -3)

Arithmetic is installed on the context as precomputed tables (full q*q
tables for q <= 256, log/antilog beyond that), so hot loops can grab
`mul = ctx.mul` once and work on raw ints.  Contexts are immutable after
construction.  Fields larger than q = 2^16 are out of scope.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

DEFAULT_MAX_Q = 1 << 16
_TABLE_MAX_Q = 256  # build dense q*q add/mul tables up to here


def is_prime(n: int) -> bool:
    """Deterministic trial-division primality test; fine for n <= 2^16."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_factors(n: int) -> list[int]:
    """Distinct prime divisors of n, ascending, by trial division."""
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1 if f == 2 else 2
    if n > 1:
        out.append(n)
    return out


# ---------------------------------------------------------------------------
# Polynomials over F_p as digit lists (index = degree).  Only used while
# constructing a field; all later arithmetic runs on integer codes.

def _trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _trim(out)


def _prem(a, m, p):
    # remainder of a modulo monic m
    a = list(a)
    dm = len(m) - 1
    while len(a) - 1 >= dm and a:
        lead = a[-1]
        if lead:
            shift = len(a) - 1 - dm
            for i, mi in enumerate(m):
                a[shift + i] = (a[shift + i] - lead * mi) % p
        a.pop()
    return _trim(a)


def _psub(a, b, p):
    out = [0] * max(len(a), len(b))
    for i, ai in enumerate(a):
        out[i] = ai
    for i, bi in enumerate(b):
        out[i] = (out[i] - bi) % p
    return _trim(out)


def _pmulmod(a, b, m, p):
    return _prem(_pmul(a, b, p), m, p)


def _ppowmod(a, e, m, p):
    result = [1]
    a = _prem(list(a), m, p)
    while e:
        if e & 1:
            result = _pmulmod(result, a, m, p)
        a = _pmulmod(a, a, m, p)
        e >>= 1
    return result


def _pgcd(a, b, p):
    a, b = list(a), list(b)
    while b:
        # make b monic before reducing
        lc = b[-1]
        if lc != 1:
            ilc = pow(lc, p - 2, p)
            b = [(ilc * x) % p for x in b]
        a, b = b, _prem(a, b, p)
    return a


def _is_irreducible(m, p, r):
    """Rabin's test for a monic degree-r polynomial over F_p."""
    if r == 1:
        return True
    x = [0, 1]
    xq = _ppowmod(x, p**r, m, p)
    if _trim(_psub(xq, x, p)):
        return False
    for s in prime_factors(r):
        h = _psub(_ppowmod(x, p ** (r // s), m, p), x, p)
        g = _pgcd(m, h, p)
        if len(g) != 1:  # gcd not constant
            return False
    return True


def _digits(code, p, n):
    out = []
    for _ in range(n):
        code, d = divmod(code, p)
        out.append(d)
    return out


def _encode(digits, p):
    code = 0
    for d in reversed(digits):
        code = code * p + d
    return code


# ---------------------------------------------------------------------------


class FieldCtx:
    """Arithmetic context for GF(p^r); construct via make_field().

    Attributes set once in __init__ and treated as read-only:

      p, r, q          -- characteristic, degree, order
      modulus          -- modulus digit tuple, degree 0 first, length r+1
      modulus_code     -- its integer code (leading term included)
      primitive        -- smallest code generating the multiplicative group
      add, sub, neg, mul, inv, div, pow -- operations on integer codes

    The operations are closures over precomputed tables, so they do not
    pickle; fork/spawn workers rebuild contexts from (p, r), which is
    cheap and deterministic.
    """

    def __init__(self, p: int, r: int, modulus_digits):
        q = p**r
        self.p = p
        self.r = r
        self.q = q
        self.modulus = tuple(modulus_digits)
        self.modulus_code = _encode(modulus_digits, p)
        self._cache: dict = {}  # geometry layers park derived tables here

        mod_list = list(modulus_digits)

        if p == 2:
            mod_int = self.modulus_code

            def raw_mul(x, y, _m=mod_int, _r=r):
                acc = 0
                while y:
                    if y & 1:
                        acc ^= x
                    y >>= 1
                    x <<= 1
                    if x >> _r & 1:
                        x ^= _m
                return acc

        else:

            def raw_mul(x, y, _m=mod_list, _p=p, _r=r):
                a = _digits(x, _p, _r)
                b = _digits(y, _p, _r)
                return _encode(_prem(_pmul(a, b, _p), _m, _p), _p)

        def raw_pow(x, e):
            acc, base = 1, x
            while e:
                if e & 1:
                    acc = raw_mul(acc, base)
                base = raw_mul(base, base)
                e >>= 1
            return acc

        # Primitive element: smallest code whose multiplicative order is
        # q - 1, certified against the prime factorization of q - 1.
        divisors = prime_factors(q - 1)
        primitive = None
        for g in range(1, q):
            if all(raw_pow(g, (q - 1) // f) != 1 for f in divisors):
                primitive = g
                break
        assert primitive is not None
        self.primitive = primitive

        exp = [1] * (q - 1)
        for i in range(1, q - 1):
            exp[i] = raw_mul(exp[i - 1], primitive)
        log = [0] * q  # log[0] unused
        for i, v in enumerate(exp):
            log[v] = i
        assert len(set(exp)) == q - 1, "primitive element order defect"
        self._exp = exp
        self._log = log

        if p == 2:
            neg = list(range(q))
        else:
            neg = [_encode([(p - d) % p for d in _digits(c, p, r)], p) for c in range(q)]
        self._neg_tab = neg

        qm1 = q - 1

        if q <= _TABLE_MAX_Q:
            if p == 2:
                add_tab = [x ^ y for x in range(q) for y in range(q)]
            elif r == 1:
                add_tab = [(x + y) % p for x in range(p) for y in range(p)]
            else:
                digs = [_digits(c, p, r) for c in range(q)]
                add_tab = [
                    _encode([(a + b) % p for a, b in zip(digs[x], digs[y])], p)
                    for x in range(q)
                    for y in range(q)
                ]
            mul_tab = [0] * (q * q)
            for x in range(1, q):
                row = x * q
                lx = log[x]
                for y in range(1, q):
                    mul_tab[row + y] = exp[(lx + log[y]) % qm1]
            inv_tab = [0] * q
            for x in range(1, q):
                inv_tab[x] = exp[(qm1 - log[x]) % qm1]
            self.add = lambda x, y, _t=add_tab, _q=q: _t[x * _q + y]
            self.mul = lambda x, y, _t=mul_tab, _q=q: _t[x * _q + y]
            self.sub = lambda x, y, _t=add_tab, _n=neg, _q=q: _t[x * _q + _n[y]]

            def inv(x, _t=inv_tab):
                if x == 0:
                    raise ZeroDivisionError("inverse of 0")
                return _t[x]

            self.inv = inv
        else:
            if p == 2:
                self.add = lambda x, y: x ^ y
                self.sub = self.add
            elif r == 1:
                self.add = lambda x, y, _p=p: (x + y) % _p
                self.sub = lambda x, y, _p=p: (x - y) % _p
            else:
                def add(x, y, _p=p, _r=r):
                    return _encode(
                        [(a + b) % _p for a, b in zip(_digits(x, _p, _r), _digits(y, _p, _r))],
                        _p,
                    )

                self.add = add
                self.sub = lambda x, y, _n=neg: add(x, _n[y])

            if r == 1:
                self.mul = lambda x, y, _p=p: (x * y) % _p

                def inv(x, _p=p):
                    if x == 0:
                        raise ZeroDivisionError("inverse of 0")
                    return pow(x, _p - 2, _p)

                self.inv = inv
            else:
                def mul(x, y, _e=exp, _l=log, _m=qm1):
                    if x == 0 or y == 0:
                        return 0
                    return _e[(_l[x] + _l[y]) % _m]

                self.mul = mul

                def inv(x, _e=exp, _l=log, _m=qm1):
                    if x == 0:
                        raise ZeroDivisionError("inverse of 0")
                    return _e[(_m - _l[x]) % _m]

                self.inv = inv

        self.neg = lambda x, _n=neg: _n[x]

        def div(x, y):
            return self.mul(x, self.inv(y))

        self.div = div

        def powf(x, e, _e=exp, _l=log, _m=qm1):
            if x == 0:
                if e > 0:
                    return 0
                if e == 0:
                    return 1
                raise ZeroDivisionError("0 to a negative power")
            return _e[(_l[x] * e) % _m]

        self.pow = powf

    def elements(self):
        return range(self.q)

    def element_digits(self, code: int) -> tuple:
        return tuple(_digits(code, self.p, self.r))

    def __eq__(self, other):
        return (
            isinstance(other, FieldCtx)
            and (self.p, self.r, self.modulus_code) == (other.p, other.r, other.modulus_code)
        )

    def __hash__(self):
        return hash((self.p, self.r, self.modulus_code))

    def __repr__(self):
        return f"FieldCtx(q={self.q}, p={self.p}, r={self.r}, modulus_code={self.modulus_code})"


def make_field(p: int, r: int, max_q: int = DEFAULT_MAX_Q) -> FieldCtx:
    """Build GF(p^r) with the smallest-code monic irreducible modulus."""
    if not is_prime(p):
        raise ValueError(f"p = {p} is not prime")
    if r < 1:
        raise ValueError(f"degree r = {r} must be >= 1")
    if p**r > max_q:
        raise ValueError(f"q = {p}^{r} exceeds the supported maximum {max_q}")
    for k in itertools.count():
        digits = _digits(k, p, r) + [1]
        if _is_irreducible(digits, p, r):
            return FieldCtx(p, r, digits)
    raise AssertionError("unreachable: irreducibles exist in every degree")


# ---------------------------------------------------------------------------
# Tagged element sets


@dataclass(frozen=True)
class ElemSet:
    """A set of element codes with a structural role tag."""

    members: frozenset
    role: str  # "subfield" | "multiplicative-subgroup" | "generic"

    def __len__(self):
        return len(self.members)

    def __contains__(self, code):
        return code in self.members

    def validate(self, ctx: FieldCtx) -> None:
        """Check the closure properties promised by the role tag."""
        m = self.members
        if self.role == "subfield":
            assert 0 in m and 1 in m
            for x in m:
                for y in m:
                    assert ctx.add(x, y) in m and ctx.mul(x, y) in m
                if x:
                    assert ctx.inv(x) in m
        elif self.role == "multiplicative-subgroup":
            assert 1 in m and 0 not in m
            for x in m:
                assert ctx.inv(x) in m
                for y in m:
                    assert ctx.mul(x, y) in m
        elif self.role != "generic":
            raise ValueError(f"unknown role {self.role!r}")


def subfield_elements(ctx: FieldCtx, r_sub: int) -> ElemSet:
    """The copy of GF(p^r_sub) inside ctx: fixed points of x -> x^(p^r_sub)."""
    if r_sub < 1 or ctx.r % r_sub != 0:
        raise ValueError(f"subfield degree {r_sub} does not divide {ctx.r}")
    s = ctx.p**r_sub
    members = frozenset(x for x in range(ctx.q) if ctx.pow(x, s) == x)
    assert len(members) == s
    out = ElemSet(members, "subfield")
    out.validate(ctx)
    return out


def multiplicative_subgroup(ctx: FieldCtx, c: int) -> ElemSet:
    """The index-c subgroup of the multiplicative group, size (q-1)/c."""
    qm1 = ctx.q - 1
    if c < 1 or qm1 % c != 0:
        raise ValueError(f"index {c} does not divide q - 1 = {qm1}")
    g = ctx.primitive
    members = frozenset(ctx.pow(g, c * k) for k in range(qm1 // c))
    assert members == frozenset(x for x in range(1, ctx.q) if ctx.pow(x, qm1 // c) == 1)
    out = ElemSet(members, "multiplicative-subgroup")
    out.validate(ctx)
    return out


def selftest(ctx: FieldCtx, rng_seed: int = 0) -> None:
    """Exhaustive inverse check plus field-axiom checks.

    Axioms run over all (x, y, z) triples for q <= 64 and over 10^5
    seeded random triples beyond that.
    """
    from .rng import DetRng

    q, add, mul, inv, neg = ctx.q, ctx.add, ctx.mul, ctx.inv, ctx.neg
    for x in range(1, q):
        assert mul(x, inv(x)) == 1, f"inverse defect at {x}"
        assert add(x, neg(x)) == 0
    assert all(add(x, 0) == x and mul(x, 1) == x for x in range(q))

    if q <= 64:
        triples = itertools.product(range(q), repeat=3)
    else:
        rng = DetRng(rng_seed)
        triples = ((rng.below(q), rng.below(q), rng.below(q)) for _ in range(100_000))
    for x, y, z in triples:
        assert add(x, y) == add(y, x)
        assert mul(x, y) == mul(y, x)
        assert add(add(x, y), z) == add(x, add(y, z))
        assert mul(mul(x, y), z) == mul(x, mul(y, z))
        assert mul(x, add(y, z)) == add(mul(x, y), mul(x, z))
