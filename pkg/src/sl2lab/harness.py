"""Campaign driver and command-line interface.

A campaign turns one configuration into a result file plus a one-line
summary.  The output contract, which the test suite enforces byte for
byte, is:

  * CSV files start with a single comment line echoing the schema tag
    and every configuration field that can influence row content
    (worker count and output options are deliberately not echoed).
  * Rows are produced in enumeration-index order; work is partitioned
    by index ranges, so the bytes written do not depend on the worker
    count.  Random campaigns derive one child seed per index, never a
    shared stream.
  * Integers are written exactly; every float column is rounded to six
    significant digits at row-build time so CSV and JSON agree.
  * Exhaustive campaigns checkpoint progress to <out>.ckpt after each
    chunk; rerunning with --resume appends the remaining rows and the
    concatenated file is identical to an uninterrupted run (CSV only).
  * Exit status: 0 clean, 1 when any proved bound is violated (that
    means an implementation bug, so it fails loudly), 2 on bad
    configuration or an internal cross-check failure.

One percent of rows (every index divisible by 100, fields up to q = 9)
get their symmetry order recomputed by the brute-force oracle; a
mismatch aborts the run.  SL2LAB_WORKERS sets the default worker count.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .families import default_battery, gen_family, parse_set_spec
from .gf import FieldCtx, make_field, selftest
from .incidence3d import (
    all_lines,
    build_instance,
    count_incidences_brute,
    incidence_bound_report,
)
from .plane import PointSet, line_nonzero_masks, proj_lines, sl2_order, sl2_unrank
from .rng import DetRng, nth_seed
from .stabilizer import (
    Constants,
    all_subset_stabilizer_orders,
    bound_report,
    line_set_stabilizer,
    stabilizer,
    stabilizer_brute,
    subgroup_orbits,
    triple_count_audit,
)

SCHEMA = "slab-v1"

CAMPAIGNS = (
    "exhaustive-subsets",
    "two-line-exhaustive",
    "lineset-exhaustive",
    "family-verify",
    "prime-bound-exhaustive",
    "incidence-report",
    "triple-audit",
    "search-extremal",
)

BOUND_NAMES = ("two_lines", "line_set", "prime_power", "whole_plane", "three_halves")
INC_BOUND_NAMES = (
    "plane_cap",
    "balanced_deviation",
    "rich_plane",
    "projection",
    "projection_scale",
)

CHUNK = 4096
SPOT_EVERY = 100  # brute-oracle recheck on every index divisible by this
MAX_Q_BRUTE_SPOT = 9


@dataclass(frozen=True)
class CampaignConfig:
    p: int
    r: int
    campaign: str
    set_spec: str | None = None
    m1: int | None = None
    strategy: str = "orbit-union"
    c: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    alpha: float = 0.5
    beta: float = 0.75
    budget: int = 1000
    seed: int = 0
    workers: int | None = None
    out: str | None = None
    fmt: str = "csv"
    resume: bool = False
    allow_sampled: bool = False


@dataclass
class CampaignResult:
    rows: list
    summary: dict
    out: str

    @property
    def violations(self) -> int:
        return self.summary["violations"]


def _f6(x):
    """Six significant digits, applied once when the row is built."""
    return None if x is None else float(f"{float(x):.6g}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _stab_columns(extra=()) -> list:
    cols = [
        "index",
        "descriptor",
        "size",
        "size_nonzero",
        "lines_meeting",
        "stab_order",
        "ratio_full",
        "ratio_nonzero",
        "contained_line",
        "all_classes_small",
        "small",
        "rich",
        "confirmed",
    ]
    for name in BOUND_NAMES:
        cols += [f"{name}_applicable", f"{name}_rhs", f"{name}_ratio", f"{name}_violated"]
    cols.append("violations")
    cols.extend(extra)
    return cols


_AUDIT_COLUMNS = [
    "index",
    "descriptor",
    "multiplicity",
    "class_count",
    "probe_count",
    "target_count",
    "preserver_count",
    "mover_count",
    "fixer_count",
    "transport_total",
    "lower_bound",
    "fixer_part",
    "mover_part",
    "incidence_count",
    "transport_lines",
    "pair_cap",
    "class_cap",
    "plane_max",
    "plane_cap",
    "skew_pairs",
    "meeting_pairs",
    "parallel_pairs",
    "parallel_triples",
    "stab_order",
    "mt_rhs",
    "final_cap_value",
    "final_cap_applies",
    "final_cap_holds",
    "audit_ok",
    "audit_error",
]

_INCIDENCE_COLUMNS = ["index", "points", "lines", "incidences", "plane_max"] + [
    f"{name}_{part}"
    for name in INC_BOUND_NAMES
    for part in ("applicable", "observed", "rhs", "ratio")
]


def columns_for(campaign: str) -> list:
    if campaign == "triple-audit":
        return list(_AUDIT_COLUMNS)
    if campaign == "incidence-report":
        return list(_INCIDENCE_COLUMNS)
    if campaign == "family-verify":
        return _stab_columns(("complement_match", "expected_order", "expected_match"))
    if campaign == "search-extremal":
        return _stab_columns(("strategy", "subgroup_order", "contains_subgroup"))
    return _stab_columns()


# ---------------------------------------------------------------------------
# Per-process state.  Workers rebuild the field from (p, r); the parent
# uses the same path, so serial and pooled runs share every code path.

_WORK: dict = {}


def _init_worker(p: int, r: int) -> None:
    _WORK.clear()
    _WORK["ctx"] = make_field(p, r)


def _ctx(cfg: dict) -> FieldCtx:
    ctx = _WORK.get("ctx")
    if ctx is None or (ctx.p, ctx.r) != (cfg["p"], cfg["r"]):
        # field changed within this process: every derived cache is stale
        _init_worker(cfg["p"], cfg["r"])
    return _WORK["ctx"]


def _cached(key, build):
    if key not in _WORK:
        _WORK[key] = build()
    return _WORK[key]


def _spot(ctx: FieldCtx, E: PointSet, stab_order: int, index: int) -> None:
    if index % SPOT_EVERY == 0 and ctx.q <= MAX_Q_BRUTE_SPOT:
        got = len(stabilizer_brute(ctx, E))
        if got != stab_order:
            raise AssertionError(
                f"spot check failed at index {index}: brute {got} != {stab_order}"
            )


def _constants(cfg: dict) -> Constants:
    return Constants(cfg["c"], cfg["c1"], cfg["c2"], cfg["alpha"], cfg["beta"])


def _report_row(ctx, index, E, stab_order, cfg) -> tuple:
    rep = bound_report(ctx, E, _constants(cfg), stab_order=stab_order)
    row = {
        "index": index,
        "descriptor": E.text(),
        "size": rep.size,
        "size_nonzero": rep.size_nonzero,
        "lines_meeting": rep.lines_meeting,
        "stab_order": rep.stab_order,
        "ratio_full": _f6(rep.ratio_full),
        "ratio_nonzero": _f6(rep.ratio_nonzero),
        "contained_line": rep.contained_line,
        "all_classes_small": rep.all_classes_small,
        "small": rep.small,
        "rich": rep.rich,
        "confirmed": rep.confirmed,
    }
    by_name = {r.name: r for r in rep.rows}
    for name in BOUND_NAMES:
        r = by_name[name]
        row[f"{name}_applicable"] = r.applicable
        row[f"{name}_rhs"] = _f6(r.rhs)
        row[f"{name}_ratio"] = _f6(r.ratio)
        row[f"{name}_violated"] = r.violated
    bad = rep.violations()
    row["violations"] = ";".join(bad)
    return row, len(bad)


# ---------------------------------------------------------------------------
# Row producers, one per campaign.  Each yields (index, row, violations)
# for indices in [start, stop), purely from (cfg, index).


def _gen_exhaustive(cfg, start, stop):
    ctx = _ctx(cfg)
    q = ctx.q
    if q <= 4:
        counts = _cached("counts", lambda: all_subset_stabilizer_orders(ctx))
        for mask in range(start, stop):
            E = PointSet(q, mask)
            order = counts[mask]
            _spot(ctx, E, order, mask)
            yield (mask, *_report_row(ctx, mask, E, order, cfg))
    else:
        sample = _cached(
            ("sample", cfg["seed"], cfg["budget"]),
            lambda: DetRng(cfg["seed"]).sample(1 << (q * q), cfg["budget"]),
        )
        for i in range(start, stop):
            E = PointSet(q, sample[i])
            order = len(stabilizer(ctx, E))
            _spot(ctx, E, order, i)
            yield (i, *_report_row(ctx, i, E, order, cfg))


def _two_line_space(ctx):
    q = ctx.q
    pairs = list(itertools.combinations(range(q + 1), 2))
    per_line = 1 << (q - 1)
    return pairs, per_line - 1


def _gen_two_line(cfg, start, stop):
    ctx = _ctx(cfg)
    q = ctx.q
    pairs, m = _two_line_space(ctx)
    codes = _cached(
        "line_codes",
        lambda: [
            sorted(c for c in range(q * q) if c and (line_nonzero_masks(ctx)[i] >> c) & 1)
            for i in range(q + 1)
        ],
    )
    for index in range(start, stop):
        rest, origin_bit = divmod(index, 2)
        rest, sub2 = divmod(rest, m)
        pair_idx, sub1 = divmod(rest, m)
        i, j = pairs[pair_idx]
        bits = origin_bit
        for k, code in enumerate(codes[i]):
            if (sub1 + 1) >> k & 1:
                bits |= 1 << code
        for k, code in enumerate(codes[j]):
            if (sub2 + 1) >> k & 1:
                bits |= 1 << code
        E = PointSet(q, bits)
        order = len(stabilizer(ctx, E))
        _spot(ctx, E, order, index)
        yield (index, *_report_row(ctx, index, E, order, cfg))


def _lineset_list(ctx, cfg):
    q = ctx.q
    sets = [tuple(c) for c in itertools.combinations(range(q + 1), 3)]
    sets += [tuple(c) for c in itertools.combinations(range(q + 1), 4)]
    if q + 1 >= 5:
        for i in range(cfg["budget"]):
            rng = DetRng(nth_seed(cfg["seed"], i))
            sets.append(tuple(sorted(rng.sample(q + 1, 5))))
    return sets


def _gen_lineset(cfg, start, stop):
    ctx = _ctx(cfg)
    q = ctx.q
    sets = _cached(("linesets", cfg["seed"], cfg["budget"]), lambda: _lineset_list(ctx, cfg))
    masks = line_nonzero_masks(ctx)
    lines = proj_lines(ctx)
    for index in range(start, stop):
        picked = sets[index]
        bits = 1  # unions of full origin lines include the origin
        for i in picked:
            bits |= masks[i]
        E = PointSet(q, bits)
        order = len(stabilizer(ctx, E))
        # dual route: the point-set symmetries of a union of origin
        # lines are exactly the permutations of those directions
        direct = line_set_stabilizer(ctx, [lines[i] for i in picked])
        if len(direct) != order:
            raise AssertionError(
                f"line-set stabilizer mismatch at index {index}: {len(direct)} != {order}"
            )
        yield (index, *_report_row(ctx, index, E, order, cfg))


def _gen_prime_bound(cfg, start, stop):
    ctx = _ctx(cfg)
    q = ctx.q
    counts = _cached("counts", lambda: all_subset_stabilizer_orders(ctx))
    masks = line_nonzero_masks(ctx)
    full_nz = q * q - 1
    for mask in range(start, stop):
        nz = mask & ~1
        size_nz = nz.bit_count()
        if not 0 < size_nz < full_nz:
            continue
        if sum(1 for lm in masks if nz & lm) < 2:
            continue
        E = PointSet(q, mask)
        order = counts[mask]
        _spot(ctx, E, order, mask)
        yield (mask, *_report_row(ctx, mask, E, order, cfg))


_EXPECTED_ORDER = {
    "empty": lambda ctx, spec: sl2_order(ctx.q),
    "origin": lambda ctx, spec: sl2_order(ctx.q),
    "full": lambda ctx, spec: sl2_order(ctx.q),
    "full-minus-origin": lambda ctx, spec: sl2_order(ctx.q),
    "line-origin": lambda ctx, spec: ctx.q * ctx.q - ctx.q,
    "line-affine": lambda ctx, spec: (
        ctx.q if int(spec.get("x", "1")) != 0 else ctx.q * ctx.q - ctx.q
    ),
    "axis-subgroup": lambda ctx, spec: ctx.q * (ctx.q - 1) // int(spec.get("c")),
    "subfield-plane": lambda ctx, spec: (
        ctx.p ** (3 * int(spec.get("sub-r"))) - ctx.p ** int(spec.get("sub-r"))
    ),
}


def _expected_order(ctx, spec):
    if spec.name == "complement":
        return _expected_order(ctx, parse_set_spec(spec.get("of")))
    fn = _EXPECTED_ORDER.get(spec.name)
    return fn(ctx, spec) if fn else None


def _family_specs(ctx, cfg):
    if cfg["set_spec"]:
        return [parse_set_spec(cfg["set_spec"])]
    return default_battery(ctx)


def _gen_family(cfg, start, stop):
    ctx = _ctx(cfg)
    specs = _cached(("battery", cfg["set_spec"]), lambda: _family_specs(ctx, cfg))
    for index in range(start, stop):
        spec = specs[index]
        E = gen_family(ctx, spec)
        stab = stabilizer(ctx, E)
        order = len(stab)
        _spot(ctx, E, order, index)
        comp_match = stab == stabilizer(ctx, E.complement())
        expected = _expected_order(ctx, spec)
        exp_match = None if expected is None else order == expected
        row, nviol = _report_row(ctx, index, E, order, cfg)
        row["descriptor"] = spec.text()
        row["complement_match"] = comp_match
        row["expected_order"] = expected
        row["expected_match"] = exp_match
        bad = [v for v in (row["violations"],) if v]
        if not comp_match:
            bad.append("complement_mismatch")
            nviol += 1
        if exp_match is False:
            bad.append("expected_mismatch")
            nviol += 1
        row["violations"] = ";".join(bad)
        yield (index, row, nviol)


def _decode3(q, code):
    z = code % q
    y = (code // q) % q
    return (code // (q * q), y, z)


def _gen_incidence(cfg, start, stop):
    ctx = _ctx(cfg)
    q = ctx.q
    pool = _cached("lines3", lambda: list(all_lines(ctx)))
    cap = 2 * q * q
    for index in range(start, stop):
        rng = DetRng(nth_seed(cfg["seed"], index))
        npts = 1 + rng.below(min(cap, q**3))
        nlns = 1 + rng.below(min(cap, len(pool)))
        points = {_decode3(q, c) for c in rng.sample(q**3, npts)}
        lines = {pool[i] for i in rng.sample(len(pool), nlns)}
        inst = build_instance(ctx, points, lines)
        if index % SPOT_EVERY == 0:
            brute = count_incidences_brute(ctx, points, lines)
            if brute != inst.incidences:
                raise AssertionError(
                    f"incidence spot check failed at {index}: {brute} != {inst.incidences}"
                )
        row = {
            "index": index,
            "points": len(points),
            "lines": len(lines),
            "incidences": inst.incidences,
            "plane_max": inst.plane_max,
        }
        for brow in incidence_bound_report(ctx, inst, c=cfg["c"]):
            row[f"{brow.name}_applicable"] = brow.applicable
            row[f"{brow.name}_observed"] = _f6(brow.observed)
            row[f"{brow.name}_rhs"] = _f6(brow.rhs)
            row[f"{brow.name}_ratio"] = _f6(brow.ratio)
        yield (index, row, 0)


def random_uniform_class_set(ctx: FieldCtx, seed: int):
    """A random set whose nonzero part is m1 points on each of m0 lines.

    Every nonzero point lies on exactly one origin line, so choosing m1
    points on each of m0 distinct lines makes the multiplicity-m1 class
    exactly those m0 lines.  Returns (set, m0, m1).
    """
    q = ctx.q
    rng = DetRng(seed)
    m0 = 2 + rng.below(q)
    m1 = 1 + rng.below(q - 1)
    lines = proj_lines(ctx)
    codes = []
    for li in rng.sample(q + 1, m0):
        u, v = lines[li]
        pts = [(ctx.mul(t, u), ctx.mul(t, v)) for t in range(1, q)]
        for j in rng.sample(q - 1, m1):
            x, y = pts[j]
            codes.append(x * q + y)
    return PointSet.from_codes(q, codes), m0, m1


def _audit_row(ctx, index, E, m1, cfg):
    row = dict.fromkeys(_AUDIT_COLUMNS)
    row["index"] = index
    row["descriptor"] = E.text()
    row["multiplicity"] = m1
    try:
        aud = triple_count_audit(ctx, E, m1, c=cfg["c"])
    except AssertionError as err:
        row["audit_ok"] = False
        row["audit_error"] = str(err)
        return row, 1
    for name in _AUDIT_COLUMNS:
        if hasattr(aud, name):
            val = getattr(aud, name)
            row[name] = _f6(val) if isinstance(val, float) else val
    row["plane_cap"] = 2 * aud.class_count
    row["audit_ok"] = True
    row["audit_error"] = ""
    return row, 0


def _pick_multiplicity(ctx, E):
    from .stabilizer import line_partition

    classes = line_partition(ctx, E.without_origin()).classes
    if not classes:
        raise ValueError("set has no nonzero points to audit")
    return min(classes, key=lambda k: (-len(classes[k]), k))


def _gen_audit(cfg, start, stop):
    ctx = _ctx(cfg)
    if cfg["set_spec"]:
        E = gen_family(ctx, parse_set_spec(cfg["set_spec"]))
        m1 = cfg["m1"] if cfg["m1"] else _pick_multiplicity(ctx, E)
        for index in range(start, stop):
            yield (index, *_audit_row(ctx, index, E, m1, cfg))
    else:
        for index in range(start, stop):
            E, _, m1 = random_uniform_class_set(ctx, nth_seed(cfg["seed"], index))
            yield (index, *_audit_row(ctx, index, E, m1, cfg))


def _gen_search(cfg, start, stop):
    ctx = _ctx(cfg)
    q = ctx.q
    order = sl2_order(q)
    for index in range(start, stop):
        rng = DetRng(nth_seed(cfg["seed"], index))
        if cfg["strategy"] == "random":
            n = 1 + rng.below(q * q - 1)
            E = PointSet.from_codes(q, rng.sample(q * q, n))
            fast = len(stabilizer(ctx, E))
            brute = len(stabilizer_brute(ctx, E))  # every random row gets the oracle
            if fast != brute:
                raise AssertionError(f"search row {index}: fast {fast} != brute {brute}")
            row, nviol = _report_row(ctx, f"{index}", E, fast, cfg)
            row["strategy"] = "random"
            row["subgroup_order"] = None
            row["contains_subgroup"] = None
            yield (index, row, nviol)
            continue
        ngens = 1 + rng.below(2)
        gens = [sl2_unrank(ctx, rng.below(order)) for _ in range(ngens)]
        H, orbits = subgroup_orbits(ctx, gens)
        others = [o for o in orbits if not (0 in o and o.size == 1)]
        if not others:
            continue
        mask = 1 + rng.below((1 << min(len(others), 12)) - 1)
        union = PointSet.from_codes(q, ())
        for k, orb in enumerate(others[:12]):
            if (mask >> k) & 1:
                union = union.union(orb)
        for tag, E in ((f"{index}", union), (f"{index}+o", union.with_origin())):
            stab = stabilizer(ctx, E)
            contains = H <= stab
            row, nviol = _report_row(ctx, tag, E, len(stab), cfg)
            row["strategy"] = "orbit-union"
            row["subgroup_order"] = len(H)
            row["contains_subgroup"] = contains
            if not contains:
                nviol += 1
                row["violations"] = ";".join(
                    x for x in (row["violations"], "orbit_union_containment") if x
                )
            yield (index, row, nviol)


_PRODUCERS = {
    "exhaustive-subsets": _gen_exhaustive,
    "two-line-exhaustive": _gen_two_line,
    "lineset-exhaustive": _gen_lineset,
    "family-verify": _gen_family,
    "prime-bound-exhaustive": _gen_prime_bound,
    "incidence-report": _gen_incidence,
    "triple-audit": _gen_audit,
    "search-extremal": _gen_search,
}


def _run_range(cfg: dict, start: int, stop: int) -> list:
    return list(_PRODUCERS[cfg["campaign"]](cfg, start, stop))


# ---------------------------------------------------------------------------
# Planning, guards, and the drive loop


def _plan_total(cfg: dict, ctx: FieldCtx) -> int:
    q = ctx.q
    name = cfg["campaign"]
    if name == "exhaustive-subsets":
        return (1 << (q * q)) if q <= 4 else cfg["budget"]
    if name == "two-line-exhaustive":
        pairs, m = _two_line_space(ctx)
        return len(pairs) * m * m * 2
    if name == "lineset-exhaustive":
        extra = cfg["budget"] if q + 1 >= 5 else 0
        from math import comb

        return comb(q + 1, 3) + comb(q + 1, 4) + extra
    if name == "family-verify":
        return len(_family_specs(ctx, cfg))
    if name == "prime-bound-exhaustive":
        return 1 << (q * q)
    if name == "triple-audit":
        return 1 if cfg["set_spec"] else cfg["budget"]
    return cfg["budget"]  # incidence-report, search-extremal


def _validate(config: CampaignConfig, ctx: FieldCtx) -> None:
    q = ctx.q
    name = config.campaign
    if name not in CAMPAIGNS:
        raise ValueError(f"unknown campaign {name!r}; choose from {', '.join(CAMPAIGNS)}")
    if config.fmt not in ("csv", "json"):
        raise ValueError("format must be csv or json")
    if config.budget < 0:
        raise ValueError("budget must be >= 0")
    if config.resume and config.fmt != "csv":
        raise ValueError("resume is only supported for csv output")
    if name == "exhaustive-subsets" and q > 4:
        if q != 5 or not config.allow_sampled:
            raise ValueError(
                "exhaustive-subsets needs q <= 4; q = 5 runs sampled with --allow-sampled"
            )
    if name == "prime-bound-exhaustive" and q > 4:
        raise ValueError("prime-bound-exhaustive needs q <= 4")
    if name == "two-line-exhaustive":
        total = _plan_total({"campaign": name, "budget": config.budget}, ctx)
        if total > 200_000:
            raise ValueError(f"two-line-exhaustive space too large ({total} rows)")
    if name == "family-verify" and q > 16:
        raise ValueError("family-verify needs q <= 16")
    if name in ("lineset-exhaustive", "incidence-report", "triple-audit", "search-extremal"):
        if q > 9:
            raise ValueError(f"{name} needs q <= 9")


def _echo(config: CampaignConfig) -> str:
    parts = [
        f"# {SCHEMA}",
        f"campaign={config.campaign}",
        f"p={config.p}",
        f"r={config.r}",
        f"seed={config.seed}",
        f"budget={config.budget}",
        f"c={_fmt(config.c)}",
        f"c1={_fmt(config.c1)}",
        f"c2={_fmt(config.c2)}",
        f"alpha={_fmt(config.alpha)}",
        f"beta={_fmt(config.beta)}",
    ]
    if config.campaign == "search-extremal":
        parts.append(f"strategy={config.strategy}")
    if config.m1 is not None:
        parts.append(f"m1={config.m1}")
    if config.set_spec:
        parts.append(f"set={config.set_spec}")
    return " ".join(parts)


class _Acc:
    """Summary accumulators, checkpointable as a plain dict."""

    def __init__(self):
        self.rows = 0
        self.violations = 0
        self.max_ratio = None
        self.argmax = ""
        self.confirmed_checked = 0
        self.confirmed_ok = 0

    def update(self, row: dict, nviol: int) -> None:
        self.rows += 1
        self.violations += nviol
        ratio = row.get("ratio_nonzero")
        if (
            ratio is not None
            and row.get("lines_meeting", 0) >= 2
            and (self.max_ratio is None or ratio > self.max_ratio)
        ):
            self.max_ratio = ratio
            self.argmax = row.get("descriptor", "")
        confirmed = row.get("confirmed")
        if confirmed is not None:
            self.confirmed_checked += 1
            self.confirmed_ok += bool(confirmed)

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "_Acc":
        acc = cls()
        acc.__dict__.update(d)
        return acc


def _default_out(config: CampaignConfig) -> str:
    return f"{config.campaign}-p{config.p}-r{config.r}.{config.fmt}"


def _write_ckpt(path: str, echo: str, next_start: int, offset: int, acc: _Acc) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(
            {"echo": echo, "next_start": next_start, "offset": offset, "acc": acc.to_dict()},
            fh,
        )
    os.replace(tmp, path)


def run_campaign(config: CampaignConfig) -> CampaignResult:
    """Run one campaign: write the result file, return rows and summary."""
    ctx = make_field(config.p, config.r)
    _validate(config, ctx)
    if config.workers is None:
        config = replace(config, workers=int(os.environ.get("SL2LAB_WORKERS", "1")))
    out = config.out or _default_out(config)
    cfg = {
        "p": config.p,
        "r": config.r,
        "campaign": config.campaign,
        "set_spec": config.set_spec,
        "m1": config.m1,
        "strategy": config.strategy,
        "c": config.c,
        "c1": config.c1,
        "c2": config.c2,
        "alpha": config.alpha,
        "beta": config.beta,
        "budget": config.budget,
        "seed": config.seed,
    }
    total = _plan_total(cfg, ctx)
    echo = _echo(config)
    cols = columns_for(config.campaign)
    is_search = config.campaign == "search-extremal"
    ckpt_path = out + ".ckpt"

    start = 0
    acc = _Acc()
    mode = "w"
    if config.resume and not is_search and config.fmt == "csv" and os.path.exists(ckpt_path):
        with open(ckpt_path) as fh:
            state = json.load(fh)
        if state["echo"] != echo:
            raise ValueError("checkpoint does not match this configuration")
        start = state["next_start"]
        acc = _Acc.from_dict(state["acc"])
        # drop any rows written after the last completed chunk
        with open(out, "r+b") as raw:
            raw.truncate(state["offset"])
        mode = "a"

    collected = []  # search rows (for ranking) or json rows
    buffer_rows = is_search or config.fmt == "json"
    written = []

    def emit(fh, writer, batch):
        for index, row, nviol in batch:
            if buffer_rows:
                collected.append((index, row, nviol))
            else:
                acc.update(row, nviol)
                writer.writerow([_fmt(row.get(c)) for c in cols])
                written.append(row)

    fh = writer = None
    if config.fmt == "csv":
        fh = open(out, mode, newline="")
        writer = csv.writer(fh, lineterminator="\n")
        if mode == "w":
            fh.write(echo + "\n")
            writer.writerow(cols)

    try:
        use_pool = config.workers > 1 and total - start > CHUNK
        if use_pool:
            with ProcessPoolExecutor(
                max_workers=config.workers,
                initializer=_init_worker,
                initargs=(config.p, config.r),
            ) as pool:
                spans = [
                    (s, min(s + CHUNK, total)) for s in range(start, total, CHUNK)
                ]
                futures = [pool.submit(_run_range, cfg, s, e) for s, e in spans]
                for (s, e), fut in zip(spans, futures):
                    emit(fh, writer, fut.result())
                    if fh is not None and not buffer_rows:
                        fh.flush()
                        _write_ckpt(ckpt_path, echo, e, fh.tell(), acc)
        else:
            for s in range(start, total, CHUNK):
                e = min(s + CHUNK, total)
                emit(fh, writer, _run_range(cfg, s, e))
                if fh is not None and not buffer_rows:
                    fh.flush()
                    _write_ckpt(ckpt_path, echo, e, fh.tell(), acc)

        if is_search:
            ranked = _rank_search_rows(collected)
            for row, nviol in ranked:
                acc.update(row, nviol)
                written.append(row)
                if writer is not None:
                    writer.writerow([_fmt(row.get(c)) for c in cols])
        elif buffer_rows:
            for index, row, nviol in collected:
                acc.update(row, nviol)
                written.append(row)
    finally:
        if fh is not None:
            fh.close()

    if config.fmt == "json":
        doc = {
            "schema": SCHEMA,
            "campaign": config.campaign,
            "config": {k: v for k, v in cfg.items() if v is not None},
            "rows": written,
            "summary": acc.to_dict(),
        }
        with open(out, "w") as jfh:
            json.dump(doc, jfh, indent=1)
            jfh.write("\n")
    if os.path.exists(ckpt_path):
        os.remove(ckpt_path)

    summary = acc.to_dict()
    summary["campaign"] = config.campaign
    summary["total_indices"] = total
    return CampaignResult(rows=written, summary=summary, out=out)


def _rank_search_rows(collected: list) -> list:
    """Dedup by point set, keep candidates meeting two or more lines,
    order by falling symmetry ratio (first appearance breaks ties)."""
    seen = set()
    kept = []
    for pos, (index, row, nviol) in enumerate(collected):
        key = row["descriptor"]
        if key in seen:
            continue
        seen.add(key)
        if row.get("lines_meeting", 0) >= 2 and row.get("ratio_nonzero") is not None:
            kept.append((-row["ratio_nonzero"], pos, row, nviol))
    kept.sort(key=lambda t: (t[0], t[1]))
    return [(row, nviol) for _, _, row, nviol in kept]


def search_extremal(config: CampaignConfig) -> list:
    """Ranked extremal-candidate rows (also written to config.out)."""
    if config.campaign != "search-extremal":
        config = replace(config, campaign="search-extremal")
    return run_campaign(config).rows


# ---------------------------------------------------------------------------
# CLI


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--p", type=int, required=True, help="field characteristic (prime)")
    sub.add_argument("--r", type=int, default=1, help="extension degree, q = p^r")
    sub.add_argument("--c", type=float, default=1.0)
    sub.add_argument("--c1", type=float, default=1.0)
    sub.add_argument("--c2", type=float, default=1.0)
    sub.add_argument("--alpha", type=float, default=0.5)
    sub.add_argument("--beta", type=float, default=0.75)
    sub.add_argument("--budget", type=int, default=1000)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--workers", type=int, default=None)
    sub.add_argument("--out", default=None)
    sub.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    sub.add_argument("--resume", action="store_true")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sl2lab",
        description="symmetry-set campaigns over SL2(F_q) acting on the plane",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    f = subs.add_parser("field", help="build a field and run its self-test")
    f.add_argument("--p", type=int, required=True)
    f.add_argument("--r", type=int, default=1)
    f.add_argument("--selftest", action="store_true", help="exhaustive axiom check")

    s = subs.add_parser("stab", help="symmetry set and bound report for one set")
    _add_common(s)
    s.add_argument("--set", dest="set_spec", required=True)

    fam = subs.add_parser("family", help="family-verify campaign")
    _add_common(fam)
    fam.add_argument("--set", dest="set_spec", default=None)

    ex = subs.add_parser("exhaustive", help="exhaustive sweeps")
    _add_common(ex)
    ex.add_argument(
        "--campaign",
        default="exhaustive-subsets",
        choices=(
            "exhaustive-subsets",
            "two-line-exhaustive",
            "lineset-exhaustive",
            "prime-bound-exhaustive",
        ),
    )
    ex.add_argument("--allow-sampled", action="store_true")

    inc = subs.add_parser("incidence", help="random incidence instances and bounds")
    _add_common(inc)

    aud = subs.add_parser("audit", help="triple-count audit campaign")
    _add_common(aud)
    aud.add_argument("--set", dest="set_spec", default=None)
    aud.add_argument("--m1", type=int, default=None)

    se = subs.add_parser("search", help="extremal-ratio search")
    _add_common(se)
    se.add_argument("--strategy", choices=("orbit-union", "random"), default="orbit-union")
    return parser


def _cmd_field(args) -> int:
    ctx = make_field(args.p, args.r)
    mod = "".join(str(d) for d in reversed(ctx.modulus))
    print(f"GF({ctx.q}) = GF({ctx.p}^{ctx.r}) modulus_digits={mod} primitive={ctx.primitive}")
    if args.selftest:
        selftest(ctx)
        print("selftest ok")
    return 0


def _cmd_stab(args) -> int:
    ctx = make_field(args.p, args.r)
    E = gen_family(ctx, parse_set_spec(args.set_spec))
    rep = bound_report(ctx, E, Constants(args.c, args.c1, args.c2, args.alpha, args.beta))
    print(f"descriptor={args.set_spec}")
    print(
        f"q={ctx.q} size={rep.size} size_nonzero={rep.size_nonzero}"
        f" lines_meeting={rep.lines_meeting} stab_order={rep.stab_order}"
    )
    print(
        f"ratio_full={_fmt(_f6(rep.ratio_full))}"
        f" ratio_nonzero={_fmt(_f6(rep.ratio_nonzero))}"
        f" contained_line={_fmt(rep.contained_line)}"
        f" all_classes_small={_fmt(rep.all_classes_small)}"
    )
    for row in rep.rows:
        print(
            f"bound {row.name}: applicable={_fmt(row.applicable)}"
            f" rhs={_fmt(_f6(row.rhs))} ratio={_fmt(_f6(row.ratio))}"
            f" violated={_fmt(row.violated)}"
        )
    bad = rep.violations()
    print(f"violations={';'.join(bad)}")
    return 1 if bad else 0


def _campaign_from_args(args, campaign: str) -> CampaignConfig:
    return CampaignConfig(
        p=args.p,
        r=args.r,
        campaign=campaign,
        set_spec=getattr(args, "set_spec", None),
        m1=getattr(args, "m1", None),
        strategy=getattr(args, "strategy", "orbit-union"),
        c=args.c,
        c1=args.c1,
        c2=args.c2,
        alpha=args.alpha,
        beta=args.beta,
        budget=args.budget,
        seed=args.seed,
        workers=args.workers,
        out=args.out,
        fmt=args.fmt,
        resume=args.resume,
        allow_sampled=getattr(args, "allow_sampled", False),
    )


def _cmd_campaign(args, campaign: str) -> int:
    result = run_campaign(_campaign_from_args(args, campaign))
    s = result.summary
    line = f"campaign={s['campaign']} rows={s['rows']} violations={s['violations']}"
    if s["max_ratio"] is not None:
        line += f" max_ratio_nonzero={_fmt(s['max_ratio'])} argmax={s['argmax']}"
    if s["confirmed_checked"]:
        line += f" confirmed={s['confirmed_ok']}/{s['confirmed_checked']}"
    print(line)
    print(f"wrote {result.out}")
    return 1 if s["violations"] else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "field":
            return _cmd_field(args)
        if args.command == "stab":
            return _cmd_stab(args)
        if args.command == "family":
            return _cmd_campaign(args, "family-verify")
        if args.command == "exhaustive":
            return _cmd_campaign(args, args.campaign)
        if args.command == "incidence":
            return _cmd_campaign(args, "incidence-report")
        if args.command == "audit":
            return _cmd_campaign(args, "triple-audit")
        if args.command == "search":
            return _cmd_campaign(args, "search-extremal")
        raise ValueError(f"unknown command {args.command!r}")
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except AssertionError as err:
        print(f"internal check failed: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
