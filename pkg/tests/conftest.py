"""Shared fixtures: session-cached field contexts for the small fields."""

import pytest

from sl2lab.gf import make_field


@pytest.fixture(scope="session")
def fields():
    """Map q -> FieldCtx for every field the tests touch repeatedly."""
    out = {}
    for p, r in [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2),
                 (11, 1), (13, 1), (2, 4), (5, 2)]:
        ctx = make_field(p, r)
        out[ctx.q] = ctx
    return out
