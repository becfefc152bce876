"""Program cost: branching nodes weighted by proximity to the root.

A branch at depth d costs 2^(D-d) with D = 8, so near-top-level branching is
discouraged; syntax-tree size breaks ties.
"""

from __future__ import annotations

from ..lang import nodes as N

DEPTH_SCALE = 8


def branch_weight(depth: int) -> int:
    return 2 ** max(DEPTH_SCALE - depth, 0)


def _is_branch(e: N.Expr) -> bool:
    if isinstance(e, N.If):
        return True
    if isinstance(e, N.Match) and len(e.cases) >= 2:
        return True
    return False


def branch_cost(e: N.Expr, depth: int = 0) -> int:
    here = branch_weight(depth) if _is_branch(e) else 0
    child_depth = depth + (1 if _is_branch(e) else 0)
    return here + sum(branch_cost(c, child_depth) for c in N.children(e))


def cost(e: N.Expr, depth: int = 0) -> tuple[int, int]:
    """(weighted branch count, size) — compared lexicographically."""
    return branch_cost(e, depth), N.expr_size(e)


def solution_cost(term: N.Expr, defined_funs: list[N.FunDef]) -> tuple[int, int]:
    b = branch_cost(term)
    s = N.expr_size(term)
    for f in defined_funs:
        b += branch_cost(f.body)
        s += N.expr_size(f.body)
    return b, s
