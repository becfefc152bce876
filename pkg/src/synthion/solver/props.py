"""Propositional layer: formula trees, Tseitin clausification, DPLL search."""

from __future__ import annotations

from typing import Optional

# Formula trees: ("var", id) | ("not", f) | ("and", [fs]) | ("or", [fs]) | True | False
# Literals are nonzero ints; variable ids start at 1.

TRUE = True
FALSE = False


def pand(*fs):
    flat = []
    for f in fs:
        if f is True:
            continue
        if f is False:
            return False
        if isinstance(f, tuple) and f[0] == "and":
            flat.extend(f[1])
        else:
            flat.append(f)
    if not flat:
        return True
    if len(flat) == 1:
        return flat[0]
    return ("and", flat)


def por(*fs):
    flat = []
    for f in fs:
        if f is False:
            continue
        if f is True:
            return True
        if isinstance(f, tuple) and f[0] == "or":
            flat.extend(f[1])
        else:
            flat.append(f)
    if not flat:
        return False
    if len(flat) == 1:
        return flat[0]
    return ("or", flat)


def pnot(f):
    if f is True:
        return False
    if f is False:
        return True
    if isinstance(f, tuple) and f[0] == "not":
        return f[1]
    return ("not", f)


def pimplies(a, b):
    return por(pnot(a), b)


def piff(a, b):
    return pand(pimplies(a, b), pimplies(b, a))


class ClauseDb:
    """Growing CNF database with Tseitin encoding of formula trees."""

    def __init__(self) -> None:
        self.nvars = 0
        self.clauses: list[tuple[int, ...]] = []
        self._seen: set[tuple[int, ...]] = set()

    def fresh_var(self) -> int:
        self.nvars += 1
        return self.nvars

    def add_clause(self, lits: list[int]) -> None:
        key = tuple(sorted(set(lits)))
        if any(-l in key for l in key):
            return  # tautology
        if key in self._seen:
            return
        self._seen.add(key)
        self.clauses.append(key)

    def assert_formula(self, f) -> None:
        if f is True:
            return
        if f is False:
            self.add_clause([])
            return
        lit = self._tseitin(f)
        self.add_clause([lit])

    def _tseitin(self, f) -> int:
        if f is True or f is False:
            v = self.fresh_var()
            self.add_clause([v] if f is True else [-v])
            return v
        kind = f[0]
        if kind == "var":
            return f[1]
        if kind == "not":
            return -self._tseitin(f[1])
        lits = [self._tseitin(g) for g in f[1]]
        v = self.fresh_var()
        if kind == "and":
            for l in lits:
                self.add_clause([-v, l])
            self.add_clause([v] + [-l for l in lits])
        elif kind == "or":
            for l in lits:
                self.add_clause([-l, v])
            self.add_clause([-v] + lits)
        else:
            raise ValueError(kind)
        return v


def dpll(db: ClauseDb, prefer: Optional[dict[int, bool]] = None,
         assumptions: Optional[list[int]] = None,
         deadline: Optional[float] = None) -> Optional[list[bool]]:
    """Deterministic CDCL: two-watched-literal propagation, first-UIP clause
    learning, backjumping.

    Returns assignment[1..nvars] as a bool list (index 0 unused) or None.
    Raises TimeoutError when the deadline passes.
    """
    import time

    nvars = db.nvars
    clauses: list[list[int]] = []
    watches: dict[int, list[int]] = {}
    assign: list[Optional[bool]] = [None] * (nvars + 1)
    level: list[int] = [0] * (nvars + 1)
    reason: list[Optional[int]] = [None] * (nvars + 1)
    trail: list[int] = []           # literals in assignment order
    trail_lim: list[int] = []       # trail length at each decision level
    qhead = 0

    def value(lit: int) -> Optional[bool]:
        v = assign[lit if lit > 0 else -lit]
        if v is None:
            return None
        return v if lit > 0 else not v

    def current_level() -> int:
        return len(trail_lim)

    def enqueue(lit: int, why: Optional[int]) -> bool:
        v = value(lit)
        if v is True:
            return True
        if v is False:
            return False
        var = lit if lit > 0 else -lit
        assign[var] = lit > 0
        level[var] = current_level()
        reason[var] = why
        trail.append(lit)
        return True

    def add_clause(c: list[int]) -> Optional[int]:
        """Returns the clause index, or None for unit/empty handled inline."""
        ci = len(clauses)
        clauses.append(c)
        for l in c[:2]:
            watches.setdefault(l, []).append(ci)
        return ci

    units: list[int] = []
    for c in db.clauses:
        if not c:
            return None
        if len(c) == 1:
            units.append(c[0])
            continue
        add_clause(list(c))
    if assumptions:
        units.extend(assumptions)
    for u in units:
        if not enqueue(u, None):
            return None

    def propagate() -> Optional[int]:
        """Returns a conflicting clause index or None."""
        nonlocal qhead
        while qhead < len(trail):
            lit = trail[qhead]
            qhead += 1
            falsified = -lit
            wl = watches.get(falsified)
            if not wl:
                continue
            i = 0
            while i < len(wl):
                ci = wl[i]
                c = clauses[ci]
                if c[0] == falsified:
                    c[0], c[1] = c[1], falsified
                first = c[0]
                v0 = assign[first] if first > 0 else assign[-first]
                if v0 is not None and (v0 if first > 0 else not v0):
                    i += 1
                    continue
                moved = False
                for k in range(2, len(c)):
                    lk = c[k]
                    vk = assign[lk] if lk > 0 else assign[-lk]
                    if vk is None or (vk if lk > 0 else not vk):
                        c[1], c[k] = lk, c[1]
                        watches.setdefault(lk, []).append(ci)
                        wl[i] = wl[-1]
                        wl.pop()
                        moved = True
                        break
                if moved:
                    continue
                if not enqueue(first, ci):
                    return ci
                i += 1
        return None

    def analyze(conflict_ci: int) -> tuple[list[int], int]:
        """First-UIP learned clause and the backjump level; the asserting
        literal is last in the returned clause."""
        learned: list[int] = []
        seen = [False] * (nvars + 1)
        counter = 0
        p = 0  # 0 means: take every literal of the conflict clause
        ci = conflict_ci
        idx = len(trail) - 1
        lvl = current_level()
        while True:
            for l in clauses[ci]:
                if p != 0 and l == p:
                    continue
                var = l if l > 0 else -l
                if seen[var] or level[var] == 0:
                    continue
                seen[var] = True
                if level[var] == lvl:
                    counter += 1
                else:
                    learned.append(l)
            while True:
                cand = trail[idx]
                idx -= 1
                var = cand if cand > 0 else -cand
                if seen[var]:
                    break
            seen[var] = False
            counter -= 1
            if counter == 0:
                learned.append(-cand)
                break
            ci = reason[var]
            p = cand
        if len(learned) == 1:
            return learned, 0
        back = max(level[l if l > 0 else -l] for l in learned[:-1])
        return learned, back

    def backjump(lvl: int) -> None:
        nonlocal qhead
        while len(trail_lim) > lvl:
            mark = trail_lim.pop()
            while len(trail) > mark:
                l = trail.pop()
                var = l if l > 0 else -l
                assign[var] = None
                reason[var] = None
        qhead = len(trail)

    next_var = 1
    steps = 0
    while True:
        steps += 1
        if deadline is not None and steps % 64 == 0 and time.monotonic() > deadline:
            raise TimeoutError("sat search timeout")
        conflict = propagate()
        if conflict is not None:
            if current_level() == 0:
                return None
            learned, back_lvl = analyze(conflict)
            backjump(back_lvl)
            next_var = 1
            asserting = learned[-1]
            if len(learned) == 1:
                if not enqueue(asserting, None):
                    return None
            else:
                # watch the asserting literal and one from the backjump level
                c = [asserting] + sorted(
                    learned[:-1], key=lambda l: -level[l if l > 0 else -l])
                ci = add_clause(c)
                if not enqueue(asserting, ci):
                    return None
            continue
        # decide
        while next_var <= nvars and assign[next_var] is not None:
            next_var += 1
        if next_var > nvars:
            return [False] + [bool(assign[i]) for i in range(1, nvars + 1)]
        v = next_var
        pol = prefer.get(v, False) if prefer else False
        trail_lim.append(len(trail))
        enqueue(v if pol else -v, None)
