"""Benchmark runner: synthesize the choose sites of each corpus file in order,
splice each solution back before the next site, verify, and report."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from ..lang import nodes as N
from ..lang import parse, typecheck
from ..solver import Budget
from ..synthesis import (Closed, Partial, SynthConfig, solution_is_valid,
                         splice, synthesize)
from ..synthesis.cost import solution_cost
from ..synthesis.problem import problem_of_choose
from ..verify import verify_function


@dataclass
class BenchRow:
    name: str
    synthesized: bool
    size: Optional[int] = None
    calls: Optional[int] = None
    seconds: float = 0.0
    proved: bool = False
    valid: str = "unknown"   # solutionIsValid verdict on the final solution
    note: str = ""


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)

    def to_json(self) -> str:
        return "\n".join(json.dumps(asdict(r)) for r in self.rows) + "\n"


def _solution_metrics(sol) -> tuple[int, int]:
    size = N.expr_size(sol.term)
    calls = sum(1 for x in N.walk(sol.term) if isinstance(x, N.Call))
    for f in sol.defined_funs:
        size += N.expr_size(f.body)
        calls += sum(1 for x in N.walk(f.body) if isinstance(x, N.Call))
    return size, calls


def run_file(path: Path, config: Optional[SynthConfig] = None,
             verify_timeout: float = 3.0,
             row_budget: Optional[float] = None,
             only: Optional[set[str]] = None,
             listener=None) -> BenchReport:
    base = path.stem
    pretty = {"list": "List", "sortedlist": "SortedList",
              "strictsorted": "StrictSortedList", "unary": "UnaryNumerals",
              "mergesort": "MergeSort"}.get(base, base)
    config = config or SynthConfig()
    report = BenchReport()
    src = path.read_text()
    prog, diags = parse(src)
    assert prog is not None, diags
    tp, tdiags = typecheck(prog)
    assert tp is not None, tdiags

    site_ids = [s.site_id for s in tp.choose_sites]
    for site_id in site_ids:
        fun_name = site_id.split("/")[0]
        row_name = f"{pretty}.{fun_name[0].upper()}{fun_name[1:]}"
        if only is not None and row_name not in only:
            continue
        t0 = time.monotonic()
        try:
            result = synthesize(tp, site_id, config,
                                budget_seconds=row_budget, listener=listener)
        except Exception as e:
            report.rows.append(BenchRow(row_name, False, seconds=time.monotonic() - t0,
                                        note=f"error: {e}"))
            continue
        dt = time.monotonic() - t0
        if not isinstance(result, Closed):
            report.rows.append(BenchRow(row_name, False, seconds=dt,
                                        note="partial"))
            continue
        sol = result.solution
        size, calls = _solution_metrics(sol)
        problem = problem_of_choose(tp, site_id)
        verdict = solution_is_valid(problem, sol, Budget(time_limit=verify_timeout))
        valid = type(verdict).__name__.lower()
        tp, _src = splice(tp, site_id, sol)
        proved = False
        try:
            vr = verify_function(tp, fun_name, Budget(time_limit=verify_timeout))
            proved = vr.all_valid
            if proved:
                for f in sol.defined_funs:
                    fr = verify_function(tp, f.name, Budget(time_limit=verify_timeout))
                    if not fr.all_valid:
                        proved = False
                        break
        except Exception:
            proved = False
        report.rows.append(BenchRow(row_name, True, size=size, calls=calls,
                                    seconds=dt, proved=proved, valid=valid))
    return report


def run_benchmarks(corpus_dir: str, config: Optional[SynthConfig] = None,
                   report_path: Optional[str] = None,
                   row_budget: Optional[float] = None,
                   only: Optional[set[str]] = None) -> BenchReport:
    report = BenchReport()
    for path in sorted(Path(corpus_dir).glob("*.lang")):
        sub = run_file(path, config, row_budget=row_budget, only=only)
        report.rows.extend(sub.rows)
    if report_path:
        Path(report_path).write_text(report.to_json())
    return report
