"""HTTP API: program upload, verification and synthesis jobs, SSE progress."""

from __future__ import annotations

import itertools
import json
import threading
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from ..lang import nodes as N
from ..lang import parse, typecheck
from ..solver import Budget
from ..synthesis import Closed, Failed, Partial, SynthConfig, splice, synthesize
from ..values import format_value
from ..verify import verify_function
from .jobs import JobRecord, JobStore


@dataclass
class ProgramRecord:
    program_id: str
    source: str
    typed: object  # TypedProgram
    lock: threading.Lock = field(default_factory=threading.Lock)


class ProgramBody(BaseModel):
    source: str


class VerifyBody(BaseModel):
    programId: str
    fun: str
    timeout: float = 3.0


class SynthesizeBody(BaseModel):
    programId: str
    chooseId: str
    budget: Optional[float] = None


def create_app(config: Optional[SynthConfig] = None) -> FastAPI:
    app = FastAPI(title="synthion")
    config = config or SynthConfig()
    programs: dict[str, ProgramRecord] = {}
    counter = itertools.count(1)
    jobs = JobStore()

    def get_program(pid: str) -> ProgramRecord:
        rec = programs.get(pid)
        if rec is None:
            raise HTTPException(404, "unknown program")
        return rec

    @app.post("/programs")
    def post_program(body: ProgramBody):
        prog, diags = parse(body.source)
        if prog is None:
            return {"programId": None,
                    "diagnostics": [{"line": d.line, "column": d.column,
                                     "message": d.message} for d in diags],
                    "chooseSites": [], "functions": []}
        tp, tdiags = typecheck(prog)
        if tp is None:
            return {"programId": None,
                    "diagnostics": [{"line": d.line, "column": d.column,
                                     "message": d.message} for d in tdiags],
                    "chooseSites": [], "functions": []}
        pid = f"p{next(counter)}"
        programs[pid] = ProgramRecord(pid, body.source, tp)
        return {
            "programId": pid,
            "diagnostics": [],
            "chooseSites": [s.site_id for s in tp.choose_sites],
            "functions": [f.name for f in tp.functions
                          if not isinstance(f.body, N.Choose)],
        }

    @app.post("/verify")
    def post_verify(body: VerifyBody):
        rec = get_program(body.programId)
        try:
            rec.typed.function(body.fun)
        except KeyError:
            raise HTTPException(404, "unknown function")

        def work(job: JobRecord) -> dict:
            report = verify_function(rec.typed, body.fun,
                                     Budget(time_limit=body.timeout),
                                     cancel=job.cancel)
            vcs = []
            for o in report.outcomes:
                entry = {"kind": o.vc.kind, "status": o.status}
                if o.counterexample:
                    entry["counterexample"] = {
                        k: format_value(v) for k, v in o.counterexample.items()}
                vcs.append(entry)
            return {"vcs": vcs, "allValid": report.all_valid}

        job = jobs.submit("verify", body.fun, work)
        return {"jobId": job.job_id}

    @app.post("/synthesize")
    def post_synthesize(body: SynthesizeBody):
        rec = get_program(body.programId)
        try:
            rec.typed.site(body.chooseId)
        except KeyError:
            raise HTTPException(404, "unknown choose site")

        def work(job: JobRecord) -> dict:
            def listener(kind: str, payload) -> None:
                if kind == "counterexample":
                    payload = {k: format_value(v) for k, v in payload.items()}
                job.emit(kind, payload)

            result = synthesize(rec.typed, body.chooseId, config,
                                cancel=job.cancel, listener=listener,
                                budget_seconds=body.budget)
            if isinstance(result, Failed):
                return {"outcome": "failed"}
            sol = result.solution
            with rec.lock:
                new_tp, src = splice(rec.typed, body.chooseId, sol)
                outcome = "closed" if isinstance(result, Closed) else "partial"
                if outcome == "closed":
                    rec.typed = new_tp
                    rec.source = src
            return {"outcome": outcome, "source": src}

        job = jobs.submit("synthesize", body.chooseId, work)
        return {"jobId": job.job_id}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(404, "unknown job")
        return {"jobId": job.job_id, "kind": job.kind, "target": job.target,
                "status": job.status, "result": job.result}

    @app.get("/jobs/{job_id}/events")
    def get_events(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(404, "unknown job")

        def sse():
            for e in job.stream():
                yield f"event: {e.kind}\ndata: {json.dumps(e.payload)}\n\n"

        return StreamingResponse(sse(), media_type="text/event-stream")

    @app.post("/jobs/{job_id}/cancel")
    def post_cancel(job_id: str):
        out = jobs.cancel(job_id)
        if out is None:
            raise HTTPException(404, "unknown job")
        if out == "late":
            raise HTTPException(409, "job already finished")
        return {"status": "cancelling"}

    @app.get("/programs/{pid}/source", response_class=PlainTextResponse)
    def get_source(pid: str):
        return get_program(pid).source

    return app
