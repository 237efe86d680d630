"""Restoration session service: event-sourced scenario store plus the
HTTP API used by the dispatcher console.

Every scenario is persisted as its initial document plus an append-only
event log; the current state is always derived by replay, which makes
recovery and undo trivial and keeps persistence bit-exact.  Solves run
off the request path in worker threads; runs on the same scenario are
serialized through a per-scenario lock while different scenarios proceed
in parallel.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, replace
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, Response

from . import evaluation, pathsearch
from .grid import (FAILED, Scenario, ScenarioError, load_scenario,
                   scenario_from_mapping, scenario_to_document)
from .report import build_report, report_bytes

EVENT_KINDS = ("line_failed", "line_repaired", "scheme_committed",
               "targets_changed")


class EventError(ValueError):
    """Event references unknown elements or an uncommittable scheme."""


@dataclass(frozen=True)
class RestorationEvent:
    kind: str
    payload: dict
    timestamp: float

    def to_dict(self):
        return {"kind": self.kind, "payload": self.payload,
                "timestamp": self.timestamp}


def apply_event(scenario: Scenario, event: RestorationEvent,
                resolve_scheme=None) -> Scenario:
    """Fold one event into a scenario, returning the new state.

    `resolve_scheme` maps a {run_id, scheme_index} reference to a recorded
    scheme so commits can be validated against the trace that produced
    them.
    """
    kind = event.kind
    payload = event.payload
    if kind == "line_failed":
        bid = int(payload["branch_id"])
        if bid not in scenario.network.branches:
            raise EventError(f"unknown branch {bid}")
        return scenario.with_branch_status(bid, FAILED)
    if kind == "line_repaired":
        bid = int(payload["branch_id"])
        if bid not in scenario.network.branches:
            raise EventError(f"unknown branch {bid}")
        if scenario.network.branches[bid].status != FAILED:
            return scenario  # repairing a healthy line is a no-op
        return scenario.with_branch_status(bid, "unenergized")
    if kind == "scheme_committed":
        if resolve_scheme is None:
            raise EventError("scheme commits need a run reference resolver")
        scheme = resolve_scheme(payload)
        if scheme is None:
            raise EventError("scheme reference not found")
        if not scheme.valid:
            raise EventError(
                "cannot commit an invalid scheme: "
                + "; ".join(f"{v.kind}: {v.detail}" for v in scheme.violations))
        touched = set()
        for bid in scheme.lines:
            br = scenario.network.branches.get(bid)
            if br is None:
                raise EventError(f"unknown branch {bid}")
            touched.add(br.from_bus)
            touched.add(br.to_bus)
        return scenario.with_energized(scheme.lines, touched)
    if kind == "targets_changed":
        return scenario.with_targets(payload["targets"])
    raise EventError(f"unknown event kind {kind!r}")


# ---------------------------------------------------------------------------
# Store
# ---------------------------------------------------------------------------

class SessionStore:
    """Scenarios, event logs, and solve runs, persisted under data_dir."""

    def __init__(self, data_dir):
        self.root = Path(data_dir)
        (self.root / "scenarios").mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._solve_locks = {}
        self._runs = {}
        self._traces = {}

    # -- paths ---------------------------------------------------------------
    def _doc_path(self, sid):
        return self.root / "scenarios" / f"{sid}.json"

    def _log_path(self, sid):
        return self.root / "scenarios" / f"{sid}.events.jsonl"

    # -- scenarios -----------------------------------------------------------
    def create_scenario(self, document_text: str) -> str:
        scenario = load_scenario(document_text)  # validate before persisting
        sid = uuid.uuid4().hex[:12]
        canonical = json.dumps(scenario_to_document(scenario), indent=1,
                               sort_keys=True)
        self._doc_path(sid).write_text(canonical + "\n")
        self._log_path(sid).touch()
        return sid

    def scenario_ids(self):
        return sorted(p.stem for p in (self.root / "scenarios").glob("*.json"))

    def _initial(self, sid) -> Scenario:
        path = self._doc_path(sid)
        if not path.exists():
            raise KeyError(f"unknown scenario {sid}")
        return scenario_from_mapping(json.loads(path.read_text()))

    def events(self, sid):
        path = self._log_path(sid)
        if not path.exists():
            return []
        out = []
        for line in path.read_text().splitlines():
            if line.strip():
                raw = json.loads(line)
                out.append(RestorationEvent(raw["kind"], raw["payload"],
                                            raw["timestamp"]))
        return out

    def scenario(self, sid) -> Scenario:
        """Current state: initial document + full event replay."""
        current = self._initial(sid)
        for event in self.events(sid):
            current = apply_event(current, event, self._resolve_scheme)
        return current

    def snapshot_document(self, sid) -> dict:
        return scenario_to_document(self.scenario(sid))

    def append_event(self, sid, kind: str, payload: dict) -> dict:
        if kind not in EVENT_KINDS:
            raise EventError(f"unknown event kind {kind!r}")
        event = RestorationEvent(kind, payload, time.time())
        with self._lock:
            current = self.scenario(sid)
            applied = apply_event(current, event, self._resolve_scheme)
            with self._log_path(sid).open("a") as fh:
                fh.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")
        return scenario_to_document(applied)

    def _resolve_scheme(self, payload):
        run_id = payload.get("run_id")
        idx = payload.get("scheme_index")
        if run_id is None or idx is None:
            raise EventError(
                "scheme_committed needs run_id and scheme_index")
        trace = self._traces.get(run_id)
        if trace is None:
            return None
        idx = int(idx)
        if not 1 <= idx <= len(trace.schemes):
            return None
        return trace.schemes[idx - 1]

    # -- runs ----------------------------------------------------------------
    def _solve_lock(self, sid):
        with self._lock:
            return self._solve_locks.setdefault(sid, threading.Lock())

    def start_run(self, sid, overrides: dict | None = None,
                  background: bool = True) -> str:
        self._initial(sid)  # raise early on unknown scenario
        run_id = uuid.uuid4().hex[:12]
        record = {
            "id": run_id, "scenario_id": sid, "status": "queued",
            "progress": {"iterations": 0, "incumbent_mvar": None,
                         "schemes_found": 0},
            "error": None, "report": None,
        }
        with self._lock:
            self._runs[run_id] = record
        if background:
            worker = threading.Thread(target=self._execute,
                                      args=(run_id, sid, overrides or {}),
                                      daemon=True)
            worker.start()
        else:
            self._execute(run_id, sid, overrides or {})
        return run_id

    def _execute(self, run_id, sid, overrides):
        record = self._runs[run_id]
        try:
            with self._solve_lock(sid):
                record["status"] = "running"
                scenario = self.scenario(sid)
                scenario = _apply_overrides(scenario, overrides)

                def progress(iteration, incumbent, found):
                    record["progress"] = {
                        "iterations": iteration,
                        "incumbent_mvar": incumbent,
                        "schemes_found": found,
                    }

                trace = pathsearch.iterate_schemes(
                    scenario,
                    check_voltage=not overrides.get("no_voltage_check", False),
                    progress=progress)
                ranking = evaluation.rank(trace.schemes, scenario)
                with self._lock:
                    self._traces[run_id] = trace
                record["report"] = build_report(trace, ranking)
                record["status"] = "done"
        except Exception as exc:  # surfaced through the run status
            record["error"] = f"{type(exc).__name__}: {exc}"
            record["status"] = "error"

    def run_info(self, run_id) -> dict:
        record = self._runs.get(run_id)
        if record is None:
            raise KeyError(f"unknown run {run_id}")
        return {"id": record["id"], "scenario_id": record["scenario_id"],
                "status": record["status"], "progress": record["progress"],
                "error": record["error"]}

    def run_report(self, run_id) -> dict | None:
        record = self._runs.get(run_id)
        if record is None:
            raise KeyError(f"unknown run {run_id}")
        return record["report"]


def _apply_overrides(scenario: Scenario, overrides: dict) -> Scenario:
    if "targets" in overrides and overrides["targets"] is not None:
        scenario = scenario.with_targets(overrides["targets"])
    params = scenario.params
    for field_name, key in (("m_s", "k"), ("d_max", "dmax"), ("k1", "k1"),
                            ("lam", "lambda")):
        if overrides.get(key) is not None:
            params = replace(params, **{field_name: overrides[key]})
    if overrides.get("weights") is not None:
        w = tuple(float(x) for x in overrides["weights"])
        if len(w) != 5 or abs(sum(w) - 1.0) > 1e-9:
            raise ScenarioError("weights must be 5 values summing to 1")
        params = replace(params, weights=w)
    return replace(scenario, params=params)


# ---------------------------------------------------------------------------
# HTTP app
# ---------------------------------------------------------------------------

def create_app(store: SessionStore):
    app = FastAPI(title="restopath", version="0.1.0")

    @app.post("/scenarios", status_code=201)
    async def post_scenario(request: Request):
        body = await request.body()
        try:
            sid = store.create_scenario(body.decode())
        except ScenarioError as exc:
            raise HTTPException(422, detail=str(exc))
        return {"id": sid}

    @app.get("/scenarios/{sid}")
    def get_scenario(sid: str):
        try:
            return store.snapshot_document(sid)
        except KeyError as exc:
            raise HTTPException(404, detail=str(exc))

    @app.post("/scenarios/{sid}/events")
    def post_event(sid: str, body: dict):
        kind = body.get("kind")
        payload = body.get("payload", {})
        try:
            return store.append_event(sid, kind, payload)
        except KeyError as exc:
            raise HTTPException(404, detail=str(exc))
        except (EventError, ScenarioError) as exc:
            raise HTTPException(422, detail=str(exc))

    @app.post("/scenarios/{sid}/solve", status_code=202)
    def post_solve(sid: str, body: dict | None = None):
        try:
            run_id = store.start_run(sid, body or {})
        except KeyError as exc:
            raise HTTPException(404, detail=str(exc))
        except ScenarioError as exc:
            raise HTTPException(422, detail=str(exc))
        return {"run_id": run_id}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        try:
            return store.run_info(run_id)
        except KeyError as exc:
            raise HTTPException(404, detail=str(exc))

    @app.get("/runs/{run_id}/ranking")
    def get_ranking(run_id: str):
        try:
            report = store.run_report(run_id)
        except KeyError as exc:
            raise HTTPException(404, detail=str(exc))
        if report is None:
            info = store.run_info(run_id)
            raise HTTPException(409, detail=f"run is {info['status']}")
        return Response(content=report_bytes(report),
                        media_type="application/json")

    return app


def serve(port: int, data_dir, host: str = "127.0.0.1"):
    import uvicorn

    store = SessionStore(data_dir)
    app = create_app(store)
    uvicorn.run(app, host=host, port=port, log_level="warning")
