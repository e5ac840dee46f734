"""Discrete-event simulation of two (or more) servers under time-varying
contention, comparing three request-routing policies.

Each server is FIFO and runs one request at a time. A request's execution
time is fixed by the ground-truth model applied to the contention in force
when it starts service (later contention changes do not retroactively
alter it). The prediction-based policy consults a predictor that may
differ from ground truth, which makes the cost of model error observable;
its routing decisions also charge a per-request profiling overhead to the
reported turnaround, since in reality the probes must run before routing.

Policies:

* alternate   -- strictly by request ordinal (even -> 0, odd -> 1, ...)
* queue       -- fewest queued+running requests, ties to the lowest index
* predictive  -- smallest estimated completion time (predicted remaining
                 work ahead plus the new request), ties to the lowest index
"""

import heapq
import json
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import HorizonExceeded, IoFailure, ParseFailure
from .modelio import PredictiveModel, model_from_payload, model_payload, predict
from .profiler import ContentionVector

POLICIES = ("alternate", "queue", "predictive")

DEFAULT_PROFILING_COST = 9.0   # three 3 s probe windows

HOUR = 3600.0

#: requests/hour per 4-hour window: rises 12 -> 24, holds, falls back to 12
HIGH_LOAD_LADDER = (12, 16, 20) + (24,) * 12 + (20, 16, 12)
WINDOW_HOURS = 4.0


@dataclass(frozen=True)
class Request:
    id: int
    arrival: float


@dataclass(frozen=True)
class ServerTrace:
    """Contention schedule for one server plus the model mapping contention
    to per-request execution seconds (the simulator's ground truth) and the
    predictor the predictive policy consults (defaults to ground truth)."""
    schedule: Tuple[Tuple[float, ContentionVector], ...]
    model: PredictiveModel
    horizon: float
    predictor: Optional[PredictiveModel] = None

    def __post_init__(self):
        if not self.schedule or self.schedule[0][0] != 0.0:
            raise ValueError("schedule needs a breakpoint at t=0")
        times = [t for t, _ in self.schedule]
        if times != sorted(times):
            raise ValueError("schedule breakpoints must be time-ordered")
        if not (self.horizon > 0):
            raise ValueError(f"horizon must be > 0, got {self.horizon}")

    def contention_at(self, t: float) -> ContentionVector:
        current = self.schedule[0][1]
        for bp_t, vec in self.schedule:
            if bp_t <= t:
                current = vec
            else:
                break
        return current

    @property
    def effective_predictor(self) -> PredictiveModel:
        return self.predictor if self.predictor is not None else self.model


@dataclass(frozen=True)
class ServerView:
    """What a routing policy may look at for one server."""
    queue_length: int                 # queued + running
    estimated_completion: float       # predictive policy's estimate


@dataclass(frozen=True)
class BalanceReport:
    policy: str
    mean_turnaround: float
    mean_execution: float
    per_request: Tuple[Tuple[int, int, float, float], ...]  # (id, server, start, end)


def route(policy: str, views: Sequence[ServerView], ordinal: int) -> int:
    """Pick a server index for the request with the given arrival ordinal."""
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}, got {policy!r}")
    if len(views) < 2:
        raise ValueError("need at least 2 servers")
    if policy == "alternate":
        return ordinal % len(views)
    if policy == "queue":
        lengths = [v.queue_length for v in views]
        return lengths.index(min(lengths))
    estimates = [v.estimated_completion for v in views]
    return estimates.index(min(estimates))


def gen_workload(seed: int, high_load: bool = True) -> Tuple[Request, ...]:
    """Poisson arrivals whose rate steps through the 18-window ladder over
    72 simulated hours; the low-load variant halves every rung."""
    rng = np.random.default_rng(seed)
    requests: List[Request] = []
    window_start = 0.0
    for rate_per_hour in HIGH_LOAD_LADDER:
        if not high_load:
            rate_per_hour /= 2.0
        rate = rate_per_hour / HOUR
        window_end = window_start + WINDOW_HOURS * HOUR
        t = window_start
        while True:
            t += rng.exponential(1.0 / rate)
            if t >= window_end:
                break
            requests.append(Request(id=len(requests), arrival=t))
        window_start = window_end
    return tuple(requests)


class _Server:
    __slots__ = ("trace", "queue", "running_end", "running_exec", "running_request")

    def __init__(self, trace: ServerTrace):
        self.trace = trace
        self.queue: List[Request] = []
        self.running_end: Optional[float] = None
        self.running_exec = 0.0
        self.running_request: Optional[Request] = None

    @property
    def busy(self) -> bool:
        return self.running_request is not None

    def load(self) -> int:
        return len(self.queue) + (1 if self.busy else 0)


def simulate(workload: Sequence[Request], traces: Sequence[ServerTrace],
             policy: str, profiling_cost: float = DEFAULT_PROFILING_COST) -> BalanceReport:
    """Run the event-driven simulation and aggregate turnaround/execution."""
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}, got {policy!r}")
    if len(traces) < 2:
        raise ValueError("need at least 2 server traces")
    servers = [_Server(t) for t in traces]
    log: List[Tuple[int, int, float, float]] = []
    turnarounds: List[float] = []
    executions: List[float] = []

    # event heap: (time, priority, seq, kind, payload); completions sort
    # before arrivals at equal times so a finishing server is seen idle
    heap: List[tuple] = []
    seq = 0
    for r in workload:
        heapq.heappush(heap, (r.arrival, 1, seq, "arrival", r))
        seq += 1

    def start_service(s_idx: int, req: Request, now: float):
        server = servers[s_idx]
        vec = server.trace.contention_at(now)
        exec_s = predict(server.trace.model, vec)
        end = now + exec_s
        if end > server.trace.horizon:
            raise HorizonExceeded(
                f"server {s_idx} trace ends at {server.trace.horizon}s but request "
                f"{req.id} would complete at {end:.1f}s")
        server.running_request = req
        server.running_exec = exec_s
        server.running_end = end
        nonlocal seq
        heapq.heappush(heap, (end, 0, seq, "complete", s_idx))
        seq += 1

    def estimated_completion(s_idx: int, now: float) -> float:
        server = servers[s_idx]
        vec = server.trace.contention_at(now)
        per_request = predict(server.trace.effective_predictor, vec)
        total = per_request  # the new request itself
        if server.busy:
            elapsed = server.running_exec - (server.running_end - now)
            total += max(per_request - elapsed, 0.0)
        total += per_request * len(server.queue)
        return total

    ordinal = 0
    while heap:
        now, _, _, kind, payload = heapq.heappop(heap)
        if kind == "complete":
            s_idx = payload
            server = servers[s_idx]
            req = server.running_request
            log.append((req.id, s_idx, server.running_end - server.running_exec,
                        server.running_end))
            exec_s = server.running_exec
            turnaround = server.running_end - req.arrival
            if policy == "predictive":
                turnaround += profiling_cost
            executions.append(exec_s)
            turnarounds.append(turnaround)
            server.running_request = None
            server.running_end = None
            server.running_exec = 0.0
            if server.queue:
                start_service(s_idx, server.queue.pop(0), now)
        else:
            req = payload
            if policy == "alternate":
                views = [ServerView(0, 0.0)] * len(servers)
            elif policy == "queue":
                views = [ServerView(s.load(), 0.0) for s in servers]
            else:
                views = [ServerView(s.load(), estimated_completion(i, now))
                         for i, s in enumerate(servers)]
            s_idx = route(policy, views, ordinal)
            ordinal += 1
            server = servers[s_idx]
            if server.busy:
                server.queue.append(req)
            else:
                start_service(s_idx, req, now)

    return BalanceReport(
        policy=policy,
        mean_turnaround=float(np.mean(turnarounds)) if turnarounds else 0.0,
        mean_execution=float(np.mean(executions)) if executions else 0.0,
        per_request=tuple(sorted(log)))


def report_csv(report: BalanceReport) -> str:
    lines = [f"policy,{report.policy}",
             f"mean_turnaround_s,{report.mean_turnaround!r}",
             f"mean_execution_s,{report.mean_execution!r}",
             "id,server,start_s,end_s"]
    for rid, s_idx, start, end in report.per_request:
        lines.append(f"{rid},{s_idx},{start!r},{end!r}")
    return "\n".join(lines) + "\n"


# --- scenario files -----------------------------------------------------------

def _vector_payload(v: ContentionVector) -> dict:
    return {"c_cpu": v.c_cpu, "c_mem": v.c_mem, "c_disk": v.c_disk,
            "window": v.window, "taken_at": v.taken_at}


def _vector_from(d: dict) -> ContentionVector:
    return ContentionVector(c_cpu=d["c_cpu"], c_mem=d["c_mem"], c_disk=d["c_disk"],
                            window=d["window"], taken_at=d.get("taken_at", 0.0))


def scenario_payload(traces: Sequence[ServerTrace], policy: str, seed: int,
                     high_load: bool, profiling_cost: float) -> dict:
    doc = {"format": "probecast-scenario", "version": 1,
           "policy": policy, "workload": {"seed": seed, "high_load": high_load},
           "profiling_cost": profiling_cost, "servers": []}
    for tr in traces:
        entry = {
            "horizon": tr.horizon,
            "schedule": [[t, _vector_payload(v)] for t, v in tr.schedule],
            "model": model_payload(tr.model),
        }
        if tr.predictor is not None:
            entry["predictor"] = model_payload(tr.predictor)
        doc["servers"].append(entry)
    return doc


def parse_scenario(doc: dict):
    """-> (traces, policy, seed, high_load, profiling_cost)"""
    try:
        if doc.get("format") != "probecast-scenario" or doc.get("version") != 1:
            raise ParseFailure("not a probecast-scenario v1 document")
        traces = []
        for entry in doc["servers"]:
            schedule = tuple((float(t), _vector_from(v)) for t, v in entry["schedule"])
            predictor = (model_from_payload(entry["predictor"])
                         if "predictor" in entry else None)
            traces.append(ServerTrace(
                schedule=schedule, model=model_from_payload(entry["model"]),
                horizon=float(entry["horizon"]), predictor=predictor))
        wl = doc["workload"]
        return (tuple(traces), doc["policy"], int(wl["seed"]), bool(wl["high_load"]),
                float(doc.get("profiling_cost", DEFAULT_PROFILING_COST)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseFailure(f"malformed scenario: {exc}") from exc


def save_scenario(path, traces, policy, seed, high_load, profiling_cost) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(scenario_payload(traces, policy, seed, high_load, profiling_cost),
                      f, indent=1)
            f.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_scenario(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseFailure(f"invalid JSON in {path}: {exc}") from exc
    return parse_scenario(doc)


# --- built-in asymmetric-contention scenario -----------------------------------

def asymmetric_scenario(horizon_hours: float = 96.0):
    """Two servers with strongly asymmetric contention at all times; which
    one is contended swaps every 12 hours (interfering neighbors come and
    go per host), with smaller steps every 2 hours."""
    from .features import Standardizer
    from .linear import LinearHyperparameters, LinearModel

    standardizer = Standardizer(means=(6e8, 2e8, 1.5e5), stds=(2e8, 8e7, 6e4))
    ground = LinearModel(
        trainer="ridge",
        weights=(-80.0, -20.0, -10.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        intercept=230.0, standardizer=standardizer,
        hyperparameters=LinearHyperparameters(alpha=0.0, l1_ratio=0.0))
    model = PredictiveModel(kind="ridge", model=ground, n_samples=0, trained_at=None)

    def vec(z_cpu: float, z_mem: float, t: float) -> ContentionVector:
        return ContentionVector(
            c_cpu=int(6e8 + z_cpu * 2e8), c_mem=int(2e8 + z_mem * 8e7),
            c_disk=int(1.5e5), window=3.0, taken_at=t)

    horizon = horizon_hours * HOUR
    sched0 = []
    sched1 = []
    for k, t in enumerate(np.arange(0.0, 72.0 * HOUR, 2.0 * HOUR)):
        contended = -1.0 if k % 2 == 0 else -1.4   # execution ~ 320..360 s
        idle = 1.2 if k % 3 else 0.6               # execution ~ 120..180 s
        if (k // 6) % 2 == 0:                      # swap roles every 12 h
            z0, z1 = contended, idle
        else:
            z0, z1 = idle, contended
        sched0.append((float(t), vec(z0, z0 / 2.0, t)))
        sched1.append((float(t), vec(z1, z1 / 2.0, t)))
    trace0 = ServerTrace(schedule=tuple(sched0), model=model, horizon=horizon)
    trace1 = ServerTrace(schedule=tuple(sched1), model=model, horizon=horizon)
    return (trace0, trace1)
