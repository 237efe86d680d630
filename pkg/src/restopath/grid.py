"""Transmission-system domain model.

Scenario ingestion and persistence, island detection, and the
multi-island virtual-line transformation.  Networks and scenarios are
immutable after load; every state transition produces a new value, so
they are safe to share across concurrent solver runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

UNENERGIZED = "unenergized"
ENERGIZED = "energized"
FAILED = "failed"
VIRTUAL = "virtual"

BRANCH_STATUSES = (UNENERGIZED, ENERGIZED, FAILED, VIRTUAL)

DEFAULT_BASE_MVA = 100.0


class ScenarioError(ValueError):
    """Document parse failure or invariant violation."""


class UnsolvableScenarioError(ScenarioError):
    """No energized bus exists: nothing can source an energising path."""


@dataclass(frozen=True)
class Bus:
    id: int
    name: str = ""
    importance: float = 0.0        # dimensionless node weight
    important_load: float = 0.0    # MW of priority load at the station
    is_plant: bool = False
    load_mw: float = 0.0           # picked-up load, used by the flow check
    load_mvar: float = 0.0
    x: float | None = None         # optional one-line-diagram coordinates
    y: float | None = None


@dataclass(frozen=True)
class Branch:
    id: int
    from_bus: int
    to_bus: int
    charging_mvar: float = 0.0     # at 1.0 p.u., the path-selection weight
    series_r: float = 0.0
    series_x: float = 0.0001
    shunt_b: float = 0.0           # total line charging susceptance, p.u.
    is_transformer: bool = False
    breaker_count: int = 2
    status: str = UNENERGIZED

    @property
    def is_energized(self) -> bool:
        return self.status in (ENERGIZED, VIRTUAL)

    def touches(self, bus_id: int) -> bool:
        return bus_id in (self.from_bus, self.to_bus)

    def other(self, bus_id: int) -> int:
        return self.to_bus if bus_id == self.from_bus else self.from_bus


@dataclass(frozen=True)
class Generator:
    bus: int
    rated_mva: float
    q_absorb_max: float            # MVar the unit can absorb when unloaded
    is_blackstart: bool = False


@dataclass(frozen=True)
class RestorationState:
    energized_buses: frozenset
    failed_branches: frozenset


@dataclass(frozen=True)
class Params:
    d_max: int = 8                 # radial depth limit
    k1: float = 0.8                # reliability share of absorbable MVar
    m_s: int = 8                   # number of alternative schemes wanted
    lam: float = 0.5               # grey distinguishing coefficient
    weights: tuple = (0.2, 0.2, 0.2, 0.2, 0.2)
    alpha: float = 1.0             # load term weight inside the V3 index
    v_min: float = 0.90
    v_max: float = 1.10


@dataclass(frozen=True)
class PowerNetwork:
    buses: dict                    # id -> Bus
    branches: dict                 # id -> Branch
    generators: tuple
    base_mva: float = DEFAULT_BASE_MVA

    def branches_at(self, bus_id: int):
        return [br for br in self.branches.values() if br.touches(bus_id)]


@dataclass(frozen=True)
class Scenario:
    network: PowerNetwork
    state: RestorationState
    targets: frozenset
    supply_bus: int
    params: Params

    # -- functional updates (state transitions make new values) ------------

    def with_branch_status(self, branch_id: int, status: str) -> "Scenario":
        net = self.network
        if branch_id not in net.branches:
            raise ScenarioError(f"unknown branch {branch_id}")
        branches = dict(net.branches)
        branches[branch_id] = replace(branches[branch_id], status=status)
        failed = set(self.state.failed_branches)
        if status == FAILED:
            failed.add(branch_id)
        else:
            failed.discard(branch_id)
        return replace(
            self,
            network=replace(net, branches=branches),
            state=replace(self.state, failed_branches=frozenset(failed)),
        )

    def with_energized(self, branch_ids, bus_ids) -> "Scenario":
        net = self.network
        branches = dict(net.branches)
        for bid in branch_ids:
            if bid not in branches:
                raise ScenarioError(f"unknown branch {bid}")
            if branches[bid].status == FAILED:
                raise ScenarioError(f"branch {bid} is failed and cannot be energized")
            branches[bid] = replace(branches[bid], status=ENERGIZED)
        buses = set(self.state.energized_buses) | set(bus_ids)
        unknown = buses - set(net.buses)
        if unknown:
            raise ScenarioError(f"unknown bus {sorted(unknown)[0]}")
        return replace(
            self,
            network=replace(net, branches=branches),
            state=replace(self.state, energized_buses=frozenset(buses)),
        )

    def with_targets(self, targets) -> "Scenario":
        targets = frozenset(int(t) for t in targets)
        unknown = targets - set(self.network.buses)
        if unknown:
            raise ScenarioError(f"unknown target bus {sorted(unknown)[0]}")
        return replace(self, targets=targets)

    def unenergized_real_branches(self):
        """E_un: candidate lines for an energising path."""
        return [br for br in self.network.branches.values()
                if br.status == UNENERGIZED]

    def to_document(self) -> dict:
        return scenario_to_document(self)


# ---------------------------------------------------------------------------
# Document ingestion
# ---------------------------------------------------------------------------

def _get(obj, key, ctx, default=None, required=False):
    if key in obj:
        return obj[key]
    if required:
        raise ScenarioError(f"{ctx}: missing field {key!r}")
    return default


def _finite_nonneg(value, ctx):
    v = float(value)
    if not math.isfinite(v) or v < 0:
        raise ScenarioError(f"{ctx} must be finite and >= 0, got {value!r}")
    return v


def load_scenario(document: str) -> Scenario:
    """Parse and fully validate a scenario document (JSON text)."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return scenario_from_mapping(doc)


def scenario_from_mapping(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    base_mva = float(doc.get("base_mva", DEFAULT_BASE_MVA))

    buses = {}
    for raw in _get(doc, "buses", "document", required=True):
        ctx = f"bus {raw.get('id', '?')}"
        bid = int(_get(raw, "id", ctx, required=True))
        if bid in buses:
            raise ScenarioError(f"duplicate bus id {bid}")
        buses[bid] = Bus(
            id=bid,
            name=str(raw.get("name", f"bus {bid}")),
            importance=_finite_nonneg(raw.get("importance", 0.0),
                                      f"{ctx}: importance"),
            important_load=_finite_nonneg(raw.get("important_load", 0.0),
                                          f"{ctx}: important_load"),
            is_plant=bool(raw.get("is_plant", False)),
            load_mw=float(raw.get("load_mw", 0.0)),
            load_mvar=float(raw.get("load_mvar", 0.0)),
            x=raw.get("x"),
            y=raw.get("y"),
        )

    state_raw = _get(doc, "state", "document", default={})
    energized = frozenset(int(b) for b in state_raw.get("energized_buses", []))
    failed = frozenset(int(b) for b in state_raw.get("failed_branches", []))
    for b in energized:
        if b not in buses:
            raise ScenarioError(f"state: energized bus {b} does not exist")

    branches = {}
    for raw in _get(doc, "branches", "document", required=True):
        ctx = f"branch {raw.get('id', '?')}"
        bid = int(_get(raw, "id", ctx, required=True))
        if bid in branches:
            raise ScenarioError(f"duplicate branch id {bid}")
        fb = int(_get(raw, "from_bus", ctx, required=True))
        tb = int(_get(raw, "to_bus", ctx, required=True))
        if fb == tb:
            raise ScenarioError(f"{ctx}: from_bus equals to_bus")
        for b in (fb, tb):
            if b not in buses:
                raise ScenarioError(f"{ctx}: endpoint bus {b} does not exist")
        status = str(raw.get("status", UNENERGIZED))
        if status not in BRANCH_STATUSES:
            raise ScenarioError(f"{ctx}: unknown status {status!r}")
        if bid in failed:
            if status == ENERGIZED:
                raise ScenarioError(
                    f"{ctx}: failed branches are never energized")
            status = FAILED
        shunt_b = raw.get("shunt_b")
        charging = raw.get("charging_mvar")
        if charging is None and shunt_b is None:
            charging, shunt_b = 0.0, 0.0
        elif charging is None:
            charging = float(shunt_b) * base_mva  # at V = 1 p.u.
        elif shunt_b is None:
            shunt_b = float(charging) / base_mva
        else:
            derived = float(shunt_b) * base_mva
            scale = max(abs(float(charging)), abs(derived), 1e-12)
            if abs(float(charging) - derived) > 1e-6 * scale:
                raise ScenarioError(
                    f"{ctx}: charging_mvar {charging} inconsistent with "
                    f"shunt_b {shunt_b} (expected {derived:.6f} at 1 p.u.)")
        charging = _finite_nonneg(charging, f"{ctx}: charging_mvar")
        breaker_count = int(raw.get("breaker_count", 2))
        if breaker_count <= 0:
            raise ScenarioError(f"{ctx}: breaker_count must be positive")
        if status == VIRTUAL and charging != 0.0:
            raise ScenarioError(f"{ctx}: virtual branches carry no charging")
        branch = Branch(
            id=bid, from_bus=fb, to_bus=tb,
            charging_mvar=charging,
            series_r=float(raw.get("series_r", 0.0)),
            series_x=float(raw.get("series_x", 0.0001)),
            shunt_b=float(shunt_b),
            is_transformer=bool(raw.get("is_transformer", False)),
            breaker_count=breaker_count,
            status=status,
        )
        if branch.is_energized:
            for b in (fb, tb):
                if b not in energized:
                    raise ScenarioError(
                        f"{ctx}: energized branch endpoint {b} is not an "
                        f"energized bus")
        branches[bid] = branch

    generators = []
    for raw in _get(doc, "generators", "document", default=[]):
        ctx = f"generator at bus {raw.get('bus', '?')}"
        gbus = int(_get(raw, "bus", ctx, required=True))
        if gbus not in buses:
            raise ScenarioError(f"{ctx}: bus does not exist")
        rated = float(_get(raw, "rated_mva", ctx, required=True))
        if rated <= 0:
            raise ScenarioError(f"{ctx}: rated_mva must be positive")
        qmax = float(raw.get("q_absorb_max", 0.3 * rated))
        if qmax <= 0:
            raise ScenarioError(f"{ctx}: q_absorb_max must be positive")
        generators.append(Generator(gbus, rated, qmax,
                                    bool(raw.get("is_blackstart", False))))

    supply = int(_get(doc, "supply_bus", "document", required=True))
    if supply not in buses:
        raise ScenarioError(f"supply_bus {supply} does not exist")
    if supply not in energized:
        raise ScenarioError(f"supply_bus {supply} must be energized")

    targets = frozenset(int(t) for t in _get(doc, "targets", "document",
                                             default=[]))
    for t in targets:
        if t not in buses:
            raise ScenarioError(f"target bus {t} does not exist")
        if t in energized:
            raise ScenarioError(f"target bus {t} is already energized")

    p = _get(doc, "params", "document", default={})
    weights = tuple(float(w) for w in p.get("weights",
                                            (0.2, 0.2, 0.2, 0.2, 0.2)))
    if len(weights) != 5:
        raise ScenarioError("params: weights must have exactly 5 entries")
    if any(w < 0 for w in weights):
        raise ScenarioError("params: weights must be non-negative")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ScenarioError(f"params: weights must sum to 1, got {sum(weights)}")
    d_max = int(p.get("d_max", 8))
    m_s = int(p.get("m_s", 8))
    k1 = float(p.get("k1", 0.8))
    lam = float(p.get("lambda", 0.5))
    if d_max <= 0 or m_s <= 0:
        raise ScenarioError("params: d_max and m_s must be positive")
    if not 0 < k1 <= 1:
        raise ScenarioError("params: k1 must lie in (0, 1]")
    if not 0 < lam <= 1:
        raise ScenarioError("params: lambda must lie in (0, 1]")
    params = Params(
        d_max=d_max, k1=k1, m_s=m_s, lam=lam, weights=weights,
        alpha=_finite_nonneg(p.get("alpha", 1.0), "params: alpha"),
        v_min=float(p.get("v_min", 0.90)),
        v_max=float(p.get("v_max", 1.10)),
    )
    if params.v_min >= params.v_max:
        raise ScenarioError("params: v_min must be below v_max")

    network = PowerNetwork(buses=buses, branches=branches,
                           generators=tuple(generators), base_mva=base_mva)
    return Scenario(network=network,
                    state=RestorationState(energized, failed),
                    targets=targets, supply_bus=supply, params=params)


def scenario_to_document(scenario: Scenario) -> dict:
    net = scenario.network
    buses = []
    for bus in sorted(net.buses.values(), key=lambda b: b.id):
        entry = {
            "id": bus.id, "name": bus.name, "importance": bus.importance,
            "important_load": bus.important_load, "is_plant": bus.is_plant,
        }
        if bus.load_mw:
            entry["load_mw"] = bus.load_mw
        if bus.load_mvar:
            entry["load_mvar"] = bus.load_mvar
        if bus.x is not None:
            entry["x"] = bus.x
        if bus.y is not None:
            entry["y"] = bus.y
        buses.append(entry)
    branches = []
    for br in sorted(net.branches.values(), key=lambda b: b.id):
        branches.append({
            "id": br.id, "from_bus": br.from_bus, "to_bus": br.to_bus,
            "charging_mvar": br.charging_mvar, "series_r": br.series_r,
            "series_x": br.series_x, "shunt_b": br.shunt_b,
            "is_transformer": br.is_transformer,
            "breaker_count": br.breaker_count, "status": br.status,
        })
    generators = [{
        "bus": g.bus, "rated_mva": g.rated_mva,
        "q_absorb_max": g.q_absorb_max, "is_blackstart": g.is_blackstart,
    } for g in net.generators]
    p = scenario.params
    return {
        "base_mva": net.base_mva,
        "buses": buses,
        "branches": branches,
        "generators": generators,
        "state": {
            "energized_buses": sorted(scenario.state.energized_buses),
            "failed_branches": sorted(scenario.state.failed_branches),
        },
        "targets": sorted(scenario.targets),
        "supply_bus": scenario.supply_bus,
        "params": {
            "d_max": p.d_max, "k1": p.k1, "m_s": p.m_s, "lambda": p.lam,
            "weights": list(p.weights), "alpha": p.alpha,
            "v_min": p.v_min, "v_max": p.v_max,
        },
    }


# ---------------------------------------------------------------------------
# Islands
# ---------------------------------------------------------------------------

def compute_islands(scenario: Scenario) -> list:
    """Connected components of the energized subgraph, ordered by their
    smallest bus id.  Isolated energized buses form singleton islands."""
    energized = set(scenario.state.energized_buses)
    adj = {b: [] for b in energized}
    for br in scenario.network.branches.values():
        if br.is_energized and br.from_bus in energized \
                and br.to_bus in energized:
            adj[br.from_bus].append(br.to_bus)
            adj[br.to_bus].append(br.from_bus)
    islands = []
    seen = set()
    for start in sorted(energized):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            for nxt in adj[node]:
                if nxt not in comp:
                    comp.add(nxt)
                    stack.append(nxt)
        seen |= comp
        islands.append(comp)
    return islands


def transform_islands(scenario: Scenario) -> Scenario:
    """Join energized islands with zero-cost virtual lines, star-shaped
    around the island holding the supply bus.  Idempotent; a single-island
    scenario is returned unchanged."""
    islands = compute_islands(scenario)
    if not islands:
        raise UnsolvableScenarioError("no energized bus exists")
    if len(islands) == 1:
        return scenario
    supply_island = next(i for i in islands if scenario.supply_bus in i)
    branches = dict(scenario.network.branches)
    next_id = max(branches) + 1 if branches else 1
    for island in islands:
        if island is supply_island:
            continue
        rep = min(island)
        branches[next_id] = Branch(
            id=next_id, from_bus=scenario.supply_bus, to_bus=rep,
            charging_mvar=0.0, series_r=0.0, series_x=0.0001, shunt_b=0.0,
            is_transformer=False, breaker_count=2, status=VIRTUAL,
        )
        next_id += 1
    return replace(scenario,
                   network=replace(scenario.network, branches=branches))


def restored_zone(scenario: Scenario) -> set:
    """Buses of the island containing the supply bus."""
    for island in compute_islands(scenario):
        if scenario.supply_bus in island:
            return island
    raise UnsolvableScenarioError("supply bus is not energized")


def reactive_capability(scenario: Scenario) -> float:
    """MVar the restored zone can absorb: K1 x sum of unit limits over
    generators connected to the supply island.  No connected units -> 0."""
    zone = restored_zone(scenario)
    total = sum(g.q_absorb_max for g in scenario.network.generators
                if g.bus in zone)
    return scenario.params.k1 * total
