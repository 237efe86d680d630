"""Energising-path enumeration.

Builds the single-commodity fixed-charge flow model whose integer optima
are minimum-charging Steiner trees joining the restored zone to the
target buses, then repeatedly re-solves it under exclusion cuts to
produce the K best alternative schemes.  The non-linear feasibility
screens (radial depth, absorbable reactive power, voltage band via AC
power flow) run on every scheme after extraction; failing schemes are
recorded as invalid and still count toward the requested number, so the
trace mirrors what a dispatcher would be shown.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from . import milp
from .grid import Scenario, UNENERGIZED, transform_islands, \
    reactive_capability
from .powerflow import scheme_voltage_check

ZONE = "zone"  # contracted restored-zone node in depth/tree computations

# Zero-charging candidate lines (transformers) would make supersets of an
# optimum cost-neutral, flooding the enumeration with non-tree artifacts;
# this nominal selection cost breaks those ties toward minimal trees while
# staying far below any real MVar difference in the data.
TIE_EPS = 1e-6


class UnreachableTargetError(ValueError):
    """A target bus cannot be reached through non-failed branches."""


class ReactiveLimitWarning(UserWarning):
    """The very first (cheapest) scheme already exceeds the absorbable
    reactive power: the target nodes should be adjusted."""


@dataclass(frozen=True)
class Violation:
    kind: str     # "non_tree" | "depth" | "reactive" | "voltage"
    detail: str


@dataclass(frozen=True)
class Scheme:
    lines: tuple                  # E_S, branch ids ascending
    objective_mvar: float
    flows: dict                   # branch id -> signed flow (from->to positive)
    depth_per_target: dict        # target bus -> line count from the zone
    max_depth: int
    valid: bool
    violations: tuple = ()

    def to_dict(self):
        return {
            "lines": list(self.lines),
            "objective_mvar": self.objective_mvar,
            "flows": {str(k): v for k, v in sorted(self.flows.items())},
            "depth_per_target": {str(k): v for k, v
                                 in sorted(self.depth_per_target.items())},
            "max_depth": self.max_depth,
            "valid": self.valid,
            "violations": [{"kind": v.kind, "detail": v.detail}
                           for v in self.violations],
        }


@dataclass(frozen=True)
class SearchTrace:
    schemes: tuple
    iterations: int
    terminated_by: str            # found_m_s | infeasible | node_limit | cancelled

    def to_dict(self):
        return {
            "schemes": [s.to_dict() for s in self.schemes],
            "iterations": self.iterations,
            "terminated_by": self.terminated_by,
        }


def trace_from_dict(doc: dict) -> SearchTrace:
    schemes = []
    for raw in doc.get("schemes", []):
        schemes.append(Scheme(
            lines=tuple(int(b) for b in raw["lines"]),
            objective_mvar=float(raw["objective_mvar"]),
            flows={int(k): float(v) for k, v in raw.get("flows", {}).items()},
            depth_per_target={int(k): int(v) for k, v
                              in raw.get("depth_per_target", {}).items()},
            max_depth=int(raw.get("max_depth", 0)),
            valid=bool(raw["valid"]),
            violations=tuple(Violation(v["kind"], v.get("detail", ""))
                             for v in raw.get("violations", [])),
        ))
    return SearchTrace(tuple(schemes), int(doc.get("iterations", len(schemes))),
                       str(doc.get("terminated_by", "found_m_s")))


@dataclass(frozen=True)
class PathModel:
    problem: milp.MilpProblem
    arc_map: dict                 # branch id -> (z, y_forward, y_backward)
    demand: dict                  # bus id -> b_i
    big_u: int
    candidate_lines: tuple        # E_un inside the model, ascending ids


# ---------------------------------------------------------------------------
# Model construction
# ---------------------------------------------------------------------------

def reachable_from_supply(scenario: Scenario):
    """Buses reachable from the supply over non-failed branches."""
    adj = {}
    for br in scenario.network.branches.values():
        if br.status == "failed":
            continue
        adj.setdefault(br.from_bus, []).append(br.to_bus)
        adj.setdefault(br.to_bus, []).append(br.from_bus)
    seen = {scenario.supply_bus}
    stack = [scenario.supply_bus]
    while stack:
        node = stack.pop()
        for nxt in adj.get(node, []):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def active_targets(scenario: Scenario):
    """Targets still outside the restored zone."""
    return sorted(set(scenario.targets) - set(scenario.state.energized_buses))


def build_path_model(scenario: Scenario) -> PathModel:
    """Fixed-charge network flow over the non-failed grid.

    One binary per undirected branch and a flow variable per direction.
    Unenergized branches pay their charging MVar when selected and must
    carry flow when selected (no zero-flow picks); energized and virtual
    branches move flow freely at zero cost.
    """
    targets = active_targets(scenario)
    if not targets:
        raise ValueError("no unenergized targets to connect")
    reach = reachable_from_supply(scenario)
    missing = [t for t in targets if t not in reach]
    if missing:
        raise UnreachableTargetError(
            f"targets unreachable through non-failed branches: {missing}")

    big_u = len(targets)
    variables = []
    constraints = []
    objective = {}
    arc_map = {}
    candidates = []
    flow_at = {}   # bus -> list of (name, sign) terms for conservation

    for br in sorted(scenario.network.branches.values(), key=lambda b: b.id):
        if br.status == "failed":
            continue
        if br.from_bus not in reach or br.to_bus not in reach:
            continue
        z = f"z_{br.id}"
        yf = f"yf_{br.id}"
        yb = f"yb_{br.id}"
        arc_map[br.id] = (z, yf, yb)
        selectable = br.status == UNENERGIZED
        if selectable:
            variables.append(milp.Variable(z, "binary"))
            objective[z] = br.charging_mvar if br.charging_mvar > 0 \
                else TIE_EPS
            candidates.append(br.id)
        else:
            variables.append(milp.Variable(z, "binary", lower=1.0, upper=1.0))
        variables.append(milp.Variable(yf))
        variables.append(milp.Variable(yb))
        constraints.append(milp.Constraint(
            {yf: 1.0, yb: 1.0, z: -float(big_u)}, "<=", 0.0))
        if selectable:  # a selected line must carry flow
            constraints.append(milp.Constraint(
                {z: 1.0, yf: -1.0, yb: -1.0}, "<=", 0.0))
        flow_at.setdefault(br.from_bus, []).append((yf, -1.0))
        flow_at.setdefault(br.from_bus, []).append((yb, +1.0))
        flow_at.setdefault(br.to_bus, []).append((yf, +1.0))
        flow_at.setdefault(br.to_bus, []).append((yb, -1.0))

    demand = {t: 1.0 for t in targets}
    demand[scenario.supply_bus] = -float(len(targets))
    for bus in sorted(reach):
        coefs = {}
        for name, sign in flow_at.get(bus, []):
            coefs[name] = coefs.get(name, 0.0) + sign
        constraints.append(milp.Constraint(coefs, "=", demand.get(bus, 0.0)))

    problem = milp.make_problem(variables, constraints, objective)
    return PathModel(problem=problem, arc_map=arc_map, demand=demand,
                     big_u=big_u, candidate_lines=tuple(candidates))


def _lines_of(scheme):
    return tuple(scheme.lines) if isinstance(scheme, Scheme) else tuple(scheme)


def add_exclusion_cut(model: PathModel, scheme) -> PathModel:
    """Forbid every solution that keeps all lines of the scheme (supersets
    included); anything dropping at least one line stays feasible."""
    lines = _lines_of(scheme)
    if not lines:
        raise ValueError("empty line set")
    coefs = {model.arc_map[b][0]: 1.0 for b in lines}
    cut = milp.Constraint(coefs, "<=", float(len(lines) - 1))
    return replace(model, problem=model.problem.add_constraint(cut))


def add_naive_cut(model: PathModel, scheme) -> PathModel:
    """The textbook no-good cut: excludes only the exact line combination,
    so supersets with a spare line or a loop stay feasible.  Kept for
    demonstrating why the exclusion cut is required."""
    lines = _lines_of(scheme)
    if not lines:
        raise ValueError("empty line set")
    chosen = set(lines)
    coefs = {}
    rhs = 1.0 - len(chosen)
    for b in model.candidate_lines:
        coefs[model.arc_map[b][0]] = -1.0 if b in chosen else 1.0
    cut = milp.Constraint(coefs, ">=", rhs)
    return replace(model, problem=model.problem.add_constraint(cut))


# ---------------------------------------------------------------------------
# Scheme geometry
# ---------------------------------------------------------------------------

def _contracted_graph(lines, scenario):
    """Scheme lines with every restored-zone endpoint merged into ZONE."""
    zone = set(scenario.state.energized_buses)
    edges = []
    for bid in lines:
        br = scenario.network.branches[bid]
        a = ZONE if br.from_bus in zone else br.from_bus
        b = ZONE if br.to_bus in zone else br.to_bus
        edges.append((a, b, bid))
    nodes = {ZONE}
    for a, b, _ in edges:
        nodes.add(a)
        nodes.add(b)
    return nodes, edges


def is_tree(lines, scenario) -> bool:
    """True when the scheme, with the zone contracted to one node, is a
    connected acyclic subgraph reaching every target."""
    targets = active_targets(scenario)
    if not lines:
        return not targets
    nodes, edges = _contracted_graph(lines, scenario)
    adj = {n: [] for n in nodes}
    for a, b, _ in edges:
        if a == b:
            return False  # self-loop after contraction
        adj[a].append(b)
        adj[b].append(a)
    seen = {ZONE}
    stack = [ZONE]
    while stack:
        node = stack.pop()
        for nxt in adj[node]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    if seen != nodes:
        return False
    if any(t not in seen for t in targets):
        return False
    return len(edges) == len(nodes) - 1


def radial_depth(scheme, scenario):
    """Unenergized-line count along the path from the zone to each target
    (energized and virtual branches count zero).  Returns
    (max_depth, depth_per_target)."""
    lines = _lines_of(scheme)
    targets = active_targets(scenario)
    if not targets:
        return 0, {}
    nodes, edges = _contracted_graph(lines, scenario)
    adj = {n: [] for n in nodes}
    for a, b, _ in edges:
        if a != b:
            adj[a].append(b)
            adj[b].append(a)
    depth = {ZONE: 0}
    frontier = [ZONE]
    while frontier:
        nxt_frontier = []
        for node in frontier:
            for nxt in adj[node]:
                if nxt not in depth:
                    depth[nxt] = depth[node] + 1
                    nxt_frontier.append(nxt)
        frontier = nxt_frontier
    missing = [t for t in targets if t not in depth]
    if missing:
        raise ValueError(f"scheme does not connect targets {missing}")
    per_target = {t: depth[t] for t in targets}
    return max(per_target.values()), per_target


# ---------------------------------------------------------------------------
# Iterative enumeration
# ---------------------------------------------------------------------------

def _extract_scheme(model, solution, scenario, checks):
    lines = tuple(b for b in model.candidate_lines
                  if solution.values[model.arc_map[b][0]] > 0.5)
    flows = {}
    for bid, (_, yf, yb) in model.arc_map.items():
        f = solution.values[yf] - solution.values[yb]
        if abs(f) > 1e-9:
            flows[bid] = f
    objective = math.fsum(scenario.network.branches[b].charging_mvar
                          for b in lines)
    tie_part = TIE_EPS * sum(
        1 for b in lines if scenario.network.branches[b].charging_mvar <= 0)
    if abs(objective + tie_part - solution.objective_value) > 1e-6:
        raise RuntimeError(
            f"solver objective {solution.objective_value} disagrees with "
            f"line data sum {objective}")

    violations = []
    tree = is_tree(lines, scenario)
    if not tree:
        violations.append(Violation("non_tree",
                                    "scheme is not a tree joining the zone "
                                    "to every target"))
    try:
        max_depth, per_target = radial_depth(lines, scenario)
    except ValueError:
        max_depth, per_target = 0, {}
    p = scenario.params
    if checks["depth"] and tree and max_depth > p.d_max:
        violations.append(Violation(
            "depth", f"radial depth {max_depth} exceeds limit {p.d_max}"))
    if checks["reactive"]:
        limit = checks["reactive_limit"]
        if not objective < limit:  # strict inequality per the constraint
            violations.append(Violation(
                "reactive",
                f"charging {objective:.2f} MVar not below limit {limit:.2f}"))
    if checks["voltage"] and tree:
        ok, bad = scheme_voltage_check(scenario, lines)
        if not ok:
            violations.append(Violation(
                "voltage", "voltage band violated at: "
                + ", ".join(str(b) for b in bad)))
    return Scheme(
        lines=lines,
        objective_mvar=objective,
        flows=flows,
        depth_per_target=per_target,
        max_depth=max_depth,
        valid=not violations,
        violations=tuple(violations),
    )


def iterate_schemes(scenario: Scenario, *, m_s: int | None = None,
                    check_depth: bool = True, check_reactive: bool = True,
                    check_voltage: bool = True, node_limit: int = None,
                    progress=None, should_stop=None) -> SearchTrace:
    """K-best enumeration: solve, screen, cut, repeat.

    Stops after m_s schemes, on model infeasibility, or on the solver's
    node limit.  Invalid schemes count toward m_s.  `progress` is called
    as progress(iteration, incumbent_mvar, schemes_found) after every
    solve; `should_stop()` is polled between iterations for cooperative
    cancellation.
    """
    scenario = transform_islands(scenario)
    wanted = scenario.params.m_s if m_s is None else int(m_s)
    if wanted < 1:
        raise ValueError("m_s must be at least 1")

    if not active_targets(scenario):
        empty = Scheme(lines=(), objective_mvar=0.0, flows={},
                       depth_per_target={}, max_depth=0, valid=True)
        return SearchTrace((empty,), 1, "found_m_s")

    checks = {
        "depth": check_depth,
        "reactive": check_reactive,
        "voltage": check_voltage,
        "reactive_limit": reactive_capability(scenario) if check_reactive
        else math.inf,
    }
    model = build_path_model(scenario)
    limit = milp.DEFAULT_NODE_LIMIT if node_limit is None else node_limit

    schemes = []
    iterations = 0
    terminated_by = "found_m_s"
    while len(schemes) < wanted:
        if should_stop is not None and should_stop():
            terminated_by = "cancelled"
            break
        solution = milp.solve_milp(model.problem, node_limit=limit)
        iterations += 1
        if solution.status == milp.INFEASIBLE:
            terminated_by = "infeasible"
            break
        if solution.status == milp.NODE_LIMIT:
            terminated_by = "node_limit"
            break
        if solution.status != milp.OPTIMAL:
            raise RuntimeError(f"solver failure: {solution.status}")
        scheme = _extract_scheme(model, solution, scenario, checks)
        schemes.append(scheme)
        if iterations == 1 and any(v.kind == "reactive"
                                   for v in scheme.violations):
            warnings.warn(
                "the cheapest scheme already violates the reactive power "
                "constraint; the target nodes should be adjusted",
                ReactiveLimitWarning, stacklevel=2)
        if progress is not None:
            progress(iterations, scheme.objective_mvar, len(schemes))
        if len(schemes) >= wanted:
            break
        if not scheme.lines:  # degenerate: nothing left to exclude
            break
        model = add_exclusion_cut(model, scheme)
    return SearchTrace(tuple(schemes), iterations, terminated_by)


def single_target_path(scenario: Scenario, **kwargs) -> SearchTrace:
    """Shortest-path degeneration: with one target the enumeration behaves
    as a K-shortest-paths search on the charging weights."""
    if len(active_targets(scenario)) > 1:
        raise ValueError("single_target_path expects exactly one target")
    return iterate_schemes(scenario, **kwargs)
