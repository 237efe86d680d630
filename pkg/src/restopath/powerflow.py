"""Steady-state AC power flow for the voltage security check.

Full Newton-Raphson in polar coordinates on the energized subnetwork.
Restoration-stage cases have one slack (the supply or a unit bus holding
the island) and PQ buses everywhere else; under light load the dominant
physics is the Ferranti rise on charged, open-ended lines, which is what
the voltage band check guards against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Scenario, VIRTUAL


@dataclass(frozen=True)
class PFBus:
    id: int
    kind: str = "pq"              # "slack" | "pq"
    p_load_mw: float = 0.0
    q_load_mvar: float = 0.0


@dataclass(frozen=True)
class PFBranch:
    from_bus: int
    to_bus: int
    series_r: float
    series_x: float
    shunt_b: float                # total; split half per end


@dataclass(frozen=True)
class PFCase:
    buses: tuple
    branches: tuple
    base_mva: float = 100.0
    slack_voltage: float = 1.0

    def slack_id(self):
        for b in self.buses:
            if b.kind == "slack":
                return b.id
        raise ValueError("case has no slack bus")


@dataclass
class PFResult:
    converged: bool
    iterations: int
    v_mag: dict
    v_ang: dict
    slack_q: float = 0.0          # MVar injected at the slack
    max_mismatch: float = math.inf


def build_ybus(case: PFCase, order):
    n = len(order)
    pos = {b: i for i, b in enumerate(order)}
    Y = np.zeros((n, n), complex)
    for br in case.branches:
        i, j = pos[br.from_bus], pos[br.to_bus]
        ys = 1.0 / complex(br.series_r, br.series_x)
        ysh = 1j * br.shunt_b / 2.0
        Y[i, i] += ys + ysh
        Y[j, j] += ys + ysh
        Y[i, j] -= ys
        Y[j, i] -= ys
    return Y


def _injections(case: PFCase, order):
    """Specified complex injections in p.u. (loads enter negative)."""
    s = np.zeros(len(order), complex)
    pos = {b: i for i, b in enumerate(order)}
    for bus in case.buses:
        s[pos[bus.id]] = -complex(bus.p_load_mw, bus.q_load_mvar) / case.base_mva
    return s


def newton_solve(case: PFCase, tolerance: float = 1e-8,
                 max_iterations: int = 50) -> PFResult:
    """Newton-Raphson from a flat start.  The converged flag is honest:
    divergence never yields a partial answer presented as converged."""
    order = sorted(b.id for b in case.buses)
    n = len(order)
    pos = {b: i for i, b in enumerate(order)}
    slack = pos[case.slack_id()]
    pq = [i for i in range(n) if i != slack]

    V = np.full(n, 1.0 + 0j)
    V[slack] = case.slack_voltage
    if not pq:
        return PFResult(True, 0, {order[0]: abs(V[0])}, {order[0]: 0.0},
                        slack_q=0.0, max_mismatch=0.0)

    Y = build_ybus(case, order)
    s_spec = _injections(case, order)
    vm = np.abs(V)
    va = np.angle(V)

    def mismatch(vm, va):
        Vc = vm * np.exp(1j * va)
        mis = Vc * np.conj(Y @ Vc) - s_spec
        return np.concatenate([mis[pq].real, mis[pq].imag]), Vc

    F, Vc = mismatch(vm, va)
    it = 0
    norm = float(np.abs(F).max(initial=0.0))
    while norm > tolerance and it < max_iterations:
        it += 1
        Ibus = Y @ Vc
        diagV = np.diag(Vc)
        diagI = np.diag(Ibus)
        diagVn = np.diag(Vc / np.abs(Vc))
        dS_dVa = 1j * diagV @ np.conj(diagI - Y @ diagV)
        dS_dVm = diagV @ np.conj(Y @ diagVn) + np.conj(diagI) @ diagVn
        J = np.block([
            [dS_dVa[np.ix_(pq, pq)].real, dS_dVm[np.ix_(pq, pq)].real],
            [dS_dVa[np.ix_(pq, pq)].imag, dS_dVm[np.ix_(pq, pq)].imag],
        ])
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return PFResult(False, it, _mag_map(order, vm),
                            _ang_map(order, va), max_mismatch=norm)
        k = len(pq)
        va[pq] += dx[:k]
        vm[pq] += dx[k:]
        if (vm <= 0).any() or not np.isfinite(vm).all() \
                or not np.isfinite(va).all():
            return PFResult(False, it, _mag_map(order, vm),
                            _ang_map(order, va), max_mismatch=math.inf)
        F, Vc = mismatch(vm, va)
        norm = float(np.abs(F).max(initial=0.0))

    converged = norm <= tolerance
    slack_s = Vc[slack] * np.conj((Y @ Vc)[slack])
    return PFResult(
        converged=converged,
        iterations=it,
        v_mag=_mag_map(order, vm),
        v_ang=_ang_map(order, va),
        slack_q=float(slack_s.imag) * case.base_mva,
        max_mismatch=norm,
    )


def _mag_map(order, vm):
    return {b: float(vm[i]) for i, b in enumerate(order)}


def _ang_map(order, va):
    return {b: float(va[i]) for i, b in enumerate(order)}


def check_voltage(result: PFResult, v_min: float, v_max: float):
    """Inclusive band check.  A non-converged flow fails outright with the
    pseudo-bus marker 'divergence'."""
    if not result.converged:
        return False, ["divergence"]
    bad = [b for b, v in sorted(result.v_mag.items())
           if v < v_min or v > v_max]
    return (len(bad) == 0), bad


# ---------------------------------------------------------------------------
# Cases from scenarios
# ---------------------------------------------------------------------------

def _energized_graph(scenario: Scenario, scheme_lines):
    """Buses and branches of the post-energisation network (restored zone
    plus scheme lines), virtual branches excluded."""
    net = scenario.network
    chosen = set(scheme_lines)
    branches = []
    buses = set(scenario.state.energized_buses)
    for br in net.branches.values():
        if br.status == VIRTUAL:
            continue
        if br.is_energized or br.id in chosen:
            branches.append(br)
            buses.add(br.from_bus)
            buses.add(br.to_bus)
    return buses, branches


def _components(buses, branches):
    adj = {b: [] for b in buses}
    for br in branches:
        adj[br.from_bus].append(br.to_bus)
        adj[br.to_bus].append(br.from_bus)
    comps = []
    seen = set()
    for start in sorted(buses):
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
        comps.append(comp)
    return comps


def _case_for(scenario, comp, branches, slack_voltage):
    gen_buses = {g.bus for g in scenario.network.generators}
    black = {g.bus for g in scenario.network.generators if g.is_blackstart}
    if scenario.supply_bus in comp:
        slack = scenario.supply_bus
    elif comp & black:
        slack = min(comp & black)
    elif comp & gen_buses:
        slack = min(comp & gen_buses)
    else:
        slack = min(comp)
    pf_buses = []
    for b in sorted(comp):
        bus = scenario.network.buses[b]
        pf_buses.append(PFBus(
            id=b, kind="slack" if b == slack else "pq",
            p_load_mw=bus.load_mw, q_load_mvar=bus.load_mvar,
        ))
    pf_branches = tuple(
        PFBranch(br.from_bus, br.to_bus, br.series_r, br.series_x, br.shunt_b)
        for br in branches if br.from_bus in comp and br.to_bus in comp)
    return PFCase(buses=tuple(pf_buses), branches=pf_branches,
                  base_mva=scenario.network.base_mva,
                  slack_voltage=slack_voltage)


def build_island_cases(scenario: Scenario, scheme_lines,
                       slack_voltage: float = 1.0):
    """One case per electrical component of zone + scheme.  With several
    pre-blackout islands the scheme may electrify disjoint components;
    each gets its own slack (supply bus, else a unit bus)."""
    buses, branches = _energized_graph(scenario, scheme_lines)
    if not buses:
        raise ValueError("nothing is energized")
    return [_case_for(scenario, comp, branches, slack_voltage)
            for comp in _components(buses, branches)]


def build_energized_case(scenario: Scenario, scheme_lines,
                         slack_voltage: float = 1.0) -> PFCase:
    """The component containing the supply bus (the common single-island
    situation yields exactly one component)."""
    for case in build_island_cases(scenario, scheme_lines, slack_voltage):
        if any(b.id == scenario.supply_bus for b in case.buses):
            return case
    raise ValueError("supply bus is not part of the energized network")


def scheme_voltage_check(scenario: Scenario, scheme_lines,
                         tolerance: float = 1e-8):
    """Run the flow on every component touched by the scheme and apply the
    voltage band.  Returns (ok, detail list)."""
    p = scenario.params
    problems = []
    for case in build_island_cases(scenario, scheme_lines):
        if len(case.buses) == 1 and not case.branches:
            continue  # bare island bus: nothing to check
        result = newton_solve(case, tolerance=tolerance)
        ok, bad = check_voltage(result, p.v_min, p.v_max)
        if not ok:
            problems.extend(bad)
    return (len(problems) == 0), problems
