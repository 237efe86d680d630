import type { BranchStatus, Report, ScenarioDoc, Violation } from "./types.js";

export interface NodeView {
  id: number;
  name: string;
  x: number;
  y: number;
  energized: boolean;
  isSupply: boolean;
  isTarget: boolean;
  isPlant: boolean;
}

export interface EdgeView {
  id: number;
  from: number;
  to: number;
  status: BranchStatus;
  highlighted: boolean;
  chargingMvar: number;
}

export interface RankingRow {
  scheme: number; // discovery number, 1-based
  lines: number[];
  v: number[]; // the five indices as served
  u: number; // service value, displayed verbatim
  mvar: number;
  valid: boolean;
  violations: Violation[];
}

export interface ViewModel {
  nodes: NodeView[];
  edges: EdgeView[];
  rows: RankingRow[];
  bestScheme: number | null;
}

/** Diagram coordinates: take the scenario's x/y when present, otherwise
 * fall back to a deterministic circle layout. */
export function layoutPositions(doc: ScenarioDoc): Map<number, { x: number; y: number }> {
  const pos = new Map<number, { x: number; y: number }>();
  const missing = doc.buses.filter((b) => b.x === undefined || b.y === undefined);
  for (const bus of doc.buses) {
    if (bus.x !== undefined && bus.y !== undefined) {
      pos.set(bus.id, { x: bus.x, y: bus.y });
    }
  }
  missing.forEach((bus, i) => {
    const angle = (2 * Math.PI * i) / Math.max(missing.length, 1);
    pos.set(bus.id, { x: 12 * Math.cos(angle), y: 12 * Math.sin(angle) });
  });
  return pos;
}

/** Ranking table rows in the order the service ranked them (u descending);
 * schemes outside the ranking (invalid) follow in discovery order. */
export function rankingRows(report: Report): RankingRow[] {
  const { trace, ranking } = report;
  const uByScheme = new Map<number, number>();
  const vByScheme = new Map<number, number[]>();
  ranking.scheme_ids.forEach((sid, k) => {
    uByScheme.set(sid, ranking.u[k]);
    vByScheme.set(sid, ranking.indices[k]);
  });
  const rows: RankingRow[] = [];
  const push = (sid: number) => {
    const scheme = trace.schemes[sid - 1];
    rows.push({
      scheme: sid,
      lines: [...scheme.lines],
      v: vByScheme.get(sid) ?? [],
      u: uByScheme.get(sid) ?? NaN,
      mvar: scheme.objective_mvar,
      valid: scheme.valid,
      violations: scheme.violations,
    });
  };
  ranking.order.forEach(push);
  trace.schemes.forEach((s, i) => {
    if (!uByScheme.has(i + 1)) push(i + 1);
  });
  return rows;
}

/** Edge ids a hovered/selected scheme highlights: exactly its line set. */
export function schemeHighlight(report: Report | null, scheme: number | null): Set<number> {
  if (!report || scheme === null) return new Set();
  const doc = report.trace.schemes[scheme - 1];
  return doc ? new Set(doc.lines) : new Set();
}

/** Branches a dispatcher may mark as failed: anything not already failed
 * and not virtual. */
export function failableBranches(doc: ScenarioDoc): number[] {
  return doc.branches
    .filter((b) => b.status !== "failed" && b.status !== "virtual")
    .map((b) => b.id);
}

export function buildViewModel(
  doc: ScenarioDoc,
  report: Report | null,
  highlightScheme: number | null,
): ViewModel {
  const pos = layoutPositions(doc);
  const energized = new Set(doc.state.energized_buses);
  const targets = new Set(doc.targets);
  const highlight = schemeHighlight(report, highlightScheme);
  const nodes = doc.buses.map((bus) => ({
    id: bus.id,
    name: bus.name,
    x: pos.get(bus.id)!.x,
    y: pos.get(bus.id)!.y,
    energized: energized.has(bus.id),
    isSupply: bus.id === doc.supply_bus,
    isTarget: targets.has(bus.id),
    isPlant: bus.is_plant,
  }));
  const edges = doc.branches.map((br) => ({
    id: br.id,
    from: br.from_bus,
    to: br.to_bus,
    status: br.status,
    highlighted: highlight.has(br.id),
    chargingMvar: br.charging_mvar,
  }));
  return {
    nodes,
    edges,
    rows: report ? rankingRows(report) : [],
    bestScheme: report?.best_scheme ?? null,
  };
}
