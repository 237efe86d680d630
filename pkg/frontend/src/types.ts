// Payload shapes of the restoration service API. The console displays
// these verbatim; it never recomputes scores or validity client-side.

export type BranchStatus = "unenergized" | "energized" | "failed" | "virtual";

export interface BusDoc {
  id: number;
  name: string;
  importance: number;
  important_load: number;
  is_plant: boolean;
  x?: number;
  y?: number;
}

export interface BranchDoc {
  id: number;
  from_bus: number;
  to_bus: number;
  charging_mvar: number;
  is_transformer: boolean;
  breaker_count: number;
  status: BranchStatus;
}

export interface ScenarioDoc {
  buses: BusDoc[];
  branches: BranchDoc[];
  generators: { bus: number; rated_mva: number; is_blackstart: boolean }[];
  state: { energized_buses: number[]; failed_branches: number[] };
  targets: number[];
  supply_bus: number;
  params: Record<string, unknown>;
}

export interface Violation {
  kind: string;
  detail: string;
}

export interface SchemeDoc {
  lines: number[];
  objective_mvar: number;
  flows: Record<string, number>;
  depth_per_target: Record<string, number>;
  max_depth: number;
  valid: boolean;
  violations: Violation[];
}

export interface TraceDoc {
  schemes: SchemeDoc[];
  iterations: number;
  terminated_by: string;
}

export interface RankingDoc {
  scheme_ids: number[];
  indices: number[][];
  normalized: number[][];
  y_plus: number[];
  y_minus: number[];
  u: number[];
  order: number[];
  status: string;
}

export interface Report {
  trace: TraceDoc;
  ranking: RankingDoc;
  valid_count: number;
  scheme_count: number;
  best_scheme: number | null;
}

export interface RunProgress {
  iterations: number;
  incumbent_mvar: number | null;
  schemes_found: number;
}

export interface RunInfo {
  id: string;
  scenario_id: string;
  status: "queued" | "running" | "done" | "error";
  progress: RunProgress;
  error: string | null;
}

export type EventKind =
  | "line_failed"
  | "line_repaired"
  | "scheme_committed"
  | "targets_changed";
