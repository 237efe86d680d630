import { ServiceClient, ServiceError } from "./api.js";
import type { Report, RunInfo, ScenarioDoc, SchemeDoc } from "./types.js";

export interface CommitEntry {
  runId: string;
  scheme: number;
  lines: number[];
  mvar: number;
}

/** Steers one restoration session.  Every user action maps 1:1 to a
 * service call; the console holds no optimization state of its own, so
 * any view can be reproduced by replaying the scenario's event log. */
export class RestorationSession {
  snapshot: ScenarioDoc | null = null;
  report: Report | null = null;
  runId: string | null = null;
  progress: RunInfo | null = null;
  history: CommitEntry[] = [];
  offline = false;
  lastError: string | null = null;

  constructor(
    private client: ServiceClient,
    readonly scenarioId: string,
  ) {}

  private async guard<T>(op: () => Promise<T>): Promise<T | null> {
    try {
      const result = await op();
      this.offline = false;
      this.lastError = null;
      return result;
    } catch (err) {
      if (err instanceof ServiceError) {
        this.lastError = err.detail; // surfaced verbatim (e.g. violations)
      } else {
        this.offline = true; // transport failure: read-only banner
        this.lastError = String(err);
      }
      return null;
    }
  }

  async refresh(): Promise<void> {
    const snap = await this.guard(() => this.client.getScenario(this.scenarioId));
    if (snap) this.snapshot = snap;
  }

  async toggleTarget(bus: number): Promise<void> {
    if (!this.snapshot) return;
    const targets = new Set(this.snapshot.targets);
    if (targets.has(bus)) {
      targets.delete(bus);
    } else {
      targets.add(bus);
    }
    const snap = await this.guard(() =>
      this.client.postEvent(this.scenarioId, "targets_changed", {
        targets: [...targets].sort((a, b) => a - b),
      }),
    );
    if (snap) this.snapshot = snap;
  }

  async markLineFailed(branch: number): Promise<void> {
    const snap = await this.guard(() =>
      this.client.postEvent(this.scenarioId, "line_failed", { branch_id: branch }),
    );
    if (snap) this.snapshot = snap;
  }

  async repairLine(branch: number): Promise<void> {
    const snap = await this.guard(() =>
      this.client.postEvent(this.scenarioId, "line_repaired", { branch_id: branch }),
    );
    if (snap) this.snapshot = snap;
  }

  async solve(overrides: Record<string, unknown> = {}): Promise<void> {
    const done = await this.guard(() =>
      this.client.solveAndWait(this.scenarioId, overrides, (info) => {
        this.progress = info;
      }),
    );
    if (done) {
      this.runId = done.runId;
      this.report = done.report;
    }
  }

  /** The service's top-ranked scheme of the latest run, or null. */
  bestScheme(): { number: number; doc: SchemeDoc } | null {
    if (!this.report || this.report.best_scheme === null) return null;
    const number = this.report.best_scheme;
    return { number, doc: this.report.trace.schemes[number - 1] };
  }

  async commitScheme(scheme: number): Promise<boolean> {
    if (!this.runId || !this.report) return false;
    const doc = this.report.trace.schemes[scheme - 1];
    const snap = await this.guard(() =>
      this.client.postEvent(this.scenarioId, "scheme_committed", {
        run_id: this.runId,
        scheme_index: scheme,
      }),
    );
    if (!snap) return false;
    this.snapshot = snap;
    this.history.push({
      runId: this.runId,
      scheme,
      lines: [...doc.lines],
      mvar: doc.objective_mvar,
    });
    return true;
  }

  async commitBest(): Promise<boolean> {
    const best = this.bestScheme();
    return best ? this.commitScheme(best.number) : false;
  }
}
