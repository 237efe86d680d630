import { ServiceClient } from "./api.js";
import { buildViewModel, failableBranches } from "./model.js";
import { renderNetworkSvg, renderRankingTable } from "./render.js";
import { RestorationSession } from "./session.js";
import type { ScenarioDoc } from "./types.js";

const $ = <T extends HTMLElement>(id: string) =>
  document.getElementById(id) as T;

const client = new ServiceClient(
  new URLSearchParams(location.search).get("api") ?? "http://127.0.0.1:8080",
);

let session: RestorationSession | null = null;
let highlight: number | null = null;
let solving = false;

function draw(): void {
  const status = $("status");
  const diagram = $("diagram");
  const table = $("ranking");
  if (!session || !session.snapshot) {
    status.textContent = "load or create a scenario to begin";
    return;
  }
  const banner: string[] = [];
  if (session.offline) banner.push("service unreachable - read-only view");
  if (session.lastError && !session.offline) banner.push(session.lastError);
  if (solving && session.progress) {
    const p = session.progress.progress;
    banner.push(
      `solving: ${p.schemes_found} schemes, incumbent ` +
        `${p.incumbent_mvar?.toFixed(2) ?? "-"} MVar`,
    );
  }
  status.textContent = banner.join(" | ") || "ready";
  const vm = buildViewModel(session.snapshot, session.report, highlight);
  diagram.innerHTML = renderNetworkSvg(vm);
  table.innerHTML = renderRankingTable(vm);
  $("history").innerHTML = session.history
    .map((h) => `<li>run ${h.runId}: scheme ${h.scheme} ` +
      `(${h.mvar.toFixed(2)} MVar, lines ${h.lines.join(",")})</li>`)
    .join("");
  wireDiagram(diagram);
  wireTable(table);
}

function wireDiagram(diagram: HTMLElement): void {
  if (!session?.snapshot) return;
  const failable = new Set(failableBranches(session.snapshot));
  diagram.querySelectorAll<SVGElement>(".edge").forEach((el) => {
    const id = Number(el.dataset.branch);
    if (!failable.has(id)) return; // failed/virtual lines are not selectable
    el.classList.add("selectable");
    el.addEventListener("click", () => {
      void session!.markLineFailed(id).then(draw);
    });
  });
  diagram.querySelectorAll<SVGElement>(".bus").forEach((el) => {
    el.addEventListener("click", () => {
      void session!.toggleTarget(Number(el.dataset.bus)).then(draw);
    });
  });
}

function wireTable(table: HTMLElement): void {
  table.querySelectorAll<HTMLTableRowElement>("tr[data-scheme]").forEach((row) => {
    const scheme = Number(row.dataset.scheme);
    row.addEventListener("mouseenter", () => {
      highlight = scheme;
      draw();
    });
    row.addEventListener("mouseleave", () => {
      highlight = null;
      draw();
    });
    row.addEventListener("dblclick", () => {
      void session!.commitScheme(scheme).then(draw);
    });
  });
}

async function boot(): Promise<void> {
  $("load-btn").addEventListener("click", async () => {
    const text = ($("scenario-input") as HTMLTextAreaElement).value;
    const doc = JSON.parse(text) as ScenarioDoc;
    const { id } = await client.createScenario(doc);
    session = new RestorationSession(client, id);
    await session.refresh();
    draw();
  });
  $("solve-btn").addEventListener("click", async () => {
    if (!session) return;
    solving = true;
    const timer = setInterval(draw, 200); // liveness while the run streams
    await session.solve();
    clearInterval(timer);
    solving = false;
    draw();
  });
  $("commit-btn").addEventListener("click", async () => {
    if (!session) return;
    await session.commitBest();
    draw();
  });
  draw();
}

void boot();
