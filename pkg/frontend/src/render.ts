import type { EdgeView, NodeView, ViewModel } from "./model.js";

// SVG is produced as a string so the diagram logic stays testable
// outside a browser; main.ts injects it into the page.

const VIEW = 100;

function scale(nodes: NodeView[]): (x: number, y: number) => [number, number] {
  const xs = nodes.map((n) => n.x);
  const ys = nodes.map((n) => n.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const span = Math.max(maxX - minX, maxY - minY, 1e-9);
  const pad = 6;
  const k = (VIEW - 2 * pad) / span;
  return (x, y) => [pad + (x - minX) * k, pad + (y - minY) * k];
}

function edgeElement(e: EdgeView, p1: [number, number], p2: [number, number]): string {
  const classes = ["edge", `status-${e.status}`];
  if (e.highlighted) classes.push("scheme-highlight");
  return (
    `<line class="${classes.join(" ")}" data-branch="${e.id}" ` +
    `x1="${p1[0].toFixed(2)}" y1="${p1[1].toFixed(2)}" ` +
    `x2="${p2[0].toFixed(2)}" y2="${p2[1].toFixed(2)}">` +
    `<title>branch ${e.id}: ${e.chargingMvar.toFixed(2)} MVar (${e.status})</title>` +
    `</line>`
  );
}

function nodeElement(n: NodeView, p: [number, number]): string {
  const classes = ["bus"];
  if (n.energized) classes.push("energized");
  if (n.isSupply) classes.push("supply");
  if (n.isTarget) classes.push("target");
  if (n.isPlant) classes.push("plant");
  return (
    `<g class="${classes.join(" ")}" data-bus="${n.id}" ` +
    `transform="translate(${p[0].toFixed(2)},${p[1].toFixed(2)})">` +
    `<circle r="${n.isSupply ? 2.2 : 1.5}"><title>${n.name}</title></circle>` +
    `<text dy="-2.4">${n.id}</text></g>`
  );
}

export function renderNetworkSvg(vm: ViewModel): string {
  const toPx = scale(vm.nodes);
  const at = new Map(vm.nodes.map((n) => [n.id, toPx(n.x, n.y)] as const));
  const edges = vm.edges
    .map((e) => edgeElement(e, at.get(e.from)!, at.get(e.to)!))
    .join("");
  const nodes = vm.nodes.map((n) => nodeElement(n, at.get(n.id)!)).join("");
  return (
    `<svg viewBox="0 0 ${VIEW} ${VIEW}" xmlns="http://www.w3.org/2000/svg">` +
    `<g class="edges">${edges}</g><g class="nodes">${nodes}</g></svg>`
  );
}

export function renderRankingTable(vm: ViewModel): string {
  if (!vm.rows.length) return `<p class="empty">no ranked schemes yet</p>`;
  const header =
    "<tr><th>#</th><th>u</th><th>MVar</th><th>V1</th><th>V2</th>" +
    "<th>V3</th><th>V4</th><th>V5</th><th>status</th></tr>";
  const body = vm.rows
    .map((row) => {
      const classes = [row.valid ? "valid" : "invalid"];
      if (row.scheme === vm.bestScheme) classes.push("best");
      const v = row.v.length
        ? row.v.map((x, i) => `<td>${i === 2 ? x.toFixed(4) : x}</td>`).join("")
        : "<td>-</td><td>-</td><td>-</td><td>-</td><td>-</td>";
      const status = row.valid
        ? "ok"
        : row.violations.map((x) => x.kind).join(", ");
      // u is printed exactly as served; no rounding that could mislead
      const u = Number.isNaN(row.u) ? "-" : String(row.u);
      return (
        `<tr class="${classes.join(" ")}" data-scheme="${row.scheme}">` +
        `<td>${row.scheme}</td><td class="u">${u}</td>` +
        `<td>${row.mvar.toFixed(2)}</td>${v}<td>${status}</td></tr>`
      );
    })
    .join("");
  return `<table class="ranking">${header}${body}</table>`;
}
