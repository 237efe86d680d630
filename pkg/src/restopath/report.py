"""Solve-run report shared by the CLI and the HTTP service.

Both surfaces must emit byte-identical JSON for identical inputs, so the
single serialisation lives here and carries no timestamps or run ids.
"""

from __future__ import annotations

import json

from .evaluation import RankingResult
from .pathsearch import SearchTrace


def build_report(trace: SearchTrace, ranking: RankingResult) -> dict:
    valid = sum(1 for s in trace.schemes if s.valid)
    return {
        "trace": trace.to_dict(),
        "ranking": ranking.to_dict(),
        "valid_count": valid,
        "scheme_count": len(trace.schemes),
        "best_scheme": ranking.order[0] if ranking.order else None,
    }


def report_bytes(report: dict) -> bytes:
    return (json.dumps(report, indent=2, sort_keys=True) + "\n").encode()


def format_table(trace: SearchTrace, ranking: RankingResult) -> str:
    """Dispatcher-readable summary table."""
    lines = [
        f"{'#':>2} {'MVar':>8} {'depth':>5} {'valid':>5} "
        f"{'u':>7}  lines / violations"
    ]
    u_by_id = {sid: float(u) for sid, u in zip(ranking.scheme_ids, ranking.u)}
    for i, s in enumerate(trace.schemes, start=1):
        u_txt = f"{u_by_id[i]:.3f}" if i in u_by_id else "-"
        extra = ",".join(str(b) for b in s.lines)
        if not s.valid:
            extra += "  [" + "; ".join(v.kind for v in s.violations) + "]"
        lines.append(
            f"{i:>2} {s.objective_mvar:>8.2f} {s.max_depth:>5} "
            f"{'yes' if s.valid else 'no':>5} {u_txt:>7}  {extra}")
    if ranking.order:
        lines.append("ranking (best first): "
                     + " > ".join(str(i) for i in ranking.order))
    else:
        lines.append(f"ranking: {ranking.status}")
    return "\n".join(lines) + "\n"
