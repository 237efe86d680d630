import json

import numpy as np
import pytest

from restopath.grid import load_scenario


def make_scenario_doc(n_nodes, edges, supply, targets, *, m_s=8, d_max=50,
                      k1=0.8, energized=None, failed=(), gens=None,
                      v_max=1.10):
    """Scenario document for a synthetic graph.

    edges: list of (u, v, weight_mvar); node ids are 1-based ints.
    """
    energized = {supply} if energized is None else set(energized)
    gens = gens if gens is not None else [
        {"bus": supply, "rated_mva": 10000.0, "is_blackstart": True}]
    buses = [{"id": i, "name": f"n{i}"} for i in range(1, n_nodes + 1)]
    branches = []
    for k, (u, v, w) in enumerate(edges, start=1):
        branches.append({
            "id": k, "from_bus": u, "to_bus": v,
            "charging_mvar": w, "shunt_b": w / 100.0,
            "series_r": 0.001, "series_x": 0.01,
            "status": "unenergized",
        })
    doc = {
        "buses": buses,
        "branches": branches,
        "generators": gens,
        "state": {"energized_buses": sorted(energized),
                  "failed_branches": sorted(failed)},
        "targets": sorted(targets),
        "supply_bus": supply,
        "params": {"d_max": d_max, "k1": k1, "m_s": m_s, "lambda": 0.5,
                   "weights": [0.2, 0.2, 0.2, 0.2, 0.2], "alpha": 1.0,
                   "v_min": 0.90, "v_max": v_max},
    }
    return doc


def make_scenario(*args, **kwargs):
    return load_scenario(json.dumps(make_scenario_doc(*args, **kwargs)))


def random_connected_graph(rng, max_nodes=12, max_edges=20, n_targets=None):
    """Random connected graph with distinct positive edge weights.

    Returns (n_nodes, edges, supply, targets)."""
    n = int(rng.integers(4, max_nodes + 1))
    # spanning tree first, then extra edges
    edges = set()
    order = [int(x) for x in rng.permutation(np.arange(1, n + 1))]
    for i in range(1, n):
        a = order[i]
        b = order[int(rng.integers(0, i))]
        edges.add((min(a, b), max(a, b)))
    max_extra = min(max_edges, n * (n - 1) // 2) - len(edges)
    n_extra = int(rng.integers(0, max_extra + 1)) if max_extra > 0 else 0
    while n_extra > 0:
        a, b = int(rng.integers(1, n + 1)), int(rng.integers(1, n + 1))
        if a != b and (min(a, b), max(a, b)) not in edges:
            edges.add((min(a, b), max(a, b)))
            n_extra -= 1
    edges = sorted(edges)
    while True:
        weights = np.round(rng.uniform(1.0, 10.0, size=len(edges)), 3)
        if len(np.unique(weights)) == len(edges):
            break
    listed = [(u, v, float(w)) for (u, v), w in zip(edges, weights)]
    k = n_targets if n_targets is not None else int(rng.integers(2, 5))
    k = min(k, n - 1)
    picks = rng.choice(np.arange(1, n + 1), size=k + 1, replace=False)
    supply = int(picks[0])
    targets = [int(t) for t in picks[1:]]
    return n, listed, supply, targets


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
