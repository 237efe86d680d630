"""Scheme scoring and multi-attribute ranking.

Five indices per scheme (transformer count, breaker operations, mean
middle-node importance, charging MVar, radial depth), then ranking of
the valid schemes by similarity-to-ideal grey relational projection:
normalise per attribute, take grey coefficients against the all-ones
positive and all-zeros negative ideals, project onto the weight vector,
and combine as u = Y+^2 / (Y+^2 + Y-^2).  Largest u wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Scenario
from .pathsearch import Scheme

# attribute polarity, fixed: only the importance index is a benefit
ATTRIBUTE_KINDS = ("cost", "cost", "benefit", "cost", "cost")


@dataclass(frozen=True)
class IndexVector:
    v1: int        # transformer energisations along the path
    v2: int        # breaker operations
    v3: float      # mean importance of middle nodes
    v4: float      # charging reactive power, MVar
    v5: int        # radial operation complexity (deepest target)

    def as_row(self):
        return [self.v1, self.v2, self.v3, self.v4, self.v5]


@dataclass(frozen=True)
class DecisionMatrix:
    rows: tuple                  # one IndexVector row per scheme
    kinds: tuple = ATTRIBUTE_KINDS

    def as_array(self):
        return np.array([r.as_row() for r in self.rows], dtype=float)


@dataclass
class RankingResult:
    scheme_ids: list             # discovery numbers (1-based) of ranked schemes
    indices: list                # IndexVector per ranked scheme
    normalized: np.ndarray
    y_plus: np.ndarray
    y_minus: np.ndarray
    u: np.ndarray
    order: list                  # scheme ids, best first
    status: str = "ok"

    def to_dict(self):
        return {
            "scheme_ids": list(self.scheme_ids),
            "indices": [iv.as_row() for iv in self.indices],
            "normalized": [list(map(float, row)) for row in self.normalized],
            "y_plus": [float(v) for v in self.y_plus],
            "y_minus": [float(v) for v in self.y_minus],
            "u": [float(v) for v in self.u],
            "order": list(self.order),
            "status": self.status,
        }


def compute_indices(scheme: Scheme, scenario: Scenario) -> IndexVector:
    """Index vector for one scheme under the scenario's restored state."""
    branches = scenario.network.branches
    buses = scenario.network.buses
    zone = set(scenario.state.energized_buses)
    targets = set(scenario.targets)
    v1 = sum(1 for b in scheme.lines if branches[b].is_transformer)
    v2 = sum(branches[b].breaker_count for b in scheme.lines)
    touched = set()
    for b in scheme.lines:
        touched.add(branches[b].from_bus)
        touched.add(branches[b].to_bus)
    middle = sorted(touched - zone - targets)
    alpha = scenario.params.alpha
    if middle:
        v3 = math.fsum(buses[m].importance + alpha * buses[m].important_load
                       for m in middle) / len(middle)
    else:
        v3 = 0.0  # no middle nodes: empty mean defined as zero
    return IndexVector(v1=v1, v2=v2, v3=v3, v4=scheme.objective_mvar,
                       v5=scheme.max_depth)


def normalize(matrix) -> np.ndarray:
    """Map every attribute into [0, 1] with benefit polarity; a degenerate
    column (constant) maps to all zeros."""
    if isinstance(matrix, DecisionMatrix):
        A = matrix.as_array()
        kinds = matrix.kinds
    else:
        A = np.asarray(matrix, dtype=float)
        kinds = ATTRIBUTE_KINDS[:A.shape[1]]
    G = np.zeros_like(A)
    for j in range(A.shape[1]):
        col = A[:, j]
        lo, hi = col.min(), col.max()
        if hi == lo:
            continue
        if kinds[j] == "benefit":
            G[:, j] = (col - lo) / (hi - lo)
        else:
            G[:, j] = (hi - col) / (hi - lo)
    return G


def grey_coefficients(G, lam: float = 0.5):
    """Grey relational coefficients of every scheme against the positive
    (all-ones) and negative (all-zeros) ideal rows.

    The min/max distances range over the scheme rows and all attributes.
    When some column attains both 0 and 1 this reduces to the closed forms
    lam/(1-g+lam) and lam/(g+lam).  An all-degenerate matrix makes every
    scheme coincide with the negative ideal; by convention the negative
    coefficients are then zero so a lone scheme ranks with u = 1.
    """
    G = np.asarray(G, dtype=float)
    out = []
    for ideal in (1.0, 0.0):
        D = np.abs(ideal - G)
        dmax = D.max()
        if dmax <= 0.0:
            out.append(np.ones_like(G) if ideal == 1.0
                       else np.zeros_like(G))
            continue
        dmin = D.min()
        out.append((dmin + lam * dmax) / (D + lam * dmax))
    return out[0], out[1]


def projections(R, weights) -> np.ndarray:
    """Projection of the weighted coefficient rows onto the ideal:
    Y_i = sum_j r_ij * w_j^2 / sqrt(sum_j w_j^2)."""
    w = np.asarray(weights, dtype=float)
    if not w.any():
        raise ValueError("weight vector must not be all zero")
    return np.asarray(R, dtype=float) @ (w ** 2) / math.sqrt(float(w @ w))


def synthetic_projection(y_plus, y_minus) -> np.ndarray:
    """u = Y+^2 / (Y+^2 + Y-^2), in [0, 1]."""
    yp = np.asarray(y_plus, dtype=float)
    ym = np.asarray(y_minus, dtype=float)
    denom = yp ** 2 + ym ** 2
    if (denom <= 0).any():
        raise ValueError("projections are both zero; u is undefined")
    return yp ** 2 / denom


def rank_rows(rows, weights, lam: float = 0.5):
    """Full pipeline on raw attribute rows; returns (G, y_plus, y_minus, u)."""
    G = normalize(np.asarray(rows, dtype=float))
    r_plus, r_minus = grey_coefficients(G, lam)
    y_plus = projections(r_plus, weights)
    y_minus = projections(r_minus, weights)
    return G, y_plus, y_minus, synthetic_projection(y_plus, y_minus)


def rank(schemes, scenario: Scenario, weights=None, lam=None) -> RankingResult:
    """Rank the valid schemes of a trace, best first.

    Invalid schemes never enter the decision matrix; ties on u break
    toward lower charging MVar, then earlier discovery.
    """
    if weights is None:
        weights = scenario.params.weights
    if lam is None:
        lam = scenario.params.lam
    ids = []
    vectors = []
    for i, scheme in enumerate(schemes, start=1):
        if scheme.valid:
            ids.append(i)
            vectors.append(compute_indices(scheme, scenario))
    if not ids:
        return RankingResult([], [], np.zeros((0, 5)), np.zeros(0),
                             np.zeros(0), np.zeros(0), [],
                             status="no valid schemes to rank")
    rows = [iv.as_row() for iv in vectors]
    G, y_plus, y_minus, u = rank_rows(rows, weights, lam)
    by_pref = sorted(range(len(ids)),
                     key=lambda k: (-u[k], vectors[k].v4, k))
    order = [ids[k] for k in by_pref]
    return RankingResult(scheme_ids=ids, indices=vectors, normalized=G,
                         y_plus=y_plus, y_minus=y_minus, u=u, order=order)
