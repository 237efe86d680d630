"""Small exact mixed-integer linear solver.

A dense bounded-variable simplex (two-phase primal, plus a dual
re-optimisation path used to warm-start after bound changes) under a
best-first branch-and-bound loop over binary variables.  Written for
auditable desk-scale models: tens of binaries, hundreds of rows.
Exactness comes from bound-based pruning only; there are no heuristics
that can cut off the optimum.

Determinism: fixed pivot rules (Dantzig with a Bland fallback after a
degeneracy stall), fixed branching (most-fractional binary, ties by
lowest index, 0-branch queued first) and best-first node selection with
ties broken by insertion order.  Re-solving the same problem yields
bit-identical results.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-7   # LP feasibility tolerance
INT_TOL = 1e-6    # binary integrality tolerance
COST_TOL = 1e-9   # reduced-cost / bound tolerance

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NODE_LIMIT = "node_limit"
NUMERICAL = "numerical"

DEFAULT_NODE_LIMIT = 200_000


class MilpError(ValueError):
    """Malformed problem: unknown variable, bad bounds, non-finite data."""


class _NumericalFailure(Exception):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str = "continuous"  # "continuous" | "binary"
    lower: float = 0.0
    upper: float = math.inf


@dataclass(frozen=True)
class Constraint:
    coefficients: dict
    sense: str  # "<=", "=" or ">="
    rhs: float


@dataclass(frozen=True)
class MilpProblem:
    variables: tuple
    constraints: tuple
    objective: dict  # name -> cost, minimised

    def add_constraint(self, constraint: Constraint) -> "MilpProblem":
        """Return a new problem with one more row; prior solutions that
        violate it become infeasible."""
        _check_constraint(constraint, {v.name for v in self.variables})
        return MilpProblem(self.variables, self.constraints + (constraint,),
                           self.objective)

    def variable_index(self) -> dict:
        return {v.name: i for i, v in enumerate(self.variables)}


@dataclass
class MilpSolution:
    status: str
    objective_value: float
    values: dict
    node_count: int = 0


def _check_constraint(con, known):
    if con.sense not in ("<=", "=", ">="):
        raise MilpError(f"unknown constraint sense {con.sense!r}")
    if not math.isfinite(con.rhs):
        raise MilpError("constraint rhs must be finite")
    for name, coef in con.coefficients.items():
        if name not in known:
            raise MilpError(f"constraint references unknown variable {name!r}")
        if not math.isfinite(coef):
            raise MilpError(f"non-finite coefficient on {name!r}")


def make_problem(variables, constraints, objective) -> MilpProblem:
    """Validate and freeze a problem definition."""
    seen = set()
    cleaned = []
    for v in variables:
        if v.name in seen:
            raise MilpError(f"duplicate variable name {v.name!r}")
        seen.add(v.name)
        if v.kind not in ("continuous", "binary"):
            raise MilpError(f"variable {v.name!r} has unknown kind {v.kind!r}")
        if v.kind == "binary":
            # clamp the default open range into the unit box
            v = Variable(v.name, v.kind, max(v.lower, 0.0), min(v.upper, 1.0))
        if v.lower > v.upper:
            raise MilpError(f"variable {v.name!r} has lower > upper")
        if math.isnan(v.lower) or math.isnan(v.upper):
            raise MilpError(f"variable {v.name!r} has NaN bound")
        cleaned.append(v)
    for con in constraints:
        _check_constraint(con, seen)
    for name, coef in objective.items():
        if name not in seen:
            raise MilpError(f"objective references unknown variable {name!r}")
        if not math.isfinite(coef):
            raise MilpError(f"non-finite objective coefficient on {name!r}")
    return MilpProblem(tuple(cleaned), tuple(constraints), dict(objective))


def to_lp_text(problem: MilpProblem) -> str:
    """Human-readable dump for desk verification against external solvers."""
    obj = " + ".join(f"{c:g} {n}" for n, c in problem.objective.items())
    out = ["Minimize", " obj: " + (obj or "0"), "Subject To"]
    for i, con in enumerate(problem.constraints):
        terms = " + ".join(f"{c:g} {n}" for n, c in con.coefficients.items())
        out.append(f" c{i}: {terms} {con.sense} {con.rhs:g}")
    out.append("Bounds")
    for v in problem.variables:
        hi = "+inf" if math.isinf(v.upper) else f"{v.upper:g}"
        lo = "-inf" if math.isinf(v.lower) else f"{v.lower:g}"
        out.append(f" {lo} <= {v.name} <= {hi}")
    binaries = [v.name for v in problem.variables if v.kind == "binary"]
    if binaries:
        out.append("Binaries")
        out.append(" " + " ".join(binaries))
    out.append("End")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Dense bounded-variable simplex
# ---------------------------------------------------------------------------

class _Simplex:
    """Simplex working set for one constraint matrix; bounds vary per solve.

    Column layout: n structural, then m slacks (coefficient +1 per row),
    then m artificials (unit columns, active only in phase 1 of a cold
    start; pinned to zero afterwards).
    """

    REFACTOR_EVERY = 64
    STALL_LIMIT = 80
    CACHE_SIZE = 96  # basis -> inverse, reused across branch-and-bound nodes

    def __init__(self, A, b, senses, c):
        self.m, self.n = A.shape
        m, n = self.m, self.n
        self.b = b.astype(float)
        self.c_struct = c.astype(float)
        self.ncols = n + 2 * m
        self.nart0 = n + m
        T = np.zeros((m, self.ncols))
        T[:, :n] = A
        T[:, n:n + m] = np.eye(m)
        T[:, n + m:] = np.eye(m)
        self.A = T
        self.slack_lb = np.zeros(m)
        self.slack_ub = np.zeros(m)
        for i, s in enumerate(senses):
            if s == "<=":
                self.slack_ub[i] = math.inf
            elif s == ">=":
                self.slack_lb[i] = -math.inf
            # "=": slack fixed at [0, 0]
        self.cost = np.zeros(self.ncols)
        self.cost[:n] = self.c_struct
        self.max_iter = 2000 + 60 * (m + n)
        self._binv_cache = {}  # basis bytes -> inverse (insertion-ordered)

    def _bounds(self, lb, ub, art_lb, art_ub):
        L = np.concatenate([lb, self.slack_lb, art_lb])
        U = np.concatenate([ub, self.slack_ub, art_ub])
        return L, U

    @staticmethod
    def _nonbasic_values(L, U, at_upper):
        x = np.where(at_upper, U, L)
        return np.where(np.isfinite(x), x, 0.0)

    def _cached_inverse(self, basis):
        key = basis.tobytes()
        hit = self._binv_cache.get(key)
        if hit is not None:
            return hit.copy()
        try:
            inv = np.linalg.inv(self.A[:, basis])
        except np.linalg.LinAlgError:
            return None
        self._remember(key, inv)
        return inv.copy()

    def _remember(self, key, inv):
        cache = self._binv_cache
        if key in cache:
            return
        if len(cache) >= self.CACHE_SIZE:
            cache.pop(next(iter(cache)))
        cache[key] = inv

    def _refactor(self, st):
        """Recompute the basis inverse and all variable values."""
        inv = self._cached_inverse(st["basis"])
        if inv is None:
            return False
        st["Binv"] = inv
        in_basis = np.zeros(self.ncols, bool)
        in_basis[st["basis"]] = True
        x = self._nonbasic_values(st["L"], st["U"], st["at_upper"])
        x[in_basis] = 0.0
        x[st["basis"]] = st["Binv"] @ (self.b - self.A @ x)
        st["x"] = x
        st["in_basis"] = in_basis
        st["since_factor"] = 0
        return True

    def _state(self, L, U, at_upper, basis):
        st = {"L": L, "U": U, "basis": np.array(basis, dtype=int),
              "at_upper": at_upper.copy(),
              "eta": np.empty((self.m, self.m))}
        if not self._refactor(st):
            return None
        st["movable"] = (U - L) > COST_TOL
        return st

    def _maybe_refactor(self, st):
        if st["since_factor"] < self.REFACTOR_EVERY:
            return True
        return self._refactor(st)

    def _pivot(self, st, r, e, w):
        """Replace basis[r] by column e; w = Binv @ A[:, e]."""
        Binv = st["Binv"]
        Binv[r, :] /= w[r]
        col = w.copy()
        col[r] = 0.0
        eta = st["eta"]
        np.multiply(col[:, None], Binv[r, :][None, :], out=eta)
        Binv -= eta
        leaving = st["basis"][r]
        st["in_basis"][leaving] = False
        st["in_basis"][e] = True
        st["basis"][r] = e
        st["since_factor"] += 1

    def _ratio_test(self, st, delta):
        """Max step before a basic variable hits a bound.

        Returns (t_row, rows_t) with rows_t the per-row limits (inf where
        the row does not block)."""
        basis = st["basis"]
        xB = st["x"][basis]
        lbB = st["L"][basis]
        ubB = st["U"][basis]
        rows_t = np.full(self.m, math.inf)
        down = delta > 1e-10
        up = delta < -1e-10
        ok_dn = down & np.isfinite(lbB)
        ok_up = up & np.isfinite(ubB)
        rows_t[ok_dn] = (xB[ok_dn] - lbB[ok_dn]) / delta[ok_dn]
        rows_t[ok_up] = (xB[ok_up] - ubB[ok_up]) / delta[ok_up]
        rows_t = np.maximum(rows_t, 0.0)
        return (rows_t.min() if self.m else math.inf), rows_t

    def _choose_row(self, st, rows_t, t_row, delta, bland):
        near = np.flatnonzero(rows_t <= t_row + 1e-12)
        if bland:
            return int(near[np.argmin(st["basis"][near])])
        return int(near[np.argmax(np.abs(delta[near]))])

    def _primal(self, st, cost, *, phase1):
        # artificials may leave the basis but never re-enter, so pricing
        # runs over the real (structural + slack) columns only
        k = self.nart0
        A_real = self.A[:, :k]
        bland = False
        stall = 0
        movable = st["movable"][:k]
        for _ in range(self.max_iter):
            if not self._maybe_refactor(st):
                return NUMERICAL
            basis = st["basis"]
            y = cost[basis] @ st["Binv"]
            d = cost[:k] - y @ A_real
            at_up = st["at_upper"][:k]
            nb = ~st["in_basis"][:k]
            cand = nb & movable & ((~at_up & (d < -COST_TOL)) |
                                   (at_up & (d > COST_TOL)))
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return OPTIMAL
            e = int(idx[0]) if bland else int(idx[np.argmax(np.abs(d[idx]))])
            direction = -1.0 if at_up[e] else 1.0
            w = st["Binv"] @ self.A[:, e]
            delta = direction * w
            t_row, rows_t = self._ratio_test(st, delta)
            t_flip = st["U"][e] - st["L"][e]
            if not math.isfinite(t_row) and not math.isfinite(t_flip):
                return NUMERICAL if phase1 else UNBOUNDED
            if t_flip <= t_row:  # cheaper to slide to the other bound
                t = t_flip
                basisvals = st["x"][basis] - t * delta
                st["x"][basis] = basisvals
                st["at_upper"][e] = not at_up[e]
                st["x"][e] = st["U"][e] if st["at_upper"][e] else st["L"][e]
            else:
                t = t_row
                r = self._choose_row(st, rows_t, t_row, delta, bland)
                hit_upper = delta[r] < 0
                st["x"][basis] = st["x"][basis] - t * delta
                st["x"][e] = (st["U"][e] if at_up[e] else st["L"][e]) \
                    + direction * t
                leaving = basis[r]
                st["x"][leaving] = st["U"][leaving] if hit_upper \
                    else st["L"][leaving]
                st["at_upper"][leaving] = hit_upper
                st["at_upper"][e] = False
                self._pivot(st, r, e, w)
            if t <= 1e-10:
                stall += 1
                if stall > self.STALL_LIMIT:
                    bland = True
            else:
                stall = 0
        return NUMERICAL

    def _dual(self, st, cost):
        """Dual bounded simplex from a dual-feasible basis after bound
        changes.  Returns OPTIMAL, INFEASIBLE or NUMERICAL."""
        movable = st["movable"]
        for _ in range(self.max_iter):
            if not self._maybe_refactor(st):
                return NUMERICAL
            basis = st["basis"]
            xB = st["x"][basis]
            lbB = st["L"][basis]
            ubB = st["U"][basis]
            viol_lo = np.where(np.isfinite(lbB), lbB - xB, -math.inf)
            viol_up = np.where(np.isfinite(ubB), xB - ubB, -math.inf)
            viol = np.maximum(viol_lo, viol_up)
            r = int(np.argmax(viol))
            if viol[r] <= FEAS_TOL:
                return OPTIMAL
            below = viol_lo[r] >= viol_up[r]
            k = self.nart0
            y = cost[basis] @ st["Binv"]
            d = cost[:k] - y @ self.A[:, :k]
            alpha = st["Binv"][r, :] @ self.A[:, :k]
            nb = ~st["in_basis"][:k]
            at_up = st["at_upper"][:k]
            mv = movable[:k]
            if below:
                elig = nb & mv & ((~at_up & (alpha < -COST_TOL)) |
                                  (at_up & (alpha > COST_TOL)))
            else:
                elig = nb & mv & ((~at_up & (alpha > COST_TOL)) |
                                  (at_up & (alpha < -COST_TOL)))
            idx = np.flatnonzero(elig)
            if idx.size == 0:
                # no column can repair the violated row: certify that the
                # row is unsatisfiable before declaring infeasibility
                if self._row_certificate(st, r):
                    return INFEASIBLE
                return NUMERICAL  # ambiguous; caller re-solves cold
            denom = -alpha[idx] if below else alpha[idx]
            rr = d[idx] / denom
            if rr.min() < -1e-7:
                return NUMERICAL  # dual feasibility lost
            e = int(idx[np.argmin(np.maximum(rr, 0.0))])
            w = st["Binv"] @ self.A[:, e]
            if abs(w[r]) < 1e-11:
                return NUMERICAL
            bound = lbB[r] if below else ubB[r]
            t = (xB[r] - bound) / w[r]
            start = st["U"][e] if at_up[e] else st["L"][e]
            st["x"][basis] = xB - t * w
            st["x"][e] = start + t
            leaving = basis[r]
            st["x"][leaving] = bound
            st["at_upper"][leaving] = not below
            st["at_upper"][e] = False
            self._pivot(st, r, e, w)
        return NUMERICAL

    def _row_certificate(self, st, r) -> bool:
        """Exact infeasibility proof: every solution of Ax = b satisfies
        row·x = beta for row = Binv[r]A; if the bounds make that range miss
        beta, no feasible point exists."""
        if st["since_factor"] > 0 and not self._refactor(st):
            return False  # cannot certify from a drifted inverse
        row = st["Binv"][r, :] @ self.A
        beta = float(st["Binv"][r, :] @ self.b)
        L, U = st["L"], st["U"]
        pos = row > 1e-11
        neg = row < -1e-11
        hi = float(np.sum(row[pos] * U[pos]) + np.sum(row[neg] * L[neg]))
        lo = float(np.sum(row[pos] * L[pos]) + np.sum(row[neg] * U[neg]))
        tol = 1e-7 * max(1.0, abs(beta))
        return beta > hi + tol or beta < lo - tol

    def _feasible(self, st):
        x = st["x"]
        if (x < st["L"] - 1e-6).any() or (x > st["U"] + 1e-6).any():
            return False
        resid = self.A @ x - self.b
        return bool(np.abs(resid).max(initial=0.0) <= 1e-6)

    def _finish(self, st):
        obj = float(self.cost[:self.n] @ st["x"][:self.n])
        snap = (st["basis"].copy(), st["at_upper"].copy())
        # children warm-start from this basis; keep its inverse around
        self._remember(st["basis"].tobytes(), st["Binv"].copy())
        return OPTIMAL, st["x"][:self.n].copy(), obj, snap

    def _drive_out_artificials(self, st):
        for r in range(self.m):
            if st["basis"][r] < self.nart0:
                continue
            row = st["Binv"][r, :] @ self.A[:, :self.nart0]
            nb = ~st["in_basis"][:self.nart0]
            cand = np.flatnonzero(nb & (np.abs(row) > 1e-7))
            if cand.size == 0:
                continue  # dependent row; artificial stays basic at zero
            e = int(cand[0])
            w = st["Binv"] @ self.A[:, e]
            art = st["basis"][r]
            st["x"][art] = 0.0
            st["at_upper"][art] = False
            self._pivot(st, r, e, w)

    def solve(self, lb, ub, *, warm=None):
        """Solve min c x s.t. A x (senses) b, lb <= x <= ub.

        Returns (status, x_structural, objective, basis_snapshot).  `warm`
        is a snapshot from a previous optimal solve of the same matrix
        where only bounds have changed since.
        """
        m, n = self.m, self.n
        zeros = np.zeros(m)

        if warm is not None:
            basis, at_upper = warm
            L, U = self._bounds(lb, ub, zeros, zeros)
            st = self._state(L, U, at_upper, basis)
            if st is not None:
                status = self._dual(st, self.cost)
                if status == OPTIMAL:
                    # a pivot-free dual pass means the inherited basis is
                    # still optimal; otherwise re-verify with the primal
                    clean = st["since_factor"] == 0 or \
                        self._primal(st, self.cost, phase1=False) == OPTIMAL
                    if clean:
                        if st["since_factor"] > 16 and not self._refactor(st):
                            return NUMERICAL, None, math.nan, None
                        if self._feasible(st):
                            return self._finish(st)
                elif status == INFEASIBLE:
                    # certified by _row_certificate inside the dual loop
                    return INFEASIBLE, None, math.inf, None
            # fall through to the cold path

        st, feas = self._cold_phase1(lb, ub)
        if st is None:
            return NUMERICAL, None, math.nan, None
        if not feas:
            return INFEASIBLE, None, math.inf, None
        status = self._primal(st, self.cost, phase1=False)
        if status == UNBOUNDED:
            return UNBOUNDED, None, -math.inf, None
        if status != OPTIMAL or not self._refactor(st) \
                or not self._feasible(st):
            return NUMERICAL, None, math.nan, None
        return self._finish(st)

    def _cold_phase1(self, lb, ub):
        """Phase 1 from scratch.  Returns (state, feasible) with state None
        on numerical failure; when feasible, artificials are pinned to zero
        and driven out of the basis."""
        m, n = self.m, self.n
        at_upper = np.zeros(self.ncols, bool)
        L0, U0 = self._bounds(lb, ub, np.zeros(m), np.zeros(m))
        for j in range(n + m):
            if not math.isfinite(L0[j]) and math.isfinite(U0[j]):
                at_upper[j] = True
        xN = self._nonbasic_values(L0, U0, at_upper)
        resid = self.b - self.A[:, :n + m] @ xN[:n + m]
        art_lb = np.where(resid >= 0, 0.0, -math.inf)
        art_ub = np.where(resid >= 0, math.inf, 0.0)
        L, U = self._bounds(lb, ub, art_lb, art_ub)
        basis = list(range(self.nart0, self.nart0 + m))
        st = self._state(L, U, at_upper, basis)
        if st is None:
            return None, False
        phase1 = np.zeros(self.ncols)
        phase1[self.nart0:] = np.where(resid >= 0, 1.0, -1.0)
        if self._primal(st, phase1, phase1=True) != OPTIMAL:
            return None, False
        if float(np.abs(st["x"][self.nart0:]).sum()) > 1e-6:
            return st, False
        st["L"][self.nart0:] = 0.0
        st["U"][self.nart0:] = 0.0
        st["x"][self.nart0:] = 0.0
        st["movable"][self.nart0:] = False  # pinned for phase 2
        self._drive_out_artificials(st)
        return st, True


def _arrays(problem: MilpProblem):
    index = problem.variable_index()
    n = len(problem.variables)
    lb = np.array([v.lower for v in problem.variables], float)
    ub = np.array([v.upper for v in problem.variables], float)
    c = np.zeros(n)
    for name, coef in problem.objective.items():
        c[index[name]] = coef
    m = len(problem.constraints)
    A = np.zeros((m, n))
    b = np.zeros(m)
    senses = []
    for i, con in enumerate(problem.constraints):
        for name, coef in con.coefficients.items():
            A[i, index[name]] += coef
        b[i] = con.rhs
        senses.append(con.sense)
    return A, b, senses, c, lb, ub


def solve_lp(problem: MilpProblem) -> MilpSolution:
    """LP relaxation: every variable treated as continuous within its bounds."""
    A, b, senses, c, lb, ub = _arrays(problem)
    core = _Simplex(A, b, senses, c)
    status, x, obj, _ = core.solve(lb, ub)
    values = {}
    if x is not None:
        values = {v.name: float(x[i]) for i, v in enumerate(problem.variables)}
    return MilpSolution(status, obj, values, node_count=0)


def solve_milp(problem: MilpProblem, *, node_limit: int = DEFAULT_NODE_LIMIT
               ) -> MilpSolution:
    """Globally optimal solve by best-first branch and bound on binaries."""
    A, b, senses, c, lb0, ub0 = _arrays(problem)
    core = _Simplex(A, b, senses, c)
    bin_idx = [i for i, v in enumerate(problem.variables) if v.kind == "binary"]

    state = {"obj": math.inf, "x": None, "nodes": 0, "seq": 0}
    heap = []

    def push(bound, fixings, snapshot):
        heapq.heappush(heap, (bound, state["seq"], fixings, snapshot))
        state["seq"] += 1

    def most_fractional(xv):
        best, best_frac = -1, INT_TOL
        for i in bin_idx:
            f = xv[i] - math.floor(xv[i])
            frac = min(f, 1.0 - f)
            if frac > best_frac + 1e-12:
                best, best_frac = i, frac
        return best

    def handle(status, x, obj, fixings, snapshot):
        if status == INFEASIBLE:
            return
        if status != OPTIMAL:
            raise _NumericalFailure
        if obj >= state["obj"] - COST_TOL:
            return
        j = most_fractional(x)
        if j < 0:
            xi = x.copy()
            for i in bin_idx:
                xi[i] = round(xi[i])
            state["obj"] = obj
            state["x"] = xi
            return
        push(obj, fixings + ((j, 0),), snapshot)
        push(obj, fixings + ((j, 1),), snapshot)

    state["nodes"] = 1
    try:
        status, x, obj, snap = core.solve(lb0, ub0)
        if status in (UNBOUNDED, NUMERICAL):
            return MilpSolution(status,
                                -math.inf if status == UNBOUNDED else math.nan,
                                {}, node_count=1)
        handle(status, x, obj, (), snap)
        while heap:
            bound, _, fixings, snapshot = heapq.heappop(heap)
            if bound >= state["obj"] - COST_TOL:
                continue
            if state["nodes"] >= node_limit:
                return MilpSolution(NODE_LIMIT, state["obj"],
                                    _values(problem, state["x"]),
                                    state["nodes"])
            state["nodes"] += 1
            lb = lb0.copy()
            ub = ub0.copy()
            for i, val in fixings:
                lb[i] = ub[i] = float(val)
            status, x, obj, snap = core.solve(lb, ub, warm=snapshot)
            if status == NUMERICAL:
                status, x, obj, snap = core.solve(lb, ub)
            handle(status, x, obj, fixings, snap)
    except _NumericalFailure:
        return MilpSolution(NUMERICAL, math.nan, {}, state["nodes"])

    if state["x"] is None:
        return MilpSolution(INFEASIBLE, math.inf, {}, state["nodes"])
    return MilpSolution(OPTIMAL, state["obj"], _values(problem, state["x"]),
                        state["nodes"])


def _values(problem, x):
    if x is None:
        return {}
    return {v.name: float(x[i]) for i, v in enumerate(problem.variables)}


def check_solution(problem: MilpProblem, solution: MilpSolution,
                   tol: float = 1e-6) -> list:
    """Return a list of violated constraints/bounds (empty when clean)."""
    bad = []
    vals = solution.values
    for v in problem.variables:
        x = vals[v.name]
        if x < v.lower - tol or x > v.upper + tol:
            bad.append(f"bound on {v.name}")
        if v.kind == "binary" and abs(x - round(x)) > INT_TOL:
            bad.append(f"integrality of {v.name}")
    for i, con in enumerate(problem.constraints):
        lhs = sum(coef * vals[name] for name, coef in con.coefficients.items())
        ok = {"<=": lhs <= con.rhs + tol,
              ">=": lhs >= con.rhs - tol,
              "=": abs(lhs - con.rhs) <= tol}[con.sense]
        if not ok:
            bad.append(f"row {i}")
    return bad
