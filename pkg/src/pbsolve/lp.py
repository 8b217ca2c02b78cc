"""Bounded-variable primal simplex over >= rows with 0/1 column bounds.

Rows a.x >= b are held as a.x - s = b with surplus s >= 0; infeasible
starting points get per-row artificial columns and a phase-one objective.
The basis (one variable per row) is kept between solves: re-solving an
unchanged model performs no pivots, and rows appended through add_rows
reuse the old basis thanks to the block-triangular extension.

Pivoting is Dantzig pricing, switching to Bland's rule after a run of
3*(rows+cols) degenerate steps.  All tolerances are absolute.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITER_LIMIT = "iteration-limit"

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-9
_REFACTOR_EVERY = 64


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    obj: float | None = None


class _Art:
    """Artificial column for one row slot."""

    __slots__ = ("row", "sign")

    def __init__(self, row, sign):
        self.row = row
        self.sign = sign


class LpModel:
    def __init__(self, n_cols: int, objective=None):
        self.n = n_cols
        self.lo = np.zeros(n_cols)
        self.hi = np.ones(n_cols)
        self.obj = np.zeros(n_cols)
        if objective is not None:
            for j, c in objective:
                self.obj[j] = c
        self.row_cols: list[np.ndarray] = []
        self.row_vals: list[np.ndarray] = []
        self.rhs: list[float] = []
        self.proven_infeasible = False
        self._fingerprints: set = set()
        self._basis: list | None = None  # per-row: col id or _Art
        self._at_upper: set[int] = set()
        self._last_x: np.ndarray | None = None  # structural + surplus values

    # -- model building -------------------------------------------------

    def set_bound(self, j: int, lo: float, hi: float):
        if lo > hi:
            raise ValueError("crossed bounds on column %d" % j)
        self.lo[j] = lo
        self.hi[j] = hi

    def set_objective(self, pairs):
        self.obj[:] = 0.0
        for j, c in pairs:
            self.obj[j] = c

    def add_row(self, coefs, rhs: float):
        cols = []
        vals = []
        for j, a in coefs:
            if a != 0:
                cols.append(j)
                vals.append(float(a))
        self.row_cols.append(np.asarray(cols, dtype=np.intp))
        self.row_vals.append(np.asarray(vals))
        self.rhs.append(float(rhs))
        if self._basis is not None:
            self._extend_basis_for_new_row()

    def add_rows(self, cuts) -> int:
        """Append cut rows, skipping fingerprint duplicates.

        An empty cut with positive rhs proves the node infeasible.
        """
        added = 0
        for cut in cuts:
            items = tuple(sorted((j, c) for j, c in cut.coefs.items() if c != 0))
            fp = (items, cut.rhs)
            if fp in self._fingerprints:
                continue
            self._fingerprints.add(fp)
            if not items:
                if cut.rhs > 0:
                    self.proven_infeasible = True
                continue
            self.add_row([(j - 1, c) for j, c in items], cut.rhs)
            added += 1
        return added

    def _extend_basis_for_new_row(self):
        i = len(self.rhs) - 1
        act = 0.0
        if self._last_x is not None:
            cols = self.row_cols[i]
            struct = cols[cols < self.n]
            sel = self.row_vals[i][cols < self.n]
            act = float(sel @ self._last_x[struct]) if len(struct) else 0.0
        resid = self.rhs[i] - act
        if resid <= FEAS_TOL:
            self._basis.append(self.n + i)  # surplus, value -resid >= 0
        else:
            self._basis.append(_Art(i, 1.0))

    # -- solve -----------------------------------------------------------

    def solve(self, iter_limit: int = 20000) -> LpSolution:
        if self.proven_infeasible:
            return LpSolution(INFEASIBLE)
        m = len(self.rhs)
        n = self.n
        if m == 0:
            x = np.where(self.obj > 0, self.lo, self.hi)
            x = np.where(self.obj == 0, self.lo, x)
            self._last_x = x.copy()
            return LpSolution(OPTIMAL, x, float(self.obj @ x))

        A = np.zeros((m, n))
        for i in range(m):
            A[i, self.row_cols[i]] = self.row_vals[i]
        b = np.asarray(self.rhs)

        state = _Simplex(A, b, self.lo, self.hi, self.obj,
                         self._basis, self._at_upper)
        status = state.run(iter_limit)
        if status == OPTIMAL:
            self._basis = state.export_basis()
            self._at_upper = state.export_at_upper()
            x = state.structural_values()
            self._last_x = x.copy()
            return LpSolution(OPTIMAL, x, float(self.obj @ x))
        if status == INFEASIBLE:
            self._basis = None
            return LpSolution(INFEASIBLE)
        self._basis = None
        return LpSolution(ITER_LIMIT)

    def basis_signature(self):
        """Hashable basis description, used by determinism checks."""
        if self._basis is None:
            return None
        sig = []
        for entry in self._basis:
            sig.append(("art", entry.row) if isinstance(entry, _Art) else entry)
        return tuple(sig), tuple(sorted(self._at_upper))


def lp_solve(model: LpModel, iter_limit: int = 20000) -> LpSolution:
    return model.solve(iter_limit)


class _Simplex:
    """One solve: columns are [structural | surplus | artificials]."""

    def __init__(self, A, b, lo, hi, cost, basis, at_upper):
        self.m, self.n = A.shape
        self.A = A
        self.b = b
        self.struct_lo = lo
        self.struct_hi = hi
        self.struct_cost = cost
        self.arts: list[_Art] = []
        self.at_upper = set(j for j in at_upper if j < self.n)
        self.basic = self._init_basis(basis, at_upper)
        self._resize_for_arts()
        self.Binv = None
        self.pivots = 0

    # column ids: j < n structural, n <= j < n+m surplus, rest artificial
    def _col(self, j):
        if j < self.n:
            return self.A[:, j]
        col = np.zeros(self.m)
        if j < self.n + self.m:
            col[j - self.n] = -1.0
        else:
            art = self.arts[j - self.n - self.m]
            col[art.row] = art.sign
        return col

    def _init_basis(self, basis, at_upper):
        """Adopt a stored basis when its shape still matches, else None."""
        if basis is None or len(basis) != self.m:
            return None
        out = []
        for entry in basis:
            if isinstance(entry, _Art):
                self.arts.append(_Art(entry.row, entry.sign))
                out.append(self.n + self.m + len(self.arts) - 1)
            else:
                out.append(entry)
        if len(set(out)) != self.m or any(
            isinstance(j, int) and j >= self.n + self.m for j in basis
        ):
            self.arts = []
            return None
        return out

    def _cold_basis(self):
        self.arts = []
        xstruct = np.array(
            [
                self._nb_value(j)
                for j in range(self.n)
            ]
        )
        resid = self.b - self.A @ xstruct
        basic = []
        for i in range(self.m):
            if resid[i] <= FEAS_TOL:
                basic.append(self.n + i)
            else:
                self.arts.append(_Art(i, 1.0))
                basic.append(self.n + self.m + len(self.arts) - 1)
        return basic

    def _nb_value(self, j):
        return self.hi[j] if j in self.at_upper else self.lo[j]

    def run(self, iter_limit):
        if self.basic is None:
            self.basic = self._cold_basis()
            self._resize_for_arts()
        if not self._factorize():
            self.at_upper = set(j for j in self.at_upper if j < self.n)
            self.basic = self._cold_basis()
            self._resize_for_arts()
            if not self._factorize():
                return ITER_LIMIT
        xb = self._basic_values()
        if self._out_of_bounds(xb):
            # stale warm basis: rebuild from scratch
            self.at_upper = set(j for j in self.at_upper if j < self.n)
            self.basic = self._cold_basis()
            self._resize_for_arts()
            if not self._factorize():
                return ITER_LIMIT

        n_art = len(self.arts)
        if n_art:
            phase1 = np.zeros(len(self.cost2))
            phase1[self.n + self.m:] = 1.0
            status = self._optimize(phase1, iter_limit)
            if status != OPTIMAL:
                return status
            xb = self._basic_values()
            art_sum = sum(
                xb[i]
                for i, j in enumerate(self.basic)
                if j >= self.n + self.m
            )
            nb_art = [
                j
                for j in range(self.n + self.m, self.n + self.m + n_art)
                if j not in self.basic
            ]
            if art_sum > 1e-7:
                return INFEASIBLE
            self.hi[self.n + self.m:] = 0.0
            for j in nb_art:
                self.at_upper.discard(j)
        return self._optimize(self.cost2, iter_limit)

    def _resize_for_arts(self):
        """Size the bound/cost arrays for [structural | surplus | arts]."""
        total = self.n + self.m + len(self.arts)
        self.lo = np.zeros(total)
        self.hi = np.zeros(total)
        self.lo[: self.n] = self.struct_lo
        self.hi[: self.n] = self.struct_hi
        self.hi[self.n:] = np.inf  # surplus and (phase-one) artificials
        self.cost2 = np.zeros(total)
        self.cost2[: self.n] = self.struct_cost

    def _factorize(self):
        B = np.column_stack([self._col(j) for j in self.basic])
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            return False
        return True

    def _nonbasic_rhs(self):
        rhs = self.b.astype(float).copy()
        basic_set = set(self.basic)
        # structural contributions
        for j in range(self.n):
            if j in basic_set:
                continue
            v = self.hi[j] if j in self.at_upper else self.lo[j]
            if v != 0.0:
                rhs -= self.A[:, j] * v
        # surplus/artificial nonbasic sit at 0 (artificials fixed there)
        return rhs

    def _basic_values(self):
        return self.Binv @ self._nonbasic_rhs()

    def _out_of_bounds(self, xb):
        for i, j in enumerate(self.basic):
            if xb[i] < self.lo[j] - 1e-7 or xb[i] > self.hi[j] + 1e-7:
                return True
        return False

    def _optimize(self, cost, iter_limit):
        m, n = self.m, self.n
        total = n + m + len(self.arts)
        degenerate = 0
        bland_after = 3 * (m + total)
        it = 0
        while True:
            it += 1
            if it > iter_limit:
                return ITER_LIMIT
            if self.pivots and self.pivots % _REFACTOR_EVERY == 0:
                if not self._factorize():
                    return ITER_LIMIT
                self.pivots += 1  # avoid immediate refactor loop
            xb = self._basic_values()
            y = cost[self.basic] @ self.Binv
            # reduced costs for all columns at once
            d = np.empty(total)
            d[:n] = cost[:n] - y @ self.A
            d[n: n + m] = cost[n: n + m] + y
            for k, art in enumerate(self.arts):
                d[n + m + k] = cost[n + m + k] - y[art.row] * art.sign
            basic_set = set(self.basic)

            entering = -1
            best_score = -np.inf
            use_bland = degenerate > bland_after
            for j in range(total):
                if j in basic_set or self.lo[j] >= self.hi[j] - 1e-15:
                    continue
                dj = d[j]
                if j in self.at_upper:
                    if dj > PIVOT_TOL:
                        score = dj
                    else:
                        continue
                else:
                    if dj < -PIVOT_TOL:
                        score = -dj
                    else:
                        continue
                if use_bland:
                    entering = j
                    break
                if score > best_score + 1e-15:
                    best_score = score
                    entering = j
            if entering < 0:
                return OPTIMAL

            delta = -1.0 if entering in self.at_upper else 1.0
            w = self.Binv @ self._col(entering)
            # x_B moves by -delta * w * t as entering moves t from its bound
            t_best = self.hi[entering] - self.lo[entering]
            leave_slot = -1
            leave_to_upper = False
            for i in range(m):
                wi = delta * w[i]
                vj = self.basic[i]
                if wi > PIVOT_TOL:
                    ti = (xb[i] - self.lo[vj]) / wi
                    hits_upper = False
                elif wi < -PIVOT_TOL:
                    if not np.isfinite(self.hi[vj]):
                        continue
                    ti = (self.hi[vj] - xb[i]) / (-wi)
                    hits_upper = True
                else:
                    continue
                ti = max(ti, 0.0)
                if (
                    ti < t_best - 1e-12
                    or (
                        ti < t_best + 1e-12
                        and leave_slot >= 0
                        and vj < self.basic[leave_slot]
                    )
                ):
                    t_best = ti
                    leave_slot = i
                    leave_to_upper = hits_upper
            if not np.isfinite(t_best):
                return ITER_LIMIT  # numerically stalled / unbounded ray

            if t_best <= 1e-11:
                degenerate += 1
            else:
                degenerate = 0

            if leave_slot < 0:
                # bound flip of the entering variable
                if entering in self.at_upper:
                    self.at_upper.discard(entering)
                else:
                    self.at_upper.add(entering)
                continue

            leaving = self.basic[leave_slot]
            self.basic[leave_slot] = entering
            if leave_to_upper:
                self.at_upper.add(leaving)
            else:
                self.at_upper.discard(leaving)
            self.at_upper.discard(entering)
            piv = w[leave_slot]
            if abs(piv) < PIVOT_TOL:
                if not self._factorize():
                    return ITER_LIMIT
                continue
            row = self.Binv[leave_slot, :] / piv
            self.Binv -= np.outer(w, row)
            self.Binv[leave_slot, :] = row
            self.pivots += 1

    def structural_values(self):
        xb = self._basic_values()
        x = np.empty(self.n)
        for j in range(self.n):
            x[j] = self.hi[j] if j in self.at_upper else self.lo[j]
        for i, j in enumerate(self.basic):
            if j < self.n:
                x[j] = xb[i]
        return x

    def export_basis(self):
        out = []
        for j in self.basic:
            if j >= self.n + self.m:
                out.append(self.arts[j - self.n - self.m])
            else:
                out.append(j)
        return out

    def export_at_upper(self):
        # only structural columns have a finite upper bound
        return set(j for j in self.at_upper if j < self.n)
