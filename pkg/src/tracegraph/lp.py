"""M-step linear program: maximize sum sigma_ij (W_ij - lambda) subject to
covering constraints and box bounds, with deterministic tie-breaking."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSet, FixedAssignments
from .errors import SolverError, ValidationError

_LOWER, _UPPER, _BASIC = 0, 1, 2


@dataclass
class SigmaVector:
    """sigma over active pairs, aligned to the sorted pair key array."""

    n_users: int
    pair_keys: np.ndarray
    values: np.ndarray

    def get(self, i: int, j: int) -> float:
        key = i * self.n_users + j
        pos = int(np.searchsorted(self.pair_keys, key))
        if pos >= self.pair_keys.size or self.pair_keys[pos] != key:
            return 0.0
        return float(self.values[pos])

    def as_dict(self) -> dict:
        n = self.n_users
        return {(int(k) // n, int(k) % n): float(v)
                for k, v in zip(self.pair_keys, self.values)}


@dataclass
class LPProblem:
    """coeffs are W - lambda per active pair; all <= 0 with max exactly 0."""

    coeffs: np.ndarray
    constraints: ConstraintSet
    fixed: FixedAssignments


def compute_lambda(w) -> float:
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        raise ValidationError("cannot take lambda of an empty W")
    return float(w.max())


class _Simplex:
    """Dense full-tableau simplex with box bounds, maximizing, Bland's rule.

    State persists across objective changes so lexicographic levels restart
    from the previous optimal basis.
    """

    def __init__(self, a_full: np.ndarray, b: np.ndarray,
                 lower: np.ndarray, upper: np.ndarray,
                 basis: np.ndarray, status: np.ndarray, tol: float):
        self.m, self.n = a_full.shape
        self.tol = tol
        bmat = a_full[:, basis]
        self.tab = np.linalg.solve(bmat, a_full)
        self.lower = lower.astype(float).copy()
        self.upper = upper.astype(float).copy()
        self.basis = basis.astype(np.int64).copy()
        self.status = status.astype(np.int8).copy()
        self.status[self.basis] = _BASIC
        x_n = np.where(self.status == _UPPER, self.upper, self.lower)
        x_n[self.basis] = 0.0
        self.xb = np.linalg.solve(bmat, b - a_full @ x_n)

    def x_full(self) -> np.ndarray:
        x = np.where(self.status == _UPPER, self.upper, self.lower)
        x[self.basis] = self.xb
        return x

    def reduced_costs(self, c: np.ndarray) -> np.ndarray:
        d = c - c[self.basis] @ self.tab
        d[self.basis] = 0.0
        return d

    def _ratio_test(self, direction: float, col: np.ndarray, flip: float):
        """Smallest step that hits a bound; ties go to the smallest basic
        var index (Bland), a tie with the bound flip goes to the flip."""
        best = flip
        leave = -1
        for r in range(self.m):
            a = direction * col[r]
            if a > self.tol:
                lim = (self.xb[r] - self.lower[self.basis[r]]) / a
            elif a < -self.tol:
                ub = self.upper[self.basis[r]]
                if not np.isfinite(ub):
                    continue
                lim = (ub - self.xb[r]) / (-a)
            else:
                continue
            lim = max(lim, 0.0)
            if lim < best - self.tol:
                best, leave = lim, r
            elif leave >= 0 and lim <= best + self.tol \
                    and self.basis[r] < self.basis[leave]:
                leave = r
        return best, leave

    def maximize(self, c: np.ndarray, max_iters: int) -> None:
        for _ in range(max_iters):
            d = self.reduced_costs(c)
            movable = self.upper > self.lower
            enter = ((self.status == _LOWER) & (d > self.tol) & movable) | \
                    ((self.status == _UPPER) & (d < -self.tol) & movable)
            cand = np.nonzero(enter)[0]
            if cand.size == 0:
                return
            j = int(cand[0])
            direction = 1.0 if self.status[j] == _LOWER else -1.0
            col = self.tab[:, j]

            delta, leave = self._ratio_test(direction, col,
                                            self.upper[j] - self.lower[j])
            if not np.isfinite(delta):
                raise SolverError("unbounded direction in sigma LP")

            self.xb -= delta * direction * col
            if leave < 0:
                self.status[j] = _UPPER if self.status[j] == _LOWER else _LOWER
                continue
            lv = int(self.basis[leave])
            self.status[lv] = _LOWER if direction * col[leave] > 0 else _UPPER
            start = self.lower[j] if self.status[j] == _LOWER else self.upper[j]
            self.basis[leave] = j
            self.status[j] = _BASIC
            self.xb[leave] = start + delta * direction
            piv = self.tab[leave, j]
            self.tab[leave] /= piv
            for i in range(self.m):
                if i != leave and self.tab[i, j] != 0.0:
                    self.tab[i] -= self.tab[i, j] * self.tab[leave]
        raise SolverError(f"simplex iteration cap {max_iters} exceeded "
                          f"(m={self.m}, n={self.n})")

    def pin_nonzero_reduced(self, c: np.ndarray) -> None:
        """Fix every nonbasic var with nonzero reduced cost at its bound.

        Such a var takes the same bound value in every optimum, so fixing it
        restricts the polytope to exactly the optimal face.
        """
        d = self.reduced_costs(c)
        for j in range(self.n):
            if self.status[j] == _BASIC or abs(d[j]) <= self.tol:
                continue
            v = self.lower[j] if self.status[j] == _LOWER else self.upper[j]
            self.lower[j] = self.upper[j] = v

    def pin(self, j: int, v: float) -> None:
        self.lower[j] = self.upper[j] = v


def _snap(v: float) -> float:
    if abs(v) <= 1e-9:
        return 0.0
    if abs(v - 1.0) <= 1e-9:
        return 1.0
    return v


def _solve_component(a_rows: np.ndarray, coeffs: np.ndarray,
                     pivot_tol: float = 1e-9) -> np.ndarray:
    """Lexicographic optimum of one independent component.

    Levels: the W - lambda objective, then min total sigma, then min each
    sigma in pair order.  a_rows is the dense 0/1 covering matrix.
    """
    m, n_x = a_rows.shape
    a_full = np.hstack([a_rows.astype(float), -np.eye(m)])
    b = np.ones(m)
    lower = np.zeros(n_x + m)
    upper = np.ones(n_x + m)
    upper[n_x:] = np.inf
    basis = np.arange(n_x, n_x + m, dtype=np.int64)
    status = np.full(n_x + m, _UPPER, dtype=np.int8)

    cap = 1000 + 200 * (n_x + m)
    spx = _Simplex(a_full, b, lower, upper, basis, status, pivot_tol)

    c1 = np.concatenate([coeffs, np.zeros(m)])
    spx.maximize(c1, cap)
    spx.pin_nonzero_reduced(c1)

    c2 = np.concatenate([-np.ones(n_x), np.zeros(m)])
    spx.maximize(c2, cap)
    spx.pin_nonzero_reduced(c2)

    for j in range(n_x):
        if spx.upper[j] <= spx.lower[j]:
            continue
        if spx.x_full()[j] <= pivot_tol:
            spx.pin(j, 0.0)
            continue
        c3 = np.zeros(n_x + m)
        c3[j] = -1.0
        spx.maximize(c3, cap)
        spx.pin(j, _snap(float(spx.x_full()[j])))

    return np.clip(spx.x_full()[:n_x], 0.0, 1.0)


class LPStructure:
    """Constraint structure prebuilt once; per-iteration costs swapped in.

    Components are connected parts of the var-constraint bipartite graph.
    Constraints never share vars across target users, so components are
    small; each is solved independently and the results concatenated.
    """

    def __init__(self, cs: ConstraintSet):
        self.cs = cs
        self.n_vars = cs.n_vars
        self.components: list[tuple[np.ndarray, np.ndarray]] = []
        if len(cs) == 0:
            return

        parent: dict[int, int] = {}

        def find(a: int) -> int:
            root = a
            while parent[root] != root:
                root = parent[root]
            while parent[a] != root:
                parent[a], a = root, parent[a]
            return root

        for c in range(len(cs)):
            lo, hi = cs.var_offsets[c], cs.var_offsets[c + 1]
            cols = cs.var_cols[lo:hi]
            for col in cols:
                parent.setdefault(int(col), int(col))
            r0 = find(int(cols[0]))
            for col in cols[1:]:
                parent[find(int(col))] = r0

        groups: dict[int, list[int]] = {}
        for c in range(len(cs)):
            root = find(int(cs.var_cols[cs.var_offsets[c]]))
            groups.setdefault(root, []).append(c)

        for root in sorted(groups):
            rows = groups[root]
            cols = np.unique(np.concatenate(
                [cs.var_cols[cs.var_offsets[c]:cs.var_offsets[c + 1]]
                 for c in rows]))
            a = np.zeros((len(rows), cols.size), dtype=np.float64)
            for r, c in enumerate(rows):
                lo, hi = cs.var_offsets[c], cs.var_offsets[c + 1]
                local = np.searchsorted(cols, cs.var_cols[lo:hi])
                a[r, local] = 1.0
            self.components.append((cols, a))

    def solve(self, coeffs: np.ndarray,
              fixed: FixedAssignments | None = None,
              tol: float = 1e-6) -> np.ndarray:
        """sigma per active pair; unconstrained unfixed pairs stay 0."""
        sigma = np.zeros(self.n_vars)
        for cols, a in self.components:
            x = _solve_component(a, coeffs[cols])
            if np.any(a @ x < 1.0 - tol):
                x = _solve_component(a, coeffs[cols], pivot_tol=1e-12)
                if np.any(a @ x < 1.0 - tol):
                    raise SolverError(
                        "covering constraint still violated after re-solve")
            sigma[cols] = x
        # pins win even if a fixed pair also sits in a leftover constraint;
        # raising a var can never break a covering row
        if fixed is not None and len(fixed):
            sigma[fixed.cols] = 1.0
        return sigma

    def check(self, sigma: np.ndarray, tol: float = 1e-6) -> bool:
        for cols, a in self.components:
            if np.any(a @ sigma[cols] < 1.0 - tol):
                return False
        return True


def solve_sigma_lp(prob: LPProblem) -> SigmaVector:
    structure = LPStructure(prob.constraints)
    values = structure.solve(prob.coeffs, prob.fixed)
    return SigmaVector(prob.constraints.n_users, prob.constraints.pair_keys,
                       values)


def write_lp(prob: LPProblem, fh) -> None:
    """Dump in CPLEX LP text format for cross-checking with other solvers."""
    cs = prob.constraints
    n = cs.n_users

    def name(col: int) -> str:
        key = int(cs.pair_keys[col])
        return f"x_{key // n}_{key % n}"

    fh.write("Maximize\n obj:")
    for col in range(cs.n_vars):
        coef = prob.coeffs[col]
        fh.write(f" {'+' if coef >= 0 else '-'} {abs(coef):.12g} {name(col)}")
    fh.write("\nSubject To\n")
    for c in range(len(cs)):
        lo, hi = cs.var_offsets[c], cs.var_offsets[c + 1]
        terms = " + ".join(name(int(col)) for col in cs.var_cols[lo:hi])
        fh.write(f" c{c}: {terms} >= 1\n")
    fh.write("Bounds\n")
    fixed_cols = set(prob.fixed.cols.tolist()) if prob.fixed is not None else set()
    for col in range(cs.n_vars):
        if col in fixed_cols:
            fh.write(f" {name(col)} = 1\n")
        else:
            fh.write(f" 0 <= {name(col)} <= 1\n")
    fh.write("End\n")
