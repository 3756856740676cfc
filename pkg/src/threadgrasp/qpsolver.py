"""Operator-splitting solver for linearly-constrained quadratic programs.

Solves ``min x^T A x  s.t.  C x + f <= 0`` with A symmetric PSD. The
splitting introduces z = C x and alternates a regularized KKT solve with a
projection of z onto the feasible box, plus a scaled dual update; the KKT
matrix is factored once per solve and refactored only when the penalty
parameter adapts. A Ruiz equilibration pass keeps the iteration well behaved
when objective and constraint scales differ by orders of magnitude, which
they do here (the smoothing matrix grows like the cube of the span count).

A brute-force active-set enumerator doubles as a test oracle for small
instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
import scipy.special

from .errors import InfeasibleProblem, NumericalFailure, TooLarge


class SolveStatus(Enum):
    SOLVED = "solved"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SolverSettings:
    """Iteration controls.

    ``eps_prim``/``eps_dual`` act both as absolute floors and as relative
    factors against the natural scale of each residual, measured in the
    original (unscaled) units. ``feas_tol`` is the absolute constraint
    violation a returned SOLVED solution must satisfy; the polish step is
    what normally reaches it.
    """

    rho: float = 0.1
    sigma: float = 1e-6
    alpha: float = 1.6
    eps_prim: float = 1e-6
    eps_dual: float = 1e-6
    max_iter: int = 10_000
    adaptive_rho: bool = True
    polish: bool = True
    feas_tol: float = 1e-6
    eps_infeas: float = 1e-7
    equilibrate: bool = True


@dataclass(frozen=True)
class LcqpProblem:
    """``min x^T objective x + linear^T x  s.t.  constraint_matrix x + constraint_offset <= 0``.

    The linear term is optional plumbing; the reconstruction objective has
    none.
    """

    objective: np.ndarray
    constraint_matrix: np.ndarray
    constraint_offset: np.ndarray
    linear: np.ndarray | None = None

    def __post_init__(self):
        A = np.asarray(self.objective, dtype=float)
        C = np.atleast_2d(np.asarray(self.constraint_matrix, dtype=float))
        f = np.asarray(self.constraint_offset, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("objective must be square")
        if not np.allclose(A, A.T, atol=1e-10 * max(1.0, np.abs(A).max())):
            raise ValueError("objective must be symmetric")
        if C.shape[1] != A.shape[0]:
            raise ValueError("constraint matrix width must match objective size")
        if f.shape != (C.shape[0],):
            raise ValueError("constraint offset length must match row count")
        if C.shape[0] < 1:
            raise ValueError("need at least one constraint row")
        object.__setattr__(self, "objective", 0.5 * (A + A.T))
        object.__setattr__(self, "constraint_matrix", C)
        object.__setattr__(self, "constraint_offset", f)
        if self.linear is not None:
            q = np.asarray(self.linear, dtype=float)
            if q.shape != (A.shape[0],):
                raise ValueError("linear term length must match objective size")
            object.__setattr__(self, "linear", q)

    @property
    def dim(self) -> int:
        return self.objective.shape[0]

    @property
    def num_rows(self) -> int:
        return self.constraint_matrix.shape[0]

    def objective_value(self, x: np.ndarray) -> float:
        val = float(x @ self.objective @ x)
        if self.linear is not None:
            val += float(self.linear @ x)
        return val

    def max_violation(self, x: np.ndarray) -> float:
        return float(np.max(self.constraint_matrix @ x + self.constraint_offset))


@dataclass
class LcqpSolution:
    x: np.ndarray
    status: SolveStatus
    primal_residual: float
    dual_residual: float
    iterations: int
    dual: np.ndarray = field(repr=False, default=None)
    polished: bool = False


def _ruiz_equilibrate(P, q, C, u, iters=15):
    """Symmetric diagonal scaling toward unit row/column inf-norms.

    Returns scaled (P, q, C, u) plus the diagonal scalings D (variables),
    E (rows), and the cost scalar c.
    """
    n, r = P.shape[0], C.shape[0]
    D = np.ones(n)
    E = np.ones(r)
    c = 1.0
    Ps, qs, Cs, us = P.copy(), q.copy(), C.copy(), u.copy()
    for _ in range(iters):
        col_norm = np.maximum(
            np.abs(Ps).max(axis=0), np.abs(Cs).max(axis=0) if r else 0.0
        )
        col_norm[col_norm == 0.0] = 1.0
        d = 1.0 / np.sqrt(col_norm)
        row_norm = np.abs(Cs).max(axis=1)
        row_norm[row_norm == 0.0] = 1.0
        e = 1.0 / np.sqrt(row_norm)
        Ps = Ps * d[:, None] * d[None, :]
        qs = qs * d
        Cs = Cs * e[:, None] * d[None, :]
        D *= d
        E *= e
        # Cost normalization keeps the objective from dwarfing the duals.
        gamma = max(np.abs(Ps).max(), np.abs(qs).max() if np.any(qs) else 0.0)
        if gamma > 0:
            g = 1.0 / gamma
            Ps *= g
            qs *= g
            c *= g
    us = us * E
    return Ps, qs, Cs, us, D, E, c


class _Kkt:
    """Factored reduced KKT system (P + sigma I + rho C^T C form)."""

    def __init__(self, P, C, sigma, rho, sparse):
        self.sparse = sparse
        n, r = P.shape[0], C.shape[0]
        if sparse:
            K = sp.bmat(
                [
                    [sp.csc_matrix(P) + sigma * sp.eye(n), sp.csc_matrix(C).T],
                    [sp.csc_matrix(C), -sp.eye(r) / rho],
                ],
                format="csc",
            )
            try:
                self._lu = spla.splu(K)
            except RuntimeError as exc:  # pragma: no cover - singular KKT
                raise NumericalFailure(f"KKT factorization failed: {exc}") from exc
        else:
            K = np.block(
                [
                    [P + sigma * np.eye(n), C.T],
                    [C, -np.eye(r) / rho],
                ]
            )
            try:
                self._lu = scipy.linalg.lu_factor(K)
            except (ValueError, scipy.linalg.LinAlgError) as exc:
                raise NumericalFailure(f"KKT factorization failed: {exc}") from exc

    def solve(self, rhs):
        if self.sparse:
            return self._lu.solve(rhs)
        return scipy.linalg.lu_solve(self._lu, rhs)


def solve(
    problem: LcqpProblem,
    settings: SolverSettings | None = None,
    warm_start: np.ndarray | None = None,
    warm_start_dual: np.ndarray | None = None,
) -> LcqpSolution:
    """ADMM solve of the LCQP, with optional primal/dual warm start.

    Convergence requires both the primal residual ``|Cx - z|_inf`` and dual
    residual ``|2Ax + q + C^T y|_inf`` to drop below their tolerances
    (absolute plus a small relative term). On convergence an equality-solve
    polish on the detected active set sharpens feasibility to near machine
    precision. Divergence of the dual sequence with a vanishing ``C^T dy``
    is reported as infeasibility.
    """
    settings = settings or SolverSettings()
    n, r = problem.dim, problem.num_rows
    P0 = 2.0 * problem.objective  # standard-form Hessian of x^T A x
    q0 = problem.linear.copy() if problem.linear is not None else np.zeros(n)
    C0 = problem.constraint_matrix
    u0 = -problem.constraint_offset

    if settings.equilibrate:
        P, q, C, u, D, E, cost_scale = _ruiz_equilibrate(P0, q0, C0, u0)
    else:
        P, q, C, u = P0.copy(), q0.copy(), C0.copy(), u0.copy()
        D, E, cost_scale = np.ones(n), np.ones(r), 1.0

    use_sparse = n + r > 400
    rho = settings.rho
    kkt = _Kkt(P, C, settings.sigma, rho, use_sparse)

    x = np.zeros(n) if warm_start is None else np.asarray(warm_start, float) / D
    y = (
        np.zeros(r)
        if warm_start_dual is None
        else np.asarray(warm_start_dual, float) * cost_scale / E
    )
    z = np.clip(C @ x, None, u)

    # Elementwise factors mapping scaled residual vectors back to original
    # units: primal rows divide by E, dual rows divide by cost_scale * D.
    dual_unscale = 1.0 / (cost_scale * D)

    best = (np.inf, np.inf, x.copy(), y.copy(), 0)
    status = SolveStatus.MAX_ITERATIONS
    iterations = settings.max_iter
    r_prim = r_dual = np.inf

    for it in range(1, settings.max_iter + 1):
        rhs = np.concatenate([settings.sigma * x - q, z - y / rho])
        sol = kkt.solve(rhs)
        x_tilde, nu = sol[:n], sol[n:]
        z_tilde = z + (nu - y) / rho

        x_next = settings.alpha * x_tilde + (1.0 - settings.alpha) * x
        z_relaxed = settings.alpha * z_tilde + (1.0 - settings.alpha) * z
        z_next = np.minimum(z_relaxed + y / rho, u)
        y_next = y + rho * (z_relaxed - z_next)

        dy = y_next - y
        x, z, y = x_next, z_next, y_next

        # Residual pieces in original units.
        Cx_u = (C @ x) / E
        z_u = z / E
        Px_u = (P @ x) * dual_unscale
        q_u = q * dual_unscale
        Cty_u = (C.T @ y) * dual_unscale
        r_prim = float(np.abs(Cx_u - z_u).max())
        r_dual = float(np.abs(Px_u + q_u + Cty_u).max())
        prim_scale = max(np.abs(Cx_u).max(), np.abs(z_u).max())
        dual_scale = max(
            np.abs(Px_u).max(), np.abs(Cty_u).max(), np.abs(q_u).max(initial=0.0)
        )
        eps_p = settings.eps_prim * (1.0 + prim_scale)
        eps_d = settings.eps_dual * (1.0 + dual_scale)

        if r_prim + r_dual < best[0] + best[1]:
            best = (r_prim, r_dual, x.copy(), y.copy(), it)

        if r_prim <= eps_p and r_dual <= eps_d:
            status = SolveStatus.SOLVED
            iterations = it
            break

        # Periodic polish probe: from a decent iterate the active-set
        # refinement often lands the exact optimum long before the ADMM
        # tail converges.
        if settings.polish and it % 250 == 0 and r_prim <= 100.0 * eps_p:
            probe = _polish(problem, P, q, C, u, D, E, cost_scale, x, y, settings)
            if probe is not None:
                x_pol, y_pol = probe
                return LcqpSolution(
                    x=x_pol,
                    status=SolveStatus.SOLVED,
                    primal_residual=max(problem.max_violation(x_pol), 0.0),
                    dual_residual=float(
                        np.abs(P0 @ x_pol + q0 + C0.T @ y_pol).max()
                    ),
                    iterations=it,
                    dual=y_pol,
                    polished=True,
                )

        if it % 25 == 0 and _primal_infeasible(dy, C, u, settings.eps_infeas):
            sol_x = D * best[2]
            return LcqpSolution(
                x=sol_x,
                status=SolveStatus.INFEASIBLE,
                primal_residual=float(problem.max_violation(sol_x)),
                dual_residual=best[1],
                iterations=it,
                dual=E * best[3] / cost_scale,
            )

        if settings.adaptive_rho and it % 50 == 0 and r_dual > 0 and r_prim > 0:
            scale = np.sqrt(
                (r_prim / max(prim_scale, 1e-12)) / (r_dual / max(dual_scale, 1e-12))
            )
            if scale > 5.0 or scale < 0.2:
                rho = float(np.clip(rho * scale, 1e-6, 1e6))
                kkt = _Kkt(P, C, settings.sigma, rho, use_sparse)

    if status is not SolveStatus.SOLVED:
        r_prim, r_dual, x, y, _ = best

    x_out = D * x
    y_out = E * y / cost_scale

    polished = False
    if settings.polish and status is not SolveStatus.INFEASIBLE:
        pol = _polish(problem, P, q, C, u, D, E, cost_scale, x, y, settings)
        if pol is not None:
            x_out, y_out = pol
            polished = True
            # A verified KKT point is optimal regardless of how the
            # iteration stopped.
            status = SolveStatus.SOLVED

    # Report residuals in the original (unscaled) units.
    violation = max(problem.max_violation(x_out), 0.0)
    dual_res = float(np.abs(P0 @ x_out + q0 + C0.T @ y_out).max())
    if status is SolveStatus.SOLVED and violation > settings.feas_tol:
        status = SolveStatus.MAX_ITERATIONS

    return LcqpSolution(
        x=x_out,
        status=status,
        primal_residual=violation,
        dual_residual=dual_res,
        iterations=iterations if status is SolveStatus.SOLVED else settings.max_iter,
        dual=y_out,
        polished=polished,
    )


def _primal_infeasible(dy, C, u, eps):
    norm = np.abs(dy).max()
    if norm <= 1e-14:
        return False
    v = dy / norm
    if np.abs(C.T @ v).max() > eps:
        return False
    # One-sided rows: a certificate must not push on the absent lower bound.
    if v.min() < -eps:
        return False
    return float(u @ np.maximum(v, 0.0)) < -eps


def _eq_qp_solve(P, q, Ca, ua, sigma):
    """Regularized equality-constrained QP solve with iterative refinement."""
    n, k = P.shape[0], Ca.shape[0]
    K = np.zeros((n + k, n + k))
    K[:n, :n] = P + sigma * np.eye(n)
    K[:n, n:] = Ca.T
    K[n:, :n] = Ca
    K[n:, n:] = -sigma * np.eye(k)
    K_exact = K.copy()
    K_exact[:n, :n] = P
    K_exact[n:, n:] = 0.0
    rhs = np.concatenate([-q, ua])
    sol = np.linalg.solve(K, rhs)
    for _ in range(3):
        resid = rhs - K_exact @ sol
        sol = sol + np.linalg.solve(K, resid)
    return sol[:n], sol[n:]


def _polish(problem, P, q, C, u, D, E, cost_scale, x, y, settings):
    """Active-set refinement around the (scaled) ADMM iterate.

    Runs on the equilibrated matrices so the regularization is meaningful,
    alternately dropping rows with negative multipliers and adding violated
    rows, then accepts only a verified KKT point of the original problem
    (feasible, dual-feasible, stationary). Returns unscaled (x, y) or None.
    """
    n, r = problem.dim, problem.num_rows
    C0 = problem.constraint_matrix
    u0 = -problem.constraint_offset
    P0 = 2.0 * problem.objective
    q0 = problem.linear if problem.linear is not None else np.zeros(n)

    slack = u - C @ x
    y_scale = max(np.abs(y).max(), 1.0)
    slack_scale = np.abs(u).max(initial=0.0) + 1.0
    active = set(np.flatnonzero((y > 1e-8 * y_scale) | (slack < 1e-6 * slack_scale)))

    seen: set[frozenset] = set()
    for _ in range(30):
        key = frozenset(active)
        if key in seen:
            return None  # cycling
        seen.add(key)
        S = sorted(active)
        Ca = C[S] if S else np.zeros((0, n))
        try:
            xs, lam = _eq_qp_solve(P, q, Ca, u[S], settings.sigma)
        except np.linalg.LinAlgError:
            return None
        lam_scale = max(np.abs(lam).max(initial=0.0), 1.0)
        drop = {S[i] for i in range(len(S)) if lam[i] < -1e-9 * lam_scale}
        x_new = D * xs
        resid = C0 @ x_new - u0
        # Violated rows in original units join the working set.
        add = {
            int(i)
            for i in np.flatnonzero(resid > 0.1 * settings.feas_tol)
            if i not in active
        }
        if not drop and not add:
            y_new = np.zeros(r)
            y_new[S] = np.maximum(lam, 0.0) * E[S] / cost_scale
            stat = np.abs(P0 @ x_new + q0 + C0.T @ y_new).max()
            stat_tol = 1e-7 * max(
                1.0,
                np.abs(P0 @ x_new).max(),
                np.abs(C0.T @ y_new).max(initial=0.0),
                np.abs(q0).max(initial=0.0),
            )
            if max(resid.max(initial=0.0), 0.0) <= settings.feas_tol and stat <= stat_tol:
                return x_new, y_new
            return None
        active -= drop
        active |= add
    return None


def active_set_oracle(problem: LcqpProblem) -> np.ndarray:
    """Exact global optimum by enumerating candidate active sets.

    Exponential in the row count; gated to 20 rows. For each subset of rows
    of size at most the dimension, solves the equality-constrained QP via
    its KKT system and keeps candidates that are primal feasible with
    non-negative multipliers; the winner has the lowest objective, ties
    broken lexicographically in x.
    """
    if problem.num_rows > 20:
        raise TooLarge(f"{problem.num_rows} rows exceeds the oracle gate of 20")
    n_subsets = sum(
        scipy.special.comb(problem.num_rows, k, exact=True)
        for k in range(min(problem.dim, problem.num_rows) + 1)
    )
    if n_subsets > 100_000:
        raise TooLarge(f"{n_subsets} candidate active sets exceed the oracle budget")
    P = 2.0 * problem.objective
    q = problem.linear if problem.linear is not None else np.zeros(problem.dim)
    C = problem.constraint_matrix
    u = -problem.constraint_offset
    n, r = problem.dim, problem.num_rows
    scale = max(np.abs(P).max(), np.abs(C).max(), 1.0)

    best_x = None
    best_obj = np.inf
    for size in range(0, min(n, r) + 1):
        for subset in itertools.combinations(range(r), size):
            S = list(subset)
            Ca = C[S]
            K = np.block([[P, Ca.T], [Ca, np.zeros((size, size))]])
            rhs = np.concatenate([-q, u[S]])
            sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
            if np.abs(K @ sol - rhs).max() > 1e-8 * scale:
                continue  # inconsistent KKT system for this subset
            x = sol[:n]
            lam = sol[n:]
            if problem.max_violation(x) > 1e-8 * scale:
                continue
            if size and lam.min() < -1e-8 * scale:
                continue
            obj = problem.objective_value(x)
            if best_x is None or obj < best_obj - 1e-12 * (1.0 + abs(best_obj)):
                best_obj, best_x = obj, x
            elif abs(obj - best_obj) <= 1e-9 * (1.0 + abs(best_obj)):
                for a, b in zip(x, best_x):
                    if a < b - 1e-12:
                        best_x = x
                        break
                    if a > b + 1e-12:
                        break
    if best_x is None:
        raise InfeasibleProblem("no KKT point found by enumeration")
    return best_x
