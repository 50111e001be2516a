"""Moment-matrix semidefinite relaxation: assembly and conic solving.

The degree-d relaxation collects all moments <<Y^alpha>> with |alpha| <= 2d,
eliminates those forced to vanish by the model's sign symmetry, and imposes

  * positive semidefiniteness of the moment matrix over the degree-d basis,
  * one stationarity row <<L Y^alpha>> = 0 per admissible alpha,
  * localization rows <<Y^beta g>> = 0 for each support constraint g,
  * the normalization <<1>> = 1.

Assembly is exact over the rationals; floats appear only in the solver
adapter.  Before handing the cone program to Clarabel, :func:`solve` applies
two presolve reductions that leave the feasible set unchanged:

  1. the affine equality system is parameterized by its solution set
     (minimum-norm particular solution plus nullspace basis), and
  2. the moment matrix is restricted to the orthogonal complement of the
     null directions g*h implied by the support constraints (facial
     reduction).  Without this step the feasible moment matrices have no
     interior and interior-point solvers fail for d >= 7.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import clarabel
import numpy as np
import scipy.sparse as sp

from .model import SdeModel
from .poly import MultiIndex, Polynomial, enumerate_monomials, total_degree

Sense = str  # "min" | "max"


class SolveStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    NEAR_OPTIMAL = "near-optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical-failure"


_CLARABEL_STATUS = {
    "Solved": SolveStatus.OPTIMAL,
    "AlmostSolved": SolveStatus.NEAR_OPTIMAL,
    "PrimalInfeasible": SolveStatus.INFEASIBLE,
    "AlmostPrimalInfeasible": SolveStatus.INFEASIBLE,
    "DualInfeasible": SolveStatus.UNBOUNDED,
    "AlmostDualInfeasible": SolveStatus.UNBOUNDED,
}


@dataclass(frozen=True)
class SolverSettings:
    """Conic solver settings; defaults target desk-scale d <= 9 in doubles."""

    tol_feas: float = 1e-8
    tol_gap: float = 1e-8
    max_iter: int = 500
    verbose: bool = False


@dataclass(frozen=True)
class MomentIndex:
    """Deterministic indexing of moments for a degree-d relaxation.

    ``basis`` are the moment-matrix rows/columns (graded lex, |alpha| <= d);
    ``moment_ids`` maps every surviving |alpha| <= 2d multi-index to a dense
    variable id; ``eliminated`` holds the multi-indices pinned to zero by the
    sign symmetry.
    """

    nvars: int
    degree: int
    basis: tuple[MultiIndex, ...]
    moment_ids: dict[MultiIndex, int]
    eliminated: frozenset[MultiIndex]

    @property
    def n_moments(self) -> int:
        return len(self.moment_ids)

    def moment_id(self, alpha: MultiIndex) -> int | None:
        """Dense id of <<Y^alpha>>, or None when eliminated."""
        alpha = tuple(alpha)
        mid = self.moment_ids.get(alpha)
        if mid is None and alpha not in self.eliminated:
            raise KeyError(f"multi-index {alpha} exceeds degree 2d = {2 * self.degree}")
        return mid


def build_moment_index(model: SdeModel, d: int) -> MomentIndex:
    """Index the moments of a degree-d relaxation for ``model``."""
    if d < 1:
        raise ValueError(f"relaxation degree must be >= 1, got {d}")
    basis = tuple(enumerate_monomials(model.nvars, d))
    moment_ids: dict[MultiIndex, int] = {}
    eliminated = set()
    for alpha in enumerate_monomials(model.nvars, 2 * d):
        if model.moment_vanishes(alpha):
            eliminated.add(alpha)
        else:
            moment_ids[alpha] = len(moment_ids)
    return MomentIndex(model.nvars, d, basis, moment_ids, frozenset(eliminated))


@dataclass(frozen=True)
class EqualityRow:
    """Sparse linear equality sum_k coeffs[k] * m_k = rhs over moment ids."""

    coeffs: dict[int, Fraction]
    rhs: Fraction = Fraction(0)
    label: str = ""


def _row_from_poly(p: Polynomial, index: MomentIndex, label: str,
                   rhs: Fraction = Fraction(0)) -> EqualityRow | None:
    """Turn <<p>> = rhs into a row; None when all terms are eliminated."""
    coeffs: dict[int, Fraction] = {}
    for alpha, c in p.items():
        mid = index.moment_ids.get(alpha)
        if mid is None:
            if alpha in index.eliminated:
                continue
            raise ValueError(f"moment {alpha} of degree {total_degree(alpha)} "
                             f"exceeds 2d = {2 * index.degree}")
        coeffs[mid] = coeffs.get(mid, Fraction(0)) + c
    coeffs = {k: v for k, v in coeffs.items() if v != 0}
    if not coeffs and rhs == 0:
        return None
    return EqualityRow(coeffs, rhs, label)


def normalization_row(index: MomentIndex) -> EqualityRow:
    unit = (0,) * index.nvars
    return EqualityRow({index.moment_ids[unit]: Fraction(1)}, Fraction(1), "normalization")


def stationarity_rows(model: SdeModel, index: MomentIndex) -> list[EqualityRow]:
    """Rows <<L Y^alpha>> = 0 for |alpha| + max(d_mu-1, deg D - 2) <= 2d."""
    limit = 2 * index.degree - model.generator_degree_increase()
    rows = []
    for alpha in enumerate_monomials(model.nvars, max(limit, 0)):
        if total_degree(alpha) == 0:
            continue  # L 1 = 0 identically
        image = model.generator_apply(Polynomial.monomial(alpha))
        row = _row_from_poly(image, index, f"stationarity {alpha}")
        if row is not None:
            rows.append(row)
    return rows


def localization_rows(model: SdeModel, index: MomentIndex) -> list[EqualityRow]:
    """Rows <<Y^beta g>> = 0 for each constraint g and |beta| <= 2d - deg g."""
    rows = []
    for k, g in enumerate(model.constraints):
        limit = 2 * index.degree - g.degree()
        for beta in enumerate_monomials(model.nvars, max(limit, 0)):
            row = _row_from_poly(Polynomial.monomial(beta) * g, index,
                                 f"localization[{k}] {beta}")
            if row is not None:
                rows.append(row)
    return rows


@dataclass
class MomentProblem:
    """Assembled relaxation: PSD moment-matrix block plus equality rows."""

    model: SdeModel
    index: MomentIndex
    equality_rows: tuple[EqualityRow, ...]
    objective: dict[int, Fraction]
    sense: Sense
    _presolve: "_Presolve | None" = field(default=None, repr=False, compare=False)

    @property
    def psd_dim(self) -> int:
        return len(self.index.basis)

    def psd_entry(self, i: int, j: int) -> int | None:
        """Moment id of entry (i, j) of the moment matrix; None means 0."""
        alpha = tuple(a + b for a, b in zip(self.index.basis[i], self.index.basis[j]))
        return self.index.moment_ids.get(alpha)

    def objective_vector(self) -> np.ndarray:
        q = np.zeros(self.index.n_moments)
        for mid, c in self.objective.items():
            q[mid] = float(c)
        return q


def assemble(model: SdeModel, d: int, objective: Polynomial, sense: Sense = "min",
             extra_rows: tuple[EqualityRow, ...] = ()) -> MomentProblem:
    """Build the degree-d moment relaxation with the given linear objective.

    Objectives that are odd under the model's sign symmetry are rejected:
    their expectation is identically zero and bounding them is a user error.
    """
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    if objective.nvars != model.nvars:
        raise ValueError("objective nvars does not match model")
    index = build_moment_index(model, d)
    if objective.degree() > 2 * d:
        raise ValueError(f"objective degree {objective.degree()} exceeds 2d = {2 * d}")
    obj: dict[int, Fraction] = {}
    dropped = []
    for alpha, c in objective.items():
        mid = index.moment_ids.get(alpha)
        if mid is None:
            dropped.append(alpha)
        else:
            obj[mid] = obj.get(mid, Fraction(0)) + c
    if dropped:
        raise ValueError(
            f"objective terms {dropped} are odd under the model's sign symmetry; "
            "their expectation is identically zero")
    rows = (normalization_row(index),
            *stationarity_rows(model, index),
            *localization_rows(model, index),
            *extra_rows)
    return MomentProblem(model, index, rows, obj, sense)


# ---------------------------------------------------------------------------
# solver adapter


class _Presolve:
    """Float-side reductions shared between the min and max solves."""

    def __init__(self, problem: MomentProblem):
        index = problem.index
        n_mom = index.n_moments
        nb = len(index.basis)

        # dense equality system A m = b
        rows = problem.equality_rows
        A = np.zeros((len(rows), n_mom))
        b = np.zeros(len(rows))
        for r, row in enumerate(rows):
            for k, c in row.coeffs.items():
                A[r, k] = float(c)
            b[r] = float(row.rhs)
        U_svd, s, Vt = np.linalg.svd(A, full_matrices=True)
        tol = (s[0] if len(s) else 0.0) * max(A.shape) * np.finfo(float).eps
        rank = int((s > tol).sum())
        self.rank = rank
        self.rank_margin = float(s[rank - 1] / s[0]) if rank else 1.0
        self.m0 = Vt[:rank].T @ ((U_svd[:, :rank].T @ b) / s[:rank])
        self.F = np.ascontiguousarray(Vt[rank:].T)  # n_mom x k free directions

        # facial reduction basis from support-constraint null directions
        basis_pos = {alpha: i for i, alpha in enumerate(index.basis)}
        null_cols = []
        for g in problem.model.constraints:
            if g.degree() > index.degree:
                continue
            for h in enumerate_monomials(index.nvars, index.degree - g.degree()):
                v = np.zeros(nb)
                for alpha, c in (Polynomial.monomial(h) * g).items():
                    v[basis_pos[alpha]] = float(c)
                null_cols.append(v)
        if null_cols:
            V = np.array(null_cols).T
            Uv, sv, _ = np.linalg.svd(V, full_matrices=True)
            rv = int((sv > sv[0] * nb * np.finfo(float).eps).sum())
            self.U = np.ascontiguousarray(Uv[:, rv:])
        else:
            self.U = np.eye(nb)
        nbr = self.U.shape[1]
        self.psd_dim = nbr

        # entry map: moment id per (i, j) basis pair, -1 for eliminated
        pair_id = np.full((nb, nb), -1, dtype=np.int64)
        for i in range(nb):
            ai = index.basis[i]
            for j in range(i, nb):
                alpha = tuple(a + bb for a, bb in zip(ai, index.basis[j]))
                mid = index.moment_ids.get(alpha)
                if mid is not None:
                    pair_id[i, j] = pair_id[j, i] = mid
        self._pair_id = pair_id
        valid = pair_id >= 0

        def reduced(vec: np.ndarray) -> np.ndarray:
            M = np.zeros((nb, nb))
            M[valid] = vec[pair_id[valid]]
            return self.U.T @ M @ self.U

        # column-stacked upper triangle, the order Clarabel's PSD cone expects
        ntri = nbr * (nbr + 1) // 2
        iu = np.concatenate([np.arange(j + 1) for j in range(nbr)])
        ju = np.concatenate([np.full(j + 1, j) for j in range(nbr)])
        scale = np.where(iu == ju, 1.0, np.sqrt(2.0))

        def svec(M: np.ndarray) -> np.ndarray:
            return M[iu, ju] * scale

        k_free = self.F.shape[1]
        G = np.empty((ntri, k_free))
        for j in range(k_free):
            G[:, j] = svec(reduced(self.F[:, j]))
        self.A_cone = sp.csc_matrix(-G)
        self.b_cone = svec(reduced(self.m0))
        self.n_free = k_free


def _clarabel_settings(settings: SolverSettings) -> clarabel.DefaultSettings:
    st = clarabel.DefaultSettings()
    st.verbose = settings.verbose
    st.max_iter = settings.max_iter
    st.tol_feas = settings.tol_feas
    st.tol_gap_abs = settings.tol_gap
    st.tol_gap_rel = settings.tol_gap
    return st


@dataclass(frozen=True)
class SolveResult:
    value: float
    status: SolveStatus
    stats: dict


def solve(problem: MomentProblem, settings: SolverSettings | None = None,
          sense: Sense | None = None) -> SolveResult:
    """Solve the relaxation; returns the optimum and a faithful status.

    The reported value is the conic optimum plus the affine offset from the
    equality presolve; for sense "min" it is a lower bound on the true
    stationary expectation up to solver tolerances.  Non-optimal statuses
    are never coerced: unbounded problems report -inf (min) or +inf (max)
    and numerical failures report NaN.
    """
    settings = settings or SolverSettings()
    sense = sense or problem.sense
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    if problem._presolve is None:
        problem._presolve = _Presolve(problem)
    pre = problem._presolve
    sign = 1.0 if sense == "min" else -1.0
    q = problem.objective_vector()
    q_free = sign * (pre.F.T @ q)
    offset = float(q @ pre.m0)

    t0 = time.perf_counter()
    retried = False
    clset = _clarabel_settings(settings)
    sol = clarabel.DefaultSolver(
        sp.csc_matrix((pre.n_free, pre.n_free)), q_free,
        pre.A_cone, pre.b_cone,
        [clarabel.PSDTriangleConeT(pre.psd_dim)], clset).solve()
    if _CLARABEL_STATUS.get(str(sol.status)) is None:
        # Ruiz equilibration occasionally wrecks an otherwise well-posed
        # problem; one retry with it disabled recovers those cases.
        retried = True
        clset.equilibrate_enable = False
        sol = clarabel.DefaultSolver(
            sp.csc_matrix((pre.n_free, pre.n_free)), q_free,
            pre.A_cone, pre.b_cone,
            [clarabel.PSDTriangleConeT(pre.psd_dim)], clset).solve()
    wall = time.perf_counter() - t0

    status = _CLARABEL_STATUS.get(str(sol.status), SolveStatus.NUMERICAL_FAILURE)
    if status in (SolveStatus.OPTIMAL, SolveStatus.NEAR_OPTIMAL):
        value = sign * sol.obj_val + offset
    elif status is SolveStatus.UNBOUNDED:
        value = -math.inf if sense == "min" else math.inf
    elif status is SolveStatus.INFEASIBLE:
        # the true stationary measure is feasible; this signals an assembly bug
        value = math.inf if sense == "min" else -math.inf
    else:
        value = math.nan
    stats = {
        "iterations": int(sol.iterations),
        "solve_time": float(sol.solve_time),
        "wall_time": wall,
        "solver_status": str(sol.status),
        "psd_dim": pre.psd_dim,
        "n_free": pre.n_free,
        "rank_margin": pre.rank_margin,
        "retried_without_equilibration": retried,
    }
    gap = getattr(sol, "obj_val_dual", None)
    if gap is not None and math.isfinite(sol.obj_val):
        stats["primal_dual_gap"] = abs(sol.obj_val - gap)
    return SolveResult(value, status, stats)


@dataclass(frozen=True)
class BoundResult:
    """Two-sided bound on one linear observable at relaxation degree d."""

    name: str
    degree: int
    lower: float
    upper: float
    status_lower: SolveStatus
    status_upper: SolveStatus
    stats_lower: dict
    stats_upper: dict

    @property
    def rigorous(self) -> bool:
        """True when both endpoints carry optimal solver status."""
        return (self.status_lower is SolveStatus.OPTIMAL
                and self.status_upper is SolveStatus.OPTIMAL)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        # wall-clock timings stay out of serialized artifacts so that runs
        # with identical inputs produce byte-identical outputs
        def clean(stats):
            return {k: v for k, v in stats.items()
                    if k not in ("solve_time", "wall_time")}

        return {
            "objective": self.name,
            "degree": self.degree,
            "lower": self.lower,
            "upper": self.upper,
            "status_lower": self.status_lower.value,
            "status_upper": self.status_upper.value,
            "rigorous": self.rigorous,
            "stats_lower": clean(self.stats_lower),
            "stats_upper": clean(self.stats_upper),
        }


def _safe_bound(result: SolveResult, side: str) -> float:
    """Value for reports: failed solves degrade to the safe infinite bound."""
    if result.status in (SolveStatus.OPTIMAL, SolveStatus.NEAR_OPTIMAL):
        return result.value
    if result.status is SolveStatus.UNBOUNDED:
        return result.value
    return -math.inf if side == "lower" else math.inf


def bound_pair(model: SdeModel, d: int, objective: Polynomial,
               settings: SolverSettings | None = None,
               name: str = "objective") -> BoundResult:
    """Minimize and maximize one objective over the degree-d relaxation."""
    problem = assemble(model, d, objective, "min")
    lo = solve(problem, settings, "min")
    hi = solve(problem, settings, "max")
    return BoundResult(name, d,
                       _safe_bound(lo, "lower"), _safe_bound(hi, "upper"),
                       lo.status, hi.status, lo.stats, hi.stats)
