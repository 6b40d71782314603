"""Discrete steady-state logistic energies, their minimization, and the
threshold experiments on bounded and periodic habitats.

The Dirichlet energy of a field u vanishing outside the habitat is

    E(u) = 1/2 h u^T A u
           + h sum_i [ mu_i |u_i|^3 / 3 - sigma_i u_i^2 / 2
                       - tau u_i (J*u)_i / 2 ]

whose nodal gradient (scaled by 1/h) is the steady logistic equation

    A u + mu |u| u - sigma u - tau (J*u) = 0.

Minimization is monotone: accepted steps strictly decrease the energy, a
Newton step on the nodal system is tried first and a backtracking gradient
step is the fallback, and the final iterate is replaced by its absolute
value, which can only lower the energy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, solve

from .errors import ConvergenceError
from .grids import (
    Field,
    Grid,
    PeriodicGrid,
    ProblemSpec,
    build_grid,
    build_kernel,
    problem_spec,
)
from .operators import (
    NonlocalMatrix,
    assemble_classical,
    assemble_dirichlet,
    assemble_periodic,
    convolution_matrix,
)
from .spectral import EigenPair, first_eigenpair, union_eigen_study

__all__ = [
    "SolveReport",
    "energy",
    "energy_gradient",
    "minimize",
    "solve_dirichlet",
    "solve_periodic",
    "check_fitting_bounds",
    "critical_radius",
    "CriticalRadius",
    "ext_crossing",
    "ExtCrossing",
    "congruence_experiment",
    "CongruenceResult",
    "beat_experiment",
    "BeatScan",
]


@dataclass
class SolveReport:
    """Outcome of one energy minimization."""

    u: Field
    energy: float
    el_residual: float
    iterations: int
    classification: str  # "trivial" or "nontrivial"
    history: list[float]
    converged: bool = True
    dichotomy_ok: bool = True


# ---------------------------------------------------------------------------
# descent engine, shared by the Dirichlet, periodic, transmission and
# forced (strategic) energies
# ---------------------------------------------------------------------------

class _EnergyModel:
    """E(u) = 1/2 h u^T A_eff u + h sum(mu |u|^3/3 + lin u^2/2 - src u)."""

    def __init__(self, a_eff: np.ndarray, h: float, mu: np.ndarray,
                 lin: np.ndarray, src: np.ndarray):
        self.a_eff = a_eff
        self.h = h
        self.mu = mu
        self.lin = lin
        self.src = src

    def energy(self, u: np.ndarray) -> float:
        bulk = self.mu * np.abs(u) ** 3 / 3.0 + self.lin * u**2 / 2.0 - self.src * u
        return float(0.5 * self.h * (u @ (self.a_eff @ u)) + self.h * bulk.sum())

    def gradient(self, u: np.ndarray) -> np.ndarray:
        return self.a_eff @ u + self.mu * np.abs(u) * u + self.lin * u - self.src

    def hessian(self, u: np.ndarray) -> np.ndarray:
        hess = self.a_eff.copy()
        hess[np.diag_indices_from(hess)] += 2.0 * self.mu * np.abs(u) + self.lin
        return hess


def _descend_loop(model: _EnergyModel, u: np.ndarray, tol: float, max_iter: int):
    e = model.energy(u)
    history = [e]
    grad_step = 1.0
    prev_u = None
    prev_g = None
    newton_failures = 0
    newton_skip = 0
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        g = model.gradient(u)
        if np.max(np.abs(g)) <= tol:
            converged = True
            break
        accepted = False
        # Newton step on the nodal system; skipped with exponential backoff
        # while the Hessian is indefinite (early, near the unstable zero)
        if newton_skip == 0:
            try:
                d = solve(model.hessian(u), -g, assume_a="sym")
            except LinAlgError:
                d = None
            if d is not None and np.all(np.isfinite(d)):
                slope = float(g @ d)
                if slope < 0.0:
                    t = 1.0
                    for _ in range(30):
                        trial = u + t * d
                        e_trial = model.energy(trial)
                        if e_trial <= e + 1e-4 * t * slope:
                            u, e, accepted = trial, e_trial, True
                            break
                        t *= 0.5
                if not accepted:
                    # endgame: the Newton correction may move the energy by
                    # less than roundoff resolves; accept on a solid residual
                    # drop as long as the energy stays flat to 1e-12 relative
                    trial = u + d
                    g_trial = model.gradient(trial)
                    e_trial = model.energy(trial)
                    if (np.max(np.abs(g_trial)) <= 0.5 * np.max(np.abs(g))
                            and e_trial <= e + 1e-12 * (1.0 + abs(e))):
                        u, e, accepted = trial, min(e_trial, e), True
            if accepted:
                newton_failures = 0
            else:
                newton_failures += 1
                newton_skip = min(2 ** newton_failures, 64)
        else:
            newton_skip -= 1
        if not accepted:
            # safeguarded gradient step, Barzilai-Borwein initial size
            t = grad_step
            if prev_g is not None:
                du = u - prev_u
                dg = g - prev_g
                curv = float(du @ dg)
                if curv > 0.0:
                    t = float(du @ du) / curv
            t = min(max(t, 1e-12), 1e8)
            prev_u, prev_g = u, g
            gnorm2 = float(g @ g)
            for _ in range(60):
                trial = u - t * g
                e_trial = model.energy(trial)
                if e_trial <= e - 1e-4 * t * gnorm2:
                    u, e, accepted = trial, e_trial, True
                    grad_step = 2.0 * t
                    break
                t *= 0.5
            if not accepted:
                # line search exhausted: numerically stationary
                converged = np.max(np.abs(model.gradient(u))) <= 10.0 * tol
                break
        history.append(e)
    return u, history, it, converged


def _minimize_model(model: _EnergyModel, init: np.ndarray, tol: float,
                    max_iter: int):
    u, history, it1, conv1 = _descend_loop(model, init.astype(float), tol, max_iter)
    ua = np.abs(u)
    if not np.array_equal(ua, u):
        e_abs = model.energy(ua)
        if e_abs <= history[-1]:
            u = ua
            history.append(e_abs)
            u, hist2, it2, conv1 = _descend_loop(model, u, tol, max(50, max_iter // 4))
            history.extend(hist2[1:])
            it1 += it2
    residual = float(np.max(np.abs(model.gradient(u))))
    return u, history, it1, residual, residual <= 10.0 * tol


def _multistart(model: _EnergyModel, starts, tol: float):
    """Descend from several starts; certify the lowest converged energy.

    An unconverged start is tolerated only while its stalled energy stays
    above the best converged one, otherwise the minimum is uncertain and a
    ConvergenceError is raised.  Ties break toward the smaller iterate
    (the trivial state).
    """
    outcomes = []
    for u0, budget in starts:
        u, history, iters, residual, ok = _minimize_model(model, u0, tol, budget)
        outcomes.append(
            (model.energy(u), float(np.max(np.abs(u))), ok, u, history, iters, residual)
        )
    converged = [o for o in outcomes if o[2]]
    if not converged:
        best_res = min(o[6] for o in outcomes)
        raise ConvergenceError(f"no start converged (best residual {best_res:.3e})")
    converged.sort(key=lambda o: (o[0], o[1]))
    best = converged[0]
    slack = 1e-9 * max(1.0, abs(best[0]))
    for o in outcomes:
        if not o[2] and o[0] < best[0] - slack:
            raise ConvergenceError(
                f"an unconverged start (residual {o[6]:.3e}) undercut the "
                "certified minimum"
            )
    return best[3], best[4], best[5], best[6]


def _spec_model(spec: ProblemSpec, op: NonlocalMatrix) -> _EnergyModel:
    if spec.tau > 0.0:
        b = convolution_matrix(spec.kernel, spec.grid)
        a_eff = op.a - spec.tau * b
    else:
        a_eff = op.a
    return _EnergyModel(
        a_eff=a_eff,
        h=spec.grid.h,
        mu=spec.mu.values,
        lin=-spec.sigma.values,
        src=np.zeros(spec.grid.n),
    )


def _residual_scale(spec: ProblemSpec) -> float:
    """Natural size of the nodal equation, (sigma - mu u) u ~ (max sigma + tau)^2."""
    return max(1.0, (spec.sigma.max() + spec.tau) ** 2)


def _finalize(spec: ProblemSpec, model: _EnergyModel, u, history, iterations,
              residual, converged) -> SolveReport:
    trivial = float(np.max(np.abs(u))) <= spec.triviality_tol
    if trivial:
        u = np.zeros_like(u)
        residual = 0.0
        e = 0.0
        if history and history[-1] >= 0.0:
            history = history + [0.0]
    else:
        e = model.energy(u)
    positive = u > spec.triviality_tol
    dichotomy_ok = bool(np.all(positive) or not np.any(positive))
    return SolveReport(
        u=Field(grid=spec.grid, values=u),
        energy=e,
        el_residual=residual,
        iterations=iterations,
        classification="trivial" if trivial else "nontrivial",
        history=history,
        converged=converged,
        dichotomy_ok=dichotomy_ok,
    )


# ---------------------------------------------------------------------------
# public energy interface
# ---------------------------------------------------------------------------

def energy(u: Field, spec: ProblemSpec, op: NonlocalMatrix) -> float:
    """Value of the discrete steady-state energy at u."""
    if u.grid != spec.grid:
        raise ValueError("field and problem live on different grids")
    return _spec_model(spec, op).energy(u.values)


def energy_gradient(u: Field, spec: ProblemSpec, op: NonlocalMatrix) -> Field:
    """Nodal gradient scaled by 1/h: A u + mu |u| u - sigma u - tau (J*u)."""
    if u.grid != spec.grid:
        raise ValueError("field and problem live on different grids")
    return Field(grid=spec.grid, values=_spec_model(spec, op).gradient(u.values))


def minimize(
    spec: ProblemSpec,
    op: NonlocalMatrix,
    init: Field,
    max_iter: int = 800,
) -> SolveReport:
    """Monotone line-searched descent from init; final iterate is |u|."""
    if init.grid != spec.grid:
        raise ValueError("initial field and problem live on different grids")
    if not np.all(np.isfinite(init.values)):
        raise ValueError("initial field must be finite")
    model = _spec_model(spec, op)
    u, history, iters, residual, ok = _minimize_model(
        model, init.values, spec.solver_tol * _residual_scale(spec), max_iter
    )
    report = _finalize(spec, model, u, history, iters, residual, ok)
    if not ok:
        raise ConvergenceError(
            f"descent stalled at residual {residual:.3e} after {iters} iterations",
            report=report,
        )
    return report


def _assemble_for(spec: ProblemSpec) -> NonlocalMatrix:
    if isinstance(spec.grid, PeriodicGrid):
        return assemble_periodic(spec.grid, spec.s)
    if spec.s == 1.0:
        return assemble_classical(spec.grid)
    return assemble_dirichlet(spec.grid, spec.s)


def _eigform(model: _EnergyModel, e: np.ndarray, h: float) -> float:
    """h e^T A_eff e: the quadratic part of the energy at the eigenvector."""
    return float(h * (e @ (model.a_eff @ e)))


def _eigen_start(spec: ProblemSpec, model: _EnergyModel,
                 pair: EigenPair) -> np.ndarray:
    """Amplitude from the small-amplitude expansion of the energy.

    E(eps e) = eps^2/2 [form - int sigma e^2 - tau int e (J*e)]
             + eps^3/3 int mu e^3; descend to its minimizer when the
    quadratic coefficient is negative, otherwise start microscopically.
    """
    e = pair.vector.values
    h = spec.grid.h
    c1 = 0.5 * (h * np.sum(spec.sigma.values * e**2) - _eigform(model, e, h))
    c2 = h * np.sum(spec.mu.values * np.abs(e) ** 3) / 3.0
    if c1 > 0.0 and c2 > 0.0:
        eps = 2.0 * c1 / (3.0 * c2)
    else:
        eps = 1e-8 * max(1.0, spec.sigma.max() + spec.tau)
    return eps * e


def solve_dirichlet(spec: ProblemSpec, max_iter: int = 800) -> SolveReport:
    """Assemble, minimize from two starts, return the lower-energy report.

    Start one is a microscopic constant perturbation of zero, start two
    rides the first eigenvector with the amplitude suggested by the
    small-amplitude expansion; ties break toward the trivial state.
    """
    if isinstance(spec.grid, PeriodicGrid):
        raise ValueError("use solve_periodic for periodic problems")
    op = _assemble_for(spec)
    model = _spec_model(spec, op)
    tiny = 0.1 * spec.triviality_tol
    pair = first_eigenpair(op, tol=min(1e-10, spec.solver_tol * 100))
    starts = [
        (_eigen_start(spec, model, pair), max_iter),
        (np.full(spec.grid.n, tiny), min(max_iter, 300)),
    ]
    u, history, iters, residual = _multistart(
        model, starts, spec.solver_tol * _residual_scale(spec)
    )
    return _finalize(spec, model, u, history, iters, residual, True)


def solve_periodic(spec: ProblemSpec, max_iter: int = 800) -> SolveReport:
    """Minimize the periodic energy over one cell.

    The second start is the constant suggested by the cell averages,
    which for constant coefficients is already the exact solution
    (mean sigma + tau) / mean mu.
    """
    if not isinstance(spec.grid, PeriodicGrid):
        raise ValueError("solve_periodic needs a PeriodicGrid problem")
    op = _assemble_for(spec)
    model = _spec_model(spec, op)
    h = spec.grid.h
    tiny = 0.1 * spec.triviality_tol
    mean_mu = h * np.sum(spec.mu.values)
    level = (h * np.sum(spec.sigma.values) + spec.tau) / mean_mu if mean_mu > 0 else 0.0
    starts = [(np.full(spec.grid.n, tiny), min(max_iter, 300))]
    if level > 0.0:
        starts.insert(0, (np.full(spec.grid.n, level), max_iter))
    u, history, iters, residual = _multistart(
        model, starts, spec.solver_tol * _residual_scale(spec)
    )
    return _finalize(spec, model, u, history, iters, residual, True)


# ---------------------------------------------------------------------------
# fitting bounds and experiments
# ---------------------------------------------------------------------------

def check_fitting_bounds(
    report: SolveReport,
    spec: ProblemSpec,
    ball: tuple[float, float] | None = None,
    m_level: float | None = None,
) -> dict:
    """Resource-fitting diagnostics of a converged solution.

    Always checks the a priori bound max u <= max sigma + tau; when a
    sub-interval is given, also reports the infimum of u there and its
    ratio against the resource level m_level.
    """
    if report.classification == "trivial":
        return {
            "max_u": 0.0,
            "bound_easy": spec.sigma.max() + spec.tau,
            "ok_easy": True,
            "inf_ball": 0.0,
            "ratio": 0.0,
        }
    u = report.u.values
    bound = spec.sigma.max() + spec.tau
    out = {
        "max_u": float(np.max(u)),
        "bound_easy": bound,
        "ok_easy": bool(
            np.max(u) <= bound + 10.0 * spec.solver_tol * max(1.0, bound)
        ),
        "inf_ball": 0.0,
        "ratio": 0.0,
    }
    if ball is not None:
        lo, hi = ball
        if not any(a <= lo and hi <= b for a, b in spec.grid.intervals):
            raise ValueError(f"ball ({lo}, {hi}) is not contained in any interval")
        mask = (spec.grid.nodes >= lo) & (spec.grid.nodes <= hi)
        out["inf_ball"] = float(np.min(u[mask]))
        if m_level:
            out["ratio"] = out["inf_ball"] / m_level
    return out


@dataclass(frozen=True)
class CriticalRadius:
    r_star: float
    predicted: float
    rel_gap: float
    lambda_base: float
    n_solves: int


def critical_radius(
    interval: tuple[float, float],
    s: float,
    h: float,
    solver_tol: float = 1e-10,
) -> CriticalRadius:
    """Bisect the dilation factor at which survival switches on.

    The habitat (a, b) is dilated to (r a, r b) and the unit-resource
    problem sigma = mu = 1, tau = 0 is solved; the survival threshold is
    predicted by lambda_s(Omega)^(1/(2s)).  Radii are snapped to the grid
    lattice, so the answer is resolved to one spacing.
    """
    base = build_grid([interval], h)
    lam = first_eigenpair(_assemble_variant_local(base, s)).lambda_
    predicted = lam ** (1.0 / (2.0 * s))
    length = interval[1] - interval[0]
    n_solves = 0

    def survives(m_cells: int) -> bool:
        nonlocal n_solves
        r = m_cells * h / length
        grid = build_grid([(r * interval[0], r * interval[1])], h)
        spec = problem_spec(grid, s, 1.0, 1.0, solver_tol=solver_tol)
        n_solves += 1
        return solve_dirichlet(spec).classification == "nontrivial"

    lo = int(np.floor(0.55 * predicted * length / h))
    hi = int(np.ceil(1.6 * predicted * length / h))
    lo = max(lo, 2)
    if survives(lo) or not survives(hi):
        raise ValueError("bisection bracket does not straddle the threshold")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if survives(mid):
            hi = mid
        else:
            lo = mid
    r_star = hi * h / length
    return CriticalRadius(
        r_star=r_star,
        predicted=predicted,
        rel_gap=abs(r_star - predicted) / predicted,
        lambda_base=lam,
        n_solves=n_solves,
    )


def _assemble_variant_local(grid: Grid, s: float) -> NonlocalMatrix:
    return assemble_classical(grid) if s == 1.0 else assemble_dirichlet(grid, s)


@dataclass(frozen=True)
class ExtCrossing:
    r_values: np.ndarray
    lambda_small_s: np.ndarray
    lambda_big_s: np.ndarray
    n_sign_changes: int
    crossing_estimate: float
    r_small: float
    r_large: float
    classifications: dict
    pattern_ok: bool


def ext_crossing(
    interval: tuple[float, float],
    s: float,
    big_s: float,
    r_values: Sequence[float],
    h: float,
    kernel_builder=None,
    solver_tol: float = 1e-10,
) -> ExtCrossing:
    """Survival comparison of a fast and a slow diffuser across dilations.

    Tabulates both eigenvalue curves over the dilation grid, locates the
    single sign change of their difference, and in each regime solves the
    two problems with resource and reach rates placed strictly between the
    eigenvalues (thirds of the gap), so exactly one species survives.
    """
    if not 0.0 < s < big_s <= 1.0:
        raise ValueError("exponents must satisfy 0 < s < S <= 1")
    length = interval[1] - interval[0]

    def snapped(r: float) -> float:
        return max(2, int(round(r * length / h))) * h / length

    rs = np.array(sorted({snapped(r) for r in r_values}))
    lam_s = np.empty(rs.size)
    lam_big = np.empty(rs.size)
    grids = []
    for i, r in enumerate(rs):
        grid = build_grid([(r * interval[0], r * interval[1])], h)
        grids.append(grid)
        lam_s[i] = first_eigenpair(_assemble_variant_local(grid, s)).lambda_
        lam_big[i] = first_eigenpair(_assemble_variant_local(grid, big_s)).lambda_
    diff = lam_big - lam_s
    signs = np.sign(diff)
    changes = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    if changes.size == 0:
        raise ValueError("dilation grid does not bracket a sign change")
    # analytic crossing of the two dilation power laws
    crossing = (lam_big[0] / lam_s[0] * rs[0] ** (2 * (big_s - s))) ** (
        1.0 / (2.0 * (big_s - s))
    )
    idx_small = 0
    idx_large = rs.size - 1
    classifications = {}
    pattern_ok = True
    for regime, idx in (("small", idx_small), ("large", idx_large)):
        grid = grids[idx]
        lo, hi = sorted((lam_s[idx], lam_big[idx]))
        gap = hi - lo
        sigma_r = lo + gap / 3.0
        tau_r = gap / 3.0
        rho = max(2 * h, int(round(rs[idx] * length / (8 * h))) * h)
        kb = kernel_builder or (lambda: build_kernel("uniform", rho, h))
        spec_kwargs = dict(tau=tau_r, kernel=kb(), solver_tol=solver_tol)
        rep_s = solve_dirichlet(problem_spec(grid, s, sigma_r, 1.0, **spec_kwargs))
        rep_big = solve_dirichlet(
            problem_spec(grid, big_s, sigma_r, 1.0, **spec_kwargs)
        )
        # in each regime only the species with the smaller eigenvalue survives
        expect_s = "nontrivial" if lam_s[idx] < lam_big[idx] else "trivial"
        expect_big = "trivial" if lam_s[idx] < lam_big[idx] else "nontrivial"
        classifications[regime] = {
            "r": float(rs[idx]),
            "sigma": sigma_r,
            "tau": tau_r,
            "fast": rep_s.classification,
            "slow": rep_big.classification,
            "expected_fast": expect_s,
            "expected_slow": expect_big,
        }
        pattern_ok = pattern_ok and rep_s.classification == expect_s
        pattern_ok = pattern_ok and rep_big.classification == expect_big
    return ExtCrossing(
        r_values=rs,
        lambda_small_s=lam_s,
        lambda_big_s=lam_big,
        n_sign_changes=int(changes.size),
        crossing_estimate=float(crossing),
        r_small=float(rs[idx_small]),
        r_large=float(rs[idx_large]),
        classifications=classifications,
        pattern_ok=bool(pattern_ok),
    )


@dataclass(frozen=True)
class CongruenceResult:
    lambda_single: float
    lambda_union: float
    gap: float
    admissible: bool
    sigma: float
    report_1: SolveReport | None
    report_2: SolveReport | None
    report_union: SolveReport | None
    union_positive_everywhere: bool


def congruence_experiment(
    interval_1: tuple[float, float],
    interval_2: tuple[float, float],
    s: float,
    h: float,
    solver_tol: float = 1e-10,
) -> CongruenceResult:
    """Sparse-resource effect on two congruent, disjoint habitats.

    Picks the resource rate at the midpoint of the eigenvalue window of the
    union versus a single habitat; each habitat alone then goes extinct
    while the union supports a positive population.  With s = 1 the window
    is empty and the experiment reports no admissible rate.
    """
    study = union_eigen_study(interval_1, interval_2, s, h)
    gap = study.gap
    if gap <= 1e-8 * study.lambda_single:
        return CongruenceResult(
            lambda_single=study.lambda_single,
            lambda_union=study.lambda_union,
            gap=gap,
            admissible=False,
            sigma=float("nan"),
            report_1=None,
            report_2=None,
            report_union=None,
            union_positive_everywhere=False,
        )
    sigma = study.lambda_union + 0.5 * gap
    reports = []
    union_spec = None
    for intervals in ([interval_1], [interval_2], [interval_1, interval_2]):
        grid = build_grid(intervals, h)
        union_spec = problem_spec(grid, s, sigma, 1.0, solver_tol=solver_tol)
        reports.append(solve_dirichlet(union_spec))
    rep_union = reports[2]
    positive = bool(np.all(rep_union.u.values > union_spec.triviality_tol))
    return CongruenceResult(
        lambda_single=study.lambda_single,
        lambda_union=study.lambda_union,
        gap=gap,
        admissible=True,
        sigma=sigma,
        report_1=reports[0],
        report_2=reports[1],
        report_union=rep_union,
        union_positive_everywhere=positive,
    )


@dataclass(frozen=True)
class BeatScan:
    m_values: np.ndarray
    beat_counts: np.ndarray
    max_excess: np.ndarray
    first_m: float | None


def beat_experiment(
    sigma_0: Field,
    s: float,
    m_values: Sequence[float],
    solver_tol: float = 1e-10,
) -> BeatScan:
    """Scan uplifts m of a dipped resource for population overshoot.

    For each m solves the problem with sigma_0 + m, mu = 1, tau = 0, and
    reports the nodes where u exceeds the local resource; returns the
    smallest m in the scan with a nonempty overshoot set.
    """
    grid = sigma_0.grid
    if not isinstance(grid, Grid):
        raise ValueError("the resource profile must live on a bounded grid")
    ms = np.asarray(sorted(m_values), dtype=float)
    counts = np.zeros(ms.size, dtype=int)
    excess = np.zeros(ms.size)
    any_nontrivial = False
    for i, m in enumerate(ms):
        spec = problem_spec(grid, s, sigma_0.values + m, 1.0, solver_tol=solver_tol)
        rep = solve_dirichlet(spec)
        if rep.classification == "nontrivial":
            any_nontrivial = True
            over = rep.u.values - (sigma_0.values + m)
            beating = over > 10.0 * solver_tol
            counts[i] = int(np.sum(beating))
            excess[i] = float(np.max(over))
    if not any_nontrivial:
        raise ValueError("no uplift in the scan produced a nontrivial solution")
    nonempty = np.nonzero(counts > 0)[0]
    first_m = float(ms[nonempty[0]]) if nonempty.size else None
    return BeatScan(
        m_values=ms, beat_counts=counts, max_excess=excess, first_m=first_m
    )
