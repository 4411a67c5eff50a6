"""Adaptive-step primal-dual hybrid gradient solver for the lifted problem.

The iteration on the assembled saddle-point problem min_x max_y <Kx, y> + <c, x>
over the constrained primal and dual sets is

    y_{n+1} = P_dual(y_n + sigma K xbar_n)
    x_{n+1} = P_primal(x_n - tau (K^T y_{n+1} + c))
    xbar_{n+1} = 2 x_{n+1} - x_n

where P_dual projects the per-pixel (g, t) blocks onto the conjugate
epigraph (p, q stay free) and P_primal projects coefficient rows onto the
unit simplex and clamps the inequality multipliers at zero. Step sizes are
rebalanced from the primal and dual residuals; the balanced product
tau * sigma is preserved, so the convergence condition tau sigma |K|^2 <= 1
set at initialization keeps holding.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError
from .energies import epigraph_project_batch
from .lifting import DualVars, LiftedField, dual_lower_bound, repair_dual
from .projections import project_simplex, project_simplex_rows  # noqa: F401

__all__ = [
    "SolverConfig",
    "SolveReport",
    "PdhgState",
    "pdhg_solve",
    "residuals",
    "estimate_opnorm",
    "matrix_opnorm",
    "project_simplex",
    "project_simplex_rows",
]


@dataclass
class SolverConfig:
    tau0: float = None
    sigma0: float = None
    adapt_enabled: bool = True
    adapt_alpha0: float = 0.5
    adapt_eta: float = 0.95
    adapt_delta: float = 1.5
    max_iter: int = 10000
    tol: float = 1e-6
    check_every: int = 10
    deterministic: bool = True
    seed: int = 0

    def validate(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.check_every < 1:
            raise ValueError("check_every must be >= 1")
        if self.tau0 is not None and not self.tau0 > 0:
            raise ValueError("tau0 must be positive")
        if self.sigma0 is not None and not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        return self


@dataclass
class SolveReport:
    iterations: int
    termination: str
    saddle_value: float
    tau: float
    sigma: float
    primal_residuals: list = field(default_factory=list)
    dual_residuals: list = field(default_factory=list)
    checked_iterations: list = field(default_factory=list)


def matrix_opnorm(mat, iters=50, seed=0):
    """Power-iteration estimate of the largest singular value of ``mat``."""
    if mat.shape[1] == 0 or mat.shape[0] == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(mat.shape[1])
    norm_v = np.linalg.norm(v)
    if norm_v == 0.0:
        return 0.0
    v /= norm_v
    mat_t = mat.T
    estimate = 0.0
    for _ in range(iters):
        w = mat @ v
        estimate = np.linalg.norm(w)
        if estimate == 0.0:
            return 0.0
        v = mat_t @ w
        norm_v = np.linalg.norm(v)
        if norm_v == 0.0:
            return float(estimate)
        v /= norm_v
    return float(estimate)


def estimate_opnorm(problem, iters=50, seed=0):
    """Estimate of the operator norm of the assembled bilinear form."""
    return matrix_opnorm(problem.K, iters=iters, seed=seed)


class PdhgState:
    """Mutable iteration state; owns its vectors exclusively."""

    def __init__(self, problem, tau, sigma, alpha):
        self.problem = problem
        self.tau = float(tau)
        self.sigma = float(sigma)
        self.alpha = float(alpha)
        self.iteration = 0

        x0 = np.zeros(problem.primal_dim)
        problem.split_primal(x0)["u"][:] = 1.0 / problem.n_labels
        self.x = x0
        self.y = np.zeros(problem.dual_dim)
        self.xbar = x0.copy()
        self.x_prev = x0.copy()
        self.y_prev = self.y.copy()

    def _project_dual(self, y):
        parts = self.problem.split_dual(y)
        g = parts["g"]
        gp, tp = epigraph_project_batch(
            self.problem.reg, g.reshape(-1, self.problem.dim_s), parts["t"].reshape(-1)
        )
        g[:] = gp.reshape(g.shape)
        parts["t"][:] = tp.reshape(parts["t"].shape)

    def _project_primal(self, x):
        parts = self.problem.split_primal(x)
        parts["u"][:] = project_simplex_rows(parts["u"])
        np.maximum(parts["lam"], 0.0, out=parts["lam"])
        np.maximum(parts["mu"], 0.0, out=parts["mu"])

    def step(self):
        problem = self.problem
        np.copyto(self.x_prev, self.x)
        np.copyto(self.y_prev, self.y)
        y_new = self.y + self.sigma * (problem.K @ self.xbar)
        self._project_dual(y_new)
        self.y = y_new
        x_new = self.x - self.tau * (problem.KT @ self.y + problem.c)
        self._project_primal(x_new)
        self.xbar = 2.0 * x_new - self.x
        self.x = x_new
        self.iteration += 1

    def residuals(self):
        """Euclidean norms of the primal and dual iterate residuals."""
        if self.iteration == 0:
            raise RuntimeError("residuals are undefined before the first iteration")
        dx = self.x_prev - self.x
        dy = self.y_prev - self.y
        primal = dx / self.tau - self.problem.KT @ dy
        dual = dy / self.sigma - self.problem.K @ dx
        return float(np.linalg.norm(primal)), float(np.linalg.norm(dual))


def residuals(state):
    """Primal and dual residual norms of a solver state."""
    return state.residuals()


def _adapt_steps(state, r_norm, s_norm, config):
    """Rebalance step sizes by residual comparison.

    A dominant primal residual means the primal iterate is the one lagging
    behind, so its step grows (and the dual step shrinks by the same factor,
    keeping tau * sigma constant); symmetrically for a dominant dual
    residual. The rebalancing rate alpha decays geometrically with every
    adaptation so the step sizes settle.
    """
    if r_norm > config.adapt_delta * s_norm:
        state.tau /= 1.0 - state.alpha
        state.sigma *= 1.0 - state.alpha
        state.alpha *= config.adapt_eta
    elif s_norm > config.adapt_delta * r_norm:
        state.tau *= 1.0 - state.alpha
        state.sigma /= 1.0 - state.alpha
        state.alpha *= config.adapt_eta


def pdhg_solve(problem, config=None, progress_path=None):
    """Run the primal-dual iteration until the stopping rule or max_iter.

    Both residual norms must fall below tol * sqrt(n), with n the number of
    entries of the respective variable vector, checked every ``check_every``
    iterations. Returns (lifted field, dual point, multipliers, report);
    the report's saddle value is the certified dual lower bound obtained
    from the feasibility-repaired final dual.
    """
    config = (config or SolverConfig()).validate()
    norm_k = estimate_opnorm(problem, seed=config.seed)
    if config.tau0 is None or config.sigma0 is None:
        default = 0.95 / norm_k if norm_k > 0 else 1.0
        tau = config.tau0 if config.tau0 is not None else default
        sigma = config.sigma0 if config.sigma0 is not None else default
    else:
        tau, sigma = config.tau0, config.sigma0
    if norm_k > 0 and tau * sigma * norm_k**2 > 1.0 + 1e-9:
        raise ValueError(
            "step sizes violate tau*sigma*|K|^2 <= 1 (product %.3g)"
            % (tau * sigma * norm_k**2)
        )

    state = PdhgState(problem, tau, sigma, config.adapt_alpha0)
    eps_primal = config.tol * np.sqrt(problem.primal_dim)
    eps_dual = config.tol * np.sqrt(problem.dual_dim)
    # rebalancing on single-iteration residual noise thrashes and burns the
    # adaptation budget, so adaptation keeps its own minimum cadence
    adapt_every = max(10, config.check_every)

    report = SolveReport(
        iterations=0, termination="max_iter", saddle_value=np.nan,
        tau=state.tau, sigma=state.sigma,
    )
    log_fh = open(progress_path, "w") if progress_path else None
    try:
        while state.iteration < config.max_iter:
            state.step()
            at_check = (
                state.iteration % config.check_every == 0
                or state.iteration == config.max_iter
            )
            if not at_check:
                continue
            r_norm, s_norm = state.residuals()
            if not (np.isfinite(r_norm) and np.isfinite(s_norm)):
                raise DivergenceError(state.iteration)
            report.primal_residuals.append(r_norm)
            report.dual_residuals.append(s_norm)
            report.checked_iterations.append(state.iteration)
            if log_fh is not None:
                log_fh.write(
                    json.dumps(
                        {
                            "iter": state.iteration,
                            "primal_res": r_norm,
                            "dual_res": s_norm,
                            "tau": state.tau,
                            "sigma": state.sigma,
                        }
                    )
                    + "\n"
                )
            if r_norm < eps_primal and s_norm < eps_dual:
                report.termination = "converged"
                break
            if config.adapt_enabled and state.iteration % adapt_every == 0:
                _adapt_steps(state, r_norm, s_norm, config)
    finally:
        if log_fh is not None:
            log_fh.close()

    report.iterations = state.iteration
    report.tau, report.sigma = state.tau, state.sigma

    primal = problem.split_primal(state.x)
    lifted = LiftedField(primal["u"].copy())
    dual = problem.dual_vars_from_vector(state.y)
    multipliers = {name: primal[name].copy() for name in ("lam", "mu", "nu")}
    report.saddle_value = dual_lower_bound(problem, repair_dual(problem, dual))
    return lifted, dual, multipliers, report
