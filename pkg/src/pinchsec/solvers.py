"""Small-scale convex machinery: dense linear SDPs, a projected supergradient
method for concave max-min programs over spectrahedra, convex QCQPs, and the
projection toolbox. Problem dimensions here are tens at most."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import cvxpy as cp
import numpy as np

DEFAULT_FEAS_TOL = 1e-8
DEFAULT_GAP_TOL = 1e-7


def _quiet_solve(prob: cp.Problem, **kwargs) -> None:
    """Solve while silencing cvxpy's inaccuracy warning; accuracy is judged
    afterwards from the reconstructed residuals instead."""
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Solution may be inaccurate")
        prob.solve(**kwargs)


@dataclass
class SolveStatus:
    status: str                    # "optimal" | "max_iters" | "infeasible"
    value: float
    iterate: object                # solution: ndarray, list of ndarrays, or (x, y)
    residuals: dict = field(default_factory=dict)
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


@dataclass
class LinearSDP:
    """min Tr(C X) s.t. Tr(A_i X) {<=,>=,==} b_i, X >= 0, optional Tr(X) <= cap."""

    C: np.ndarray
    constraints: list            # (A, sense, b) with sense in {"<=", ">=", "=="}
    dim: int
    trace_cap: Optional[float] = None


def solve_linear_sdp(
    problem: LinearSDP,
    feas_tol: float = DEFAULT_FEAS_TOL,
    gap_tol: float = DEFAULT_GAP_TOL,
) -> SolveStatus:
    """Interior-point solve of a dense Hermitian linear SDP.

    Returns the optimal X plus primal feasibility residual and the dual
    objective value reconstructed from the constraint multipliers (for
    weak-duality checks).
    """
    d = problem.dim
    # hermitian variable throughout; real data is a special case of complex
    problem = LinearSDP(C=np.asarray(problem.C, dtype=complex),
                        constraints=[(np.asarray(A, dtype=complex), s, b)
                                     for A, s, b in problem.constraints],
                        dim=d, trace_cap=problem.trace_cap)
    X = cp.Variable((d, d), hermitian=True)
    cons = [X >> 0]
    for A, sense, b in problem.constraints:
        expr = cp.real(cp.trace(A @ X))
        if sense == "<=":
            cons.append(expr <= b)
        elif sense == ">=":
            cons.append(expr >= b)
        elif sense == "==":
            cons.append(expr == b)
        else:
            raise ValueError(f"unknown sense {sense!r}")
    if problem.trace_cap is not None:
        cons.append(cp.real(cp.trace(X)) <= problem.trace_cap)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(problem.C @ X))), cons)
    try:
        _quiet_solve(prob, solver=cp.CLARABEL, tol_feas=feas_tol, tol_gap_rel=gap_tol)
    except cp.error.SolverError:
        return SolveStatus(status="infeasible", value=np.nan, iterate=None,
                           residuals={"reason": "solver error"})
    if prob.status in ("infeasible", "unbounded", "infeasible_inaccurate", "unbounded_inaccurate"):
        return SolveStatus(status="infeasible", value=np.nan, iterate=None,
                           residuals={"reason": prob.status})

    Xv = np.asarray(X.value)
    Xv = 0.5 * (Xv + Xv.conj().T)
    # primal feasibility residual
    res = 0.0
    for (A, sense, b), _ in zip(problem.constraints, cons[1:]):
        t = float(np.real(np.trace(A @ Xv)))
        if sense == "<=":
            res = max(res, t - b)
        elif sense == ">=":
            res = max(res, b - t)
        else:
            res = max(res, abs(t - b))
    # reconstruct the dual objective: L(X) = C.X + sum_le lam (A.X - b)
    #   + sum_ge mu (b - A.X) + sum_eq nu (A.X - b) + kappa (TrX - cap), X >= 0
    dual_val = 0.0
    for (A, sense, b), con in zip(problem.constraints, cons[1:]):
        lam = float(np.atleast_1d(con.dual_value)[0]) if con.dual_value is not None else 0.0
        if sense == "<=":
            dual_val -= lam * b
        elif sense == ">=":
            dual_val += lam * b
        else:
            dual_val -= lam * b
    if problem.trace_cap is not None and cons[-1].dual_value is not None:
        dual_val -= float(np.atleast_1d(cons[-1].dual_value)[0]) * problem.trace_cap
    if problem.trace_cap is not None:
        res = max(res, float(np.real(np.trace(Xv))) - problem.trace_cap)
    lmin = float(np.linalg.eigvalsh(Xv).min())
    res = max(res, -lmin)
    value = float(np.real(np.trace(problem.C @ Xv)))
    scale = max(1.0, abs(value))
    status = "optimal" if prob.status in ("optimal", "optimal_inaccurate") and res < feas_tol * scale else "max_iters"
    return SolveStatus(
        status=status, value=value, iterate=Xv,
        residuals={"primal_feas": res, "dual_value": dual_val,
                   "rel_gap": abs(value - dual_val) / scale},
        iterations=getattr(prob.solver_stats, "num_iters", 0) or 0,
    )


def project_power_ball(w: np.ndarray, P_t: float) -> np.ndarray:
    """Scale w onto the power ball iff ||w||^2 > P_t; otherwise unchanged."""
    nrm2 = float(np.real(np.vdot(w, w)))
    if nrm2 > P_t:
        return w * np.sqrt(P_t / nrm2)
    return np.array(w, copy=True)


def project_psd(H: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm: clamp negative eigenvalues to zero."""
    Hs = 0.5 * (H + H.conj().T)
    lam, V = np.linalg.eigh(Hs)
    lam = np.maximum(lam, 0.0)
    return (V * lam) @ V.conj().T


def rank_one_extract(
    W: np.ndarray,
    power: float,
    objective: Optional[Callable[[np.ndarray], float]] = None,
    trials: int = 200,
    rng=None,
) -> np.ndarray:
    """Feasible beamformer from a PSD matrix.

    Principal eigenvector scaled to the power budget when W is rank one
    (relative spectral gap below 1e-6); otherwise the best of `trials`
    Gaussian randomization samples projected to the power ball, scored by
    `objective` (the principal eigenvector always competes).
    """
    Ws = 0.5 * (W + W.conj().T)
    lam, V = np.linalg.eigh(Ws)
    lam = np.maximum(lam, 0.0)
    principal = V[:, -1] * np.sqrt(power)
    if Ws.shape[0] == 1 or lam[-1] <= 0 or lam[-2] / lam[-1] <= 1e-6 or objective is None:
        return principal
    rng = np.random.default_rng(rng)
    root = (V * np.sqrt(lam)) @ V.conj().T
    d = Ws.shape[0]
    best, best_val = principal, objective(principal)
    for _ in range(trials):
        g = (rng.standard_normal(d) + 1j * rng.standard_normal(d)) / np.sqrt(2.0)
        cand = root @ g
        nrm = np.linalg.norm(cand)
        if nrm == 0.0:
            continue
        cand = cand * (np.sqrt(power) / nrm)
        val = objective(cand)
        if val > best_val:
            best, best_val = cand, val
    return best


def _project_blocks(Ws: list[np.ndarray], P_t: float) -> list[np.ndarray]:
    """Euclidean projection onto {W_i >= 0, sum_i Tr(W_i) <= P_t}.

    Works in the joint eigenbasis: clip negative eigenvalues, and if the total
    trace still exceeds the budget, shift all eigenvalues down by the common
    threshold that projects them onto the capped simplex.
    """
    eigs, vecs = [], []
    for W in Ws:
        lam, V = np.linalg.eigh(0.5 * (W + W.conj().T))
        eigs.append(np.maximum(lam, 0.0))
        vecs.append(V)
    flat = np.concatenate(eigs)
    if flat.sum() > P_t:
        # threshold theta so that sum max(lam - theta, 0) == P_t
        s = np.sort(flat)[::-1]
        csum = np.cumsum(s)
        idx = np.arange(1, s.size + 1)
        valid = s - (csum - P_t) / idx > 0
        rho = int(np.nonzero(valid)[0][-1])
        theta = (csum[rho] - P_t) / (rho + 1)
        eigs = [np.maximum(lam - theta, 0.0) for lam in eigs]
    return [(V * lam) @ V.conj().T for lam, V in zip(eigs, vecs)]


def projected_supergradient_max_min(
    constraints: Sequence[Callable],
    P_t: float,
    start: list[np.ndarray],
    step_scale: Optional[float] = None,
    max_iters: int = 2000,
    tol: float = 1e-7,
) -> SolveStatus:
    """Maximize min_j F_j({W_g}) over {W_g >= 0, sum Tr(W_g) <= P_t}.

    Each callable returns (value, [grad per block]) with F_j concave. Supergradient
    of the active (minimal) constraint, normalized direction with diminishing
    steps a/sqrt(p) where a defaults to the trace budget (an upper bound on the
    feasible set's Frobenius radius), alternating PSD projection and trace
    rescaling. The objective is not monotone per step, so the best iterate is
    tracked and returned.
    """
    Ws = _project_blocks([np.array(W, copy=True) for W in start], P_t)

    def objective(blocks):
        vals, grads = [], []
        for f in constraints:
            v, g = f(blocks)
            vals.append(v)
            grads.append(g)
        j = int(np.argmin(vals))
        return vals[j], grads[j]

    val, grad = objective(Ws)
    best_val, best_Ws = val, [W.copy() for W in Ws]
    gnorm = np.sqrt(sum(np.linalg.norm(g) ** 2 for g in grad))
    if step_scale is None:
        step_scale = P_t
    p = 0
    for p in range(1, max_iters + 1):
        if gnorm <= tol:
            break
        step = step_scale / (np.sqrt(p) * gnorm)
        Ws = _project_blocks([W + step * g for W, g in zip(Ws, grad)], P_t)
        val, grad = objective(Ws)
        gnorm = np.sqrt(sum(np.linalg.norm(g) ** 2 for g in grad))
        if val > best_val:
            best_val, best_Ws = val, [W.copy() for W in Ws]
    status = "optimal" if gnorm <= tol or max_iters == 0 else "max_iters"
    return SolveStatus(status=status, value=best_val, iterate=best_Ws,
                       residuals={"final_grad_norm": float(gnorm)}, iterations=p)


@dataclass
class QuadConstraint:
    """x^H P x + 2 Re(q^H x) + a^T y + c <= 0 with P Hermitian PSD (or None)."""

    P: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    a: Optional[np.ndarray] = None
    c: float = 0.0


@dataclass
class LinearEquality:
    """2 Re(q^H x) + a^T y + c == 0."""

    q: Optional[np.ndarray] = None
    a: Optional[np.ndarray] = None
    c: float = 0.0


@dataclass
class ConvexQcqp:
    """maximize Re(obj_x^H x) + obj_y^T y over complex x, real y, subject to
    convex quadratic inequalities and linear equalities."""

    dim_x: int
    dim_y: int = 0
    obj_x: Optional[np.ndarray] = None
    obj_y: Optional[np.ndarray] = None
    ineqs: list = field(default_factory=list)
    eqs: list = field(default_factory=list)


def _psd_factor(P: np.ndarray) -> np.ndarray:
    lam, V = np.linalg.eigh(0.5 * (P + P.conj().T))
    if lam.min() < -1e-9 * max(1.0, lam.max()):
        raise ValueError("constraint Hessian is not PSD (non-convex constraint)")
    return (np.sqrt(np.maximum(lam, 0.0))[:, None] * V.conj().T)


def solve_qcqp_convex(problem: ConvexQcqp, feas_tol: float = 1e-7) -> SolveStatus:
    """SOC-representable convex QCQP solved by an interior-point method.

    Returns (x, y) in `iterate` with the primal feasibility residual.
    """
    x = cp.Variable(problem.dim_x, complex=True)
    y = cp.Variable(problem.dim_y) if problem.dim_y else None
    obj = 0
    if problem.obj_x is not None:
        obj = obj + cp.real(problem.obj_x.conj() @ x)
    if problem.obj_y is not None and y is not None:
        obj = obj + problem.obj_y @ y
    cons = []
    for con in problem.ineqs:
        expr = con.c
        if con.P is not None:
            F = _psd_factor(con.P)
            expr = expr + cp.sum_squares(F @ x)
        if con.q is not None:
            expr = expr + 2 * cp.real(con.q.conj() @ x)
        if con.a is not None and y is not None:
            expr = expr + con.a @ y
        cons.append(expr <= 0)
    for con in problem.eqs:
        expr = con.c
        if con.q is not None:
            expr = expr + 2 * cp.real(con.q.conj() @ x)
        if con.a is not None and y is not None:
            expr = expr + con.a @ y
        cons.append(expr == 0)
    prob = cp.Problem(cp.Maximize(obj), cons)
    try:
        _quiet_solve(prob, solver=cp.CLARABEL, tol_feas=feas_tol, tol_gap_rel=feas_tol)
    except cp.error.SolverError:
        return SolveStatus(status="infeasible", value=np.nan, iterate=None,
                           residuals={"reason": "solver error"})
    if prob.status in ("infeasible", "unbounded", "infeasible_inaccurate", "unbounded_inaccurate"):
        return SolveStatus(status="infeasible", value=np.nan, iterate=None,
                           residuals={"reason": prob.status})
    # variables absent from objective and constraints stay None; zero is feasible
    xv = (np.asarray(x.value).reshape(problem.dim_x) if x.value is not None
          else np.zeros(problem.dim_x, dtype=complex))
    yv = np.asarray(y.value).reshape(problem.dim_y) if y is not None else np.zeros(0)
    res = 0.0
    for con in problem.ineqs:
        val = con.c
        if con.P is not None:
            val += float(np.real(xv.conj() @ con.P @ xv))
        if con.q is not None:
            val += 2 * float(np.real(con.q.conj() @ xv))
        if con.a is not None and yv.size:
            val += float(con.a @ yv)
        res = max(res, val)
    for con in problem.eqs:
        val = con.c
        if con.q is not None:
            val += 2 * float(np.real(con.q.conj() @ xv))
        if con.a is not None and yv.size:
            val += float(con.a @ yv)
        res = max(res, abs(val))
    value = float(prob.value)
    scale = max(1.0, abs(value))
    status = "optimal" if prob.status in ("optimal", "optimal_inaccurate") and res < feas_tol * scale else "max_iters"
    return SolveStatus(status=status, value=value, iterate=(xv, yv),
                       residuals={"primal_feas": res},
                       iterations=getattr(prob.solver_stats, "num_iters", 0) or 0)
