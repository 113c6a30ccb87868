"""Newton continuation, stability monitoring and branch switching.

The branch-switching routine combines an eigenvector step, an exact line
search on the deflated projected residual, and Newton directions from the
undeflated tangent, so that iterates avoid previously found unstable states.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (BranchSwitchError, DeflationError, InvertedElementError, LineSearchError,
                     NonConvergenceError, SingularityError, SolverFailure, SurfelastError)
from .fem.assembly import Model, ReducedSystem

log = logging.getLogger(__name__)

#: matrices up to this size use dense eigensolvers
DENSE_LIMIT = 600
#: relative pivot size below which the LDL^T inertia is confirmed by eigenvalues
PIVOT_CONFIRM = 1e-8
#: multiple of eps * max|diag K| * diameter accepted as a converged residual
ROUNDOFF_FLOOR = 64.0


@dataclass
class SolverConfig:
    """Newton, stability and branch-switching settings.

    ``tol`` is relative to the assembled force scale (the norm of the summed
    absolute element force contributions), so it is dimensionless.
    """

    tol: float = 1e-9
    max_iter: int = 30
    newton_backtrack: bool = True              # backtrack when a full step increases |R|
    stability: str = "ldlt_inertia"          # or "smallest_eig"
    eig_monitor: bool = True                  # also compute lambda_min at every step
    deflation_shift: float = 1.0
    deflation_power: float = 2.0
    line_search_tol: float = 1e-8
    line_search_max_iter: int = 60
    branch_switch: bool = True
    switch_max_iter: int = 200
    switch_attempts: int = 4
    refine_onset: bool = False
    refine_rtol: float = 1e-3
    max_substeps: int = 8
    zero_pivot_tol: float = 1e-12

    def __post_init__(self):
        if self.tol <= 0 or self.line_search_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.stability not in ("ldlt_inertia", "smallest_eig"):
            raise ValueError(f"unknown stability method {self.stability!r}")


# --------------------------------------------------------------------------
# reduced problem wrapper
# --------------------------------------------------------------------------

class Problem:
    """Free-dof view of a :class:`Model`.

    States ``y`` are vectors of free dofs; prescribed values come from the
    model's current load case.
    """

    def __init__(self, model: Model):
        self.model = model
        self.free = model.free
        self.diameter = model.mesh.diameter
        self.n_evals = 0

    def full(self, y) -> np.ndarray:
        x = self.model.apply_dirichlet(self.model.reference_state())
        x[self.free] = y
        return x

    def restrict(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float)[self.free]

    def evaluate(self, y, tangent: bool = True) -> ReducedSystem:
        self.n_evals += 1
        return self.model.reduce(self.model.assemble(self.full(y), tangent))

    def energy(self, y) -> float:
        return self.model.assemble(self.full(y), tangent=False).energy


@dataclass
class NewtonResult:
    y: np.ndarray
    iterations: int
    residual_norm: float
    system: ReducedSystem
    history: List[float]


def _converged(sysm: ReducedSystem, cfg: SolverConfig, diameter: float = 0.0) -> bool:
    """``|R| <= tol * force_scale``, or ``|R|`` at round-off of the stiffness scale.

    The round-off floor matters only for nearly stress-free states, where the
    force scale itself is tiny.
    """
    rn = float(np.linalg.norm(sysm.R))
    if rn <= cfg.tol * sysm.force_scale:
        return True
    if diameter > 0 and sysm.K is not None and sysm.K.shape[0]:
        floor = ROUNDOFF_FLOOR * np.finfo(float).eps * np.abs(sysm.K.diagonal()).max() * diameter
        return rn <= floor
    return False


def linear_solve(K, b):
    if K.shape[0] == 0:
        return np.zeros(0)
    if K.shape[0] <= DENSE_LIMIT:
        return np.linalg.solve(K.toarray(), b)
    return spla.spsolve(K.tocsc(), b)


def newton_solve(problem: Problem, y0, cfg: SolverConfig) -> NewtonResult:
    """Newton-Raphson on the reduced residual.

    With ``cfg.newton_backtrack`` a full step that increases ``|R|`` is
    halved until the energy satisfies an Armijo condition or ``|R|``
    decreases; trial points that invert an element are halved as well.

    Raises
    ------
    NonConvergenceError
        After ``cfg.max_iter`` iterations, with the residual history.
    InvertedElementError
        When an iterate inverts an element; ``exc.iteration`` holds the step.
    """
    y = np.array(y0, dtype=float)
    history: List[float] = []
    try:
        sysm = problem.evaluate(y)
    except (InvertedElementError, SingularityError) as exc:
        exc.iteration = 0
        raise
    for it in range(cfg.max_iter + 1):
        rn = float(np.linalg.norm(sysm.R))
        history.append(rn)
        if _converged(sysm, cfg, problem.diameter):
            return NewtonResult(y, it, rn, sysm, history)
        if not np.isfinite(rn) or (len(history) > 3 and rn > 1e8 * history[0]) or it == cfg.max_iter:
            break
        dy = linear_solve(sysm.K, -sysm.R)
        if not np.all(np.isfinite(dy)):
            break
        try:
            y, sysm = _newton_step(problem, y, dy, sysm, rn, cfg)
        except (InvertedElementError, SingularityError) as exc:
            exc.iteration = it + 1
            raise
    raise NonConvergenceError(f"Newton did not converge in {len(history) - 1} iterations "
                              f"(|R| = {history[-1]:.3e})", history)


def _newton_step(problem, y, dy, sysm, rn, cfg):
    if not cfg.newton_backtrack:
        y = y + dy
        return y, problem.evaluate(y)
    err = None
    try:
        trial = problem.evaluate(y + dy)
        if np.linalg.norm(trial.R) <= max(rn, cfg.tol * trial.force_scale):
            return y + dy, trial
    except (InvertedElementError, SingularityError) as exc:
        err = exc
    slope = float(dy @ sysm.R)
    t = 0.5
    for _ in range(30):
        try:
            p = problem.evaluate(y + t * dy, tangent=False)
            armijo = slope < 0 and p.energy <= sysm.energy + 1e-4 * t * slope
            if armijo or np.linalg.norm(p.R) < rn:
                y = y + t * dy
                return y, problem.evaluate(y)
        except (InvertedElementError, SingularityError) as exc:
            err = exc
        t *= 0.5
    if err is not None:
        raise err
    y = y + dy
    return y, problem.evaluate(y)


# --------------------------------------------------------------------------
# stability
# --------------------------------------------------------------------------

def _upper_csc(K):
    K = sp.csr_matrix(K)
    K = 0.5 * (K + K.T)
    return sp.triu(K, format="csc")


def ldlt_inertia(K, zero_tol: float = 1e-12) -> Tuple[int, int, int]:
    """Sylvester inertia ``(n_pos, n_zero, n_neg)`` from LDL^T pivots.

    Eigenvalues with ``|lambda| <= zero_tol * max|diag K|`` count as zero. A
    breakdown of the factorization falls back to eigenvalue counting with a
    warning. Because a pivot is not an eigenvalue, a factorization with any
    pivot below ``PIVOT_CONFIRM * max|diag K|`` is confirmed by an eigenvalue
    count as well, so near-singular matrices are classified consistently.
    """
    n = K.shape[0]
    if n == 0:
        return 0, 0, 0
    Kd = np.abs(K.diagonal()).max() if n else 0.0
    scale = Kd if Kd > 0 else 1.0
    thr = zero_tol * scale
    try:
        import qdldl
        d = np.asarray(qdldl.Solver(_upper_csc(K)).factors()[1])
        if d.shape != (n,) or not np.all(np.isfinite(d)):
            raise RuntimeError("non-finite pivots")
        if np.any(np.abs(d) <= thr):
            raise RuntimeError("zero pivot")
    except Exception as exc:  # factorization breakdown
        log.warning("LDL^T factorization broke down (%s); counting eigenvalues instead", exc)
        return _eig_inertia(K, thr)
    if np.any(np.abs(d) <= PIVOT_CONFIRM * scale):
        log.debug("near-zero pivot %.3e; confirming inertia by eigenvalues", np.abs(d).min())
        return _eig_inertia(K, thr)
    return int(np.sum(d > thr)), int(np.sum(np.abs(d) <= thr)), int(np.sum(d < -thr))


def _eig_inertia(K, thr):
    n = K.shape[0]
    if n <= 4 * DENSE_LIMIT:
        ev = np.linalg.eigvalsh(sp.csr_matrix(K).toarray())
        return int(np.sum(ev > thr)), int(np.sum(np.abs(ev) <= thr)), int(np.sum(ev < -thr))
    k = min(40, n - 2)
    ev = spla.eigsh(sp.csr_matrix(K), k=k, sigma=-thr, which="LM", return_eigenvectors=False)
    nneg = int(np.sum(ev < -thr))
    nzero = int(np.sum(np.abs(ev) <= thr))
    if nneg + nzero == k:
        log.warning("eigenvalue fallback saturated at %d eigenvalues", k)
    return n - nneg - nzero, nzero, nneg


def _normalize_sign(v):
    i = np.argmax(np.abs(v))
    return v if v[i] >= 0 else -v


def smallest_eigenpair(K, rtol: float = 1e-8) -> Tuple[float, np.ndarray]:
    """Algebraically smallest eigenvalue and unit eigenvector of symmetric ``K``.

    Small matrices use a dense solver. Larger ones use shift-invert Lanczos
    with a shift ``sigma`` certified to lie below the spectrum by the inertia
    of ``K - sigma I``; the eigenvalue closest to ``sigma`` is then the
    smallest. The eigenvector sign makes its largest component positive.
    """
    K = sp.csr_matrix(K)
    n = K.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    Knorm = float(abs(K).sum(axis=1).max())
    if n <= DENSE_LIMIT:
        ev, V = np.linalg.eigh(K.toarray())
        lam, v = float(ev[0]), V[:, 0]
    else:
        Ksym = 0.5 * (K + K.T)
        delta = 1e-6 * Knorm
        sigma = -delta
        eye = sp.identity(n, format="csr")
        for _ in range(200):
            p, z, neg = ldlt_inertia(Ksym - sigma * eye)
            if neg == 0 and z == 0:
                break
            sigma = 2.0 * sigma - delta if sigma > -Knorm else 2.0 * sigma
        else:
            raise NonConvergenceError("could not find a shift below the spectrum")
        # sigma lies below the spectrum, so the wanted pair is the dominant one of
        # (K - sigma I)^-1; asking for more stalls on degenerate clusters
        try:
            ev, V = spla.eigsh(Ksym, k=1, sigma=sigma, which="LM", ncv=min(n - 1, 20),
                               tol=1e-12, maxiter=5000)
            certify = False
        except spla.ArpackNoConvergence as exc:
            # degenerate clusters stall the extra Ritz pairs; keep the converged ones
            ev, V = exc.eigenvalues, exc.eigenvectors
            if len(ev) == 0:
                raise NonConvergenceError("shift-invert Lanczos did not converge") from None
            certify = True
        i = int(np.argmin(ev))
        lam, v = float(ev[i]), V[:, i]
        if certify:
            gap = 1e-8 * Knorm
            if ldlt_inertia(Ksym - (lam - gap) * eye)[2] != 0:
                raise NonConvergenceError("converged Ritz value is not the smallest eigenvalue")
    v = v / np.linalg.norm(v)
    res = np.linalg.norm(K @ v - lam * v)
    if res > rtol * max(Knorm, 1e-300):
        raise NonConvergenceError(f"eigen-iteration residual {res:.3e} above tolerance")
    return lam, _normalize_sign(v)


@dataclass
class Stability:
    stable: bool
    n_pos: int
    n_zero: int
    n_neg: int
    lambda_min: float
    v_min: Optional[np.ndarray] = None


def assess_stability(K, cfg: SolverConfig, need_vector: bool = False) -> Stability:
    n = K.shape[0]
    if n == 0:
        return Stability(True, 0, 0, 0, math.inf)
    p, z, neg = ldlt_inertia(K, cfg.zero_pivot_tol)
    lam, v = math.nan, None
    if cfg.eig_monitor or cfg.stability == "smallest_eig" or need_vector:
        lam, v = smallest_eigenpair(K)
    if cfg.stability == "smallest_eig":
        thr = cfg.zero_pivot_tol * np.abs(K.diagonal()).max()
        stable = lam > thr
    else:
        stable = neg == 0 and z == 0
    return Stability(bool(stable), p, z, neg, lam, v)


# --------------------------------------------------------------------------
# deflation and line search
# --------------------------------------------------------------------------

def deflation_factor(x, known: Sequence[np.ndarray], scale: float = 1.0,
                     power: float = 2.0, shift: float = 1.0):
    """Multiplier ``m = prod_k (1/rho_k^p + shift)`` and its gradient.

    ``rho_k = ||x - x_k|| / scale``.
    """
    x = np.asarray(x, dtype=float)
    m = 1.0
    g = np.zeros_like(x)
    for xk in known:
        diff = x - xk
        rho = float(np.linalg.norm(diff)) / scale
        if rho <= 1e-14:
            raise DeflationError("state coincides with a known solution")
        fk = rho**(-power) + shift
        dfk = -power * rho**(-power - 1) * diff / (rho * scale**2)
        g = g * fk + m * dfk
        m *= fk
    return m, g


def deflated_residual(R, x, known: Sequence[np.ndarray], scale: float = 1.0,
                      power: float = 2.0, shift: float = 1.0):
    """``R^m = R * prod_k (1/||x - x_k||^2 + 1)`` with distances divided by ``scale``."""
    m, _ = deflation_factor(x, known, scale, power, shift)
    return np.asarray(R) * m


@dataclass
class LineSearchResult:
    beta: float
    system: Optional[ReducedSystem]
    iterations: int
    profile: List[Tuple[float, float]]


def _dist_known(y, known, scale):
    if not known:
        return math.inf
    return min(float(np.linalg.norm(y - k)) / scale for k in known)


def exact_line_search(problem: Problem, y_s, d, known: Sequence[np.ndarray], cfg: SolverConfig,
                      sys_s: Optional[ReducedSystem] = None) -> LineSearchResult:
    """Solve ``phi(beta) = d^T R^m(y_s + beta d) = 0`` for ``beta``.

    Newton on ``beta`` with ``phi' = m d^T K d + (d^T R)(grad m . d)``,
    bisection once a sign change is bracketed, and step halving when a trial
    point inverts an element. If ``y_s`` is itself deflated (a known state),
    ``beta = 0`` is excluded and a sign change is searched outward first.
    """
    d = np.asarray(d, dtype=float)
    dn = float(np.linalg.norm(d))
    if dn == 0:
        raise LineSearchError("zero search direction")
    scale = problem.diameter
    p, c = cfg.deflation_power, cfg.deflation_shift
    profile: List[Tuple[float, float]] = []
    cache: Dict[float, Tuple[float, float, ReducedSystem]] = {}

    def phi(beta):
        if beta in cache:
            return cache[beta]
        y = y_s + beta * d
        sysm = problem.evaluate(y)
        m, gm = deflation_factor(y, known, scale, p, c)
        dR = float(d @ sysm.R)
        val = m * dR
        der = m * float(d @ (sysm.K @ d)) + dR * float(gm @ d)
        cache[beta] = (val, der, sysm)
        profile.append((beta, val))
        return cache[beta]

    def safe_phi(beta):
        try:
            return phi(beta)
        except (InvertedElementError, SingularityError):
            profile.append((beta, math.nan))
            return None

    at_known = _dist_known(y_s, known, scale) <= 1e-14
    if at_known:
        beta, bracket = _outward_bracket(safe_phi, 1e-4 * scale / dn)
        if bracket is None:
            raise LineSearchError("no sign change of the deflated projected residual", profile)
        floor_sys = cache[bracket[0]][2]
    else:
        sys_s = sys_s if sys_s is not None else problem.evaluate(y_s)
        m0, _ = deflation_factor(y_s, known, scale, p, c)
        phi0 = m0 * float(d @ sys_s.R)
        floor = cfg.tol * sys_s.force_scale * dn * m0
        if abs(phi0) <= floor:
            return LineSearchResult(0.0, sys_s, 0, [(0.0, phi0)])
        cache[0.0] = (phi0, math.nan, sys_s)
        floor_sys = sys_s
        bracket = None
        beta = 1.0
        for _ in range(30):
            if safe_phi(beta) is not None:
                break
            beta *= 0.5
        else:
            raise LineSearchError("every trial point inverts an element", profile)
        if np.sign(cache[beta][0]) != np.sign(phi0):
            bracket = (0.0, beta)
    m_ref = abs(max((abs(v) for _, v in profile if np.isfinite(v)), default=1.0))
    floor = cfg.tol * floor_sys.force_scale * dn
    tol = cfg.line_search_tol * m_ref

    # safeguarded Newton / bisection
    for it in range(cfg.line_search_max_iter):
        val, der, sysm = cache[beta]
        mb, _ = deflation_factor(y_s + beta * d, known, scale, p, c)
        if abs(val) <= max(tol, floor * mb):
            return LineSearchResult(beta, sysm, it, profile)
        if bracket is not None:
            a, b = bracket
            fa = cache[a][0]
            if np.sign(val) == np.sign(fa) and beta != a:
                a = beta
            elif beta != b and np.sign(val) != np.sign(fa):
                b = beta
            bracket = (a, b)
        step = -val / der if der != 0 and np.isfinite(der) else math.nan
        nb = beta + step
        if bracket is not None:
            lo, hi = min(bracket), max(bracket)
            if not (np.isfinite(nb) and lo < nb < hi) or abs(step) > 0.5 * (hi - lo) * 1.5:
                nb = 0.5 * (lo + hi)
            if hi - lo <= 1e-15 * max(1.0, abs(hi)):
                return LineSearchResult(beta, sysm, it, profile)
        else:
            if not np.isfinite(nb):
                nb = 2.0 * beta
            lim = 4.0 * max(abs(beta), 1.0)
            nb = float(np.clip(nb, beta - lim, beta + lim))
        trial = safe_phi(nb)
        shrink = 0
        while trial is None and shrink < 20:
            nb = 0.5 * (nb + beta)
            trial = safe_phi(nb)
            shrink += 1
        if trial is None:
            raise LineSearchError("line search trial points invert elements", profile)
        if bracket is None and np.sign(trial[0]) != np.sign(val):
            bracket = (beta, nb)
        beta = nb
    raise LineSearchError("projected residual equation did not converge", profile)


def _outward_bracket(safe_phi, beta0, nmax: int = 40):
    """Scan ``+-beta0 * 2^k`` for the first sign change away from zero."""
    for sgn in (1.0, -1.0):
        prev = None
        b = sgn * beta0
        for _ in range(nmax):
            r = safe_phi(b)
            if r is None:
                break
            if prev is not None and np.sign(r[0]) != np.sign(prev[1]):
                return b, (prev[0], b)
            prev = (b, r[0])
            b *= 2.0
    return None, None


# --------------------------------------------------------------------------
# branch switching
# --------------------------------------------------------------------------

@dataclass
class BranchResult:
    y: np.ndarray
    stability: Stability
    iterations: int
    known: List[np.ndarray]
    system: ReducedSystem


def _deflated_newton(problem, y0, d0, known, cfg):
    y = np.array(y0, dtype=float)
    d = d0
    sysm = None
    for j in range(cfg.switch_max_iter):
        ls = exact_line_search(problem, y, d, known, cfg, sys_s=sysm)
        if ls.beta == 0.0:
            # projected residual already below the floor: the full Newton step is the exact one
            y = y + d
            sysm = problem.evaluate(y)
        else:
            y = y + ls.beta * d
            sysm = ls.system if ls.system is not None else problem.evaluate(y)
        log.debug("deflated Newton %d: beta = %.4g, |R| = %.3e, dist = %.3e", j, ls.beta,
                  np.linalg.norm(sysm.R), _dist_known(y, known, problem.diameter))
        if _converged(sysm, cfg, problem.diameter):
            return y, sysm, j + 1
        d = linear_solve(sysm.K, -sysm.R)
    raise NonConvergenceError("deflated Newton iteration did not converge")


def branch_switch(problem: Problem, y0, cfg: SolverConfig,
                  known: Optional[List[np.ndarray]] = None) -> BranchResult:
    """Find a stable solution distinct from the unstable state ``y0``.

    Eigenvector step with deflated exact line search, then Newton directions
    with deflated exact line searches until the residual converges. Unstable
    results are added to the deflation set and the search restarts from them.
    """
    y0 = np.array(y0, dtype=float)
    sys0 = problem.evaluate(y0)
    st0 = assess_stability(sys0.K, cfg, need_vector=True)
    if st0.stable:
        raise BranchSwitchError("branch switching requires an unstable state")
    known = list(known or []) + [y0.copy()]
    scale = problem.diameter
    current, st = y0, st0
    total = 0
    for attempt in range(cfg.switch_attempts):
        found = None
        for sgn in (1.0, -1.0):
            try:
                y, sysm, its = _deflated_newton(problem, current, sgn * st.v_min, known, cfg)
            except (LineSearchError, NonConvergenceError, DeflationError) as exc:
                log.info("branch switch direction %+d failed: %s", int(sgn), exc)
                continue
            total += its
            if _dist_known(y, known, scale) <= 1e-8:
                log.info("branch switch returned to a known state; retrying")
                continue
            found = (y, sysm)
            break
        if found is None:
            break
        y, sysm = found
        st_new = assess_stability(sysm.K, cfg, need_vector=True)
        if st_new.stable:
            return BranchResult(y, st_new, total, known, sysm)
        known.append(y.copy())
        current, st = y, st_new
    raise BranchSwitchError(f"no stable branch found after {cfg.switch_attempts} attempts")


# --------------------------------------------------------------------------
# continuation
# --------------------------------------------------------------------------

@dataclass
class BranchState:
    x: np.ndarray
    control: float
    params: Dict[str, float]
    stable: bool
    lambda_min: float
    n_negative: int
    iterations: int
    residual_norm: float
    energy: float
    branch: str = "primary"
    known_unstable: List[np.ndarray] = field(default_factory=list)


@dataclass
class ContinuationResult:
    states: List[BranchState]
    onset: Optional[Tuple[float, float]] = None
    log_rows: List[dict] = field(default_factory=list)

    @property
    def final(self) -> BranchState:
        return self.states[-1]


Binder = Callable[[Model, Dict[str, float], Optional[np.ndarray]], Optional[np.ndarray]]


def _interp(a: Dict[str, float], b: Dict[str, float], t: float) -> Dict[str, float]:
    return {k: a.get(k, b[k]) + t * (b[k] - a.get(k, b[k])) for k in b}


def run_continuation(model: Model, steps: Sequence[Dict[str, float]], bind: Binder,
                     cfg: SolverConfig, control: str, x0=None, start: Optional[Dict[str, float]] = None,
                     on_step: Optional[Callable[[int, BranchState], None]] = None) -> ContinuationResult:
    """Step through ``steps`` (dicts of parameter values), solving and monitoring stability.

    Parameters
    ----------
    bind : callable
        ``bind(model, params, x_prev) -> x_guess or None`` writes the parameters
        into the model (materials, Dirichlet values) and may return a
        predicted full state.
    control : str
        Key of ``params`` reported as the control value.
    x0, start : optional
        Initial full state and the parameters at which it is an equilibrium;
        ``start`` lets the first step be substepped as well.

    Notes
    -----
    A failed Newton solve is retried by halving the parameter increment up to
    ``cfg.max_substeps`` times. The deflation set is reset at every control
    value.
    """
    result = ContinuationResult([])
    if not steps:
        return result
    x = model.reference_state() if x0 is None else np.array(x0, dtype=float)
    prev_params: Optional[Dict[str, float]] = dict(start) if start is not None else None
    last_stable: Optional[Tuple[Dict[str, float], np.ndarray]] = None
    problem = None
    for i, params in enumerate(steps):
        try:
            x, nr = _solve_to(model, prev_params, params, x, bind, cfg)
            problem = Problem(model)
            st = assess_stability(nr.system.K, cfg)
            state = BranchState(x.copy(), float(params[control]), dict(params), st.stable,
                                st.lambda_min, st.n_neg, nr.iterations, nr.residual_norm,
                                nr.system.energy)
            _append(result, state)
            log.info("step %d: %s = %.6g, %d iterations, |R| = %.3e, n_neg = %d", i, control,
                     state.control, nr.iterations, nr.residual_norm, st.n_neg)
            if on_step:
                on_step(i, state)
            if st.stable:
                last_stable = (dict(params), x.copy())
            else:
                if result.onset is None and last_stable is not None:
                    result.onset = _locate_onset(model, last_stable, params, bind, cfg, control)
                    bind(model, params, None)
                if cfg.branch_switch:
                    br = branch_switch(problem, problem.restrict(x), cfg)
                    x = problem.full(br.y)
                    sw = BranchState(x.copy(), float(params[control]), dict(params), br.stability.stable,
                                     br.stability.lambda_min, br.stability.n_neg, br.iterations,
                                     float(np.linalg.norm(br.system.R)), br.system.energy, "switched",
                                     [problem.full(k) for k in br.known])
                    _append(result, sw)
                    if on_step:
                        on_step(i, sw)
                    last_stable = (dict(params), x.copy())
        except SurfelastError as exc:
            raise SolverFailure(f"continuation failed at step {i} ({control} = {params[control]}): {exc}",
                                step=i, cause=exc) from exc
        prev_params = dict(params)
    return result


def _append(result: ContinuationResult, s: BranchState):
    result.states.append(s)
    result.log_rows.append({"control": s.control, "iterations": s.iterations,
                            "residual_norm": s.residual_norm, "n_neg": s.n_negative,
                            "lambda_min": s.lambda_min, "stable": int(s.stable), "branch": s.branch})


def _solve_to(model, prev, target, x, bind, cfg, depth=0):
    """Solve at ``target`` from the converged state ``x`` at ``prev``, halving on failure."""
    guess = bind(model, target, x)
    xg = model.apply_dirichlet(x if guess is None else guess)
    problem = Problem(model)
    try:
        nr = newton_solve(problem, problem.restrict(xg), cfg)
        return problem.full(nr.y), nr
    except (NonConvergenceError, InvertedElementError, SingularityError) as exc:
        if prev is None or depth >= cfg.max_substeps:
            raise
        log.info("substepping (depth %d) after: %s", depth + 1, exc)
        mid = _interp(prev, target, 0.5)
        xm, _ = _solve_to(model, prev, mid, x, bind, cfg, depth + 1)
        return _solve_to(model, mid, target, xm, bind, cfg, depth + 1)


def _locate_onset(model, last_stable, unstable_params, bind, cfg, control):
    """Bisect the control between the last stable and first unstable step."""
    p_lo, x_lo = last_stable
    p_hi = dict(unstable_params)
    if not cfg.refine_onset:
        return float(p_lo[control]), float(p_hi[control])
    while abs(p_hi[control] - p_lo[control]) > cfg.refine_rtol * abs(p_hi[control]):
        mid = _interp(p_lo, p_hi, 0.5)
        xm, nr = _solve_to(model, p_lo, mid, x_lo, bind, cfg)
        st = assess_stability(nr.system.K, replace(cfg, eig_monitor=False))
        if st.stable:
            p_lo, x_lo = mid, xm
        else:
            p_hi = mid
    return float(p_lo[control]), float(p_hi[control])
