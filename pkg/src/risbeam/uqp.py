"""Quadratic subproblems on the complex circle manifold and their solvers.

Fixing the transmit/receive weights, the RIS coefficients enter the SINR
quotient through affine forms h(theta)^H v + beta(theta). Each Dinkelbach
step turns the quotient into the regularized quadratic

    f(v) = v^H Htilde v + 2 Re(v^H htilde),   |v_m| = 1,

whose regularization (lambda_p + lambda_c) is constructed so that both the
diagonally-loaded Newton step and the subsequent retraction can only lower
f. The loaded Newton direction solves

    (Hess_R + (mu/2) I) xi_hat = -g_hat

in the real embedding; its solution provably lies in the tangent space, so
the production solver computes it in tangent coordinates (an M x M real SPD
system) while `newton_system`/`improved_rnd` expose the dense embedding for
verification.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, eigh

from .errors import ConfigError, MonotonicityViolation, ZeroElementError
from .manifold import (embed_diag, embed_hermitian, embed_involution,
                       from_real, project_tangent, retract, to_real)
from .scene import Scene, phi_times_u

# absolute slack allowed on the monotone-decrease contract, per accepted step
DECREASE_SLACK = 1e-9
MAX_MU_DOUBLINGS = 10


def _eig_max(sym_mat: np.ndarray, overwrite: bool = False) -> float:
    """Largest eigenvalue of a symmetric/Hermitian matrix (exact solver)."""
    n = sym_mat.shape[0]
    try:
        vals = eigh(sym_mat, eigvals_only=True, subset_by_index=[n - 1, n - 1],
                    driver="evr", overwrite_a=overwrite, check_finite=False)
    except LinAlgError as exc:
        raise LinAlgError(f"eigenvalue solve failed on {n}x{n} matrix: {exc}")
    return float(vals[0])


# ---------------------------------------------------------------------------
# channel terms and Dinkelbach subproblem construction

@dataclass(frozen=True)
class ChannelTerms:
    """Affine representation of w^H Phi(theta) u as h(theta)^H v + beta(theta)
    for the target (index 0) and each interference."""

    h0: np.ndarray          # (M,)
    beta0: complex
    h_i: np.ndarray         # (I, M)
    beta_i: np.ndarray      # (I,)
    sigma_i: np.ndarray     # (I,) interference powers
    noise_term: float       # sigma_n^2 * w^H w

    @property
    def m(self) -> int:
        return self.h0.shape[0]


def build_channel_terms(scene: Scene, g: np.ndarray, u: np.ndarray,
                        w: np.ndarray) -> ChannelTerms:
    """Cache h(theta_i), beta(theta_i) for the current (u, w)."""
    from .scene import steering_radar, steering_ris  # local to avoid cycle noise

    geom = scene.geometry
    if np.linalg.norm(u) == 0.0 or np.linalg.norm(w) == 0.0:
        raise ConfigError("u and w must be nonzero")
    if g.shape != (geom.m_ris, geom.n_radar):
        raise ConfigError(f"channel shape {g.shape} does not match geometry")
    gw = np.conj(g) @ w if geom.m_ris else np.zeros(0, dtype=complex)

    def one(angle_deg):
        a = steering_radar(geom, angle_deg)
        beta = np.vdot(w, a) * (a @ u)
        if geom.m_ris:
            b = steering_ris(geom, angle_deg + scene.ris_offset_angle)
            h = np.conj(a @ u) * (np.conj(b) * gw)
        else:
            h = np.zeros(0, dtype=complex)
        return h, beta

    h0, beta0 = one(scene.target_angle)
    n_i = scene.n_interferences
    h_i = np.zeros((n_i, geom.m_ris), dtype=complex)
    beta_i = np.zeros(n_i, dtype=complex)
    for k, (ang, _) in enumerate(scene.interferences):
        h_i[k], beta_i[k] = one(ang)
    return ChannelTerms(
        h0=h0, beta0=complex(beta0), h_i=h_i, beta_i=beta_i,
        sigma_i=scene.interference_powers(),
        noise_term=scene.noise_power * float(np.vdot(w, w).real),
    )


def affine_responses(terms: ChannelTerms, v: np.ndarray):
    """(target response, interference responses) h^H v + beta at v."""
    r0 = np.vdot(terms.h0, v) + terms.beta0
    ri = terms.h_i.conj() @ v + terms.beta_i
    return r0, ri


def dinkelbach_z(terms: ChannelTerms, v: np.ndarray) -> float:
    """Auxiliary ratio z = |r0|^2 / (sum_i sigma_i |r_i|^2 + noise_term)."""
    r0, ri = affine_responses(terms, v)
    den = float(terms.sigma_i @ np.abs(ri) ** 2) + terms.noise_term
    return abs(r0) ** 2 / den


@dataclass
class UqpProblem:
    """One Dinkelbach quadratic subproblem with its regularization split."""

    h_mat: np.ndarray       # Htilde, Hermitian positive definite
    h_vec: np.ndarray       # htilde(z)
    lambda_p: float
    lambda_c: float
    lambda2: float          # largest eigenvalue of Hbar
    lambda2_min: float      # smallest eigenvalue of Hbar
    z: float
    terms: ChannelTerms

    @property
    def m(self) -> int:
        return self.h_vec.shape[0]

    @property
    def lambda_v(self) -> float:
        return self.lambda_p + self.lambda_c

    @property
    def eig_max_tilde(self) -> float:
        """Largest eigenvalue of Htilde = Hbar + lambda_c I."""
        return self.lambda2 + self.lambda_c

    @property
    def eig_min_tilde(self) -> float:
        """Smallest eigenvalue of Htilde."""
        return self.lambda2_min + self.lambda_c


def build_uqp(terms: ChannelTerms, z: float) -> UqpProblem:
    """Assemble Htilde/htilde for the given z with the monotonicity-preserving
    regularization: lambda_p just above ||h0||^2, lambda_c exactly at the
    (M/8) lambda_2 + ||htilde|| bound."""
    if z < 0:
        raise ConfigError(f"z must be nonnegative, got {z}")
    m = terms.m
    if m == 0:
        raise ConfigError("cannot build a UQP for a RIS-free scene (M = 0)")
    zsig = z * terms.sigma_i
    base = (terms.h_i.T * zsig) @ terms.h_i.conj() - np.outer(terms.h0,
                                                              terms.h0.conj())
    h_vec = terms.h_i.T @ (zsig * terms.beta_i) - terms.beta0 * terms.h0
    lambda_p = float(np.vdot(terms.h0, terms.h0).real) * (1.0 + 1e-3) + 1e-12
    h_bar = base + lambda_p * np.eye(m)
    h_bar = 0.5 * (h_bar + h_bar.conj().T)
    try:
        evals = np.linalg.eigvalsh(h_bar)
    except np.linalg.LinAlgError as exc:
        raise LinAlgError(f"eigenvalue solve failed on Hbar: {exc}")
    lambda2, lambda2_min = float(evals[-1]), float(evals[0])
    lambda_c = (m / 8.0) * lambda2 + float(np.linalg.norm(h_vec))
    h_mat = h_bar + lambda_c * np.eye(m)
    return UqpProblem(h_mat=h_mat, h_vec=h_vec, lambda_p=lambda_p,
                      lambda_c=lambda_c, lambda2=lambda2,
                      lambda2_min=lambda2_min, z=float(z), terms=terms)


# ---------------------------------------------------------------------------
# objective and derivatives

def objective(problem: UqpProblem, v: np.ndarray) -> float:
    """f(v) = v^H Htilde v + 2 Re(v^H htilde); valid off the manifold too."""
    return float(np.vdot(v, problem.h_mat @ v).real
                 + 2.0 * np.vdot(v, problem.h_vec).real)


def objective_reported(problem: UqpProblem, v: np.ndarray) -> float:
    """f with the constant on-manifold shift lambda_v * M removed, so traces
    are comparable across Dinkelbach iterations."""
    return objective(problem, v) - problem.lambda_v * problem.m


def euclidean_gradient(problem: UqpProblem, v: np.ndarray) -> np.ndarray:
    """Gradient in the conjugate convention: f(v+d) ~ f(v) + 2 Re(d^H grad)."""
    return problem.h_mat @ v + problem.h_vec


def riemannian_gradient(problem: UqpProblem, v: np.ndarray) -> np.ndarray:
    return project_tangent(v, euclidean_gradient(problem, v))


def hessian_action(problem: UqpProblem, v: np.ndarray,
                   xi: np.ndarray) -> np.ndarray:
    """Riemannian Hessian applied to a tangent vector, complex arithmetic:
    P_v((Htilde - Q) xi) with Q = Diag(Re(grad_e * conj(v)))."""
    q = np.real(euclidean_gradient(problem, v) * np.conj(v))
    y = problem.h_mat @ xi - q * xi
    return project_tangent(v, y)


@dataclass(frozen=True)
class NewtonSystem:
    """Dense real-embedded Newton data: Hess_R = (I - V_hat)(H_hat - Q_hat)/2,
    the stacked Riemannian gradient, the eigenvalue anchor lambda_1 =
    lambda_max(H_hat - H_H0/2), and H_H0 = (I-V)(H-Q)(I-V)."""

    hess_r: np.ndarray
    ghat: np.ndarray
    lam1: float
    hh0: np.ndarray


def newton_system(problem: UqpProblem, v: np.ndarray) -> NewtonSystem:
    egrad = euclidean_gradient(problem, v)
    ghat = to_real(project_tangent(v, egrad))
    hat_h = embed_hermitian(problem.h_mat)
    hat_q = embed_diag(np.real(egrad * np.conj(v)))
    pv2 = np.eye(2 * problem.m) - embed_involution(v)  # I - V_hat
    hq = hat_h - hat_q
    hess_r = 0.5 * pv2 @ hq
    hh0 = pv2 @ hq @ pv2
    s = hat_h - 0.5 * hh0
    lam1 = _eig_max(0.5 * (s + s.T), overwrite=True)
    return NewtonSystem(hess_r=hess_r, ghat=ghat, lam1=lam1, hh0=hh0)


def mu_policy(lam1: float, mu_margin: float) -> float:
    """Diagonal loading strictly above lambda_1 (relative margin plus an
    absolute floor); positive even when lambda_1 <= 0."""
    if lam1 > 0:
        return lam1 * (1.0 + mu_margin) + 1e-10
    return abs(lam1) * mu_margin + 1e-10


def improved_rnd(problem: UqpProblem, v: np.ndarray,
                 mu_margin: float = 1e-3) -> tuple[np.ndarray, float]:
    """Diagonally-loaded Newton direction from the dense real embedding.

    Solves (Hess_R + (mu/2) I) xi_hat = -g_hat through the equivalent
    symmetric positive definite system (H_H0 + 2 mu I) xi_hat = -4 g_hat;
    the solution lies in the tangent space and is a descent direction.
    """
    ns = newton_system(problem, v)
    mu = mu_policy(ns.lam1, mu_margin)
    eye2m = np.eye(2 * problem.m)
    for _ in range(MAX_MU_DOUBLINGS + 1):
        hh = ns.hh0 + (2.0 * mu) * eye2m
        hh = 0.5 * (hh + hh.T)
        try:
            xi_hat = cho_solve(cho_factor(hh, check_finite=False),
                               -4.0 * ns.ghat, check_finite=False)
            return from_real(xi_hat), mu
        except LinAlgError:
            mu *= 2.0
    raise LinAlgError("Newton system stayed singular after mu doublings")


# ---------------------------------------------------------------------------
# solvers

@dataclass
class RnmConfig:
    """Inner-solver knobs.

    `mu_mode` selects the loading-factor policy:

    - "exact": mu anchored strictly above lambda_1 = eig_max(H_hat - H_H0/2),
      recomputed by a dense eigensolve every iteration. Decrease of f is then
      certified a priori, but since lambda_1 >= lambda_c the loading scales
      with (M/8) lambda_2 and the iteration converges only linearly, with
      rate 1 - O(1/M).
    - "bound": same policy with lambda_1 replaced by the certified upper
      bound eig_max(Htilde) + 2 max(0, max_i q_i - eig_min(Htilde)), which
      costs O(M) per iteration and is tight at large M because lambda_c
      dominates both sides.
    - "adaptive" (default): trust-region style; mu decays toward zero while
      steps keep lowering f (recovering pure Newton and its fast local
      convergence) and escalates, up to the certified bound where decrease
      is guaranteed, whenever a step fails.

    Every accepted step must lower f (up to slack) regardless of mode; the
    modes differ only in how conservatively mu is chosen.

    `tol_mode` selects the stop-rule scaling: "abs" stops on |df| < tol_f,
    "rel" on |df| < tol_f * max(1, |f_start|) (reported scale), which is the
    sensible rule for the certified modes whose f-tail creeps for O(M / tol)
    iterations.
    """

    tol_f: float = 1e-8
    max_iter: int = 500
    mu_margin: float = 1e-3
    mu_mode: str = "adaptive"
    tol_mode: str = "abs"

    def __post_init__(self):
        if self.tol_f <= 0 or self.mu_margin <= 0:
            raise ConfigError("tol_f and mu_margin must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if self.mu_mode not in ("adaptive", "bound", "exact"):
            raise ConfigError(f"unknown mu_mode {self.mu_mode!r}")
        if self.tol_mode not in ("abs", "rel"):
            raise ConfigError(f"unknown tol_mode {self.tol_mode!r}")


@dataclass
class InnerSolveTrace:
    """Per-iteration diagnostics of one subproblem solve.

    `mu` holds the diagonal loading for the Newton solver and the accepted
    Armijo step for the first-order baselines.
    """

    f: list[float] = field(default_factory=list)
    mu: list[float] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)
    millis: list[float] = field(default_factory=list)
    converged: bool = False
    line_search_failed: bool = False

    @property
    def n_iterations(self) -> int:
        return len(self.f)

    def rows(self):
        """(iteration, f, mu, grad_norm, millis) tuples for CSV export."""
        return [(k, self.f[k], self.mu[k], self.grad_norm[k], self.millis[k])
                for k in range(self.n_iterations)]


def _f_and_grad(problem: UqpProblem, v: np.ndarray):
    egrad = problem.h_mat @ v + problem.h_vec
    f = float(np.vdot(v, egrad).real + np.vdot(v, problem.h_vec).real)
    return f, egrad


def rnm_solve(problem: UqpProblem, v0: np.ndarray,
              cfg: RnmConfig | None = None) -> tuple[np.ndarray, InnerSolveTrace]:
    """Loaded Newton iteration with projection retraction; f is non-increasing
    at every accepted step.

    The direction solve runs in tangent coordinates: for xi = j d * v the
    loaded Newton equation reduces to the M x M real SPD system
    (K + (mu/2) I) d = -Im(grad_e * conj(v)) with
    K = Re(Diag(conj(v)) (Htilde - Q) Diag(v)), which reproduces the dense
    2M x 2M solve exactly (the solution of the embedded equation lies in the
    tangent space, where the embedded operator restricts to K + (mu/2) I).
    """
    cfg = cfg or RnmConfig()
    v = np.asarray(v0, dtype=complex)
    m = problem.m
    trace = InnerSolveTrace()
    shift = problem.lambda_v * m
    h_mat = problem.h_mat
    idx = np.arange(m)
    s_buf = np.empty((2 * m, 2 * m)) if cfg.mu_mode == "exact" else None
    f_cur, egrad = _f_and_grad(problem, v)
    stop_threshold = cfg.tol_f if cfg.tol_mode == "abs" else \
        cfg.tol_f * max(1.0, abs(f_cur - shift))
    mu_accepted = None

    for _ in range(cfg.max_iter):
        t_start = time.perf_counter()
        ev = egrad * np.conj(v)
        gd = ev.imag                     # tangent coords of the Riemannian grad
        gnorm = float(np.linalg.norm(gd))
        if gnorm == 0.0:
            trace.converged = True
            break
        w_mat = (np.conj(v)[:, None] * h_mat) * v[None, :]
        rw, iw = w_mat.real, w_mat.imag
        if cfg.mu_mode == "exact":
            # lambda_1 of H_hat - H_H0/2 in an orthonormal tangent/normal basis
            s_buf[:m, :m] = -rw
            s_buf[idx, idx] += 2.0 * ev.real
            s_buf[:m, m:] = iw
            s_buf[m:, :m] = -iw
            s_buf[m:, m:] = rw
            anchor = _eig_max(s_buf, overwrite=True)
        else:
            anchor = problem.eig_max_tilde + 2.0 * max(
                0.0, float(np.max(ev.real)) - problem.eig_min_tilde)
        mu_cert = mu_policy(anchor, cfg.mu_margin)
        if cfg.mu_mode == "adaptive" and mu_accepted is not None:
            ladder = [max(0.25 * mu_accepted, 1e-10), 4.0 * mu_accepted,
                      mu_cert]
        else:
            ladder = [mu_cert]
        # past the certified value, keep doubling to absorb round-off
        ladder += [mu_cert * 2.0 ** k for k in range(1, MAX_MU_DOUBLINGS + 1)]

        k_mat = rw.copy()
        k_mat[idx, idx] -= ev.real
        accepted = False
        for mu in ladder:
            a_mat = k_mat.copy()
            a_mat[idx, idx] += 0.5 * mu
            try:
                d = cho_solve(cho_factor(a_mat, overwrite_a=True,
                                         check_finite=False),
                              -gd, check_finite=False)
                v_new = retract(v, 1j * d * v)
            except (LinAlgError, ZeroElementError):
                continue
            f_new, egrad_new = _f_and_grad(problem, v_new)
            if f_new <= f_cur + DECREASE_SLACK:
                accepted = True
                break
        if not accepted:
            raise MonotonicityViolation(
                f"f failed to decrease from {f_cur:.6e} despite loading up to "
                f"{ladder[-1]:.3e}")

        mu_accepted = mu
        delta = f_cur - f_new
        v, f_cur, egrad = v_new, f_new, egrad_new
        trace.f.append(f_cur - shift)
        trace.mu.append(mu)
        trace.grad_norm.append(gnorm)
        trace.millis.append((time.perf_counter() - t_start) * 1e3)
        if delta < stop_threshold:
            trace.converged = True
            break

    return v, trace


def _armijo_solver(problem: UqpProblem, v0: np.ndarray, cfg: RnmConfig,
                   conjugate: bool) -> tuple[np.ndarray, InnerSolveTrace]:
    """Shared Riemannian descent loop: steepest descent or Polak-Ribiere
    conjugate directions with projection transport, Armijo backtracking."""
    c1, shrink, max_backtracks = 1e-4, 0.5, 50
    v = np.asarray(v0, dtype=complex)
    trace = InnerSolveTrace()
    shift = problem.lambda_v * problem.m
    f_cur = objective(problem, v)
    g = riemannian_gradient(problem, v)
    d = -g
    stop_threshold = cfg.tol_f if cfg.tol_mode == "abs" else \
        cfg.tol_f * max(1.0, abs(f_cur - shift))
    for _ in range(cfg.max_iter):
        t_start = time.perf_counter()
        gnorm2 = float(np.vdot(g, g).real)
        if gnorm2 == 0.0:
            trace.converged = True
            break
        slope = float(np.vdot(g, d).real)
        if slope >= 0.0:         # non-descent conjugate direction: restart
            d = -g
            slope = -gnorm2
        step = 1.0
        accepted = False
        for _ in range(max_backtracks):
            try:
                v_new = retract(v, step * d)
            except ZeroElementError:
                step *= shrink
                continue
            f_new = objective(problem, v_new)
            if f_new <= f_cur + c1 * step * slope:
                accepted = True
                break
            step *= shrink
        if not accepted:
            trace.line_search_failed = True
            break
        g_new = riemannian_gradient(problem, v_new)
        if conjugate:
            g_t = project_tangent(v_new, g)
            beta = max(0.0, float(np.vdot(g_new, g_new - g_t).real) / gnorm2)
            d = -g_new + beta * project_tangent(v_new, d)
        else:
            d = -g_new
        delta = abs(f_new - f_cur)
        v, f_cur, g = v_new, f_new, g_new
        trace.f.append(f_cur - shift)
        trace.mu.append(step)
        trace.grad_norm.append(np.sqrt(gnorm2))
        trace.millis.append((time.perf_counter() - t_start) * 1e3)
        if delta < stop_threshold:
            trace.converged = True
            break
    return v, trace


def rgd_solve(problem: UqpProblem, v0: np.ndarray,
              cfg: RnmConfig | None = None) -> tuple[np.ndarray, InnerSolveTrace]:
    """Riemannian gradient descent baseline (Armijo backtracking)."""
    return _armijo_solver(problem, v0, cfg or RnmConfig(), conjugate=False)


def rcg_solve(problem: UqpProblem, v0: np.ndarray,
              cfg: RnmConfig | None = None) -> tuple[np.ndarray, InnerSolveTrace]:
    """Riemannian conjugate gradient baseline (Polak-Ribiere, projection
    transport, Armijo backtracking)."""
    return _armijo_solver(problem, v0, cfg or RnmConfig(), conjugate=True)
