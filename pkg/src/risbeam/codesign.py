"""Alternating codesign of transmit weights, RIS coefficients and receive
weights.

One outer iteration updates the RIS coefficients through the Dinkelbach loop
(each subproblem solved on the manifold), then the receive and transmit
weights in closed form. Every sub-step can only raise the SINR quotient, so
the whole trajectory is monotone and converges to a finite value; violations
beyond numerical slack are surfaced as errors.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, MonotonicityViolation
from .manifold import ccm_point, random_phases
from .rng import STREAM_INIT, STREAM_RIS_PHASES, rng_from_seed
from .scene import (BeamformerState, Scene, beamforming_gain, linear_to_db,
                    phi_times_u, steering_radar)
from .uqp import (ChannelTerms, InnerSolveTrace, RnmConfig, build_channel_terms,
                  build_uqp, dinkelbach_z, rcg_solve, rgd_solve, rnm_solve)

# relative slack on the non-decrease of the SINR quotient across sub-steps
GAIN_SLACK = 1e-9
# slack on the non-decrease of the Dinkelbach variable
Z_SLACK = 1e-10

_SOLVERS = {"rnm": rnm_solve, "rcg": rcg_solve, "rgd": rgd_solve}


@dataclass
class CodesignConfig:
    """Outer-loop knobs: Dinkelbach stop delta2 (relative change of z),
    alternating stop delta3 (relative change of the SINR quotient),
    iteration caps and the initialization policy ("matched" or "random")."""

    delta2: float = 1e-4
    delta3: float = 1e-6
    p_max: int = 9
    dinkelbach_max_iter: int = 100
    rnm: RnmConfig = field(default_factory=RnmConfig)
    solver: str = "rnm"
    init_policy: str = "matched"
    init_seed: int = 0

    def __post_init__(self):
        if self.delta2 <= 0 or self.delta3 <= 0:
            raise ConfigError("delta2 and delta3 must be positive")
        if self.p_max < 1 or self.dinkelbach_max_iter < 1:
            raise ConfigError("iteration caps must be >= 1")
        if self.solver not in _SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.init_policy not in ("matched", "random"):
            raise ConfigError(f"unknown init policy {self.init_policy!r}")


@dataclass
class RisUpdateTrace:
    """One Algorithm-1 run: the Dinkelbach variable sequence, inner iteration
    counts per subproblem, and the solver traces."""

    z_values: list[float] = field(default_factory=list)
    inner_iterations: list[int] = field(default_factory=list)
    inner_traces: list[InnerSolveTrace] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def total_inner_iterations(self) -> int:
        return int(sum(self.inner_iterations))


@dataclass
class SolveReport:
    """Per-outer-iteration record of one codesign run."""

    sinr_db: list[float] = field(default_factory=list)
    gain_substeps: list[float] = field(default_factory=list)
    z_traces: list[list[float]] = field(default_factory=list)
    inner_iterations: list[int] = field(default_factory=list)
    step_seconds: list[float] = field(default_factory=list)
    state: BeamformerState | None = None
    converged: bool = False
    mode: str = "ris"
    diagnostics: list[str] = field(default_factory=list)

    @property
    def n_outer(self) -> int:
        return len(self.sinr_db)

    @property
    def final_sinr_db(self) -> float:
        return self.sinr_db[-1]

    @property
    def total_inner_iterations(self) -> int:
        return int(sum(self.inner_iterations))

    def rows(self):
        """(iteration, sinr_db, inner_iterations, z_final, seconds) tuples."""
        out = []
        for p in range(self.n_outer):
            z_final = self.z_traces[p][-1] if p < len(self.z_traces) and \
                self.z_traces[p] else float("nan")
            out.append((p + 1, self.sinr_db[p], self.inner_iterations[p],
                        z_final, self.step_seconds[p]))
        return out


def initial_state(scene: Scene, g: np.ndarray,
                  cfg: CodesignConfig) -> BeamformerState:
    """Matched transmit start u = conj(a(theta_0))/sqrt(N), all-ones RIS
    phases, receive weights from the closed-form update; or a seeded random
    start for robustness studies."""
    n, m = scene.geometry.n_radar, scene.geometry.m_ris
    if cfg.init_policy == "matched":
        u = np.conj(steering_radar(scene.geometry, scene.target_angle))
        u = u / np.linalg.norm(u)
        v = np.ones(m, dtype=complex)
    else:
        rng = rng_from_seed(cfg.init_seed, STREAM_INIT)
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        u = u / np.linalg.norm(u)
        v = random_phases(m, rng)
    w = update_receive(scene, g, u, v)
    return BeamformerState(u=u, v=v, w=w)


# ---------------------------------------------------------------------------
# the three sub-steps

def optimize_ris(scene: Scene, g: np.ndarray, state: BeamformerState,
                 cfg: CodesignConfig) -> tuple[np.ndarray, RisUpdateTrace]:
    """Dinkelbach loop over quadratic subproblems: z is evaluated at the
    current point, the subproblem is solved from it, and the sequence of z
    values is non-decreasing until |dz| < delta2."""
    trace = RisUpdateTrace()
    t_start = time.perf_counter()
    v = ccm_point(state.v)
    if scene.geometry.m_ris == 0:
        trace.seconds = time.perf_counter() - t_start
        return v, trace
    solver = _SOLVERS[cfg.solver]
    terms = build_channel_terms(scene, g, state.u, state.w)
    z = dinkelbach_z(terms, v)
    trace.z_values.append(z)
    for _ in range(cfg.dinkelbach_max_iter):
        problem = build_uqp(terms, z)
        v, inner = solver(problem, v, cfg.rnm)
        v = ccm_point(v)
        z_new = dinkelbach_z(terms, v)
        if z_new < z - Z_SLACK:
            raise MonotonicityViolation(
                f"Dinkelbach variable decreased: {z:.12e} -> {z_new:.12e}")
        trace.z_values.append(z_new)
        trace.inner_iterations.append(inner.n_iterations)
        trace.inner_traces.append(inner)
        dz = abs(z_new - z)
        z = z_new
        if dz < cfg.delta2 * max(1.0, z):
            break
    trace.seconds = time.perf_counter() - t_start
    return v, trace


def update_receive(scene: Scene, g: np.ndarray, u: np.ndarray,
                   v: np.ndarray) -> np.ndarray:
    """Closed-form receive weights w = (Psi_u + sigma_n^2 I)^-1 Phi(theta_0) u
    (the quotient-maximizing beamformer; unit scaling constant)."""
    n = scene.geometry.n_radar
    psi = np.zeros((n, n), dtype=complex)
    for ang, power in scene.interferences:
        p = phi_times_u(scene, g, v, u, ang)
        psi += power * np.outer(p, p.conj())
    p0 = phi_times_u(scene, g, v, u, scene.target_angle)
    return np.linalg.solve(psi + scene.noise_power * np.eye(n), p0)


def update_transmit(scene: Scene, g: np.ndarray, w: np.ndarray,
                    v: np.ndarray) -> np.ndarray:
    """Closed-form unit-norm transmit weights
    u = (Psi_w + sigma_n^2 w^H w I)^-1 Phi^H(theta_0) w, normalized."""
    if np.linalg.norm(w) == 0.0:
        raise ConfigError("receive weights w must be nonzero")
    n = scene.geometry.n_radar
    psi = np.zeros((n, n), dtype=complex)
    for ang, power in scene.interferences:
        q = _phi_h_times_w(scene, g, v, w, ang)
        psi += power * np.outer(q, q.conj())
    q0 = _phi_h_times_w(scene, g, v, w, scene.target_angle)
    wn = scene.noise_power * float(np.vdot(w, w).real)
    u = np.linalg.solve(psi + wn * np.eye(n), q0)
    norm = np.linalg.norm(u)
    if norm == 0.0:
        raise ConfigError("transmit update produced a zero vector")
    return u / norm


def _phi_h_times_w(scene: Scene, g: np.ndarray, v: np.ndarray, w: np.ndarray,
                   angle_deg: float) -> np.ndarray:
    """Phi^H(theta) w = conj(a) (a + G^T V b)^H w."""
    from .scene import steering_ris
    geom = scene.geometry
    a = steering_radar(geom, angle_deg)
    rx = a
    if geom.m_ris > 0:
        b = steering_ris(geom, angle_deg + scene.ris_offset_angle)
        rx = a + g.T @ (v * b)
    return np.conj(a) * np.vdot(rx, w)


# ---------------------------------------------------------------------------
# Algorithm 2

def _run_alternating(scene: Scene, g: np.ndarray, cfg: CodesignConfig,
                     state: BeamformerState, mode: str,
                     update_v: bool) -> SolveReport:
    report = SolveReport(mode=mode)
    gain = beamforming_gain(scene, g, state.u, state.v, state.w)
    report.gain_substeps.append(gain)
    u, v, w = state.u, state.v, state.w

    def guarded(candidate_gain, current_gain, label, p):
        if candidate_gain < current_gain * (1.0 - GAIN_SLACK):
            report.diagnostics.append(
                f"iteration {p + 1}: {label} step rejected "
                f"({current_gain:.9e} -> {candidate_gain:.9e})")
            return False
        return True

    for p in range(cfg.p_max):
        t_start = time.perf_counter()
        gain_before = gain
        if update_v and scene.geometry.m_ris > 0:
            try:
                v_new, ris_trace = optimize_ris(
                    scene, g, BeamformerState(u=u, v=v, w=w), cfg)
            except MonotonicityViolation as exc:
                raise MonotonicityViolation(
                    f"iteration {p + 1}, RIS step: {exc}") from exc
            g_v = beamforming_gain(scene, g, u, v_new, w)
            if guarded(g_v, gain, "RIS", p):
                v, gain = v_new, g_v
            report.z_traces.append(ris_trace.z_values)
            report.inner_iterations.append(ris_trace.total_inner_iterations)
        else:
            report.z_traces.append([])
            report.inner_iterations.append(0)
        report.gain_substeps.append(gain)

        w_new = update_receive(scene, g, u, v)
        g_w = beamforming_gain(scene, g, u, v, w_new)
        if guarded(g_w, gain, "receive", p):
            w, gain = w_new, g_w
        report.gain_substeps.append(gain)

        u_new = update_transmit(scene, g, w, v)
        g_u = beamforming_gain(scene, g, u_new, v, w)
        if guarded(g_u, gain, "transmit", p):
            u, gain = u_new, g_u
        report.gain_substeps.append(gain)

        report.step_seconds.append(time.perf_counter() - t_start)
        report.sinr_db.append(linear_to_db(scene.target_power * gain))
        if abs(gain - gain_before) < cfg.delta3 * max(gain_before, 1e-300):
            report.converged = True
            break

    report.state = BeamformerState(u=u, v=ccm_point(v), w=w)
    return report


def codesign(scene: Scene, g: np.ndarray,
             cfg: CodesignConfig | None = None) -> SolveReport:
    """Full alternating optimization (RIS step, receive step, transmit step
    per outer iteration) from the configured initialization."""
    cfg = cfg or CodesignConfig()
    state = initial_state(scene, g, cfg)
    return _run_alternating(scene, g, cfg, state, mode="ris", update_v=True)


def codesign_random_ris(scene: Scene, g: np.ndarray,
                        cfg: CodesignConfig | None = None,
                        seed: int = 0) -> SolveReport:
    """Baseline with RIS phases drawn once (uniform i.i.d.) and frozen; only
    the receive and transmit weights alternate."""
    cfg = cfg or CodesignConfig()
    n, m = scene.geometry.n_radar, scene.geometry.m_ris
    rng = rng_from_seed(seed, STREAM_RIS_PHASES)
    v = random_phases(m, rng)
    u = np.conj(steering_radar(scene.geometry, scene.target_angle))
    u = u / np.linalg.norm(u)
    w = update_receive(scene, g, u, v)
    state = BeamformerState(u=u, v=v, w=w)
    return _run_alternating(scene, g, cfg, state, mode="rris", update_v=False)
