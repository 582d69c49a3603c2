"""Array geometry, steering vectors, channels and output-SINR evaluation.

Conventions: angles are degrees at every interface (converted to radians
internally, once), powers are linear unless a name says dB, the noise power
is 1 so SNR/INR in dB map directly onto the target/interference powers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .rng import STREAM_CHANNEL, rng_from_seed

TWO_PI = 2.0 * math.pi

# Interference directions used by the reference scenes: a 3-interference
# cluster plus individual point interferers. The first five form the small
# scenario; the remaining ten extend it to the crowded one.
INTERFERENCE_ANGLES_DEG = (
    -25.5, -26.2, -26.9, -39.0, 70.0,
    79.0, 64.0, -12.0, -41.0, -43.0, -47.0, -52.0, -59.0, -65.0, -74.0,
)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(max(x, 1e-300))


@dataclass(frozen=True)
class ArrayGeometry:
    """Radar ULA and RIS ULA element counts and spacings (in wavelengths)."""

    n_radar: int
    m_ris: int
    spacing_radar: float = 0.5
    spacing_ris: float = 0.5

    def __post_init__(self):
        if self.n_radar < 1:
            raise ConfigError(f"n_radar must be >= 1, got {self.n_radar}")
        if self.m_ris < 0:
            raise ConfigError(f"m_ris must be >= 0, got {self.m_ris}")

    @property
    def wavenumber_spacing_radar(self) -> float:
        """nu * d_R in radians (nu = 2*pi/lambda, d_R in wavelengths)."""
        return TWO_PI * self.spacing_radar

    @property
    def wavenumber_spacing_ris(self) -> float:
        return TWO_PI * self.spacing_ris


@dataclass(frozen=True)
class ChannelParams:
    """Path-loss and Rician fading parameters of the radar-RIS link."""

    ref_loss: float = 1e-3            # C_0, linear
    ref_distance: float = 1.0         # D_0, meters
    distance: float = 3.0             # D, meters
    path_exponent: float = 2.2        # eta
    rician_k: float = 0.5             # K_R
    los_departure_angle: float = 20.0  # degrees, seen from the radar array
    los_arrival_angle: float = 0.0     # degrees, seen from the RIS
    seed: int = 0

    def __post_init__(self):
        if self.distance <= 0 or self.ref_distance <= 0:
            raise ConfigError("distances must be positive")
        if self.rician_k < 0:
            raise ConfigError("rician_k must be >= 0")
        if self.ref_loss <= 0:
            raise ConfigError("ref_loss must be positive")


@dataclass(frozen=True)
class Scene:
    """Target, interferences, noise and geometry of one radar scenario.

    `interferences` is a tuple of (angle_deg, power_linear) pairs; powers are
    linear (sigma_i^2) with the noise power fixed by `noise_power`.
    """

    target_angle: float               # theta_0, degrees
    target_power: float               # sigma_0^2, linear
    interferences: tuple[tuple[float, float], ...]
    noise_power: float                # sigma_n^2, linear
    ris_offset_angle: float           # theta_tr, degrees
    channel: ChannelParams
    geometry: ArrayGeometry

    def __post_init__(self):
        if self.target_power <= 0 or self.noise_power <= 0:
            raise ConfigError("target_power and noise_power must be positive")
        for ang, p in self.interferences:
            if ang == self.target_angle:
                raise ConfigError(
                    f"interference angle {ang} coincides with the target")
            if p <= 0:
                raise ConfigError("interference powers must be positive")

    @property
    def n_interferences(self) -> int:
        return len(self.interferences)

    def interference_angles(self) -> np.ndarray:
        return np.array([a for a, _ in self.interferences], dtype=float)

    def interference_powers(self) -> np.ndarray:
        return np.array([p for _, p in self.interferences], dtype=float)


def default_scene(m_ris: int = 128, n_radar: int = 5, i_count: int = 5,
                  snr_db: float = 10.0, inr_db: float = 30.0,
                  distance_m: float = 3.0, seed: int = 0) -> Scene:
    """Reference scenario: target at 30 deg, interference cluster at
    -25.5/-26.2/-26.9 deg plus point interferers, half-wavelength ULAs."""
    if not 0 <= i_count <= len(INTERFERENCE_ANGLES_DEG):
        raise ConfigError(
            f"i_count must be in [0, {len(INTERFERENCE_ANGLES_DEG)}]")
    p_i = db_to_linear(inr_db)
    interferences = tuple(
        (ang, p_i) for ang in INTERFERENCE_ANGLES_DEG[:i_count])
    return Scene(
        target_angle=30.0,
        target_power=db_to_linear(snr_db),
        interferences=interferences,
        noise_power=1.0,
        ris_offset_angle=20.0,
        channel=ChannelParams(distance=distance_m, seed=seed),
        geometry=ArrayGeometry(n_radar=n_radar, m_ris=m_ris),
    )


def ris_free(scene: Scene) -> Scene:
    """The same scene with the RIS removed (M = 0)."""
    return replace(scene, geometry=replace(scene.geometry, m_ris=0))


# ---------------------------------------------------------------------------
# steering vectors and channels

def steering_radar(geometry: ArrayGeometry, angle_deg: float) -> np.ndarray:
    """Radar ULA steering vector a(theta), element k = exp(-j nu d_R k sin)."""
    phase = geometry.wavenumber_spacing_radar * math.sin(math.radians(angle_deg))
    return np.exp(-1j * phase * np.arange(geometry.n_radar))


def steering_ris(geometry: ArrayGeometry, angle_deg: float) -> np.ndarray:
    """RIS ULA steering vector b(theta); rejects RIS-free geometries."""
    if geometry.m_ris < 1:
        raise ConfigError("steering_ris requires m_ris >= 1")
    phase = geometry.wavenumber_spacing_ris * math.sin(math.radians(angle_deg))
    return np.exp(-1j * phase * np.arange(geometry.m_ris))


def path_loss(channel: ChannelParams) -> float:
    """Distance-dependent loss C = C_0 (D/D_0)^(-eta), linear."""
    return channel.ref_loss * (channel.distance / channel.ref_distance) ** (
        -channel.path_exponent)


def empty_channel(geometry: ArrayGeometry) -> np.ndarray:
    """The degenerate 0 x N channel of a RIS-free scene."""
    return np.zeros((0, geometry.n_radar), dtype=complex)


def draw_channel(channel: ChannelParams, geometry: ArrayGeometry,
                 seed: int | None = None) -> np.ndarray:
    """Draw the M x N radar-to-RIS channel matrix G.

    Rician mixture of a rank-one deterministic component (outer product of
    the RIS steering at the LoS arrival angle and the radar steering at the
    LoS departure angle) with i.i.d. unit-variance complex Gaussian fading,
    scaled by the square root of the path loss. Deterministic given a seed.
    """
    if geometry.m_ris < 1:
        raise ConfigError("draw_channel requires m_ris >= 1")
    rng = rng_from_seed(channel.seed if seed is None else seed, STREAM_CHANNEL)
    m, n = geometry.m_ris, geometry.n_radar
    g_los = np.outer(steering_ris(geometry, channel.los_arrival_angle),
                     steering_radar(geometry, channel.los_departure_angle))
    g_nlos = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))
    g_nlos /= math.sqrt(2.0)
    k = channel.rician_k
    g = (math.sqrt(k / (1.0 + k)) * g_los
         + math.sqrt(1.0 / (1.0 + k)) * g_nlos)
    return math.sqrt(path_loss(channel)) * g


# ---------------------------------------------------------------------------
# composite response and SINR

def compose_phi(scene: Scene, g: np.ndarray, v: np.ndarray,
                angle_deg: float) -> np.ndarray:
    """Composite N x N response Phi(theta) = (a + G^T V b(theta+theta_tr)) a^T.

    Total in v (unimodularity is the callers' business); with M = 0 the
    reflected term is absent and Phi reduces to a a^T.
    """
    geom = scene.geometry
    a = steering_radar(geom, angle_deg)
    if g.shape != (geom.m_ris, geom.n_radar):
        raise ConfigError(f"channel shape {g.shape} does not match geometry")
    v = np.asarray(v)
    if v.shape != (geom.m_ris,):
        raise ConfigError(f"v shape {v.shape} does not match geometry")
    rx = a
    if geom.m_ris > 0:
        b = steering_ris(geom, angle_deg + scene.ris_offset_angle)
        rx = a + g.T @ (v * b)
    return np.outer(rx, a)


def phi_times_u(scene: Scene, g: np.ndarray, v: np.ndarray, u: np.ndarray,
                angle_deg: float) -> np.ndarray:
    """Phi(theta) u without materializing the N x N matrix."""
    geom = scene.geometry
    a = steering_radar(geom, angle_deg)
    rx = a
    if geom.m_ris > 0:
        b = steering_ris(geom, angle_deg + scene.ris_offset_angle)
        rx = a + g.T @ (v * b)
    return rx * (a @ u)


@dataclass(frozen=True)
class BeamformerState:
    """The design triple: transmit weights u (unit norm), RIS coefficients v
    (unimodular), receive weights w (nonzero)."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        u, v, w = map(np.asarray, (self.u, self.v, self.w))
        if abs(np.linalg.norm(u) - 1.0) > 1e-12:
            raise ConfigError("u must have unit norm")
        if v.size and np.max(np.abs(np.abs(v) - 1.0)) > 1e-9:
            raise ConfigError("v must be unimodular")
        if not np.all(np.isfinite(w)) or np.linalg.norm(w) == 0.0:
            raise ConfigError("w must be finite and nonzero")


def beamforming_gain(scene: Scene, g: np.ndarray, u: np.ndarray,
                     v: np.ndarray, w: np.ndarray) -> float:
    """Codesign objective G(u,v,w): the SINR quotient without sigma_0^2."""
    if np.linalg.norm(w) == 0.0:
        raise ConfigError("receive weights w must be nonzero")
    num = abs(np.vdot(w, phi_times_u(scene, g, v, u, scene.target_angle))) ** 2
    den = scene.noise_power * float(np.vdot(w, w).real)
    for ang, power in scene.interferences:
        den += power * abs(np.vdot(w, phi_times_u(scene, g, v, u, ang))) ** 2
    return num / den


def output_sinr(scene: Scene, g: np.ndarray, state: BeamformerState) -> float:
    """Output SINR (linear): sigma_0^2 |w^H Phi(theta_0) u|^2 over the
    interference-plus-noise power at the beamformer output."""
    return scene.target_power * beamforming_gain(
        scene, g, state.u, state.v, state.w)


def output_sinr_db(scene: Scene, g: np.ndarray, state: BeamformerState) -> float:
    return linear_to_db(output_sinr(scene, g, state))


def beampattern(scene: Scene, g: np.ndarray, state: BeamformerState,
                grid_deg) -> np.ndarray:
    """Joint transmit/receive pattern |w^H Phi(theta) u|^2 in dB over a grid.

    Returns an array of (angle_deg, pattern_db) rows, unnormalized.
    """
    grid = np.atleast_1d(np.asarray(grid_deg, dtype=float))
    vals = np.empty_like(grid)
    for i, ang in enumerate(grid):
        p = abs(np.vdot(state.w, phi_times_u(scene, g, state.v, state.u, ang))) ** 2
        vals[i] = linear_to_db(p)
    return np.column_stack([grid, vals])


# ---------------------------------------------------------------------------
# JSON scene files

_GEOMETRY_KEYS = {"n_radar", "m_ris", "spacing_radar", "spacing_ris"}
_CHANNEL_KEYS = {"c0_db", "ref_distance_m", "distance_m", "path_exponent",
                 "rician_k", "los_departure_angle_deg", "los_arrival_angle_deg",
                 "seed"}
_SCENE_KEYS = {"geometry", "target_angle_deg", "snr_db", "interferences",
               "noise_power_db", "ris_offset_angle_deg", "channel"}
_INTERFERENCE_KEYS = {"angle_deg", "inr_db"}


def _check_keys(obj: dict, allowed: set, where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def scene_from_dict(data: dict) -> Scene:
    """Build a Scene from its JSON representation (angles in degrees, powers
    in dB). Unknown keys are rejected."""
    _check_keys(data, _SCENE_KEYS, "scene")
    geom_data = data.get("geometry", {})
    _check_keys(geom_data, _GEOMETRY_KEYS, "scene.geometry")
    geometry = ArrayGeometry(
        n_radar=int(geom_data.get("n_radar", 5)),
        m_ris=int(geom_data.get("m_ris", 128)),
        spacing_radar=float(geom_data.get("spacing_radar", 0.5)),
        spacing_ris=float(geom_data.get("spacing_ris", 0.5)),
    )
    chan_data = data.get("channel", {})
    _check_keys(chan_data, _CHANNEL_KEYS, "scene.channel")
    ris_offset = float(data.get("ris_offset_angle_deg", 20.0))
    channel = ChannelParams(
        ref_loss=db_to_linear(float(chan_data.get("c0_db", -30.0))),
        ref_distance=float(chan_data.get("ref_distance_m", 1.0)),
        distance=float(chan_data.get("distance_m", 3.0)),
        path_exponent=float(chan_data.get("path_exponent", 2.2)),
        rician_k=float(chan_data.get("rician_k", 0.5)),
        los_departure_angle=float(
            chan_data.get("los_departure_angle_deg", ris_offset)),
        los_arrival_angle=float(chan_data.get("los_arrival_angle_deg", 0.0)),
        seed=int(chan_data.get("seed", 0)),
    )
    interferences = []
    for k, entry in enumerate(data.get("interferences", [])):
        _check_keys(entry, _INTERFERENCE_KEYS, f"scene.interferences[{k}]")
        if "angle_deg" not in entry:
            raise ConfigError(f"scene.interferences[{k}] missing angle_deg")
        interferences.append((float(entry["angle_deg"]),
                              db_to_linear(float(entry.get("inr_db", 30.0)))))
    return Scene(
        target_angle=float(data.get("target_angle_deg", 30.0)),
        target_power=db_to_linear(float(data.get("snr_db", 10.0))),
        interferences=tuple(interferences),
        noise_power=db_to_linear(float(data.get("noise_power_db", 0.0))),
        ris_offset_angle=ris_offset,
        channel=channel,
        geometry=geometry,
    )


def load_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return scene_from_dict(data)


def scene_to_dict(scene: Scene) -> dict:
    """Inverse of scene_from_dict (powers back to dB)."""
    return {
        "geometry": {
            "n_radar": scene.geometry.n_radar,
            "m_ris": scene.geometry.m_ris,
            "spacing_radar": scene.geometry.spacing_radar,
            "spacing_ris": scene.geometry.spacing_ris,
        },
        "target_angle_deg": scene.target_angle,
        "snr_db": linear_to_db(scene.target_power),
        "interferences": [
            {"angle_deg": a, "inr_db": linear_to_db(p)}
            for a, p in scene.interferences
        ],
        "noise_power_db": linear_to_db(scene.noise_power),
        "ris_offset_angle_deg": scene.ris_offset_angle,
        "channel": {
            "c0_db": linear_to_db(scene.channel.ref_loss),
            "ref_distance_m": scene.channel.ref_distance,
            "distance_m": scene.channel.distance,
            "path_exponent": scene.channel.path_exponent,
            "rician_k": scene.channel.rician_k,
            "los_departure_angle_deg": scene.channel.los_departure_angle,
            "los_arrival_angle_deg": scene.channel.los_arrival_angle,
            "seed": scene.channel.seed,
        },
    }
