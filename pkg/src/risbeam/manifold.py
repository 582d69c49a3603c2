"""Complex circle manifold (CCM) primitives.

Points are complex vectors with unit-modulus entries; the tangent space at v
is {q : Re(q * conj(v)) = 0}. The real embedding stacks [Re; Im] and
represents complex-linear and conjugate-linear maps as 2M x 2M real blocks;
it is what the Newton equation is solved in.
"""

from __future__ import annotations

import numpy as np

from .errors import ZeroElementError

# unimodularity is accepted as-is below this deviation, silently renormalized
# up to the drift bound, rejected beyond it
UNIT_TOL = 1e-12
DRIFT_TOL = 1e-9


def ccm_point(v) -> np.ndarray:
    """Validate (and if needed renormalize) a point on the complex circle
    manifold. Drift beyond DRIFT_TOL is an error, not fixed silently."""
    v = np.asarray(v, dtype=complex)
    if v.size == 0:
        return v
    mags = np.abs(v)
    dev = np.max(np.abs(mags - 1.0))
    if dev <= UNIT_TOL:
        return v
    if dev <= DRIFT_TOL:
        return v / mags
    raise ValueError(f"point is off the unit circles by {dev:.3e}")


def random_phases(m: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform i.i.d. phases, a random CCM point."""
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, m))


def project_tangent(v: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the tangent space at v:
    P_v(y) = y - Re(y * conj(v)) * v."""
    return y - np.real(y * np.conj(v)) * v


def tangency_residual(v: np.ndarray, xi: np.ndarray) -> float:
    """Max elementwise |Re(xi * conj(v))| (zero for tangent vectors)."""
    if xi.size == 0:
        return 0.0
    return float(np.max(np.abs(np.real(xi * np.conj(v)))))


def retract(v: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Project v + xi back to the manifold, elementwise w / |w|."""
    w = v + xi
    mags = np.abs(w)
    if w.size and np.min(mags) < 1e-15:
        raise ZeroElementError("retraction hit a zero element")
    return w / mags


# ---------------------------------------------------------------------------
# real 2M-dimensional embedding

def to_real(x: np.ndarray) -> np.ndarray:
    """Stack a complex vector as [Re; Im]."""
    return np.concatenate([np.real(x), np.imag(x)])


def from_real(xh: np.ndarray) -> np.ndarray:
    """Inverse of to_real."""
    m = xh.shape[0] // 2
    return xh[:m] + 1j * xh[m:]


def embed_hermitian(h: np.ndarray) -> np.ndarray:
    """Real 2M x 2M representation [[Re, -Im], [Im, Re]] of a complex-linear
    map; symmetric whenever h is Hermitian."""
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def embed_diag(q: np.ndarray) -> np.ndarray:
    """Real representation of a real diagonal matrix Diag(q)."""
    return np.diag(np.concatenate([q, q]))


def embed_involution(v: np.ndarray) -> np.ndarray:
    """The symmetric involution V_hat built from Diag(v * v); the map
    y -> (v*v) * conj(y) in real form. Satisfies V_hat @ V_hat = I."""
    c = v * v
    cr, ci = np.diag(c.real), np.diag(c.imag)
    return np.block([[cr, ci], [ci, -cr]])


def projector_real(v: np.ndarray) -> np.ndarray:
    """Real form of the tangent projector, (I - V_hat) / 2."""
    m2 = 2 * v.shape[0]
    return 0.5 * (np.eye(m2) - embed_involution(v))
