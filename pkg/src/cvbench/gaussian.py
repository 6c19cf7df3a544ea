"""Exact calculus of one-mode Gaussian states and Gaussian channels.

Quadrature convention used throughout the package:

    x_plus  = (a + a^dag) / sqrt(2)
    x_minus = (a - a^dag) / (sqrt(2) i)

so the vacuum covariance matrix is E2/2 (determinant 1/4) and a coherent
state |alpha> has mean vector sqrt(2) * (Re alpha, Im alpha).  A state
(d, gamma) is physical iff gamma is symmetric, positive definite and
det(gamma) >= 1/4.  A channel acts as

    gamma' = K gamma K^T + M,     d' = K d + disp,

and is completely positive iff M is symmetric PSD with
sqrt(det M) >= |det K - 1| / 2 (one-mode case, where K Delta K^T =
det(K) Delta for the symplectic form Delta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidInput

E2 = np.eye(2)

#: Symplectic form for one mode in the (x_plus, x_minus) ordering.
DELTA = np.array([[0.0, -1.0], [1.0, 0.0]])

#: Covariance matrix of the vacuum (and of every coherent state).
VACUUM_GAMMA = 0.5 * np.eye(2)

_SYM_TOL = 1e-12
_DET_TOL = 1e-12
_ISO_TOL = 1e-12


def coherent_mean(alpha):
    """Mean quadrature vector sqrt(2)*(Re alpha, Im alpha) of |alpha>."""
    alpha = complex(alpha)
    return math.sqrt(2.0) * np.array([alpha.real, alpha.imag])


def _as_matrix(m, name):
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2):
        raise InvalidInput(f"{name} must be a 2x2 real matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise InvalidInput(f"{name} must be finite")
    return m


def _as_vector(v, name):
    v = np.asarray(v, dtype=float)
    if v.shape != (2,):
        raise InvalidInput(f"{name} must be a length-2 real vector, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise InvalidInput(f"{name} must be finite")
    return v


@dataclass(frozen=True)
class GaussianState:
    """First and second moments (d, gamma) of a one-mode Gaussian state."""

    d: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "d", _as_vector(self.d, "mean vector d"))
        object.__setattr__(self, "gamma", _as_matrix(self.gamma, "covariance gamma"))

    @classmethod
    def vacuum(cls):
        return cls(np.zeros(2), VACUUM_GAMMA.copy())

    @classmethod
    def coherent(cls, alpha):
        return cls(coherent_mean(alpha), VACUUM_GAMMA.copy())

    def to_json(self):
        return {"d": self.d.tolist(), "gamma": self.gamma.tolist()}

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(np.array(obj["d"], dtype=float), np.array(obj["gamma"], dtype=float))
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"state JSON needs 'd' and 'gamma' fields: {exc}") from exc


@dataclass(frozen=True)
class GaussianChannel:
    """One-mode Gaussian channel (K, M) with an optional displacement."""

    K: np.ndarray
    M: np.ndarray
    disp: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        object.__setattr__(self, "K", _as_matrix(self.K, "gain matrix K"))
        object.__setattr__(self, "M", _as_matrix(self.M, "noise matrix M"))
        object.__setattr__(self, "disp", _as_vector(self.disp, "displacement"))

    @classmethod
    def identity(cls):
        return cls(np.eye(2), np.zeros((2, 2)))

    def to_json(self):
        return {"K": self.K.tolist(), "M": self.M.tolist(), "disp": self.disp.tolist()}

    @classmethod
    def from_json(cls, obj):
        try:
            disp = obj.get("disp", [0.0, 0.0])
            return cls(np.array(obj["K"], dtype=float), np.array(obj["M"], dtype=float),
                       np.array(disp, dtype=float))
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"channel JSON needs 'K' and 'M' fields: {exc}") from exc


def is_physical_state(gamma) -> bool:
    """Whether gamma is a valid one-mode covariance matrix.

    Checks symmetry (to 1e-12), positive definiteness, and the uncertainty
    bound det(gamma) >= 1/4 - 1e-12.
    """
    gamma = _as_matrix(gamma, "covariance gamma")
    if abs(gamma[0, 1] - gamma[1, 0]) > _SYM_TOL:
        return False
    det = gamma[0, 0] * gamma[1, 1] - gamma[0, 1] * gamma[1, 0]
    # For a symmetric 2x2 matrix, gamma[0,0] > 0 together with det > 0 is
    # positive definiteness; the uncertainty bound subsumes det > 0.
    return gamma[0, 0] > 0.0 and det >= 0.25 - _DET_TOL


def is_cp_channel(channel: GaussianChannel) -> bool:
    """Complete-positivity test for a one-mode Gaussian channel (K, M)."""
    K, M = channel.K, channel.M
    if abs(M[0, 1] - M[1, 0]) > _SYM_TOL:
        return False
    eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
    if eigs[0] < -_DET_TOL:
        return False
    det_m = max(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0], 0.0)
    det_k = K[0, 0] * K[1, 1] - K[0, 1] * K[1, 0]
    return math.sqrt(det_m) >= 0.5 * abs(det_k - 1.0) - _DET_TOL


def apply_channel(channel: GaussianChannel, state: GaussianState) -> GaussianState:
    """Propagate a Gaussian state through a Gaussian channel."""
    if not is_physical_state(state.gamma):
        raise InvalidInput("input covariance is not a physical one-mode state")
    if not is_cp_channel(channel):
        raise InvalidInput("channel (K, M) violates complete positivity")
    gamma = channel.K @ state.gamma @ channel.K.T + channel.M
    d = channel.K @ state.d + channel.disp
    return GaussianState(d, gamma)


def compose(second: GaussianChannel, first: GaussianChannel) -> GaussianChannel:
    """Channel obtained by applying `first`, then `second`."""
    K = second.K @ first.K
    M = second.K @ first.M @ second.K.T + second.M
    disp = second.K @ first.disp + second.disp
    return GaussianChannel(K, M, disp)


def characteristic_function(state: GaussianState, z) -> complex:
    """Gaussian characteristic function exp(i d.z - z.gamma.z / 2)."""
    z = _as_vector(z, "phase-space argument z")
    return complex(np.exp(1j * float(state.d @ z) - 0.5 * float(z @ state.gamma @ z)))


def fidelity_to_coherent(state: GaussianState, beta) -> float:
    """Overlap <beta| rho |beta> of a Gaussian state with a coherent state.

    Closed form: [det(gamma_c + gamma)]^(-1/2)
                 * exp(-delta . (gamma_c + gamma)^(-1) . delta / 2)
    with gamma_c = E2/2 and delta the mean-vector mismatch.
    """
    if not is_physical_state(state.gamma):
        raise InvalidInput("covariance is not a physical one-mode state")
    sigma = VACUUM_GAMMA + state.gamma
    delta = state.d - coherent_mean(beta)
    det = sigma[0, 0] * sigma[1, 1] - sigma[0, 1] * sigma[1, 0]
    expo = -0.5 * float(delta @ np.linalg.solve(sigma, delta))
    return float(math.exp(expo) / math.sqrt(det))


def _isotropic_part(m):
    """Return s for m = s*E2, or None if m is not isotropic (to 1e-12)."""
    scale = max(1.0, abs(m[0, 0]), abs(m[1, 1]))
    if (abs(m[0, 0] - m[1, 1]) <= _ISO_TOL * scale
            and abs(m[0, 1]) <= _ISO_TOL * scale
            and abs(m[1, 0]) <= _ISO_TOL * scale):
        return float(m[0, 0])
    return None


def average_fidelity_gaussian(channel: GaussianChannel, eta: float, lam: float,
                              rule=None) -> float:
    """Average fidelity of a Gaussian channel against the scaling task.

    The task sends |alpha> to |sqrt(eta) alpha> with alpha drawn from the
    Gaussian prior p(alpha) = (lam/pi) exp(-lam |alpha|^2).  For isotropic
    channels (K = g*E2 with isotropic output covariance S*E2 relative to a
    coherent probe) the average has the closed form

        lam / (lam*S + (g - sqrt(eta))^2) * exp(-lam |disp|^2 / (2 (lam*S + c^2)))

    which reduces to det(gamma_c + gamma')^(-1/2), independent of lam, in the
    gain-matched case.  Anisotropic channels fall back to prior quadrature of
    `fidelity_to_coherent` with an importance-matched node layout.

    lam = 0 denotes the flat-prior limit and is accepted only in the matched
    case (K = sqrt(eta)*E2 with no displacement); anything else diverges and
    raises DomainError.
    """
    if eta <= 0:
        raise InvalidInput(f"task gain eta must be positive, got {eta}")
    if lam < 0:
        raise InvalidInput(f"prior width lambda must be >= 0, got {lam}")
    if not is_cp_channel(channel):
        raise InvalidInput("channel (K, M) violates complete positivity")

    gamma_out = channel.K @ VACUUM_GAMMA @ channel.K.T + channel.M
    sigma = VACUUM_GAMMA + gamma_out
    sqrt_eta = math.sqrt(eta)
    g = _isotropic_part(channel.K)
    disp2 = float(channel.disp @ channel.disp)

    matched = (g is not None and g >= 0 and abs(g - sqrt_eta) <= 1e-12 * max(1.0, sqrt_eta)
               and disp2 <= 1e-24)
    if matched:
        det = sigma[0, 0] * sigma[1, 1] - sigma[0, 1] * sigma[1, 0]
        return float(1.0 / math.sqrt(det))
    if lam == 0:
        raise DomainError(
            "flat prior (lambda = 0) diverges unless the channel is exactly "
            f"gain-matched with no displacement; here K gain {g if g is not None else channel.K} "
            f"vs sqrt(eta) = {sqrt_eta} and |disp|^2 = {disp2}")

    s_iso = _isotropic_part(sigma)
    if g is not None and g >= 0 and s_iso is not None:
        c = g - sqrt_eta
        den = lam * s_iso + c * c
        return float(lam / den * math.exp(-lam * disp2 / (2.0 * den)))

    return _average_fidelity_quadrature(channel, eta, lam, rule)


def _average_fidelity_quadrature(channel, eta, lam, rule=None):
    """Prior-quadrature fallback for anisotropic channels."""
    from . import ensembles  # local import keeps the module dependency one-way

    sqrt_eta = math.sqrt(eta)
    gamma_out = channel.K @ VACUUM_GAMMA @ channel.K.T + channel.M
    sigma = VACUUM_GAMMA + gamma_out
    # Effective angular-average decay rate of the per-alpha fidelity; adding it
    # to the prior width puts quadrature nodes where the integrand lives.
    A = channel.K - sqrt_eta * E2
    c_eff = 0.5 * float(np.trace(A.T @ np.linalg.solve(sigma, A)))
    lam_rule = lam + max(c_eff, 0.0)
    if rule is None:
        rule = ensembles.gauss_rule(ensembles.GaussianPrior(lam_rule), 24, 32)

    def estimate(r):
        nodes, weights = r.nodes, r.weights
        # importance factor: rule weights represent its own prior width
        logfac = (r.lam - lam) * np.abs(nodes) ** 2
        fac = (lam / r.lam) * np.exp(logfac)
        vals = np.empty(nodes.size)
        for i, a in enumerate(nodes):
            out = apply_channel(channel, GaussianState.coherent(a))
            vals[i] = fidelity_to_coherent(out, sqrt_eta * a)
        return float(np.sum(weights * fac * vals))

    coarse = estimate(rule)
    fine = estimate(rule.refine())
    # the integrand is Gaussian-by-Gaussian, so doubling the rule is ample
    return fine if abs(fine - coarse) < 1e-6 else estimate(rule.refine().refine())
