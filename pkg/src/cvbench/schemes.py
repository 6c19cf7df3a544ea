"""Channel models: canonical Gaussian families and measure-and-prepare schemes.

A `ChannelModel` is a small tagged description (pure loss, quantum-limited
amplification, the two canonical Gaussian noise forms, heterodyne
measure-and-prepare, or a composition).  Every model lowers to an exact
Gaussian channel via `to_gaussian` and to a truncated Fock-space map via
`fock_applier`, which is what the simulation engines consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import fock
from .bounds import classical_bound
from .errors import (ConvergenceError, InvalidInput, NotCompletelyPositive,
                     UnsupportedTask)
from .gaussian import E2, GaussianChannel, compose as compose_channels, is_cp_channel

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PureLoss:
    """Beamsplitter attenuation of transmissivity T in (0, 1]."""

    T: float

    def __post_init__(self):
        if not (0.0 < self.T <= 1.0):
            raise InvalidInput(f"transmissivity must be in (0, 1], got {self.T}")


@dataclass(frozen=True)
class QuantumLimitedAmp:
    """Phase-insensitive amplifier of gain G >= 1 at the quantum noise limit."""

    G: float

    def __post_init__(self):
        if not (self.G >= 1.0):
            raise InvalidInput(f"amplifier gain must be >= 1, got {self.G}")


@dataclass(frozen=True)
class CanonicalB1:
    """Unit-gain channel adding 1/2 unit of classical noise to one quadrature."""


@dataclass(frozen=True)
class CanonicalC:
    """Attenuation/amplification of gain eta with ntilde added thermal-like noise."""

    eta: float
    ntilde: float

    def __post_init__(self):
        if not (self.eta > 0):
            raise InvalidInput(f"channel gain eta must be positive, got {self.eta}")
        if not (self.ntilde >= 0):
            raise InvalidInput(f"added noise ntilde must be >= 0, got {self.ntilde}")


@dataclass(frozen=True)
class HeterodyneMP:
    """Heterodyne measurement followed by re-preparation of |g * outcome>."""

    g: float

    def __post_init__(self):
        if not (self.g >= 0):
            raise InvalidInput(f"re-preparation gain must be >= 0, got {self.g}")


@dataclass(frozen=True)
class Compose:
    """Sequential composition; parts are applied in list order."""

    parts: tuple

    def __init__(self, parts):
        object.__setattr__(self, "parts", tuple(parts))
        if not self.parts:
            raise InvalidInput("composition needs at least one part")
        for p in self.parts:
            if not isinstance(p, _MODEL_TYPES):
                raise InvalidInput(f"not a channel model: {p!r}")


ChannelModel = Union[PureLoss, QuantumLimitedAmp, CanonicalB1, CanonicalC,
                     HeterodyneMP, Compose]
_MODEL_TYPES = (PureLoss, QuantumLimitedAmp, CanonicalB1, CanonicalC,
                HeterodyneMP, Compose)

_JSON_TAGS = {
    PureLoss: "pure_loss",
    QuantumLimitedAmp: "quantum_limited_amp",
    CanonicalB1: "canonical_b1",
    CanonicalC: "canonical_c",
    HeterodyneMP: "heterodyne_mp",
    Compose: "compose",
}


def model_to_json(model: ChannelModel) -> dict:
    tag = _JSON_TAGS[type(model)]
    if isinstance(model, PureLoss):
        return {"type": tag, "T": model.T}
    if isinstance(model, QuantumLimitedAmp):
        return {"type": tag, "G": model.G}
    if isinstance(model, CanonicalB1):
        return {"type": tag}
    if isinstance(model, CanonicalC):
        return {"type": tag, "eta": model.eta, "ntilde": model.ntilde}
    if isinstance(model, HeterodyneMP):
        return {"type": tag, "g": model.g}
    return {"type": tag, "parts": [model_to_json(p) for p in model.parts]}


def model_from_json(obj) -> ChannelModel:
    if not isinstance(obj, dict) or "type" not in obj:
        raise InvalidInput("channel model JSON must be an object with a 'type' tag")
    tag = obj["type"]
    try:
        if tag == "pure_loss":
            return PureLoss(float(obj["T"]))
        if tag == "quantum_limited_amp":
            return QuantumLimitedAmp(float(obj["G"]))
        if tag == "canonical_b1":
            return CanonicalB1()
        if tag == "canonical_c":
            return CanonicalC(float(obj["eta"]), float(obj["ntilde"]))
        if tag == "heterodyne_mp":
            return HeterodyneMP(float(obj["g"]))
        if tag == "compose":
            return Compose([model_from_json(p) for p in obj["parts"]])
    except KeyError as exc:
        raise InvalidInput(f"channel model '{tag}' is missing field {exc}") from exc
    raise InvalidInput(f"unknown channel model type {tag!r}")


def _iso_params(model):
    """(k_squared, added_noise) for isotropic models, None otherwise.

    Folding compositions in these scalar parameters (one square root at the
    very end) keeps algebraically equal channels bit-for-bit equal, e.g.
    amplification after loss with G = 1/T reproduces the unit-gain classical
    noise channel exactly.
    """
    if isinstance(model, PureLoss):
        return model.T, (1.0 - model.T) / 2.0
    if isinstance(model, QuantumLimitedAmp):
        return model.G, (model.G - 1.0) / 2.0
    if isinstance(model, CanonicalC):
        return model.eta, model.ntilde + abs(1.0 - model.eta) / 2.0
    if isinstance(model, HeterodyneMP):
        return model.g * model.g, (1.0 + model.g * model.g) / 2.0
    if isinstance(model, Compose):
        k2, m = 1.0, 0.0
        for part in model.parts:
            sub = _iso_params(part)
            if sub is None:
                return None
            k2_p, m_p = sub
            k2, m = k2 * k2_p, k2_p * m + m_p
        return k2, m
    return None


def to_gaussian(model: ChannelModel) -> GaussianChannel:
    """Exact Gaussian form (K, M) of a channel model."""
    iso = _iso_params(model)
    if iso is not None:
        k2, m = iso
        return GaussianChannel(math.sqrt(k2) * E2, m * E2)
    if isinstance(model, CanonicalB1):
        return GaussianChannel(E2.copy(), np.diag([0.5, 0.0]))
    if isinstance(model, Compose):
        chan = GaussianChannel.identity()
        for part in model.parts:
            chan = compose_channels(to_gaussian(part), chan)
        return chan
    raise InvalidInput(f"not a channel model: {model!r}")


def qd_by_parameters(model: ChannelModel) -> bool:
    """Quantum-domain classification of the canonical Gaussian families."""
    if isinstance(model, CanonicalB1):
        return True
    if isinstance(model, CanonicalC):
        return model.ntilde < min(1.0, model.eta)
    if isinstance(model, PureLoss):
        return True  # ntilde = 0 attenuation
    if isinstance(model, QuantumLimitedAmp):
        return True
    raise InvalidInput(f"no canonical quantum-domain classification for {model!r}")


# ---------------------------------------------------------------------------
# measure-and-prepare closed forms


def optimal_mp_gain(eta: float, lam: float) -> float:
    """Re-preparation gain maximizing the heterodyne strategy: sqrt(eta)/(1+lam)."""
    if eta <= 0:
        raise InvalidInput(f"task gain eta must be positive, got {eta}")
    if lam < 0:
        raise InvalidInput(f"prior width lambda must be >= 0, got {lam}")
    return math.sqrt(eta) / (1.0 + lam)


def mp_average_fidelity(g: float, eta: float, lam: float) -> float:
    """Average task fidelity of the heterodyne measure-and-prepare scheme.

    Closed form lam / [lam (1 + g^2) + (g - sqrt(eta))^2], a sum of
    non-negative terms (the equivalent difference form
    (1 + g^2)(1 + lam + eta) - (1 + g sqrt(eta))^2 loses ~1e-14 to
    cancellation near the optimum).  The lam -> 0 limit is 1/(1 + eta) at
    matched gain and 0 otherwise.
    """
    if g < 0:
        raise InvalidInput(f"re-preparation gain must be >= 0, got {g}")
    if eta <= 0:
        raise InvalidInput(f"task gain eta must be positive, got {eta}")
    if lam < 0:
        raise InvalidInput(f"prior width lambda must be >= 0, got {lam}")
    sqrt_eta = math.sqrt(eta)
    if lam == 0:
        return 1.0 / (1.0 + eta) if g == sqrt_eta else 0.0
    den = lam * (1.0 + g * g) + (g - sqrt_eta) ** 2
    return lam / den


def optimize_mp_gain(eta: float, lam: float, grid=None):
    """Numerically locate the best heterodyne gain; returns (g_best, fidelity).

    Coarse grid search over [0, 3 sqrt(eta)] followed by golden-section
    refinement.  The peak is locally quadratic, so value-only search resolves
    the argmax to about sqrt(eps) ~ 1e-7 at best; the fidelity itself is good
    to ~1e-15.  The optimum never exceeds the classical bound (up to
    roundoff), which callers are welcome to assert.
    """
    if lam <= 0:
        raise InvalidInput("gain optimization needs lambda > 0 (otherwise the optimum is trivial)")
    if grid is None:
        grid = np.linspace(0.0, 3.0 * math.sqrt(eta), 1201)
    grid = np.asarray(grid, dtype=float)
    if grid.size < 3:
        raise InvalidInput("gain grid needs at least 3 points")
    vals = np.array([mp_average_fidelity(g, eta, lam) for g in grid])
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    g_best = _golden_max(lambda g: mp_average_fidelity(g, eta, lam), lo, hi, tol=1e-10)
    return g_best, mp_average_fidelity(g_best, eta, lam)


def _golden_max(f, a, b, tol):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# Fock-space realizations


def apply_mp_fock(scheme: HeterodyneMP, rho: fock.FockOperator, points: int = 40,
                  max_trace_deficit: float = 1e-4) -> fock.FockOperator:
    """Heterodyne measure-and-prepare applied to a truncated state.

    Integrates outcome beta over the Husimi distribution of `rho` with a
    Gauss-Hermite grid centered on the state's mean and scaled to the Husimi
    covariance, re-preparing |g beta> for each outcome.  The output trace is
    the convergence diagnostic: a deficit beyond `max_trace_deficit` raises.
    """
    if not isinstance(scheme, HeterodyneMP):
        raise InvalidInput("apply_mp_fock expects a HeterodyneMP scheme")
    if not (4 <= points <= 64):
        raise InvalidInput("outcome grid wants between 4 and 64 points per axis")
    from numpy.polynomial.hermite import hermgauss

    cutoff = rho.cutoff
    g = scheme.g
    mean, gamma = fock.mean_and_covariance(rho)
    husimi_cov = 0.5 * (gamma + 0.5 * np.eye(2))  # in (Re beta, Im beta) coordinates
    vals, vecs = np.linalg.eigh(husimi_cov)
    vals = np.maximum(vals, 1e-12)
    center = mean / _SQRT2

    x, w = hermgauss(points)
    s1 = np.sqrt(2.0 * vals[0]) * x
    s2 = np.sqrt(2.0 * vals[1]) * x
    offsets = vecs @ np.stack([np.repeat(s1, points), np.tile(s2, points)])
    beta = (center[0] + offsets[0]) + 1j * (center[1] + offsets[1])
    log_comp = (x ** 2)[:, None] + (x ** 2)[None, :]
    weights = (np.outer(w, w) * np.exp(log_comp)).ravel()
    jacobian = math.sqrt(4.0 * vals[0] * vals[1])

    native = np.outer(w, w).ravel()
    usable = (np.abs(beta) ** 2 <= cutoff) & ((g * np.abs(beta)) ** 2 <= cutoff) \
        & (native > 1e-22 * native.max())
    beta_u = beta[usable]

    kets_meas = fock.coherent_amplitudes(beta_u, cutoff)
    husimi = np.einsum("ns,nm,ms->s", kets_meas.conj(), rho.matrix, kets_meas).real / math.pi
    husimi = np.maximum(husimi, 0.0)
    node_mass = weights[usable] * jacobian * husimi

    kets_prep = fock.coherent_amplitudes(g * beta_u, cutoff)
    out = (kets_prep * node_mass) @ kets_prep.conj().T
    result = fock.FockOperator(out)

    deficit = rho.trace - result.trace
    if max_trace_deficit is not None and deficit > max_trace_deficit:
        raise ConvergenceError(
            f"outcome grid too narrow for this state: trace fell by {deficit:.3g} "
            f"(> {max_trace_deficit:g}); widen the grid or raise the cutoff",
            value=result.trace, error=deficit)
    return result


def fock_applier(model: ChannelModel, mixture_points: int = 20, mp_points: int = 40):
    """Truncated-space realization of a model as a map FockOperator -> FockOperator."""
    if isinstance(model, PureLoss):
        return lambda rho: fock.apply_loss(rho, model.T)
    if isinstance(model, QuantumLimitedAmp):
        return lambda rho: fock.apply_amp(rho, model.G)
    if isinstance(model, CanonicalB1):
        return lambda rho: fock.gaussian_mixture_of_displacements(
            rho, 0.5, axis=0, points=mixture_points)
    if isinstance(model, CanonicalC):
        def apply_c(rho, m=model):
            if m.eta <= 1.0:
                out = fock.apply_loss(rho, m.eta)
            else:
                out = fock.apply_amp(rho, m.eta)
            if m.ntilde > 0:
                out = fock.gaussian_mixture_of_displacements(
                    out, m.ntilde, axis=0, points=mixture_points)
                out = fock.gaussian_mixture_of_displacements(
                    out, m.ntilde, axis=1, points=mixture_points)
            return out
        return apply_c
    if isinstance(model, HeterodyneMP):
        # Ensemble-averaging code feeds in states near the truncation edge on
        # purpose and accounts for the lost outcome mass itself, so the
        # applier must not trip on a trace deficit of its own.
        return lambda rho: apply_mp_fock(model, rho, points=mp_points,
                                         max_trace_deficit=None)
    if isinstance(model, Compose):
        parts = [fock_applier(p, mixture_points, mp_points) for p in model.parts]

        def apply_seq(rho):
            for f in parts:
                rho = f(rho)
            return rho
        return apply_seq
    raise InvalidInput(f"not a channel model: {model!r}")


def fock_applier_for_gaussian(channel: GaussianChannel, mixture_points: int = 20):
    """Truncated realization of a raw Gaussian channel, where one exists here.

    Covers K proportional to the identity with diagonal added noise at or
    above the attenuation/amplification floor: quantum-limited loss or gain
    followed by per-axis classical displacement mixtures and a final
    displacement.  Channels needing phase-space rotation or squeezing
    pre-processing raise UnsupportedTask.
    """
    if not is_cp_channel(channel):
        raise NotCompletelyPositive(
            "channel (K, M) fails the complete-positivity criterion")
    K, M, disp = channel.K, channel.M, channel.disp
    k = K[0, 0]
    if not (abs(K[0, 1]) <= 1e-12 and abs(K[1, 0]) <= 1e-12
            and abs(K[1, 1] - k) <= 1e-12 and k > 0):
        raise UnsupportedTask(
            "truncated realization covers K proportional to the identity only")
    if abs(M[0, 1]) > 1e-12 or abs(M[1, 0]) > 1e-12:
        raise UnsupportedTask(
            "rotated added-noise matrices are not covered; diagonalize first")
    k2 = k * k
    floor = abs(1.0 - k2) / 2.0
    extra = np.array([M[0, 0], M[1, 1]]) - floor
    if extra.min() < -1e-9:
        raise UnsupportedTask(
            "noise below the quantum-limited floor on one axis needs squeezing, "
            "which is not covered")
    extra = np.maximum(extra, 0.0)
    beta = (disp[0] + 1j * disp[1]) / _SQRT2

    def apply(rho):
        out = fock.apply_loss(rho, k2) if k2 <= 1.0 else fock.apply_amp(rho, k2)
        for axis in (0, 1):
            if extra[axis] > 0:
                out = fock.gaussian_mixture_of_displacements(
                    out, extra[axis], axis=axis, points=mixture_points)
        if abs(beta) > 0:
            dmat = fock.displacement(beta, out.cutoff)
            out = fock.FockOperator(dmat @ out.matrix @ dmat.conj().T)
        return out

    return apply
