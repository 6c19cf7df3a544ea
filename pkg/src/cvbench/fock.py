"""Truncated Fock-space oracle for one bosonic mode.

Everything here works on a hard photon-number truncation `cutoff` (dimension
of the vectors and matrices).  Truncation losses are never papered over:
state constructors report their truncated weight, channel maps leave the
output trace deficit observable rather than renormalizing, and the averaging
routine folds truncation bookkeeping into its error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConvergenceError, CutoffTooSmall, InvalidInput

_SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# basic operators


def annihilation(cutoff: int) -> np.ndarray:
    """Matrix of the annihilation operator a on the truncated space."""
    if cutoff < 1:
        raise InvalidInput("cutoff must be at least 1")
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1).astype(complex)


def number_operator(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff, dtype=float)).astype(complex)


def quadrature_operator(cutoff: int, axis: int) -> np.ndarray:
    """x_plus (axis 0) or x_minus (axis 1) as a truncated Hermitian matrix."""
    a = annihilation(cutoff)
    if axis == 0:
        return (a + a.conj().T) / _SQRT2
    if axis == 1:
        return (a - a.conj().T) / (1j * _SQRT2)
    raise InvalidInput("axis must be 0 (x_plus) or 1 (x_minus)")


@lru_cache(maxsize=32)
def _quad_eigh(cutoff: int, axis: int):
    w, v = np.linalg.eigh(quadrature_operator(cutoff, axis))
    return w, v


@lru_cache(maxsize=32)
def _lgamma_table(n: int) -> np.ndarray:
    return np.array([math.lgamma(k + 1.0) for k in range(n)])


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class FockVector:
    """Pure state amplitudes over |0> ... |cutoff-1>."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.size < 1:
            raise InvalidInput("amplitudes must be a non-empty 1-d array")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @property
    def truncated_weight(self) -> float:
        """Weight 1 - <psi|psi> lost to the truncation (for unit-norm targets)."""
        return 1.0 - self.norm_squared

    def projector(self) -> "FockOperator":
        return FockOperator(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class FockOperator:
    """Dense operator (usually a density matrix) on the truncated space."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise InvalidInput("matrix must be square")
        object.__setattr__(self, "matrix", m)

    @property
    def cutoff(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def trace_deficit(self) -> float:
        """1 - tr(rho): what the truncation has eaten so far."""
        return 1.0 - self.trace

    def to_json(self):
        stacked = np.stack([self.matrix.real, self.matrix.imag], axis=-1)
        return {"cutoff": self.cutoff, "matrix": stacked.tolist()}

    @classmethod
    def from_json(cls, obj):
        arr = np.array(obj["matrix"], dtype=float)
        if arr.ndim != 3 or arr.shape[-1] != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidInput("operator JSON must hold an NxNx2 [re, im] array")
        return cls(arr[..., 0] + 1j * arr[..., 1])


def _coherent_amplitude_matrix(alphas: np.ndarray, cutoff: int) -> np.ndarray:
    """Columns of coherent amplitudes exp(-|a|^2/2) a^n / sqrt(n!), vectorized."""
    alphas = np.asarray(alphas, dtype=complex).ravel()
    if cutoff == 1:
        amps = np.ones((1, alphas.size), dtype=complex)
    else:
        ratios = alphas[None, :] / np.sqrt(np.arange(1, cutoff, dtype=float))[:, None]
        amps = np.vstack([np.ones((1, alphas.size)), np.cumprod(ratios, axis=0)])
    return amps * np.exp(-0.5 * np.abs(alphas) ** 2)[None, :]


def coherent_amplitudes(alphas, cutoff: int) -> np.ndarray:
    """Batch of truncated coherent kets, one per column; exact amplitudes.

    No weight guard is applied: far-out columns are simply sub-normalized.
    Quadrature code that accounts for truncated weight itself wants this.
    """
    return _coherent_amplitude_matrix(np.asarray(alphas, dtype=complex), cutoff)


def coherent_ket(alpha, cutoff: int, weight_tol: float | None = 1e-10) -> FockVector:
    """Truncated coherent state |alpha>.

    Parameters
    ----------
    alpha : complex
        Coherent amplitude.
    cutoff : int
        Truncation dimension.
    weight_tol : float or None
        Reject the build if the truncated weight exceeds this.  Passing None
        disables both the weight check and the |alpha|^2 > cutoff guard; the
        amplitudes kept are still exact, the vector is just sub-normalized
        (useful inside quadratures whose far tail nodes carry no weight).
    """
    alpha = complex(alpha)
    if weight_tol is not None and abs(alpha) ** 2 > cutoff:
        raise CutoffTooSmall(
            f"coherent amplitude |alpha|^2 = {abs(alpha)**2:.3g} exceeds cutoff {cutoff}; "
            f"raise the cutoff (mean photon number sets the scale)")
    ket = FockVector(_coherent_amplitude_matrix(np.array([alpha]), cutoff)[:, 0])
    if weight_tol is not None and ket.truncated_weight > weight_tol:
        raise CutoffTooSmall(
            f"coherent state at alpha = {alpha} keeps only {ket.norm_squared:.12f} "
            f"of its weight at cutoff {cutoff} (tolerance {weight_tol:g})")
    return ket


def thermal_state(lam: float, cutoff: int) -> FockOperator:
    """Thermal state with Fock weights lam/(1+lam) * (1+lam)^-n (mean 1/lam)."""
    if not (lam > 0):
        raise InvalidInput(f"thermal parameter lambda must be positive, got {lam}")
    n = np.arange(cutoff, dtype=float)
    weights = lam / (1.0 + lam) * (1.0 + lam) ** (-n)
    return FockOperator(np.diag(weights).astype(complex))


def displacement(alpha, cutoff: int) -> np.ndarray:
    """Unitary matrix of the displacement operator D(alpha), truncated.

    Built from the eigendecomposition of the quadrature generators, so it is
    exactly unitary on the truncated space; it approximates the infinite-
    dimensional displacement up to edge effects near the cutoff.
    """
    alpha = complex(alpha)
    # D(alpha) shifts <x_plus> by sqrt(2) Re alpha and <x_minus> by sqrt(2) Im alpha:
    # exp(-i u x_minus) shifts x_plus by u, exp(i v x_plus) shifts x_minus by v.
    u = _SQRT2 * alpha.real
    v = _SQRT2 * alpha.imag
    w_m, v_m = _quad_eigh(cutoff, 1)
    out = (v_m * np.exp(-1j * u * w_m)) @ v_m.conj().T
    if v != 0.0:
        w_p, v_p = _quad_eigh(cutoff, 0)
        out = ((v_p * np.exp(1j * v * w_p)) @ v_p.conj().T) @ out
    return out


@lru_cache(maxsize=32)
def _squeeze_eigh(cutoff: int):
    a = annihilation(cutoff)
    h = -0.5j * (a @ a - a.conj().T @ a.conj().T)  # Hermitian generator
    return np.linalg.eigh(h)


def squeeze(r: float, cutoff: int) -> np.ndarray:
    """Squeezing unitary exp(r (a^2 - a^dag^2)/2), truncated."""
    w, v = _squeeze_eigh(cutoff)
    return (v * np.exp(1j * r * w)) @ v.conj().T


def rotation(theta: float, cutoff: int) -> np.ndarray:
    """Phase rotation exp(-i theta n)."""
    return np.diag(np.exp(-1j * theta * np.arange(cutoff)))


def gaussian_state_fock(d, gamma, cutoff: int) -> FockOperator:
    """Build an arbitrary Gaussian state (mean d, covariance gamma) in Fock space.

    Decomposes gamma = R diag(nu e^{2r}, nu e^{-2r}) R^T and applies
    displace . rotate . squeeze to a thermal state of symplectic eigenvalue
    nu.  Intended as an independent test oracle for the exact Gaussian
    calculus; moments of the result should be re-verified by the caller.
    """
    d = np.asarray(d, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    vals, vecs = np.linalg.eigh(gamma)  # ascending: vals[0] <= vals[1]
    if vals[0] <= 0:
        raise InvalidInput("covariance must be positive definite")
    nu = math.sqrt(vals[0] * vals[1])
    if nu < 0.5 - 1e-12:
        raise InvalidInput("covariance violates the uncertainty bound det >= 1/4")
    if np.linalg.det(vecs) < 0:
        vecs = vecs.copy()
        vecs[:, 1] = -vecs[:, 1]
    # squeezing by r > 0 shrinks x_plus, so the small eigenvalue sits on x_plus
    r = 0.25 * math.log(vals[1] / vals[0])
    theta = math.atan2(vecs[1, 0], vecs[0, 0])

    if nu <= 0.5 + 1e-14:
        rho = FockVector(np.eye(cutoff, dtype=complex)[:, 0]).projector().matrix
    else:
        # nu = n_mean + 1/2  ->  thermal parameter lam = 1/n_mean
        n_mean = nu - 0.5
        rho = thermal_state(1.0 / n_mean, cutoff).matrix

    s = squeeze(r, cutoff)
    rho = s @ rho @ s.conj().T
    rot = rotation(-theta, cutoff)
    rho = rot @ rho @ rot.conj().T
    alpha = complex(d[0], d[1]) / _SQRT2
    dis = displacement(alpha, cutoff)
    return FockOperator(dis @ rho @ dis.conj().T)


# ---------------------------------------------------------------------------
# channels


def apply_loss(rho: FockOperator, transmissivity: float) -> FockOperator:
    """Pure attenuation of transmissivity T via its photon-loss Kraus family.

    Exactly trace preserving on the truncated space (loss never populates
    levels above the input's support).
    """
    T = float(transmissivity)
    if not (0.0 < T <= 1.0):
        raise InvalidInput(f"transmissivity must be in (0, 1], got {T}")
    n = rho.cutoff
    if T == 1.0:
        return FockOperator(rho.matrix.copy())
    lg = _lgamma_table(n + 1)
    ln_t, ln_r = math.log(T), math.log1p(-T)
    out = np.zeros_like(rho.matrix)
    m = np.arange(n, dtype=float)
    for k in range(n):
        mm = m[: n - k]
        log_a = 0.5 * (lg[k : n] - lg[: n - k] - lg[k] + mm * ln_t + k * ln_r)
        a = np.exp(log_a)
        out[: n - k, : n - k] += a[:, None] * rho.matrix[k:, k:] * a[None, :]
    return FockOperator(out)


def apply_amp(rho: FockOperator, gain: float,
              max_deficit: float | None = None) -> FockOperator:
    """Quantum-limited amplifier of gain G >= 1 via its Kraus family.

    Amplification pushes weight toward the cutoff, so the output trace
    deficit is the caller's convergence diagnostic; pass `max_deficit` to
    turn an excessive deficit into an error.
    """
    G = float(gain)
    if G < 1.0:
        raise InvalidInput(f"amplifier gain must be >= 1, got {G}")
    n = rho.cutoff
    if G == 1.0:
        return FockOperator(rho.matrix.copy())
    lg = _lgamma_table(n + 1)
    ln_g, ln_gm1 = math.log(G), math.log(G - 1.0)
    out = np.zeros_like(rho.matrix)
    nn = np.arange(n, dtype=float)
    for k in range(n):
        m = nn[: n - k]
        log_b = 0.5 * (k * ln_gm1 - (k + 1) * ln_g - lg[k] + lg[k : n] - lg[: n - k] - m * ln_g)
        b = np.exp(log_b)
        out[k:, k:] += b[:, None] * rho.matrix[: n - k, : n - k] * b[None, :]
    result = FockOperator(out)
    if max_deficit is not None and result.trace_deficit > max_deficit + rho.trace_deficit:
        raise ConvergenceError(
            f"amplifier output lost {result.trace_deficit:.3g} of its trace at cutoff {n}",
            value=result.trace, error=result.trace_deficit)
    return result


def gaussian_mixture_of_displacements(rho: FockOperator, variance: float, axis: int,
                                      points: int = 20) -> FockOperator:
    """Classical Gaussian displacement noise along one quadrature axis.

    Mixes exp(-i s X) rho exp(i s X) over s ~ N(0, variance) with a
    Gauss-Hermite rule.  Exactly trace preserving (each conjugation is
    unitary on the truncated space).
    """
    if variance < 0:
        raise InvalidInput("noise variance must be >= 0")
    if variance == 0:
        return FockOperator(rho.matrix.copy())
    from numpy.polynomial.hermite import hermgauss

    x, w = hermgauss(points)
    shifts = math.sqrt(2.0 * variance) * x
    weights = w / math.sqrt(math.pi)
    # generator: axis 0 noise displaces x_plus -> exp(-i s x_minus), and vice versa
    gen_axis = 1 - axis
    sign = -1.0 if axis == 0 else 1.0
    evals, evecs = _quad_eigh(rho.cutoff, gen_axis)
    phases = np.exp(1j * sign * np.outer(shifts, evals))  # (points, cutoff)
    # mixture kernel[i, j] = sum_s w_s exp(i sign s (e_i - e_j)); conjugating by
    # each unitary in the generator eigenbasis is then one Hadamard product
    kernel = np.einsum("s,si,sj->ij", weights, phases, phases.conj())
    inner = evecs.conj().T @ rho.matrix @ evecs
    return FockOperator(evecs @ (kernel * inner) @ evecs.conj().T)


# ---------------------------------------------------------------------------
# functionals


def fidelity_pure(psi: FockVector, rho: FockOperator) -> float:
    """<psi| rho |psi>, checked real and clipped into [0, 1].

    Clipping beyond 1e-10 (or an imaginary part above 1e-12) is treated as a
    corrupted input rather than silently absorbed.
    """
    if psi.cutoff != rho.cutoff:
        raise InvalidInput(f"cutoff mismatch: vector {psi.cutoff} vs operator {rho.cutoff}")
    val = complex(np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes))
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise InvalidInput(f"fidelity came out non-real ({val}); operator is not Hermitian")
    f = val.real
    if f < -1e-10 or f > 1.0 + 1e-10:
        raise InvalidInput(f"fidelity {f} outside [0, 1] beyond rounding tolerance")
    return min(max(f, 0.0), 1.0)


def expectation(rho: FockOperator, op: np.ndarray) -> complex:
    return complex(np.trace(rho.matrix @ op))


def mean_and_covariance(rho: FockOperator):
    """Quadrature mean vector and covariance matrix of a Fock-space state.

    Moments are taken literally on the truncated operator (no renormalizing),
    so a large trace deficit shows up here as biased moments.
    """
    a = annihilation(rho.cutoff)
    exp_a = expectation(rho, a)
    exp_aa = expectation(rho, a @ a)
    exp_n = float(expectation(rho, a.conj().T @ a).real)
    mean = np.array([_SQRT2 * exp_a.real, _SQRT2 * exp_a.imag])
    xx = exp_aa.real + exp_n + 0.5 - mean[0] ** 2
    pp = -exp_aa.real + exp_n + 0.5 - mean[1] ** 2
    xp = exp_aa.imag - mean[0] * mean[1]
    return mean, np.array([[xx, xp], [xp, pp]])


def trace_distance(rho: FockOperator, sigma: FockOperator) -> float:
    """(1/2) ||rho - sigma||_1 on the truncated space."""
    if rho.cutoff != sigma.cutoff:
        raise InvalidInput("trace distance needs operators at one common cutoff")
    diff = rho.matrix - sigma.matrix
    eigs = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return float(0.5 * np.abs(eigs).sum())


def select_cutoff(max_abs2: float, eta: float = 1.0, weight_tol: float = 1e-10) -> int:
    """Truncation dimension for work involving |sqrt(eta) alpha> up to |alpha|^2 = max_abs2.

    Starts at ceil(8 * (1 + max_abs2 * max(eta, 1))) and doubles until the
    most demanding coherent state keeps all but `weight_tol` of its weight.
    """
    if max_abs2 < 0:
        raise InvalidInput("max |alpha|^2 must be >= 0")
    target = max_abs2 * max(eta, 1.0)
    n = int(math.ceil(8.0 * (1.0 + target)))
    while True:
        ket = coherent_ket(math.sqrt(target), n, weight_tol=None)
        if ket.truncated_weight <= weight_tol:
            return n
        n *= 2


class FockAverage(NamedTuple):
    value: float
    error: float


def average_fidelity_fock(applier: Callable[[FockOperator], FockOperator],
                          eta: float, lam: float, rule=None,
                          cutoff: int | None = None,
                          keep_fraction: float = 0.85,
                          max_error: float | None = None) -> FockAverage:
    """Prior-averaged task fidelity of a channel given as a Fock-space map.

    For each quadrature node alpha, sends |alpha><alpha| through `applier`
    and evaluates <sqrt(eta) alpha| rho' |sqrt(eta) alpha>, then averages with
    the prior weights.  Returns the value together with an error estimate
    combining (i) the difference between the rule and its refinement,
    (ii) prior mass on nodes skipped because they exceed the truncation's
    comfort zone (kept nodes satisfy max(eta,1) |alpha|^2 <= keep_fraction *
    cutoff), and (iii) a first-order bound on truncation bias of the kept
    boundary nodes.  Raises ConvergenceError when `max_error` is given and
    exceeded.
    """
    from . import ensembles

    if not (lam > 0):
        raise InvalidInput("prior quadrature needs lambda > 0; use closed forms at lambda = 0")
    if eta <= 0:
        raise InvalidInput(f"task gain eta must be positive, got {eta}")
    if rule is None:
        rule = ensembles.gauss_rule(ensembles.GaussianPrior(lam), 24, 32)
    if cutoff is None:
        cutoff = select_cutoff(_coverage_abs2(rule, 1e-9), eta)

    sqrt_eta = math.sqrt(eta)
    scale = max(eta, 1.0)

    def estimate(r):
        weights = r.weights
        if r.lam != lam:
            # the rule may be importance-matched to a different width
            weights = weights * (lam / r.lam) * np.exp((r.lam - lam) * np.abs(r.nodes) ** 2)
        keep = scale * np.abs(r.nodes) ** 2 <= keep_fraction * cutoff
        skipped = float(np.sum(weights[~keep]))
        total = 0.0
        trunc_bias = 0.0
        for alpha, w in zip(r.nodes[keep], weights[keep]):
            ket_in = coherent_ket(alpha, cutoff, weight_tol=None)
            ket_out = coherent_ket(sqrt_eta * alpha, cutoff, weight_tol=None)
            rho_out = applier(ket_in.projector())
            total += w * fidelity_pure(ket_out, rho_out)
            trunc_bias += w * 3.0 * (max(ket_in.truncated_weight, 0.0)
                                     + max(ket_out.truncated_weight, 0.0))
        return total, skipped + trunc_bias

    base, base_extra = estimate(rule)
    fine, fine_extra = estimate(rule.refine())
    err = abs(fine - base) + fine_extra
    if max_error is not None and err > max_error:
        raise ConvergenceError(
            f"fidelity average did not converge: value {fine:.9g} with error "
            f"estimate {err:.3g} exceeds the requested bound {max_error:g}",
            value=fine, error=err)
    return FockAverage(fine, err)


def _coverage_abs2(rule, tail_mass: float) -> float:
    """Largest |alpha|^2 that matters once a trailing `tail_mass` is ignored."""
    abs2 = np.abs(rule.nodes) ** 2
    order = np.argsort(abs2)
    w = rule.weights[order]
    cum_from_top = np.cumsum(w[::-1])[::-1]
    significant = abs2[order][cum_from_top > tail_mass]
    return float(significant[-1]) if significant.size else float(abs2.max())
