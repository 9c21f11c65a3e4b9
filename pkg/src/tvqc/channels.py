"""Time-varying decoherence channel models.

Single-qubit noise is parameterized by the relaxation time T1, the
dephasing time T2 and the elapsed (algorithm) time t.  The damping and
scattering probabilities are

    gamma(t1, t)     = 1 - exp(-t/t1)
    lambda(t1,t2, t) = 1 - exp(t/t1 - 2t/t2)        (valid for t2 <= 2*t1)

T1 and T2 fluctuate between error-correction blocks; they are modelled as
Gaussian random variables truncated to [0, inf).  Three multi-qubit
regimes are supported:

    static  the channel is evaluated at the mean times for every qubit of
            every block,
    stvqc   one (T1, T2) draw per block, shared by all qubits of the block,
    ftvqc   independent (T1, T2) draws per qubit and per block.

Pauli- and Clifford-twirled approximations of the damping channels give
the Pauli/depolarizing error distributions used by the Monte Carlo layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError, NumericalError
from .pauli import PauliOperator
from .rng import as_generator

_SQRT2PI = math.sqrt(2.0 * math.pi)

MODES = ("static", "stvqc", "ftvqc")
MODELS = ("cta_ad", "cta_apd", "pta_ad", "pta_apd")


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecoherenceSpec:
    """Statistical model of the decoherence times plus the block duration.

    All times in microseconds.  mu_t2 <= 2*mu_t1 is required (Ramsey
    limit); sigma values of zero give fluctuation-free parameters.
    """

    mu_t1: float
    sigma_t1: float
    mu_t2: float
    sigma_t2: float
    t_algo: float

    def __post_init__(self):
        if self.mu_t1 <= 0 or self.mu_t2 <= 0:
            raise DomainError("mean decoherence times must be positive")
        if self.sigma_t1 < 0 or self.sigma_t2 < 0:
            raise DomainError("standard deviations must be non-negative")
        if self.t_algo <= 0:
            raise DomainError("t_algo must be positive")
        if self.mu_t2 > 2.0 * self.mu_t1 * (1.0 + 1e-12):
            raise DomainError(
                f"mu_t2={self.mu_t2} exceeds the Ramsey limit 2*mu_t1="
                f"{2 * self.mu_t1}")

    @property
    def cv_t1(self) -> float:
        return self.sigma_t1 / self.mu_t1

    @property
    def cv_t2(self) -> float:
        return self.sigma_t2 / self.mu_t2

    def t1_model(self) -> "TruncatedNormal":
        return TruncatedNormal(self.mu_t1, self.sigma_t1)

    def t2_model(self) -> "TruncatedNormal":
        return TruncatedNormal(self.mu_t2, self.sigma_t2)

    def with_t_algo(self, t_algo: float) -> "DecoherenceSpec":
        return DecoherenceSpec(self.mu_t1, self.sigma_t1,
                               self.mu_t2, self.sigma_t2, t_algo)


@dataclass(frozen=True)
class TruncatedNormal:
    """Gaussian restricted to [0, inf), renormalized.

    The density for x >= 0 is phi((x-mu)/sigma) / (sigma * (1 - Q(mu/sigma)))
    with Q the Gaussian tail function; it is zero for x < 0.
    """

    mu: float
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise DomainError("sigma must be non-negative")

    @property
    def truncation_constant(self) -> float:
        """Mass of the untruncated Gaussian on [0, inf): 1 - Q(mu/sigma)."""
        if self.sigma == 0:
            return 1.0
        return 1.0 - q_function(self.mu / self.sigma)


@dataclass(frozen=True)
class DampingPair:
    """Damping and scattering probabilities of one channel realization."""

    gamma: float
    lam: float

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0 and 0.0 <= self.lam <= 1.0):
            raise DomainError("damping parameters must lie in [0, 1]")


class PauliDist:
    """Probability mass (pI, px, py, pz) of a single-qubit Pauli channel."""

    __slots__ = ("p_i", "p_x", "p_y", "p_z")

    def __init__(self, p_i, p_x, p_y, p_z):
        probs = (p_i, p_x, p_y, p_z)
        if any(p < -1e-12 or p > 1 + 1e-12 for p in probs):
            raise DomainError(f"probabilities out of range: {probs}")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise DomainError(f"probabilities sum to {sum(probs)}, not 1")
        self.p_i, self.p_x, self.p_y, self.p_z = probs

    def as_array(self) -> np.ndarray:
        return np.array([self.p_i, self.p_x, self.p_y, self.p_z])

    @property
    def error_probability(self) -> float:
        """Total non-identity probability."""
        return self.p_x + self.p_y + self.p_z

    @staticmethod
    def depolarizing(p: float) -> "PauliDist":
        return PauliDist(1.0 - p, p / 3.0, p / 3.0, p / 3.0)

    def __repr__(self):
        return (f"PauliDist(p_i={self.p_i:.6g}, p_x={self.p_x:.6g}, "
                f"p_y={self.p_y:.6g}, p_z={self.p_z:.6g})")


class KrausSet:
    """Operator-sum representation of a single-qubit channel.

    Completeness sum_k E_k^dag E_k = I is enforced at construction to
    within 1e-12.
    """

    __slots__ = ("operators",)

    def __init__(self, operators):
        ops = [np.asarray(E, dtype=complex) for E in operators]
        if not ops or any(E.shape != ops[0].shape for E in ops):
            raise DomainError("Kraus operators must share one square shape")
        dim = ops[0].shape[0]
        total = sum(E.conj().T @ E for E in ops)
        if np.abs(total - np.eye(dim)).max() > 1e-12:
            raise DomainError("Kraus set is not trace preserving")
        self.operators = ops

    def __iter__(self):
        return iter(self.operators)

    def __len__(self):
        return len(self.operators)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]


# ---------------------------------------------------------------------------
# scalar parameter maps
# ---------------------------------------------------------------------------

def q_function(x: float) -> float:
    """Gaussian tail probability Q(x) = P(N(0,1) > x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def damping_gamma(t1: float, t: float) -> float:
    """Damping probability 1 - exp(-t/t1)."""
    if t1 <= 0:
        raise DomainError(f"t1 must be positive, got {t1}")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    return -math.expm1(-t / t1)


def scattering_lambda(t1: float, t2: float, t: float) -> float:
    """Scattering probability 1 - exp(t/t1 - 2t/t2).

    Requires 0 < t2 <= 2*t1; at the Ramsey limit t2 = 2*t1 the exponent
    vanishes and the result is exactly 0.
    """
    if t1 <= 0 or t2 <= 0:
        raise DomainError("decoherence times must be positive")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    if t2 > 2.0 * t1 * (1.0 + 1e-12):
        raise DomainError(f"t2={t2} exceeds the Ramsey limit 2*t1={2 * t1}")
    return -math.expm1(min(0.0, t / t1 - 2.0 * t / t2))


def truncated_normal_pdf(x, model: TruncatedNormal):
    """Density of the [0, inf)-truncated Gaussian; 0 for x < 0."""
    if model.sigma <= 0:
        raise DomainError("pdf requires sigma > 0")
    x = np.asarray(x, dtype=float)
    z = (x - model.mu) / model.sigma
    dens = np.exp(-0.5 * z * z) / (model.sigma * _SQRT2PI)
    dens /= model.truncation_constant
    dens = np.where(x < 0, 0.0, dens)
    return float(dens) if dens.ndim == 0 else dens


def sample_truncated_normal(model: TruncatedNormal, rng, size=None):
    """Draw from the truncated Gaussian by rejection from the full one.

    Acceptance probability is 1 - Q(mu/sigma), essentially 1 for all
    realistic mu/sigma >= 3.  sigma = 0 returns mu exactly.
    """
    gen = as_generator(rng)
    scalar = size is None
    n = 1 if scalar else int(size)
    if model.sigma == 0:
        out = np.full(n, model.mu)
        return float(out[0]) if scalar else out
    out = np.empty(n)
    pending = np.arange(n)
    while pending.size:
        draw = gen.normal(model.mu, model.sigma, size=pending.size)
        good = draw >= 0.0
        out[pending[good]] = draw[good]
        pending = pending[~good]
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# twirled approximations
# ---------------------------------------------------------------------------

def pta_probs_ad(t1: float, t: float) -> PauliDist:
    """Pauli-twirl probabilities of the amplitude damping channel.

    px = py = (1 - e^(-t/t1))/4,  pz = (1 + e^(-t/t1) - 2e^(-t/(2 t1)))/4.
    """
    if t1 <= 0:
        raise DomainError(f"t1 must be positive, got {t1}")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    e1 = math.exp(-t / t1)
    e_half = math.exp(-t / (2.0 * t1))
    p_x = 0.25 * (1.0 - e1)
    p_z = 0.25 * (1.0 + e1 - 2.0 * e_half)
    return PauliDist(1.0 - 2.0 * p_x - p_z, p_x, p_x, p_z)


def pta_probs_apd(t1: float, t2: float, t: float) -> PauliDist:
    """Pauli-twirl probabilities of the amplitude plus phase damping channel.

    As the AD twirl but with pz = (1 + e^(-t/t1) - 2e^(-t/t2))/4; at the
    Ramsey limit t2 = 2*t1 this reduces to the AD twirl, and the total
    error probability equals the Clifford-twirl depolarizing parameter.
    """
    if t1 <= 0 or t2 <= 0:
        raise DomainError("decoherence times must be positive")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    if t2 > 2.0 * t1 * (1.0 + 1e-12):
        raise DomainError(f"t2={t2} exceeds the Ramsey limit 2*t1={2 * t1}")
    e1 = math.exp(-t / t1)
    e2 = math.exp(-t / t2)
    p_x = 0.25 * (1.0 - e1)
    p_z = 0.25 * (1.0 + e1 - 2.0 * e2)
    return PauliDist(1.0 - 2.0 * p_x - p_z, p_x, p_x, p_z)


def cta_depol_ad(t1: float, t: float) -> float:
    """Depolarizing parameter of the Clifford-twirled AD channel.

    p = 3/4 - (1/4) e^(-t/t1) - (1/2) e^(-t/(2 t1)); equals the total
    non-identity probability of the Pauli twirl.
    """
    if t1 <= 0:
        raise DomainError(f"t1 must be positive, got {t1}")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    return 0.75 - 0.25 * math.exp(-t / t1) - 0.5 * math.exp(-t / (2.0 * t1))


def cta_depol_apd(t1: float, t2: float, t: float) -> float:
    """Depolarizing parameter of the Clifford-twirled APD channel.

    p = 3/4 - (1/4) e^(-t/t1) - (1/2) e^(-t/t2).
    """
    if t1 <= 0 or t2 <= 0:
        raise DomainError("decoherence times must be positive")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    if t2 > 2.0 * t1 * (1.0 + 1e-12):
        raise DomainError(f"t2={t2} exceeds the Ramsey limit 2*t1={2 * t1}")
    return 0.75 - 0.25 * math.exp(-t / t1) - 0.5 * math.exp(-t / t2)


# vectorized variants used by the quadrature and Monte Carlo layers

def gamma_of(t1, t):
    return -np.expm1(-t / np.asarray(t1, dtype=float))


def lambda_of(t1, t2, t):
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    return -np.expm1(np.minimum(0.0, t / t1 - 2.0 * t / t2))


def cta_ad_of(t1, t):
    t1 = np.asarray(t1, dtype=float)
    return 0.75 - 0.25 * np.exp(-t / t1) - 0.5 * np.exp(-t / (2.0 * t1))


def cta_apd_of(t1, t2, t):
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    return 0.75 - 0.25 * np.exp(-t / t1) - 0.5 * np.exp(-t / t2)


def pta_ad_of(t1, t):
    """Stacked (..., 4) Pauli probabilities of the AD twirl."""
    t1 = np.asarray(t1, dtype=float)
    e1 = np.exp(-t / t1)
    e_half = np.exp(-t / (2.0 * t1))
    p_x = 0.25 * (1.0 - e1)
    p_z = 0.25 * (1.0 + e1 - 2.0 * e_half)
    return np.stack([1.0 - 2.0 * p_x - p_z, p_x, p_x, p_z], axis=-1)


def pta_apd_of(t1, t2, t):
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    e1 = np.exp(-t / t1)
    e2 = np.exp(-t / t2)
    p_x = 0.25 * (1.0 - e1)
    p_z = 0.25 * (1.0 + e1 - 2.0 * e2)
    return np.stack([1.0 - 2.0 * p_x - p_z, p_x, p_x, p_z], axis=-1)


# ---------------------------------------------------------------------------
# Kraus operators
# ---------------------------------------------------------------------------

def kraus_ad(gamma: float) -> KrausSet:
    """Amplitude damping Kraus pair.

    E0 = diag(1, sqrt(1-gamma)), E1 = sqrt(gamma) |0><1|.
    """
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    e0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]], dtype=complex)
    e1 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return KrausSet([e0, e1])


def kraus_apd(pair: DampingPair) -> KrausSet:
    """Combined amplitude and phase damping Kraus triple.

    E0 = diag(1, sqrt((1-gamma)(1-lambda))), E1 = sqrt(gamma) |0><1|,
    E2 = sqrt((1-gamma) lambda) |1><1|.  lambda = 0 reduces to kraus_ad.
    """
    g, l = pair.gamma, pair.lam
    e0 = np.array([[1.0, 0.0],
                   [0.0, math.sqrt((1.0 - g) * (1.0 - l))]], dtype=complex)
    e1 = np.array([[0.0, math.sqrt(g)], [0.0, 0.0]], dtype=complex)
    e2 = np.array([[0.0, 0.0], [0.0, math.sqrt((1.0 - g) * l)]],
                  dtype=complex)
    return KrausSet([e0, e1, e2])


# ---------------------------------------------------------------------------
# solving for the block duration
# ---------------------------------------------------------------------------

def solve_t_algo(mu_t1: float, target_p: float, model: str = "cta_ad",
                 mu_t2: float | None = None) -> float:
    """Invert the depolarizing-parameter map for the block duration.

    Finds t such that the Clifford-twirl depolarizing parameter evaluated
    at the mean times equals target_p.  The map is strictly increasing in
    t from 0 towards 3/4, so bisection converges; the result matches
    target_p to within 1e-10.
    """
    if model == "cta_ad":
        func = lambda t: cta_depol_ad(mu_t1, t)
    elif model == "cta_apd":
        if mu_t2 is None:
            raise UsageError("cta_apd requires mu_t2")
        func = lambda t: cta_depol_apd(mu_t1, mu_t2, t)
    else:
        raise UsageError(f"model must be cta_ad or cta_apd, got {model!r}")
    if not 0.0 < target_p < 0.75:
        raise DomainError(
            f"target depolarizing probability {target_p} not reachable "
            "(must lie in (0, 3/4))")
    lo, hi = 0.0, mu_t1
    while func(hi) < target_p:
        hi *= 2.0
        if hi > 1e12 * mu_t1:
            raise NumericalError("bisection bracket blew up")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if func(mid) < target_p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    t = 0.5 * (lo + hi)
    if abs(func(t) - target_p) > 1e-10:
        raise NumericalError(
            f"t_algo bisection did not reach tolerance at p={target_p}")
    return t


# ---------------------------------------------------------------------------
# multi-qubit block sampling
# ---------------------------------------------------------------------------

def ramsey_saturated(spec: DecoherenceSpec) -> bool:
    """True when the spec describes a T1-limited family (T2 = 2*T1).

    mu_t2 = 2*mu_t1 with sigma_t2 = 0 is read as the Ramsey limit being
    saturated for every realization, i.e. T2 tracks 2*T1 pointwise and
    the channel family is pure amplitude damping.
    """
    return spec.sigma_t2 == 0 and spec.mu_t2 == 2.0 * spec.mu_t1


def _draw_times(n: int, mode: str, spec: DecoherenceSpec, gen,
                need_t2: bool):
    """Per-qubit (t1, t2) arrays for one block under the given regime.

    Independently drawn T2 values are clamped at 2*T1 so the scattering
    probability stays valid; a Ramsey-saturated spec slaves T2 to 2*T1.
    """
    saturated = need_t2 and ramsey_saturated(spec)
    if mode == "static":
        t1 = np.full(n, spec.mu_t1)
        t2 = np.full(n, min(spec.mu_t2, 2.0 * spec.mu_t1)) if need_t2 else None
        return t1, t2
    per_qubit = n if mode == "ftvqc" else 1
    t1 = sample_truncated_normal(spec.t1_model(), gen, size=per_qubit)
    t2 = None
    if saturated:
        t2 = 2.0 * t1
    elif need_t2:
        t2 = sample_truncated_normal(spec.t2_model(), gen, size=per_qubit)
        t2 = np.minimum(t2, 2.0 * t1)
    if mode == "stvqc":
        t1 = np.full(n, t1[0])
        t2 = np.full(n, t2[0]) if need_t2 else None
    return t1, t2


def block_pauli_probs(n: int, mode: str, spec: DecoherenceSpec, model: str,
                      gen) -> np.ndarray:
    """(n, 4) per-qubit Pauli probabilities for one block."""
    if mode not in MODES:
        raise UsageError(f"mode must be one of {MODES}, got {mode!r}")
    if model not in MODELS:
        raise UsageError(f"model must be one of {MODELS}, got {model!r}")
    need_t2 = model.endswith("apd")
    t1, t2 = _draw_times(n, mode, spec, gen, need_t2)
    t = spec.t_algo
    if model == "cta_ad":
        p = cta_ad_of(t1, t)
        probs = np.stack([1.0 - p, p / 3.0, p / 3.0, p / 3.0], axis=-1)
    elif model == "cta_apd":
        p = cta_apd_of(t1, t2, t)
        probs = np.stack([1.0 - p, p / 3.0, p / 3.0, p / 3.0], axis=-1)
    elif model == "pta_ad":
        probs = pta_ad_of(t1, t)
    else:
        probs = pta_apd_of(t1, t2, t)
    return probs


def sample_block_error(n: int, mode: str, spec: DecoherenceSpec, model: str,
                       rng):
    """One multi-qubit Pauli error block.

    Returns (PauliOperator, (n, 4) per-qubit Pauli probabilities).  The
    probabilities are the realized per-qubit distributions: identical
    across qubits in static/stvqc modes, independent in ftvqc mode.  All
    randomness comes from rng, so a given (seed, stream_id) reproduces
    the block bit-exactly.
    """
    if n < 1:
        raise UsageError(f"qubit count must be >= 1, got {n}")
    gen = as_generator(rng)
    probs = block_pauli_probs(n, mode, spec, model, gen)
    letters = sample_letters(probs, gen)
    x_bits = ((letters == 1) | (letters == 2)).astype(np.uint8)
    z_bits = ((letters == 2) | (letters == 3)).astype(np.uint8)
    return PauliOperator(n, x_bits, z_bits), probs


def sample_letters(probs: np.ndarray, gen) -> np.ndarray:
    """Sample Pauli letters 0..3 = I/X/Y/Z from per-qubit distributions."""
    cum = np.cumsum(probs[..., :3], axis=-1)
    u = gen.random(probs.shape[0])
    return (u[:, None] >= cum).sum(axis=-1)
