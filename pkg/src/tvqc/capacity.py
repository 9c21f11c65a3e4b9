"""Quantum capacities, hashing bounds and their ergodic counterparts.

The quantum capacity of the amplitude damping channel has the closed form

    C_Q(gamma) = max_xi  H2((1-gamma) xi) - H2(gamma xi)     gamma <= 1/2
    C_Q(gamma) = 0                                           gamma >= 1/2

For a general single-qubit channel given by Kraus operators the coherent
information of a diagonal input rho = diag(1-xi, xi) is

    Q_coh = S(N(rho)) - S(rho_E),   (rho_E)_{jk} = Tr(E_k rho E_j^dag)

and the hashing bound of a Pauli channel with mass p is 1 - H(p).

Ergodic quantities are expectations of the per-realization values over the
truncated-Gaussian decoherence-time model, computed by Gauss-Legendre
quadrature on [max(0, mu - 8 sigma), mu + 8 sigma] (tensor products when
both T1 and T2 fluctuate).  Quadrature accumulation uses numpy pairwise
summation in a fixed node order, so results are bit-stable.

All logarithms are base 2; capacities are logical qubits per physical
qubit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channels import (DecoherenceSpec, DampingPair, KrausSet, PauliDist,
                       TruncatedNormal, cta_ad_of, cta_apd_of, gamma_of,
                       lambda_of, kraus_apd, pta_ad_of, pta_apd_of,
                       ramsey_saturated, solve_t_algo, truncated_normal_pdf)
from .errors import DomainError, NumericalError, UsageError

QUAD_NODES = 257
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_XI_TOL = 1e-9
_COARSE_POINTS = 1024


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityMatrix:
    """Validated density operator: Hermitian, unit trace, PSD."""

    dim: int
    entries: np.ndarray

    @staticmethod
    def create(entries) -> "DensityMatrix":
        m = np.asarray(entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError("density matrix must be square")
        if np.abs(m - m.conj().T).max() > 1e-12:
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-12:
            raise DomainError(f"trace is {np.trace(m).real}, not 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise DomainError("density matrix has negative eigenvalues")
        return DensityMatrix(m.shape[0], m)


@dataclass(frozen=True)
class CapacityResult:
    """A capacity/bound value with provenance.

    value is in logical qubits per physical qubit; argmax_xi records the
    maximizing diagonal input when a 1-D optimization produced the value;
    clamped marks values that were floored at zero.
    """

    value: float
    argmax_xi: float | None
    method: str  # closed_form | kraus_search | quadrature
    clamped: bool = False


# ---------------------------------------------------------------------------
# entropies
# ---------------------------------------------------------------------------

def binary_entropy(x: float) -> float:
    """H2(x) in bits, with 0 log 0 = 0."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy argument {x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def _h2(x):
    """Elementwise binary entropy on arrays, safe at 0 and 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = (x > 0.0) & (x < 1.0)
    xm = x[m]
    out[m] = -xm * np.log2(xm) - (1.0 - xm) * np.log2(1.0 - xm)
    return out


def _entropy_rows(p):
    """Shannon entropy (bits) along the last axis, 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    terms = np.where(p > 0.0, -p * np.log2(np.where(p > 0.0, p, 1.0)), 0.0)
    return terms.sum(axis=-1)


def hashing_bound(p: PauliDist) -> float:
    """1 - H(p) for a Pauli channel; may be negative (callers clamp)."""
    return 1.0 - float(_entropy_rows(p.as_array()))


# ---------------------------------------------------------------------------
# coherent information
# ---------------------------------------------------------------------------

def coherent_information_kraus(kraus: KrausSet, xi: float) -> float:
    """Coherent information of a Kraus channel at input diag(1-xi, xi).

    Entropies come from Hermitian eigendecompositions; eigenvalues below
    1e-14 are treated as exact zeros.
    """
    if not isinstance(kraus, KrausSet):
        kraus = KrausSet(kraus)
    if not 0.0 <= xi <= 1.0:
        raise DomainError(f"xi must lie in [0, 1], got {xi}")
    rho = DensityMatrix.create(np.diag([1.0 - xi, xi])).entries
    ops = kraus.operators
    out = sum(E @ rho @ E.conj().T for E in ops)
    k = len(ops)
    rho_env = np.empty((k, k), dtype=complex)
    for j in range(k):
        for i in range(k):
            rho_env[j, i] = np.trace(ops[i] @ rho @ ops[j].conj().T)
    return _vn_entropy(out) - _vn_entropy(rho_env)


def _vn_entropy(m) -> float:
    ev = np.linalg.eigvalsh(m)
    ev = ev[ev > 1e-14]
    return float(-(ev * np.log2(ev)).sum())


def apd_coherent_information(gamma, lam, xi):
    """Vectorized coherent information of the APD channel, diagonal input.

    Closed form from the 3-operator Kraus set: the channel output is
    diag(1 - (1-gamma) xi, (1-gamma) xi) and the environment state has
    eigenvalues {gamma xi} plus those of a real symmetric 2x2 block.
    Reduces to H2((1-gamma) xi) - H2(gamma xi) at lambda = 0.
    """
    gamma = np.asarray(gamma, dtype=float)
    lam = np.asarray(lam, dtype=float)
    xi = np.asarray(xi, dtype=float)
    s_out = _h2((1.0 - gamma) * xi)
    a0 = 1.0 - xi + (1.0 - gamma) * (1.0 - lam) * xi
    a2 = (1.0 - gamma) * lam * xi
    c = xi * (1.0 - gamma) * np.sqrt(np.maximum(lam * (1.0 - lam), 0.0))
    half_sum = 0.5 * (a0 + a2)
    root = np.sqrt(np.maximum(0.25 * (a0 - a2) ** 2 + c * c, 0.0))
    evs = np.stack([gamma * xi,
                    np.maximum(half_sum + root, 0.0),
                    np.maximum(half_sum - root, 0.0)], axis=-1)
    return s_out - _entropy_rows(evs)


def _golden_max(f, tol=_XI_TOL, coarse=_COARSE_POINTS):
    """Maximize f on [0, 1]: coarse scan, then golden-section refinement."""
    grid = np.linspace(0.0, 1.0, coarse)
    vals = np.array([f(x) for x in grid])
    k = int(np.argmax(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, coarse - 1)]
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
    x_best = 0.5 * (a + b)
    return x_best, f(x_best)


def _golden_max_batch(f, n, coarse=256, iters=36):
    """Vectorized golden-section maximization of f(xi) per batch element.

    f maps an xi array of shape (n,) (or (n, k) during the scan) to values
    of the same shape.  The bracket after the coarse scan is 2/(coarse-1)
    wide; 36 golden iterations shrink it below 1e-9.
    """
    grid = np.linspace(0.0, 1.0, coarse)
    best_val = np.full(n, -np.inf)
    best_idx = np.zeros(n, dtype=np.intp)
    chunk = max(1, int(2e6) // n)
    for start in range(0, coarse, chunk):
        xs = grid[start:start + chunk]
        vals = f(np.broadcast_to(xs, (n, xs.size)))
        idx = vals.argmax(axis=1)
        val = vals[np.arange(n), idx]
        better = val > best_val
        best_val[better] = val[better]
        best_idx[better] = idx[better] + start
    a = grid[np.maximum(best_idx - 1, 0)]
    b = grid[np.minimum(best_idx + 1, coarse - 1)]
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        right = f1 < f2
        a = np.where(right, x1, a)
        b = np.where(right, b, x2)
        x1_new = np.where(right, x2, b - _GOLDEN * (b - a))
        x2_new = np.where(right, a + _GOLDEN * (b - a), x1)
        f_new = f(np.where(right, x2_new, x1_new))
        f1_next = np.where(right, f2, f_new)
        f2_next = np.where(right, f_new, f1)
        f1, f2 = f1_next, f2_next
        x1, x2 = x1_new, x2_new
    x_best = 0.5 * (a + b)
    return x_best, f(x_best)


def cq_ad_closed(gamma: float) -> CapacityResult:
    """Closed-form quantum capacity of the amplitude damping channel."""
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    if gamma >= 0.5:
        return CapacityResult(0.0, None, "closed_form")
    if gamma == 0.0:
        return CapacityResult(1.0, 0.5, "closed_form")
    def f(xi):
        return binary_entropy((1.0 - gamma) * xi) - binary_entropy(gamma * xi)
    xi_best, val = _golden_max(f)
    return CapacityResult(max(val, 0.0), xi_best, "closed_form")


def _cq_ad_batch(gammas: np.ndarray) -> np.ndarray:
    """Vectorized AD capacity; exact zero in the anti-degradable region."""
    gammas = np.asarray(gammas, dtype=float)
    out = np.zeros_like(gammas)
    m = gammas < 0.5
    if m.any():
        g = gammas[m]
        def f(xi):
            gg = g[:, None] if xi.ndim == 2 else g
            return _h2((1.0 - gg) * xi) - _h2(gg * xi)
        _, vals = _golden_max_batch(f, g.size)
        out[m] = np.maximum(vals, 0.0)
    return out


def maximize_coherent_information(kraus: KrausSet,
                                  widen_search: bool = False) -> CapacityResult:
    """Best coherent information of a single-qubit channel.

    Searches diagonal inputs diag(1-xi, xi); negative optima are clamped
    to zero and flagged.  widen_search additionally grid-searches inputs
    with a real off-diagonal component (audit aid; diagonal inputs are
    provably sufficient for amplitude damping and assumed sufficient for
    combined damping by phase covariance).
    """
    if not isinstance(kraus, KrausSet):
        kraus = KrausSet(kraus)
    if kraus.dim != 2:
        raise UsageError("maximization expects a single-qubit channel")
    xi_best, val = _golden_max(lambda xi: coherent_information_kraus(kraus, xi))
    if widen_search:
        widened = _widened_search(kraus)
        if widened > val + 1e-12:
            raise NumericalError(
                f"off-diagonal input beats diagonal optimum by "
                f"{widened - val:.3e}; diagonal-input assumption violated")
    if val < 0.0:
        return CapacityResult(0.0, xi_best, "kraus_search", clamped=True)
    return CapacityResult(val, xi_best, "kraus_search")


def _widened_search(kraus: KrausSet) -> float:
    """Coarse scan over inputs with a real off-diagonal term."""
    best = -np.inf
    ops = kraus.operators
    for xi in np.linspace(0.0, 1.0, 41):
        cmax = math.sqrt(max(xi * (1.0 - xi), 0.0))
        for c in np.linspace(-cmax, cmax, 21):
            rho = np.array([[1.0 - xi, c], [c, xi]], dtype=complex)
            out = sum(E @ rho @ E.conj().T for E in ops)
            k = len(ops)
            env = np.empty((k, k), dtype=complex)
            for j in range(k):
                for i in range(k):
                    env[j, i] = np.trace(ops[i] @ rho @ ops[j].conj().T)
            best = max(best, _vn_entropy(out) - _vn_entropy(env))
    return best


# ---------------------------------------------------------------------------
# quadrature over the decoherence-time model
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _nodes_weights(model: TruncatedNormal, nodes: int):
    """Gauss-Legendre nodes and pdf-weighted quadrature weights."""
    if model.sigma == 0:
        return np.array([model.mu]), np.array([1.0])
    lo = max(0.0, model.mu - 8.0 * model.sigma)
    hi = model.mu + 8.0 * model.sigma
    x, w = _leggauss(nodes)
    t = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * w * truncated_normal_pdf(t, model)
    return t, weights


def _expect_1d(func, model: TruncatedNormal, nodes: int) -> float:
    t, w = _nodes_weights(model, nodes)
    return float(np.sum(func(t) * w))


def _expect_2d(func, model1: TruncatedNormal, model2: TruncatedNormal,
               nodes: int) -> float:
    t1, w1 = _nodes_weights(model1, nodes)
    t2, w2 = _nodes_weights(model2, nodes)
    g1 = np.repeat(t1, t2.size)
    g2 = np.tile(t2, t1.size)
    w = np.repeat(w1, w2.size) * np.tile(w2, t1.size)
    return float(np.sum(func(g1, g2) * w))


def _converged(value: float, refined: float, what: str):
    if abs(refined - value) > 1e-6:
        raise NumericalError(
            f"{what} quadrature not converged: {value!r} vs {refined!r} "
            f"at doubled node count (delta {refined - value:.3e})")


# ---------------------------------------------------------------------------
# ergodic quantities
# ---------------------------------------------------------------------------

def ergodic_capacity_ad(spec: DecoherenceSpec, nodes: int = QUAD_NODES,
                        check_convergence: bool = False) -> CapacityResult:
    """Ergodic quantum capacity of the fast time-varying AD channel.

    Expectation of the closed-form AD capacity over the T1 model; for the
    fast time-varying amplitude damping channel this equals the quantum
    capacity itself.  sigma_t1 = 0 reduces to the static closed form.
    """
    if spec.sigma_t1 == 0:
        return cq_ad_closed(float(gamma_of(spec.mu_t1, spec.t_algo)))
    func = lambda t1: _cq_ad_batch(gamma_of(t1, spec.t_algo))
    value = _expect_1d(func, spec.t1_model(), nodes)
    if check_convergence:
        _converged(value, _expect_1d(func, spec.t1_model(), 2 * nodes + 1),
                   "ergodic AD capacity")
    return CapacityResult(min(max(value, 0.0), 1.0), None, "quadrature")


def _pauli_probs_for(model: str, t1, t2, t):
    if model == "cta_ad":
        p = cta_ad_of(t1, t)
        return np.stack([1.0 - p, p / 3.0, p / 3.0, p / 3.0], axis=-1)
    if model == "cta_apd":
        p = cta_apd_of(t1, t2, t)
        return np.stack([1.0 - p, p / 3.0, p / 3.0, p / 3.0], axis=-1)
    if model == "pta_ad":
        return pta_ad_of(t1, t)
    if model == "pta_apd":
        return pta_apd_of(t1, t2, t)
    raise UsageError(f"unknown twirl model {model!r}")


def static_hashing(spec: DecoherenceSpec, model: str) -> float:
    """Hashing bound at the mean decoherence times."""
    t2 = min(spec.mu_t2, 2.0 * spec.mu_t1)
    probs = _pauli_probs_for(model, np.array([spec.mu_t1]), np.array([t2]),
                             spec.t_algo)
    return float(1.0 - _entropy_rows(probs)[0])


def ergodic_hashing(spec: DecoherenceSpec, model: str,
                    nodes: int = QUAD_NODES,
                    check_convergence: bool = False) -> CapacityResult:
    """Ergodic hashing bound: expectation of 1 - H(p) over the time model.

    The integrand is the raw hashing bound, negative where a realization
    is too noisy, so the expectation can be negative; values are reported
    as-is and only capped above at 1.  AD-derived models integrate over
    T1 alone; APD models with fluctuating T2 use a tensor-product rule
    with T2 clamped at 2*T1.
    """
    if model not in ("cta_ad", "cta_apd", "pta_ad", "pta_apd"):
        raise UsageError(f"unknown twirl model {model!r}")
    t = spec.t_algo
    two_d = model.endswith("apd") and spec.sigma_t2 > 0

    if spec.sigma_t1 == 0 and not two_d:
        return CapacityResult(min(static_hashing(spec, model), 1.0), None,
                              "closed_form")

    if not two_d:
        mu_t2 = spec.mu_t2
        saturated = ramsey_saturated(spec)
        def func(t1):
            t2 = 2.0 * t1 if saturated else np.minimum(mu_t2, 2.0 * t1)
            return 1.0 - _entropy_rows(_pauli_probs_for(model, t1, t2, t))
        value = _expect_1d(func, spec.t1_model(), nodes)
        if check_convergence:
            _converged(value,
                       _expect_1d(func, spec.t1_model(), 2 * nodes + 1),
                       "ergodic hashing")
    else:
        def func(t1, t2):
            t2c = np.minimum(t2, 2.0 * t1)
            return 1.0 - _entropy_rows(_pauli_probs_for(model, t1, t2c, t))
        value = _expect_2d(func, spec.t1_model(), spec.t2_model(), nodes)
        if check_convergence:
            _converged(value,
                       _expect_2d(func, spec.t1_model(), spec.t2_model(),
                                  2 * nodes + 1),
                       "ergodic hashing")
    return CapacityResult(min(value, 1.0), None, "quadrature")


def ergodic_capacity_apd_lower(spec: DecoherenceSpec,
                               nodes: int = QUAD_NODES,
                               check_convergence: bool = False
                               ) -> CapacityResult:
    """Lower bound on the capacity of the fast time-varying APD channel.

    Expectation of the best diagonal-input coherent information of the
    realized APD channel over the joint (T1, T2) model.  Only a lower
    bound: the combined channel may have superadditive coherent
    information.  Negative per-realization optima are floored at zero,
    as in the single-channel maximizer.  A Ramsey-saturated spec
    (mu_t2 = 2*mu_t1, sigma_t2 = 0) slaves T2 to 2*T1, reducing the
    family to pure amplitude damping.
    """
    saturated = ramsey_saturated(spec)

    def batch(t1, t2):
        t2c = 2.0 * t1 if saturated else np.minimum(t2, 2.0 * t1)
        g = gamma_of(t1, spec.t_algo)
        l = lambda_of(t1, t2c, spec.t_algo)
        def f(xi):
            if xi.ndim == 2:
                return apd_coherent_information(g[:, None], l[:, None], xi)
            return apd_coherent_information(g, l, xi)
        _, vals = _golden_max_batch(f, g.size)
        return np.maximum(vals, 0.0)

    if spec.sigma_t1 == 0 and spec.sigma_t2 == 0:
        g = float(gamma_of(spec.mu_t1, spec.t_algo))
        t2 = min(spec.mu_t2, 2.0 * spec.mu_t1)
        l = float(lambda_of(spec.mu_t1, t2, spec.t_algo))
        res = maximize_coherent_information(kraus_apd(DampingPair(g, l)))
        return CapacityResult(res.value, res.argmax_xi, "quadrature",
                              res.clamped)
    if spec.sigma_t2 == 0:
        func = lambda t1: batch(t1, np.full_like(t1, spec.mu_t2))
        value = _expect_1d(func, spec.t1_model(), nodes)
        if check_convergence:
            _converged(value,
                       _expect_1d(func, spec.t1_model(), 2 * nodes + 1),
                       "ergodic APD capacity")
    else:
        value = _expect_2d(batch, spec.t1_model(), spec.t2_model(), nodes)
        if check_convergence:
            _converged(value,
                       _expect_2d(batch, spec.t1_model(), spec.t2_model(),
                                  2 * nodes + 1),
                       "ergodic APD capacity")
    return CapacityResult(min(max(value, 0.0), 1.0), None, "quadrature")


# ---------------------------------------------------------------------------
# rate thresholds on hashing curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateThreshold:
    """Root of curve(p_bar) = rate with its final bisection bracket."""

    p: float
    bracket_lo: float
    bracket_hi: float


def solve_rate_threshold(rate: float, curve: str, spec: DecoherenceSpec,
                         model: str = "cta_ad",
                         nodes: int = QUAD_NODES) -> RateThreshold:
    """Mean depolarizing probability where a hashing curve crosses a rate.

    curve is either "static_hashing" or "ergodic_hashing"; both are
    monotone decreasing in the mean depolarizing probability over the
    search bracket, so bisection converges.  t_algo is re-derived per
    evaluation point from the mean times.
    """
    if curve not in ("static_hashing", "ergodic_hashing"):
        raise UsageError(f"unknown curve {curve!r}")
    if not 0.0 <= rate < 1.0:
        raise DomainError(f"rate must lie in [0, 1), got {rate}")
    solver_model = "cta_apd" if model.endswith("apd") else "cta_ad"

    def evaluate(p_bar: float) -> float:
        t = solve_t_algo(spec.mu_t1, p_bar, solver_model, spec.mu_t2)
        at = spec.with_t_algo(t)
        if curve == "static_hashing":
            return static_hashing(at, model)
        return ergodic_hashing(at, model, nodes=nodes).value

    lo = 1e-3  # smallest mean depolarizing probability the solver considers
    if evaluate(lo) <= rate:
        raise DomainError(
            f"rate {rate} unreachable: the {curve} curve is already below "
            f"it at p_bar = {lo}")
    hi = None
    for candidate in np.arange(0.05, 0.7401, 0.05):
        if evaluate(float(candidate)) < rate:
            hi = float(candidate)
            break
    if hi is None:
        raise DomainError(f"rate {rate} unreachable on {curve} within "
                          f"p_bar <= 0.74")
    lo = max(lo, hi - 0.05)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if evaluate(mid) > rate:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-9:
            break
    return RateThreshold(0.5 * (lo + hi), lo, hi)


# ---------------------------------------------------------------------------
# curve tabulation (CSV/plot feeders)
# ---------------------------------------------------------------------------

def ad_capacity_curve(gamma_bars, cvs, mu_t1: float = 100.0,
                      nodes: int = QUAD_NODES):
    """Rows (gamma_bar, cv, mode, value) of static + ergodic AD capacity."""
    rows = []
    for g in gamma_bars:
        if not 0.0 < g < 1.0:
            raise UsageError(f"gamma_bar must lie in (0, 1), got {g}")
        t = -mu_t1 * math.log1p(-g)
        rows.append({"gamma_bar": g, "cv": 0.0, "mode": "static",
                     "value": cq_ad_closed(g).value})
        for cv in cvs:
            spec = DecoherenceSpec(mu_t1, cv * mu_t1, 2.0 * mu_t1, 0.0, t)
            rows.append({"gamma_bar": g, "cv": cv, "mode": "ergodic",
                         "value": ergodic_capacity_ad(spec, nodes).value})
    return rows


def hashing_curve(p_bars, cvs, model: str = "cta_ad", mu_t1: float = 100.0,
                  mu_t2: float | None = None, cv_t2: float = 0.0,
                  nodes: int = QUAD_NODES):
    """Rows (p_bar, cv, mode, value) of static + ergodic hashing bounds."""
    if mu_t2 is None:
        mu_t2 = 2.0 * mu_t1
    solver_model = "cta_apd" if model.endswith("apd") else "cta_ad"
    rows = []
    for p_bar in p_bars:
        t = solve_t_algo(mu_t1, p_bar, solver_model, mu_t2)
        base = DecoherenceSpec(mu_t1, 0.0, mu_t2, 0.0, t)
        rows.append({"p_bar": p_bar, "cv": 0.0, "mode": "static",
                     "value": static_hashing(base, model)})
        for cv in cvs:
            spec = DecoherenceSpec(mu_t1, cv * mu_t1, mu_t2, cv_t2 * mu_t2, t)
            rows.append({"p_bar": p_bar, "cv": cv, "mode": "ergodic",
                         "value": ergodic_hashing(spec, model, nodes).value})
    return rows
