"""Capacity integrals, their closed-form constants, and blow-up verdicts.

The engine evaluates the building blocks of the nonlinear-capacity
machinery for the two model equations:

  time factors     I_k(T) = int_0^T phi1^(-1/(q-1)) |d_t^k phi1|^(q') dt,
                   which equal C_k T^(1-k q') with explicit constants,
  spatial factor   I4(R)  = int phi2^(-1/(q-1)) |Delta phi2|^(q') d eta,
                   which scales exactly like R^(Q-2q') for the power
                   cutoff, and its logarithmic-family analogue at the
                   critical exponent q = Q/(Q-2),
  a-priori bounds  assembled with the epsilon-Young constant
                   C(q) = (q/4)^(1-q') / q'.

Spatial integrals use the gauge-polar factorisation: the integrand is a
radial function times omega(eta)^(q'), where omega is homogeneous of
degree zero, so the integral splits into a 1-D radial quadrature times a
gauge-sphere constant S_omega(s) = int_{|eta|=1} omega^s dsigma.  The
sphere constant is estimated once per (n, s) by seeded Monte Carlo over
the annulus 1/2 <= |eta| <= 1 and cached; all R- and T-dependence sits
in deterministic quadratures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .cutoffs import CutoffSpec, check_integrability, cutoff_eval, default_log_power, default_power
from .errors import ParameterError
from .group import GroupPoint
from .mc import MCConfig, MCEstimate, mc_integrate

# Default sampling budget for the cached gauge-sphere constants.
SPHERE_MC = MCConfig(samples=1_000_000, seed=20_000_003)


@dataclass(frozen=True)
class Exponents:
    """Exponent bookkeeping: q, its conjugate q', the time power ell, the
    logarithmic cutoff power kappa, and the homogeneous dimension Q = 2n+2.

    ell defaults to floor((q+1)/(q-1)) + 1 and kappa to 2q/(q-1) + 1, the
    smallest convenient values satisfying the strict constraints.
    """

    q: float
    n: int = 1
    ell: Optional[float] = None
    kappa: Optional[float] = None

    def __post_init__(self):
        if not self.q > 1:
            raise ParameterError("q must exceed 1")
        if self.n < 1:
            raise ParameterError("n must be a positive integer")
        if self.ell is None:
            object.__setattr__(self, "ell", math.floor((self.q + 1) / (self.q - 1)) + 1.0)
        if self.kappa is None:
            object.__setattr__(self, "kappa", default_log_power(self.q))
        if not self.ell > (self.q + 1) / (self.q - 1):
            raise ParameterError(
                f"ell must exceed (q+1)/(q-1) = {(self.q + 1) / (self.q - 1):.6g}"
            )
        if not self.kappa > 2 * self.q / (self.q - 1):
            raise ParameterError(
                f"kappa must exceed 2q/(q-1) = {2 * self.q / (self.q - 1):.6g}"
            )

    @property
    def q_prime(self) -> float:
        return self.q / (self.q - 1.0)

    @property
    def Q(self) -> int:
        return 2 * self.n + 2

    def is_critical(self, tol: float = 1e-12) -> bool:
        return abs(self.q - self.Q / (self.Q - 2.0)) <= tol

    def power_spec(self) -> CutoffSpec:
        return CutoffSpec.power(default_power(self.q))

    def log_spec(self) -> CutoffSpec:
        return CutoffSpec.logarithmic(self.kappa)


@dataclass(frozen=True)
class QuadratureEstimate:
    value: float
    abs_error: float
    nodes: int


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    max_rel_residual: float
    kind: str


@dataclass(frozen=True)
class CriticalSpatialFactor:
    """Logarithmic-family spatial factor with its two Schwarz-split terms
    (the (ln R)^(-Q)-type and (ln R)^(-Q/2)-type contributions)."""

    total: QuadratureEstimate
    term_sq: QuadratureEstimate
    term_lin: QuadratureEstimate


@dataclass(frozen=True)
class CapacityReport:
    """An a-priori bound with its additive breakdown (sums to the bound)."""

    bound: float
    breakdown: dict
    params: dict


class Verdict(Enum):
    SUBCRITICAL_BLOWUP = "SubcriticalBlowup"
    CRITICAL_BLOWUP = "CriticalBlowup"
    SUPERCRITICAL_NO_CONCLUSION = "SupercriticalNoConclusion"

    @property
    def note(self) -> str:
        if self is Verdict.SUPERCRITICAL_NO_CONCLUSION:
            return "no conclusion from capacity bounds; stationary supersolutions exist"
        return "no nontrivial local weak solution for any horizon"


# ---------------------------------------------------------------------------
# Time integrals
# ---------------------------------------------------------------------------


def _time_exponent(e: Exponents, k: int) -> float:
    """Exponent a of the monomial integrand s^a after substituting s = 1 - t/T."""
    return e.ell - k * e.q_prime


def time_integral(e: Exponents, T: float, k: int) -> QuadratureEstimate:
    """Quadrature value of I_k(T) for k in {0, 1, 2}.

    Substituting s = 1 - t/T turns the integrand into coef^(q') s^a with
    a = ell - k q' > -1, so the endpoint singularity at t = T becomes an
    algebraic weight handled by weighted quadrature (QAWS).
    """
    if k not in (0, 1, 2):
        raise ParameterError("time integral order k must be 0, 1 or 2")
    if not T > 0:
        raise ParameterError("T must be positive")
    a = _time_exponent(e, k)
    if not a > -1.0:
        raise ParameterError(
            f"ell = {e.ell} too small for k = {k}: need ell > {k * e.q_prime - 1:.6g}"
        )
    ell, qp, q = e.ell, e.q_prime, e.q
    coef = (1.0, ell / T, ell * (ell - 1.0) / T**2)[k]
    log_coef = qp * math.log(coef) if coef > 0 else -math.inf
    # s-exponent left over after dividing out the weight s^a; identically
    # zero in exact arithmetic, kept to stay faithful to the integrand
    residual_exp = (ell - k) * qp - ell / (q - 1.0) - a

    def regularised(s):
        if s <= 0.0:
            return math.exp(log_coef)
        return math.exp(log_coef + residual_exp * math.log(s))

    y, err, info = quad(
        regularised, 0.0, 1.0, weight="alg", wvar=(a, 0.0),
        epsabs=0.0, epsrel=1e-11, limit=200, full_output=True,
    )[:3]
    return QuadratureEstimate(T * y, T * err, int(info["neval"]))


def time_integral_constant(e: Exponents, k: int) -> float:
    """Closed-form constant C_k with I_k(T) = C_k T^(1 - k q').

    C_0 = 1/(ell+1),
    C_1 = (q-1) ell^(q') / (ell(q-1) - 1),
    C_2 = (q-1) (ell(ell-1))^(q') / (ell(q-1) - q - 1).
    """
    q, ell, qp = e.q, e.ell, e.q_prime
    if k == 0:
        return 1.0 / (ell + 1.0)
    if k == 1:
        den = ell * (q - 1.0) - 1.0
        if not den > 0:
            raise ParameterError("ell(q-1) - 1 must be positive")
        return (q - 1.0) * ell**qp / den
    if k == 2:
        den = ell * (q - 1.0) - q - 1.0
        if not den > 0:
            raise ParameterError("ell(q-1) - q - 1 must be positive")
        return (q - 1.0) * (ell * (ell - 1.0)) ** qp / den
    raise ParameterError("time integral order k must be 0, 1 or 2")


def time_power(e: Exponents, k: int) -> float:
    """T-exponent of I_k: 1 - k q'."""
    return 1.0 - k * e.q_prime


# ---------------------------------------------------------------------------
# Gauge-sphere constant (Monte Carlo, cached)
# ---------------------------------------------------------------------------

_SPHERE_CACHE: dict = {}


def sphere_weight_constant(n: int, s: float, mc: Optional[MCConfig] = None) -> MCEstimate:
    """S_omega(s) = integral of omega^s over the unit gauge sphere.

    Estimated as Q/(1 - 2^(-Q)) times the Monte Carlo integral of omega^s
    over the gauge annulus 1/2 <= |eta| <= 1 (uniform box sampling with
    annulus rejection).  Results are cached per (n, s, samples, seed).
    """
    if n != 1:
        raise ParameterError("gauge-sphere constants are implemented for n = 1")
    if s < 0:
        raise ParameterError("weight power s must be nonnegative")
    mc = mc or SPHERE_MC
    key = (n, round(float(s), 12), mc.samples, mc.seed)
    if key in _SPHERE_CACHE:
        return _SPHERE_CACHE[key]
    Q = 2 * n + 2

    def integrand(pts):
        sq = pts[:, 0] ** 2 + pts[:, 1] ** 2
        r2 = np.sqrt(sq * sq + pts[:, 2] ** 2)
        inside = (r2 >= 0.25) & (r2 <= 1.0)
        w = np.where(inside, sq / np.where(r2 > 0, r2, 1.0), 0.0)
        return np.where(inside, w**s, 0.0)

    est = mc_integrate(integrand, [[-1, 1], [-1, 1], [-1, 1]], mc)
    scale = Q / (1.0 - 2.0 ** (-Q))
    out = MCEstimate(scale * est.value, scale * est.stderr, est.samples, est.seed)
    _SPHERE_CACHE[key] = out
    return out


# ---------------------------------------------------------------------------
# Spatial integrals: power family (subcritical machinery)
# ---------------------------------------------------------------------------


def _radial_quad(integrand, lo: float, hi: float) -> QuadratureEstimate:
    y, err, info = quad(
        integrand, lo, hi, epsabs=1e-300, epsrel=1e-11, limit=200, full_output=True
    )[:3]
    return QuadratureEstimate(y, err, int(info["neval"]))


def _combine_sphere(radial: QuadratureEstimate, sphere: MCEstimate) -> QuadratureEstimate:
    value = sphere.value * radial.value
    err = sphere.value * radial.abs_error + sphere.stderr * abs(radial.value)
    return QuadratureEstimate(value, err, radial.nodes)


def _power_radial_terms(e: Exponents, spec: CutoffSpec, R: float, r: float):
    z = (r / R) ** 2
    v, d1, d2 = cutoff_eval(spec, z)
    g = (4.0 * z / R**2) * d2 + (2.0 * e.Q / R**2) * d1
    return float(v), float(g)


def spatial_integral_subcritical(
    e: Exponents, spec: CutoffSpec, R: float, sphere_mc: Optional[MCConfig] = None
) -> QuadratureEstimate:
    """I4(R) by gauge-polar factorisation.

    S_omega(q') times the radial quadrature of
    Phi^(-1/(q-1))(r^2/R^2) |(4 r^2/R^4) Phi'' + (2Q/R^2) Phi'|^(q') r^(Q-1)
    over the support annulus R/sqrt(2) <= r <= R.
    """
    if not R > 0:
        raise ParameterError("R must be positive")
    check_integrability(spec, e.q)
    q, qp, Q = e.q, e.q_prime, e.Q

    def integrand(r):
        v, g = _power_radial_terms(e, spec, R, r)
        if v <= 0.0 or g == 0.0:
            return 0.0
        return math.exp(-math.log(v) / (q - 1.0) + qp * math.log(abs(g)) + (Q - 1) * math.log(r))

    radial = _radial_quad(integrand, R / math.sqrt(2.0), R)
    sphere = sphere_weight_constant(e.n, qp, sphere_mc)
    return _combine_sphere(radial, sphere)


def data_term_integral_subcritical(
    e: Exponents, spec: CutoffSpec, R: float, sphere_mc: Optional[MCConfig] = None
) -> QuadratureEstimate:
    """The initial-data factor: integral of |Delta phi2|^(q') over H^n."""
    if not R > 0:
        raise ParameterError("R must be positive")
    qp, Q = e.q_prime, e.Q

    def integrand(r):
        _, g = _power_radial_terms(e, spec, R, r)
        if g == 0.0:
            return 0.0
        return math.exp(qp * math.log(abs(g)) + (Q - 1) * math.log(r))

    radial = _radial_quad(integrand, R / math.sqrt(2.0), R)
    sphere = sphere_weight_constant(e.n, qp, sphere_mc)
    return _combine_sphere(radial, sphere)


def mc_spatial_integral(e: Exponents, spec: CutoffSpec, R: float, mc: MCConfig) -> MCEstimate:
    """Direct 3-D Monte Carlo of I4(R) (cross-check of the factorised value)."""
    if e.n != 1:
        raise ParameterError("direct Monte Carlo is implemented for n = 1")
    from .cutoffs import phi_spatial

    q, qp = e.q, e.q_prime
    bounds = [[-R, R], [-R, R], [-R * R, R * R]]

    def integrand(pts):
        p = GroupPoint(pts[:, 0:1], pts[:, 1:2], pts[:, 2])
        v, lap = phi_spatial(spec, R, p)
        mask = (lap != 0.0) & (v > 0.0)
        out = np.zeros(pts.shape[0])
        if np.any(mask):
            out[mask] = np.exp(
                -np.log(v[mask]) / (q - 1.0) + qp * np.log(np.abs(lap[mask]))
            )
        return out

    return mc_integrate(integrand, bounds, mc)


# ---------------------------------------------------------------------------
# Spatial integrals: logarithmic family (critical machinery)
# ---------------------------------------------------------------------------


def _require_critical(e: Exponents):
    if not e.is_critical():
        raise ParameterError(
            f"q = {e.q} is not the critical exponent Q/(Q-2) = {e.Q / (e.Q - 2.0)!r}"
        )


def _log_radial_quad(e: Exponents, spec: CutoffSpec, R: float, psi_power: float,
                     with_b: bool, inv_log_power: float) -> QuadratureEstimate:
    """Radial integral of the logarithmic family in the variable
    z = ln(r/sqrt R)/ln(sqrt R), where r = exp(L(1+z)) and L = ln(sqrt R).

    Integrates Psi^psi_power |B1 + L B2|^(q') L^(1-2q') r^(Q-2q') when
    with_b is set, otherwise Psi^psi_power L^(1-inv_log_power*q') r^(Q-2q')
    with the same measure factor r L dz absorbed.
    """
    q, qp, Q, k = e.q, e.q_prime, e.Q, spec.kappa
    L = 0.5 * math.log(R)

    def integrand(z):
        v, d1, d2 = cutoff_eval(spec, z)
        v = float(v)
        if v <= 0.0:
            return 0.0
        if with_b:
            b1 = k * (k - 1) * v ** (k - 2) * d1 * d1 + k * v ** (k - 1) * d2
            b2 = k * (Q - 2) * v ** (k - 1) * d1
            b = b1 + L * b2
            if b == 0.0:
                return 0.0
            amp = qp * math.log(abs(b)) + (1.0 - 2.0 * qp) * math.log(L)
        else:
            amp = (1.0 - inv_log_power * qp) * math.log(L)
        return math.exp(psi_power * math.log(v) + amp + (Q - 2.0 * qp) * L * (1.0 + z))

    return _radial_quad(integrand, 0.0, 1.0)


def spatial_integral_critical(
    e: Exponents, spec: CutoffSpec, R: float, sphere_mc: Optional[MCConfig] = None
) -> CriticalSpatialFactor:
    """Spatial factor of the logarithmic family at q = Q/(Q-2).

    Returns the full integral of psi2^(-1/(q-1)) |Delta psi2|^(q') and,
    separately, the two Schwarz-split upper-bound terms

      term_sq : Psi^(kappa-2q') (r^2 ln^2 sqrt R)^(-q')  contribution,
      term_lin: Psi^(kappa-q')  (r^2 ln   sqrt R)^(-q')  contribution,

    each integrated over the transition annulus sqrt(R) <= r <= R and
    multiplied by the gauge-sphere constant.
    """
    _require_critical(e)
    if not R > 1:
        raise ParameterError("R must exceed 1")
    if spec.family != "logarithmic":
        raise ParameterError("critical path expects a logarithmic-family cutoff")
    qp = e.q_prime
    k = spec.kappa
    sphere = sphere_weight_constant(e.n, qp, sphere_mc)
    total = _log_radial_quad(e, spec, R, -k / (e.q - 1.0), True, 0.0)
    term_sq = _log_radial_quad(e, spec, R, k - 2.0 * qp, False, 2.0)
    term_lin = _log_radial_quad(e, spec, R, k - qp, False, 1.0)
    return CriticalSpatialFactor(
        _combine_sphere(total, sphere),
        _combine_sphere(term_sq, sphere),
        _combine_sphere(term_lin, sphere),
    )


def data_term_integral_critical(
    e: Exponents, spec: CutoffSpec, R: float, sphere_mc: Optional[MCConfig] = None
) -> QuadratureEstimate:
    """Integral of |Delta psi2|^(q') over H^n (initial-data factor)."""
    _require_critical(e)
    sphere = sphere_weight_constant(e.n, e.q_prime, sphere_mc)
    radial = _log_radial_quad(e, spec, R, 0.0, True, 0.0)
    return _combine_sphere(radial, sphere)


def log_envelope(Q: int, R: float) -> float:
    """(ln R)^(-Q) + (ln R)^(-Q/2), the decay envelope of the critical factor."""
    lr = math.log(R)
    return lr ** (-Q) + lr ** (-Q / 2.0)


# ---------------------------------------------------------------------------
# Fits, constants, bounds, verdicts
# ---------------------------------------------------------------------------


def scaling_fit(samples, kind: str) -> ScalingFit:
    """Least-squares power-law fit on log-transformed data.

    kind selects the abscissa transform: "log T" and "log R" use ln(x),
    "log log R" uses ln(ln(x)).  Values must be positive; at least four
    samples are required.
    """
    if kind not in ("log T", "log R", "log log R"):
        raise ParameterError(f"unknown abscissa kind {kind!r}")
    pts = [(float(x), float(v)) for x, v in samples]
    if len(pts) < 4:
        raise ParameterError("scaling fit needs at least 4 samples")
    if any(v <= 0 for _, v in pts):
        raise ParameterError("scaling fit needs positive values")
    xs = np.array([x for x, _ in pts])
    if kind == "log log R":
        if np.any(xs <= 1.0):
            raise ParameterError("log log abscissa needs x > 1")
        X = np.log(np.log(xs))
    else:
        X = np.log(xs)
    Y = np.log(np.array([v for _, v in pts]))
    slope, intercept = np.polyfit(X, Y, 1)
    fitted = np.exp(intercept + slope * X)
    rel = float(np.max(np.abs(fitted / np.exp(Y) - 1.0)))
    return ScalingFit(float(slope), float(intercept), rel, kind)


def young_constant(q: float) -> float:
    """Constant from the epsilon-Young inequality with epsilon = q/4:
    C(q) = (q/4)^(1-q') / q'."""
    if not q > 1:
        raise ParameterError("q must exceed 1")
    qp = q / (q - 1.0)
    return (q / 4.0) ** (1.0 - qp) / qp


def _bound_report(e: Exponents, T: float, R: float, terms: dict, params: dict) -> CapacityReport:
    bound = 0.0
    for v in terms.values():
        bound += v
    params = dict(params)
    params.update({"q": e.q, "n": e.n, "ell": e.ell, "kappa": e.kappa, "T": T, "R": R})
    return CapacityReport(bound, terms, params)


def capacity_bound_parabolic(
    e: Exponents, T: float, R: float, u0_norm: float,
    spec: Optional[CutoffSpec] = None, sphere_mc: Optional[MCConfig] = None,
) -> CapacityReport:
    """A-priori bound for the first-order equation:

    2 C(q) (I2 + I1) * (spatial factor) + 2 ||u0||_q (data factor)^(1/q').

    The subcritical path (power cutoff) scales like R^(Q-2q'); at the
    critical exponent the logarithmic cutoff is used instead and the
    bound decays inside the (ln R) envelope.
    """
    if u0_norm < 0:
        raise ParameterError("u0 norm must be nonnegative")
    cq = young_constant(e.q)
    i1 = time_integral(e, T, 0).value
    i2 = time_integral(e, T, 1).value
    critical = e.is_critical()
    if critical:
        spec = spec or e.log_spec()
        spatial = spatial_integral_critical(e, spec, R, sphere_mc).total.value
        data = data_term_integral_critical(e, spec, R, sphere_mc).value
    else:
        spec = spec or e.power_spec()
        spatial = spatial_integral_subcritical(e, spec, R, sphere_mc).value
        data = data_term_integral_subcritical(e, spec, R, sphere_mc).value
    terms = {
        "term_lap_dt": 2.0 * cq * i2 * spatial,
        "term_lap": 2.0 * cq * i1 * spatial,
        "term_data_u0": 2.0 * u0_norm * data ** (1.0 / e.q_prime),
    }
    params = {
        "equation": "parabolic",
        "critical": critical,
        "young_constant": cq,
        "I1": i1,
        "I2": i2,
        "spatial_factor": spatial,
        "data_factor": data,
        "u0_norm": u0_norm,
    }
    return _bound_report(e, T, R, terms, params)


def capacity_bound_hyperbolic(
    e: Exponents, T: float, R: float, u0_norm: float, u1_norm: float,
    spec: Optional[CutoffSpec] = None, sphere_mc: Optional[MCConfig] = None,
) -> CapacityReport:
    """A-priori bound for the second-order equation:

    2 C(q) (I3 + I1) * (spatial factor)
      + 2 ||u1||_q (data factor)^(1/q')
      + 2 (ell/T) ||u0||_q (data factor)^(1/q').

    The u0 term carries |d_t phi1(0)| = ell/T.  Subcritical totals group
    as const * R^(Q-2q') * (T^(1-2q') + T + 1 + 1/T); the grouped time
    factor is echoed in params.
    """
    if u0_norm < 0 or u1_norm < 0:
        raise ParameterError("data norms must be nonnegative")
    cq = young_constant(e.q)
    i1 = time_integral(e, T, 0).value
    i3 = time_integral(e, T, 2).value
    critical = e.is_critical()
    if critical:
        spec = spec or e.log_spec()
        spatial = spatial_integral_critical(e, spec, R, sphere_mc).total.value
        data = data_term_integral_critical(e, spec, R, sphere_mc).value
        t_grouped = T ** (1.0 - e.Q) + T + 1.0 + 1.0 / T
    else:
        spec = spec or e.power_spec()
        spatial = spatial_integral_subcritical(e, spec, R, sphere_mc).value
        data = data_term_integral_subcritical(e, spec, R, sphere_mc).value
        t_grouped = T ** (1.0 - 2.0 * e.q_prime) + T + 1.0 + 1.0 / T
    data_root = data ** (1.0 / e.q_prime)
    terms = {
        "term_lap_dtt": 2.0 * cq * i3 * spatial,
        "term_lap": 2.0 * cq * i1 * spatial,
        "term_data_u1": 2.0 * u1_norm * data_root,
        "term_data_u0": 2.0 * (e.ell / T) * u0_norm * data_root,
    }
    params = {
        "equation": "hyperbolic",
        "critical": critical,
        "young_constant": cq,
        "I1": i1,
        "I3": i3,
        "spatial_factor": spatial,
        "data_factor": data,
        "u0_norm": u0_norm,
        "u1_norm": u1_norm,
        "t_factor_grouped": t_grouped,
    }
    return _bound_report(e, T, R, terms, params)


def critical_exponent(n: int) -> Fraction:
    """q_c = Q/(Q-2) = (2n+2)/(2n) as an exact rational."""
    if n < 1:
        raise ParameterError("n must be a positive integer")
    return Fraction(2 * n + 2, 2 * n)


def verdict(n: int, q) -> Verdict:
    """Classify q against q_c = Q/(Q-2) with exact rational arithmetic.

    q may be a Fraction, an int, or a float; floats are compared as the
    exact binary rationals they are.
    """
    qf = q if isinstance(q, Fraction) else Fraction(q)
    if not qf > 1:
        raise ParameterError("q must exceed 1")
    qc = critical_exponent(n)
    if qf < qc:
        return Verdict.SUBCRITICAL_BLOWUP
    if qf == qc:
        return Verdict.CRITICAL_BLOWUP
    return Verdict.SUPERCRITICAL_NO_CONCLUSION
