"""Weak-solution residuals by space-time quadrature.

Both model equations are tested in integrated-by-parts form against
separable test functions.  For the first-order equation the identity is

    int_0^T int (|u|^q phi + u Delta phi - u Delta phi_t) = int u0 Delta phi(0, .)

for admissible phi with phi(T, .) = 0; the second-order variant replaces
the -u Delta phi_t term by +u Delta phi_tt and tests against phi with
phi(T, .) = phi_t(T, .) = 0, with data terms

    int u1 Delta phi(0, .) - int u0 Delta phi_t(0, .).

Spatial integrals are seeded Monte Carlo over the test-function support
box (n = 1); time integrals are Gauss-Legendre.  Residual reports always
carry the quadrature error estimate; no pass/fail threshold is baked in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ParameterError
from .group import GroupPoint, SmoothField, sublaplacian
from .mc import MCConfig, MCEstimate, mc_integrate_vector, sample_box


@dataclass(frozen=True)
class WeakFormConfig:
    time_nodes: int = 64
    samples: int = 200_000
    seed: int = 0

    def __post_init__(self):
        if self.time_nodes < 2 or self.samples < 2:
            raise ParameterError("need at least 2 time nodes and 2 samples")


@dataclass(frozen=True)
class CandidateSolution:
    """A candidate u(t, eta) with its claimed initial data and exponent q."""

    u: Callable[[float, GroupPoint], np.ndarray]
    u0: SmoothField
    u1: Optional[SmoothField] = None
    q: float = 2.0
    attains_data: bool = True

    def __post_init__(self):
        if not self.q > 1:
            raise ParameterError("q must exceed 1")


@dataclass(frozen=True)
class ResidualReport:
    lhs: float
    rhs: float
    residual: float
    error: float


def _to_points(pts: np.ndarray) -> GroupPoint:
    return GroupPoint(pts[:, 0:1], pts[:, 1:2], pts[:, 2])


def _time_rule(T: float, nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * T * (x + 1.0), 0.5 * T * w


def _check_terminal(testfn, want_dt_zero: bool):
    probe = sample_box(testfn.support_box(), MCConfig(samples=64, seed=97), 0, 64)
    p = _to_points(probe)
    e_end = testfn.eval(testfn.T, p)
    e_start = testfn.eval(0.0, p)
    scale = 1.0 + float(np.max(np.abs(e_start.value)))
    if float(np.max(np.abs(e_end.value))) > 1e-10 * scale:
        raise ParameterError("test function must vanish at t = T")
    if want_dt_zero and float(np.max(np.abs(e_end.dt))) > 1e-10 * scale:
        raise ParameterError("test function time derivative must vanish at t = T")


def _check_initial_data(cand: CandidateSolution, testfn):
    if not cand.attains_data:
        return
    probe = sample_box(testfn.support_box(), MCConfig(samples=32, seed=193), 0, 32)
    p = _to_points(probe)
    got = np.asarray(cand.u(0.0, p))
    want = np.asarray(cand.u0.value(p))
    scale = 1.0 + float(np.max(np.abs(want)))
    if float(np.max(np.abs(got - want))) > 1e-8 * scale:
        raise ParameterError("candidate does not attain its claimed initial data")


def _residual_estimate(lhs_fn, rhs_fn, bounds, cfg: WeakFormConfig) -> ResidualReport:
    """Common-point MC of lhs, rhs and their difference (honest stderr)."""

    def integrand(pts):
        p = _to_points(pts)
        a = lhs_fn(p)
        b = rhs_fn(p)
        return np.stack([a, b, a - b], axis=1)

    lhs, rhs, diff = mc_integrate_vector(integrand, bounds, MCConfig(cfg.samples, cfg.seed), 3)
    return ResidualReport(lhs.value, rhs.value, diff.value, diff.stderr)


def weak_residual_parabolic(cand: CandidateSolution, testfn, cfg: WeakFormConfig) -> ResidualReport:
    """Defect of the first-order weak identity for the given candidate."""
    _check_terminal(testfn, want_dt_zero=False)
    _check_initial_data(cand, testfn)
    q = cand.q
    ts, ws = _time_rule(testfn.T, cfg.time_nodes)

    def lhs(p):
        acc = 0.0
        for t, w in zip(ts, ws):
            e = testfn.eval(t, p)
            u = np.asarray(cand.u(t, p))
            acc = acc + w * (np.abs(u) ** q * e.value + u * e.lap - u * e.lap_dt)
        return acc

    def rhs(p):
        e0 = testfn.eval(0.0, p)
        return np.asarray(cand.u0.value(p)) * e0.lap

    return _residual_estimate(lhs, rhs, testfn.support_box(), cfg)


def weak_residual_hyperbolic(cand: CandidateSolution, testfn, cfg: WeakFormConfig) -> ResidualReport:
    """Defect of the second-order weak identity for the given candidate."""
    _check_terminal(testfn, want_dt_zero=True)
    _check_initial_data(cand, testfn)
    if cand.u1 is None:
        raise ParameterError("hyperbolic candidates need initial velocity u1")
    q = cand.q
    ts, ws = _time_rule(testfn.T, cfg.time_nodes)

    def lhs(p):
        acc = 0.0
        for t, w in zip(ts, ws):
            e = testfn.eval(t, p)
            u = np.asarray(cand.u(t, p))
            acc = acc + w * (np.abs(u) ** q * e.value + u * e.lap + u * e.lap_dtt)
        return acc

    def rhs(p):
        e0 = testfn.eval(0.0, p)
        return np.asarray(cand.u1.value(p)) * e0.lap - np.asarray(cand.u0.value(p)) * e0.lap_dt

    return _residual_estimate(lhs, rhs, testfn.support_box(), cfg)


def pair_defect(defect, testfn, cfg: WeakFormConfig) -> MCEstimate:
    """Space-time pairing int_0^T int defect(t, eta) phi(t, eta); the
    independent oracle for smooth compactly supported candidates."""
    ts, ws = _time_rule(testfn.T, cfg.time_nodes)

    def integrand(pts):
        p = _to_points(pts)
        acc = 0.0
        for t, w in zip(ts, ws):
            acc = acc + w * np.asarray(defect(t, p)) * testfn.eval(t, p).value
        return acc[:, None]

    return mc_integrate_vector(integrand, testfn.support_box(), MCConfig(cfg.samples, cfg.seed), 1)[0]


def _check_supported_inside(f: SmoothField, box: np.ndarray, scale: float):
    """Sample each box face; the field must vanish there."""
    box = np.asarray(box, dtype=float)
    d = box.shape[0]
    rng = np.random.Generator(np.random.Philox(key=np.array([11, 0], dtype=np.uint64)))
    for axis in range(d):
        for side in range(2):
            pts = box[:, 0] + rng.random((64, d)) * (box[:, 1] - box[:, 0])
            pts[:, axis] = box[axis, side]
            vals = f.value(_to_points(pts))
            if float(np.max(np.abs(vals))) > 1e-9 * scale:
                raise ParameterError("support touches the boundary of the box")


def selfadjointness_residual(f: SmoothField, g: SmoothField, box, cfg: WeakFormConfig) -> ResidualReport:
    """| int (-Delta f) g - int f (-Delta g) | over a box with MC error.

    Both fields must be compactly supported strictly inside the box, so
    the two integrals are equal and the residual is pure quadrature noise.
    """
    box = np.asarray(box, dtype=float)
    if box.shape != (3, 2):
        raise ParameterError("box must be (3, 2) bounds for n = 1")
    probe = sample_box(box, MCConfig(samples=128, seed=5), 0, 128)
    scale = 1.0 + float(np.max(np.abs(f.value(_to_points(probe))))) + float(
        np.max(np.abs(g.value(_to_points(probe))))
    )
    _check_supported_inside(f, box, scale)
    _check_supported_inside(g, box, scale)

    def lhs(p):
        return -sublaplacian(f, p) * g.value(p)

    def rhs(p):
        return f.value(p) * -sublaplacian(g, p)

    return _residual_estimate(lhs, rhs, box, cfg)
