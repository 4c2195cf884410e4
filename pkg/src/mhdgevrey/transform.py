"""Analyticity transforms: exponential weighting in time and the Phi weight.

Two reweightings of the coefficient fields are provided.  The first applies
the weight e^{sigma (t-t0)|n|} and compares the weighted energy against the
closed-form envelope q_s(t) valid up to a guaranteed time t_star.  The
second multiplies coefficients by e^{delta Phi |n|} where Phi in (0, 1] is
the root of

    Theta(Phi) = ||v~||_{delta Phi, 3/2}^2 + ||b~||_{delta Phi, 3/2}^2
                 + 1 - Phi^{-2} = 0,

so that Phi = (1 + ||v~||_{3/2}^2 + ||b~||_{3/2}^2)^{-1/2} holds as a fixed
point.  The weighted fields obey an energy inequality with a computable
right-hand side Q built from the initial data; ``verify_theorem2`` checks it
along an archived trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, DomainError, TraceError
from .spectral import SpectralField, geometry, gevrey_norm, gevrey_scale, sobolev_norm

PHI_RESIDUAL_TOL = 1e-12
PHI_FIXED_POINT_TOL = 1e-10
_MAX_BISECTIONS = 200


# -- exponentially growing weight (first transform) ---------------------------


@dataclass(frozen=True)
class FoiasTemamParams:
    """Parameters of the growing-weight estimate for 1/2 < s <= 1."""

    sigma: float
    s: float
    gamma: float
    c_second: float


def _energy_s(state, s: float) -> float:
    return sobolev_norm(state.V, s) ** 2 + sobolev_norm(state.B, s) ** 2


class FoiasTemamResult(NamedTuple):
    lhs: float
    qs: float
    t_star: float
    note: str


def foias_temam_norms(state, t0: float, sigma: float, s: float, table,
                      initial=None, gamma: float | None = None) -> FoiasTemamResult:
    """Weighted energy at time t against its closed-form envelope.

    Returns (lhs, qs, t_star): lhs is the e^{sigma(t-t0)|n|}-weighted squared
    energy of the state, qs the envelope value at t, and t_star the length of
    the window on which the envelope is finite.  The envelope constant uses
    gamma pinned to the largest admissible value unless overridden.
    """
    mn = min(state.nu, state.eta)
    if not (0.0 < sigma < mn):
        raise DomainError("sigma must lie in (0, min(nu, eta))")
    if not (0.5 < s <= 1.0):
        raise DomainError("s must lie in (1/2, 1]")
    t = state.t
    if t < t0:
        raise DomainError("state sampled before t0")
    cps = table.Cprime(s)
    if gamma is None:
        gamma = (mn - sigma) / (cps * (2.5 - s))
    elif cps * (2.5 - s) * gamma > (mn - sigma) * (1 + 1e-12):
        raise DomainError("gamma violates the admissibility inequality")
    c2 = table.C_second(s, gamma)

    lhs = (
        gevrey_norm(state.V, sigma * (t - t0), s) ** 2
        + gevrey_norm(state.B, sigma * (t - t0), s) ** 2
    )
    if initial is None:
        if abs(t - t0) > 1e-12:
            raise DomainError("initial sample required when state.t != t0")
        e0 = lhs
    else:
        e0 = _energy_s(initial, s)
    if e0 == 0.0:
        return FoiasTemamResult(lhs, 0.0, math.inf, "")
    t_star = e0 ** (-2.0 / (2.0 * s - 1.0)) / c2
    if t - t0 >= t_star:
        return FoiasTemamResult(lhs, math.inf, t_star, "outside guaranteed window")
    qs = (e0 ** (-2.0 / (2.0 * s - 1.0)) - c2 * (t - t0)) ** (-(s - 0.5))
    return FoiasTemamResult(lhs, qs, t_star, "")


# -- the Phi weight ------------------------------------------------------------


def delta_max(table, nu: float, eta: float) -> float:
    """Largest admissible weight scale: min(nu, eta)/(18 sqrt(2) C'_{1/2})."""
    return min(nu, eta) / (18.0 * math.sqrt(2.0) * table.Cprime_half())


def _theta(V, B, delta, phi):
    return (
        gevrey_norm(V, delta * phi, 1.5) ** 2
        + gevrey_norm(B, delta * phi, 1.5) ** 2
        + 1.0
        - phi ** (-2.0)
    )


def solve_phi(V: SpectralField, B: SpectralField, delta: float) -> float:
    """Unique root of Theta on (0, 1] by bisection (Theta is increasing)."""
    if delta < 0:
        raise DomainError("delta must be nonnegative")
    theta1 = _theta(V, B, delta, 1.0)
    if theta1 <= PHI_RESIDUAL_TOL:
        # Zero fields: Theta(1) = 0 exactly.
        return 1.0
    lo, hi = 0.0, 1.0  # Theta -> -inf as Phi -> 0+, Theta(1) > 0
    best_phi, best_res = 1.0, theta1
    for _ in range(_MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        r = _theta(V, B, delta, mid)
        if abs(r) < abs(best_res):
            best_phi, best_res = mid, r
        if abs(r) <= PHI_RESIDUAL_TOL:
            return mid
        if r < 0:
            lo = mid
        else:
            hi = mid
    if abs(best_res) <= 1e-9:
        return best_phi
    raise ConvergenceError(
        "Phi bisection stalled with residual %r" % (best_res,)
    )


@dataclass(frozen=True)
class PhiState:
    """Weighted fields v~, b~ together with the weight data."""

    delta: float
    phi: float
    V: SpectralField
    B: SpectralField
    t: float = 0.0
    nu: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.phi <= 1.0):
            raise DomainError("phi must lie in (0, 1]")
        e = sobolev_norm(self.V, 1.5) ** 2 + sobolev_norm(self.B, 1.5) ** 2
        if abs(self.phi - (1.0 + e) ** -0.5) > PHI_FIXED_POINT_TOL:
            raise DomainError("phi is not the fixed point of the weighted fields")


def transform(state, delta: float) -> PhiState:
    """Weight the coefficients of the state by e^{delta Phi |n|}."""
    phi = solve_phi(state.V, state.B, delta)
    return PhiState(
        delta=delta,
        phi=phi,
        V=gevrey_scale(state.V, delta * phi),
        B=gevrey_scale(state.B, delta * phi),
        t=state.t,
        nu=state.nu,
        eta=state.eta,
    )


def untransform_field(w: SpectralField, delta: float, phi: float) -> SpectralField:
    """Inverse weighting e^{-delta Phi |n|}."""
    return gevrey_scale(w, -delta * phi)


# -- triple-interaction sums ---------------------------------------------------


def sigma_p(phi_state: PhiState, p: float) -> float:
    """The real value i*Sigma_p of the weighted triple-interaction sum.

    Direct double summation over coefficient pairs; the p = 0 case uses the
    index-swapped symmetrized kernel, which removes a cancellation between
    large exponentials.
    """
    N = phi_state.V.N
    g = geometry(N)
    size = g.size
    dp = phi_state.delta * phi_state.phi
    vc, bc = phi_state.V.coeffs, phi_state.B.coeffs

    absn_cube = np.sqrt(g.nsq.astype(float))
    # v~_{-n} = conj(v~_n) by reality of the source field.
    vmn = np.conj(vc)
    bmn = np.conj(bc)
    if p == 0.0:
        wp = None
    else:
        safe = np.where(g.nsq == 0, 1.0, absn_cube)
        wp = np.where(g.nsq == 0, 0.0, safe**p)

    total = np.zeros((), dtype=np.complex128)
    for k, vk, bk in zip(g.modes, phi_state.V.ball(), phi_state.B.ball()):
        dst = tuple(slice(max(0, kd), size + min(0, kd)) for kd in k)
        src = tuple(slice(max(0, -kd), size + min(0, -kd)) for kd in k)
        VS = np.zeros_like(vc)
        BS = np.zeros_like(bc)
        ANS = np.zeros_like(absn_cube)
        VS[dst] = vc[src]
        BS[dst] = bc[src]
        ANS[dst] = absn_cube[src]
        kf = k.astype(float)
        absk = float(np.sqrt(kf @ kf))
        bracket = -np.einsum("...c,c->...", VS, kf) * (
            np.einsum("...c,c->...", vmn, vk) + np.einsum("...c,c->...", bmn, bk)
        ) + np.einsum("...c,c->...", BS, kf) * (
            np.einsum("...c,c->...", vmn, bk) + np.einsum("...c,c->...", bmn, vk)
        )
        if p == 0.0:
            w = 0.5 * (
                np.exp(dp * (absn_cube - absk - ANS))
                - np.exp(dp * (absk - absn_cube - ANS))
            )
        else:
            w = wp * np.exp(dp * (absn_cube - absk - ANS))
        contrib = w * bracket
        contrib[~g.ball] = 0.0
        total = total + np.sum(contrib)
    return float((1j * total).real)


# -- balance residual of the weighted system -----------------------------------


def balance_residual(samples) -> float:
    """Midpoint residual of the weighted-energy balance along samples.

    Each consecutive pair contributes |(1/2)(1 + delta Phi^3 E_2) dE_{3/2}/dt
    + nu ||v~||_{5/2}^2 + eta ||b~||_{5/2}^2 - i Sigma_3| with every factor
    evaluated as the midpoint average; returns the maximum over pairs.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise DomainError("need at least two consecutive samples")
    vals = []
    for ps in samples:
        e32 = sobolev_norm(ps.V, 1.5) ** 2 + sobolev_norm(ps.B, 1.5) ** 2
        e2 = sobolev_norm(ps.V, 2.0) ** 2 + sobolev_norm(ps.B, 2.0) ** 2
        diss = ps.nu * sobolev_norm(ps.V, 2.5) ** 2 + ps.eta * sobolev_norm(ps.B, 2.5) ** 2
        pref = 0.5 * (1.0 + ps.delta * ps.phi**3 * e2)
        vals.append((ps.t, e32, pref, diss, sigma_p(ps, 3.0)))
    worst = 0.0
    for (t1, e1, p1, d1, s1), (t2, e2_, p2, d2, s2) in zip(vals, vals[1:]):
        h = t2 - t1
        if not h > 0:
            raise DomainError("sample times must increase")
        de = (e2_ - e1) / h
        res = 0.5 * (p1 + p2) * de + 0.5 * (d1 + d2) - 0.5 * (s1 + s2)
        worst = max(worst, abs(res))
    return worst


# -- weighted-energy a priori verification --------------------------------------


@dataclass(frozen=True)
class Theorem2Report:
    Q: float
    lhs_terminal: float
    lhs_integral: float
    rhs: float
    ratio: float
    delta_admissible: bool
    q_nonpositive: bool

    @property
    def verdict(self) -> str:
        if not self.delta_admissible:
            return "informational"
        if self.rhs == 0.0 and self.lhs_terminal + self.lhs_integral == 0.0:
            return "vacuous"
        return "pass" if self.lhs_terminal + self.lhs_integral <= self.rhs else "fail"


def q_functional(phi_state: PhiState) -> float:
    """The initial-data functional Q of the weighted-energy inequality."""
    d, phi = phi_state.delta, phi_state.phi
    e0 = sobolev_norm(phi_state.V, 0.0) ** 2 + sobolev_norm(phi_state.B, 0.0) ** 2
    eh = sobolev_norm(phi_state.V, 0.5) ** 2 + sobolev_norm(phi_state.B, 0.5) ** 2
    e1 = sobolev_norm(phi_state.V, 1.0) ** 2 + sobolev_norm(phi_state.B, 1.0) ** 2
    return (
        0.5 * e0
        - d * phi * eh
        + d**2 * phi**2 * e1
        + (2.0 * d**3 / 3.0) * (phi**3 - 3.0 * phi + 2.0)
    )


def verify_theorem2(trace, delta: float, T: float, table=None) -> Theorem2Report:
    """Check the weighted-energy inequality LHS <= 9Q over [t0, T]."""
    t = trace.times
    man = trace.manifest
    t0 = float(man.get("t0", t[0]))
    sel = (t >= t0 - 1e-12) & (t <= T + 1e-12)
    if sel.sum() < 2 and T > t0:
        raise TraceError("trace does not cover [t0, T]")
    ts = t[sel]
    gaps = np.diff(ts)
    if len(gaps) and np.max(gaps) > 2.0 * np.min(gaps) * (1 + 1e-9):
        raise TraceError("trace too sparse")

    phi = trace.col("phi")[sel]
    e0 = trace.col("tv_s0")[sel] ** 2 + trace.col("tb_s0")[sel] ** 2
    eh = trace.col("tv_s0.5")[sel] ** 2 + trace.col("tb_s0.5")[sel] ** 2
    e1 = trace.col("tv_s1")[sel] ** 2 + trace.col("tb_s1")[sel] ** 2
    integrand = trace.col("lhs29_integrand")[sel]

    Q = (
        0.5 * e0[0]
        - delta * phi[0] * eh[0]
        + delta**2 * phi[0] ** 2 * e1[0]
        + (2.0 * delta**3 / 3.0) * (phi[0] ** 3 - 3.0 * phi[0] + 2.0)
    )
    lhs_term = 2.25 * e0[-1]
    lhs_int = float(np.trapezoid(integrand, ts)) if len(ts) > 1 else 0.0
    rhs = 9.0 * Q
    lhs = lhs_term + lhs_int
    ratio = lhs / rhs if rhs != 0.0 else (0.0 if lhs == 0.0 else math.inf)
    admissible = True
    if table is not None:
        nu = float(man["config"]["nu"])
        eta = float(man["config"]["eta"])
        admissible = delta <= delta_max(table, nu, eta) * (1 + 1e-12)
    return Theorem2Report(
        Q=float(Q),
        lhs_terminal=float(lhs_term),
        lhs_integral=float(lhs_int),
        rhs=float(rhs),
        ratio=float(ratio),
        delta_admissible=bool(admissible),
        q_nonpositive=bool(Q <= 0.0),
    )
