"""Damping coefficients W on the circle and their sum-of-squares factors.

Profiles are exact sympy expressions in the spatial variable (see symbols.X),
evaluated through the shared lambdify cache with x wrapped into [-pi, pi).
Derivatives are taken symbolically and hold almost everywhere for the
piecewise-analytic profiles (the kink sets are finite and never hit generic
grid nodes).

Blending convention: the polynomial and oscillating profiles follow their
defining formula near the strip and are rotated into a constant plateau K
before +-pi using the angle trick W = core^2 * cos^2(theta) + K * sin^2(theta)
with a smooth theta: 0 -> pi/2.  This keeps W untouched on the inner region,
makes it exactly constant (hence smooth and periodic) near +-pi, gives a
genuine positive floor outside sigma + sigma1, and preserves an exact global
sum-of-squares factorization with smooth blend factors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import sympy as sp

from .grid import PeriodicGrid
from .symbols import (
    X,
    cached_diff,
    even_window,
    evaluate_expr,
    rising_step,
    smooth_step,
)

__all__ = [
    "DampingProfile",
    "HypothesisReport",
    "strip_constant_profile",
    "polynomial_profile",
    "oscillating_profile",
    "constant_profile",
    "check_hypotheses",
    "gradient_bound_constant",
    "tau_min",
    "alpha_of_tau",
    "profile_from_name",
]


def _eval_x(expr: sp.Expr, x, order: int = 0) -> np.ndarray:
    vals = evaluate_expr(cached_diff(expr, order, 0), x, 0.0, 1.0)
    return np.real(vals)


@dataclass(frozen=True)
class DampingProfile:
    """A damping coefficient W >= 0 on the circle.

    Fields
    ------
    name : identifier used by the CLI registry.
    w_expr : exact expression for W on the fundamental domain.
    factor_exprs : optional tuple of expressions v_j with W = sum v_j^2
        (globally for the built-ins); None when no factorization is claimed.
    sigma : half-width of the undamped strip (W = 0 on |x| < sigma).
    sigma1 : collar width; the factorization is guaranteed on
        (-sigma-sigma1, sigma+sigma1) and the floor claim starts at
        floor_halfwidth <= sigma + sigma1.
    k0 : regularity class of the factors (math.inf for C-infinity).
    floor : claimed lower bound of W outside [-floor_halfwidth, floor_halfwidth].
    floor_halfwidth : where the floor claim starts; sigma for profiles that are
        bounded below immediately outside the strip, sigma + transition width
        for profiles that vanish continuously at the strip edge.
    smoothness_order : highest derivative order the samplers provide
        (None = any order, almost everywhere).
    params : constructor parameters, kept for provenance.
    """

    name: str
    w_expr: sp.Expr
    factor_exprs: Optional[tuple]
    sigma: float
    sigma1: float
    k0: float
    floor: float
    floor_halfwidth: float
    smoothness_order: Optional[int] = None
    params: tuple = field(default_factory=tuple)

    def W(self, x, order: int = 0) -> np.ndarray:
        """Sample d^order W / dx^order at x (a.e. for kinked profiles)."""
        if self.smoothness_order is not None and order > self.smoothness_order:
            raise ValueError(
                f"profile {self.name!r} provides derivatives up to order "
                f"{self.smoothness_order}, requested {order}"
            )
        return _eval_x(self.w_expr, x, order)

    @property
    def factors(self) -> Optional[list]:
        """List of factor samplers v_j(x), or None."""
        if self.factor_exprs is None:
            return None
        return [
            (lambda xx, e=e, o=0: _eval_x(e, xx, o)) for e in self.factor_exprs
        ]

    def factor_values(self, x, order: int = 0) -> np.ndarray:
        if self.factor_exprs is None:
            raise ValueError(f"profile {self.name!r} has no factorization")
        return np.stack([_eval_x(e, x, order) for e in self.factor_exprs])

    @property
    def param_dict(self) -> dict:
        return dict(self.params)


def _require_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not 0.0 < sigma < math.pi:
        raise ValueError(f"sigma must lie in (0, pi), got {sigma}")
    return sigma


def _dplus(sigma: float) -> sp.Expr:
    # (|x| - sigma)_+ on the fundamental domain
    return sp.Piecewise((sp.Abs(X) - sigma, sp.Abs(X) > sigma), (0, True))


def strip_constant_profile(sigma: float, smoothing: float = 0.0) -> DampingProfile:
    """W = 1 outside the strip, 0 inside, with a smooth monotone transition.

    smoothing = 0 gives the sharp indicator of {|x| > sigma}; smoothing > 0
    inserts a C-infinity rise (a squared step) on sigma < |x| < sigma+smoothing.
    """
    sigma = _require_sigma(sigma)
    smoothing = float(smoothing)
    if smoothing < 0 or smoothing >= math.pi - sigma:
        raise ValueError(
            f"smoothing must lie in [0, pi - sigma), got {smoothing}"
        )
    if smoothing == 0.0:
        w = sp.Piecewise((1, sp.Abs(X) > sigma), (0, True))
        k0: float = 0
        smoothness: Optional[int] = 0
    else:
        w = rising_step(sp.Abs(X), sigma, sigma + smoothing) ** 2
        k0 = math.inf
        smoothness = None
    sigma1 = min(0.5, 0.5 * (math.pi - sigma))
    return DampingProfile(
        name="strip_constant",
        w_expr=w,
        factor_exprs=None,
        sigma=sigma,
        sigma1=sigma1,
        k0=k0,
        floor=1.0,
        floor_halfwidth=sigma + smoothing,
        smoothness_order=smoothness,
        params=(("sigma", sigma), ("smoothing", smoothing)),
    )


def polynomial_profile(sigma: float, beta_exp: float) -> DampingProfile:
    """W = (|x| - sigma)_+^beta_exp near the strip, blended to a constant.

    The defining formula holds exactly for |x| <= sigma + sigma1 (in
    particular W(sigma + t) = t^beta_exp there); beyond that the angle blend
    rotates W into the constant K = (sigma1 + wb)^beta_exp.  Factors
    (d_+^(beta/2) cos(theta), sqrt(K) sin(theta)) are attached for
    beta_exp >= 2, where the half-power is at least Lipschitz.
    """
    sigma = _require_sigma(sigma)
    beta_exp = float(beta_exp)
    if beta_exp <= 0:
        raise ValueError(f"beta_exp must be > 0, got {beta_exp}")
    sigma1 = min(0.5, (math.pi - sigma) / 3.0)
    wb = min(0.5, (math.pi - sigma - sigma1) / 3.0)
    bexp = sp.Integer(int(beta_exp)) if beta_exp.is_integer() else sp.Float(beta_exp)
    d = _dplus(sigma)
    theta = (sp.pi / 2) * rising_step(sp.Abs(X), sigma + sigma1, sigma + sigma1 + wb)
    K = (sigma1 + wb) ** beta_exp
    w = d**bexp * sp.cos(theta) ** 2 + K * sp.sin(theta) ** 2
    factors: Optional[tuple] = None
    if beta_exp >= 2.0:
        half = sp.Integer(int(beta_exp // 2)) if (beta_exp / 2).is_integer() else sp.Float(beta_exp / 2)
        factors = (d**half * sp.cos(theta), math.sqrt(K) * sp.sin(theta))
    return DampingProfile(
        name="polynomial",
        w_expr=w,
        factor_exprs=factors,
        sigma=sigma,
        sigma1=sigma1,
        k0=int(beta_exp // 2),
        floor=sigma1**beta_exp,
        floor_halfwidth=sigma + sigma1,
        smoothness_order=None,
        params=(("beta_exp", beta_exp), ("sigma", sigma)),
    )


def oscillating_profile(sigma: float) -> DampingProfile:
    """W vanishing like e^(-1/d) sin^2(1/d) at the strip edge, d = (|x|-sigma)_+.

    Equals the formula exactly for d < pure_halfwidth excess (which covers the
    last sign change of sin(1/d) at d = 1/pi), then blends into the constant
    K = e^(-2/sigma1).  Factors: v1 = e^(-1/(2d)) sin(1/d) cos(theta) (sign-
    changing, as the factorization demands) and v2 = sqrt(K) sin(theta); the
    global identity W = v1^2 + v2^2 is exact.  The infimum of W over any
    neighborhood of the strip edge is genuinely 0 (zeros of sin accumulate at
    d = 0+), so the positive floor claim starts only at sigma + sigma1.
    """
    sigma = _require_sigma(sigma)
    sigma1 = min(1.0, 0.8 * (math.pi - sigma))
    blend_lo = max(0.55 * sigma1, min(2.0 / math.pi + 0.02, 0.8 * sigma1))
    blend_hi = 0.9 * sigma1
    if blend_hi <= blend_lo:
        blend_lo = 0.7 * sigma1
    d_raw = sp.Abs(X) - sigma
    core = sp.Piecewise(
        (sp.exp(-1 / (2 * d_raw)) * sp.sin(1 / d_raw), d_raw > 0),
        (0, True),
    )
    theta = (sp.pi / 2) * rising_step(sp.Abs(X), sigma + blend_lo, sigma + blend_hi)
    K = math.exp(-2.0 / sigma1)
    v1 = core * sp.cos(theta)
    v2 = math.sqrt(K) * sp.sin(theta)
    return DampingProfile(
        name="oscillating",
        w_expr=v1**2 + v2**2,
        factor_exprs=(v1, v2),
        sigma=sigma,
        sigma1=sigma1,
        k0=math.inf,
        floor=K,
        floor_halfwidth=sigma + sigma1,
        smoothness_order=None,
        params=(("pure_halfwidth", sigma + blend_lo), ("sigma", sigma)),
    )


def constant_profile(c: float) -> DampingProfile:
    """W == c everywhere; the degenerate profile used by diagonal oracles.

    The strip geometry fields are nominal (constant damping has no undamped
    strip); c = 0 is allowed and makes the floor claim vacuous.
    """
    c = float(c)
    if c < 0:
        raise ValueError(f"constant damping must be >= 0, got {c}")
    w = sp.Float(c) if c != 0 else sp.Integer(0)
    factors = (sp.Float(math.sqrt(c)),) if c > 0 else (sp.Integer(0),)
    return DampingProfile(
        name="constant",
        w_expr=w,
        factor_exprs=factors,
        sigma=1.0,
        sigma1=0.5,
        k0=math.inf,
        floor=c,
        floor_halfwidth=1.0,
        smoothness_order=None,
        params=(("c", c),),
    )


_REGISTRY = {
    "strip_constant": (strip_constant_profile, ("sigma", "smoothing")),
    "polynomial": (polynomial_profile, ("sigma", "beta_exp")),
    "oscillating": (oscillating_profile, ("sigma",)),
    "constant": (constant_profile, ("c",)),
}


def profile_from_name(name: str, params: dict) -> DampingProfile:
    """Build a registered profile from a name and parameter map."""
    if name not in _REGISTRY:
        raise KeyError(
            f"unknown profile {name!r}; registered: {', '.join(sorted(_REGISTRY))}"
        )
    ctor, keys = _REGISTRY[name]
    kwargs = {}
    for k in keys:
        if k in params:
            kwargs[k] = float(params[k])
    return ctor(**kwargs)


@dataclass(frozen=True)
class HypothesisReport:
    """Outcome of sampling the structural hypotheses on a grid."""

    profile: str
    min_w: float
    nonneg_violations: int
    floor: float
    floor_halfwidth: float
    min_outside_floor_region: float
    min_outside_strip: float
    floor_ok: bool
    sos_checked: bool
    sos_max_residual: float

    @property
    def passed(self) -> bool:
        ok = self.nonneg_violations == 0 and self.floor_ok
        if self.sos_checked:
            ok = ok and self.sos_max_residual <= 1e-12
        return ok


def check_hypotheses(p: DampingProfile, g: PeriodicGrid) -> HypothesisReport:
    """Sample W on the grid and test nonnegativity, the floor, and W = sum v_j^2.

    The floor is checked outside [-floor_halfwidth, floor_halfwidth] (the
    profile's documented claim region); the minimum outside the bare strip is
    reported as well.  The factor identity is checked on the collar
    (-sigma-sigma1, sigma+sigma1) where the factorization is guaranteed.
    """
    from .symbols import wrap_angle

    x = g.nodes
    xw = wrap_angle(x)
    w = p.W(x)
    nonneg_violations = int(np.sum(w < -1e-12))
    outside_floor = np.abs(xw) > p.floor_halfwidth + 1e-9
    outside_strip = np.abs(xw) > p.sigma + 1e-9
    min_floor_region = float(np.min(w[outside_floor])) if outside_floor.any() else math.inf
    min_strip_region = float(np.min(w[outside_strip])) if outside_strip.any() else math.inf
    floor_ok = min_floor_region >= p.floor - 1e-12
    sos_checked = p.factor_exprs is not None
    sos_res = 0.0
    if sos_checked:
        collar = np.abs(xw) < p.sigma + p.sigma1
        if collar.any():
            v = p.factor_values(x[collar])
            sos_res = float(np.max(np.abs(w[collar] - np.sum(v**2, axis=0))))
    return HypothesisReport(
        profile=p.name,
        min_w=float(np.min(w)),
        nonneg_violations=nonneg_violations,
        floor=p.floor,
        floor_halfwidth=p.floor_halfwidth,
        min_outside_floor_region=min_floor_region,
        min_outside_strip=min_strip_region,
        floor_ok=floor_ok,
        sos_checked=sos_checked,
        sos_max_residual=sos_res,
    )


def gradient_bound_constant(p: DampingProfile, g: PeriodicGrid):
    """sup over nodes with W > 1e-12 of |W'| / sqrt(W), or "divergent".

    Refinement study: the sup is recomputed on grids n, 2n, 3n, 4n, 6n, 8n.
    Nested doublings alone can freeze the nearest node to the strip edge for
    many levels (the sup then grows in rare jumps), so non-nested sizes are
    mixed in, and the profile is flagged "divergent" when either a single
    refinement step grows the sup by more than 25% or the fitted growth slope
    of log(sup) vs log(n) exceeds 0.12.  Profiles vanishing just barely slower
    than quadratically (d^b with 1.8 < b < 2) sit below this resolution.
    """

    def sup_ratio(n: int) -> float:
        gg = PeriodicGrid(n)
        x = gg.nodes
        w = p.W(x)
        dw = p.W(x, order=1)
        mask = w > 1e-12
        if not mask.any():
            return 0.0
        return float(np.max(np.abs(dw[mask]) / np.sqrt(w[mask])))

    levels = [g.n, 2 * g.n, 3 * g.n, 4 * g.n, 6 * g.n, 8 * g.n]
    sups = [sup_ratio(n) for n in levels]
    if max(sups) == 0.0:
        return 0.0
    for lo, hi in zip(sups, sups[1:]):
        if hi > 1.25 * lo:
            return "divergent"
    if min(sups) > 0.0:
        slope = np.polyfit(np.log(levels), np.log(sups), 1)[0]
        if slope > 0.12:
            return "divergent"
    return max(sups)


def tau_min(k0) -> float:
    """max((k0+2)/(2k0-4), 7/(k0-1)) for integer k0 >= 9.

    At k0 = 9 this is max(11/14, 7/8) = 0.875.  (A remark alongside the k0 = 9
    statement takes the value 1 instead, giving alpha = 2/3; both candidate
    alphas are reported by callers, nothing here gates on the discrepancy.)
    """
    if k0 != math.inf:
        if int(k0) != k0:
            raise ValueError(f"k0 must be an integer, got {k0}")
        k0 = int(k0)
    if k0 < 9:
        raise ValueError(f"k0 must be >= 9, got {k0}")
    if k0 == math.inf:
        return 0.5
    return max((k0 + 2) / (2 * k0 - 4), 7 / (k0 - 1))


def alpha_of_tau(tau: float) -> float:
    """Decay exponent alpha = 2/(tau+2)."""
    tau = float(tau)
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    return 2.0 / (tau + 2.0)
