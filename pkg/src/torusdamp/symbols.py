"""Semiclassical symbols on the cylinder T*(R/2piZ) as exact expressions.

A symbol is carried as a sympy expression in the canonical variables (x, xi)
and the scale h, so that every partial derivative any check needs is again an
exact expression rather than a finite-difference table.  Plateau cutoffs are
assembled from the standard C-infinity step e^(-1/t), with the exact plateau
geometry each estimate requires; cutoffs that must admit smooth square roots
are stored as explicit squares of smooth steps.

Evaluation wraps x into the fundamental domain [-pi, pi) before substitution
(all built-in symbols either vanish near +-pi or are constant there, so the
wrap is consistent with periodicity), and runs under np.errstate: piecewise
branches are evaluated eagerly by the generated numpy code, and dead branches
may overflow before being discarded.
"""
from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np
import sympy as sp

__all__ = [
    "X",
    "XI",
    "H",
    "SemiclassicalSymbol",
    "symbol_library",
    "smooth_step",
    "rising_step",
    "falling_step",
    "even_window",
    "cached_diff",
    "grid_size_for",
    "InsufficientRegularityError",
]

X, XI = sp.symbols("x xi", real=True)
H = sp.Symbol("h", positive=True)

_T = sp.Symbol("_t", real=True)
_EXP_BUMP = sp.Piecewise((sp.exp(-1 / _T), _T > 0), (0, True))
_STEP = _EXP_BUMP / (_EXP_BUMP + _EXP_BUMP.subs(_T, 1 - _T))


class InsufficientRegularityError(ValueError):
    """Raised when a derivative beyond the symbol's declared order is requested."""


def smooth_step(t: sp.Expr) -> sp.Expr:
    """C-infinity monotone step: exactly 0 for t <= 0, exactly 1 for t >= 1."""
    return _STEP.subs(_T, t)


def rising_step(v: sp.Expr, a: float, b: float) -> sp.Expr:
    """Step rising from 0 (v <= a) to 1 (v >= b)."""
    if not b > a:
        raise ValueError(f"rising_step needs b > a, got a={a}, b={b}")
    return smooth_step((v - a) / (b - a))


def falling_step(v: sp.Expr, a: float, b: float) -> sp.Expr:
    """Step falling from 1 (v <= a) to 0 (v >= b)."""
    if not b > a:
        raise ValueError(f"falling_step needs b > a, got a={a}, b={b}")
    return smooth_step((b - v) / (b - a))


def even_window(v: sp.Expr, inner: float, outer: float) -> sp.Expr:
    """Even plateau: 1 for |v| <= inner, 0 for |v| >= outer, smooth between.

    Smooth also at v = 0 despite the |v|: the step sits on its plateau there,
    so the Abs kink multiplies a vanishing derivative.
    """
    return falling_step(sp.Abs(v), inner, outer)


# Derivative and lambdify caches are global and keyed on expressions (sympy
# expressions hash structurally), so symbols sharing an expression at
# different h share all compiled samplers.
_DIFF_CACHE: dict[tuple[sp.Expr, int, int], sp.Expr] = {}
_FN_CACHE: dict[sp.Expr, Callable] = {}


def cached_diff(expr: sp.Expr, dx: int, dxi: int) -> sp.Expr:
    """Partial derivative d_x^dx d_xi^dxi of expr, memoized incrementally."""
    key = (expr, dx, dxi)
    if key in _DIFF_CACHE:
        return _DIFF_CACHE[key]
    if dx == 0 and dxi == 0:
        out = expr
    elif dxi > 0:
        out = sp.diff(cached_diff(expr, dx, dxi - 1), XI)
    else:
        out = sp.diff(cached_diff(expr, dx - 1, 0), X)
    # Piecewise branch points of C^inf windows emit DiracDelta terms whose
    # coefficients vanish identically there; drop them so lambdify stays sane
    if out.has(sp.DiracDelta):
        out = out.replace(lambda e: isinstance(e, sp.DiracDelta), lambda e: sp.S.Zero)
    _DIFF_CACHE[key] = out
    return out


def _compiled(expr: sp.Expr) -> Callable:
    fn = _FN_CACHE.get(expr)
    if fn is None:
        fn = sp.lambdify((X, XI, H), expr, modules=["numpy"], cse=True)
        _FN_CACHE[expr] = fn
    return fn


def wrap_angle(x) -> np.ndarray:
    """Map x into the fundamental domain [-pi, pi)."""
    return np.mod(np.asarray(x, dtype=np.float64) + np.pi, 2.0 * np.pi) - np.pi


def evaluate_expr(expr: sp.Expr, x, xi, h: float) -> np.ndarray:
    """Evaluate a symbol expression on broadcastable (x, xi) arrays."""
    xw = wrap_angle(x)
    xiv = np.asarray(xi, dtype=np.float64)
    shape = np.broadcast_shapes(xw.shape, xiv.shape)
    with np.errstate(all="ignore"):
        out = _compiled(expr)(xw, xiv, h)
    out = np.asarray(out)
    if out.shape != shape:
        out = np.broadcast_to(out, shape).copy()
    return out


def grid_size_for(h: float, xi_bound: float, min_n: int = 64) -> int:
    """Smallest even n placing the Nyquist frequency past xi_bound + 0.5.

    Quantization replaces the xi-integral by the sum over grid frequencies
    h*k, |k| <= n/2; a symbol negligible beyond xi_bound is then alias-free.
    """
    n = int(math.ceil(2.0 * (xi_bound + 0.5) / h))
    n = max(n, min_n)
    return n + (n % 2)


class SemiclassicalSymbol:
    """A symbol a(x, xi; h) with exact derivative samplers.

    Parameters
    ----------
    expr : sympy expression in symbols.X, symbols.XI and optionally symbols.H.
    h : scale in (0, 1].
    tau, gamma : scaling exponents attached for bookkeeping (tau in (1/2, 1],
        gamma in {1, 2}).
    support_hint : optional ((xlo, xhi), (xilo, xihi)) rectangle outside of
        which the symbol vanishes; None entries mean unbounded.
    xi_decay_bound : |a| < 1e-12 for |xi| >= this bound (None: no claim).
        Used by quantize to pick alias-free grids for (x, xi)-coupled symbols.
    xi_bound_rule : optional callable h -> bound, kept so with_h() can rescale
        h-dependent supports.
    max_order : highest total derivative order available (None = unlimited).
    """

    def __init__(
        self,
        name: str,
        expr: sp.Expr,
        h: float,
        tau: float = 1.0,
        gamma: int = 2,
        support_hint: Optional[tuple] = None,
        xi_decay_bound: Optional[float] = None,
        xi_bound_rule: Optional[Callable[[float], float]] = None,
        max_order: Optional[int] = None,
    ) -> None:
        if not 0.0 < h <= 1.0:
            raise ValueError(f"h must lie in (0, 1], got {h}")
        if not 0.5 < tau <= 1.0:
            raise ValueError(f"tau must lie in (1/2, 1], got {tau}")
        if gamma not in (1, 2):
            raise ValueError(f"gamma must be 1 or 2, got {gamma}")
        self.name = str(name)
        self.expr = sp.sympify(expr)
        self.h = float(h)
        self.tau = float(tau)
        self.gamma = int(gamma)
        self.support_hint = support_hint
        self.xi_bound_rule = xi_bound_rule
        if xi_bound_rule is not None and xi_decay_bound is None:
            xi_decay_bound = float(xi_bound_rule(self.h))
        self.xi_decay_bound = xi_decay_bound
        self.max_order = max_order
        self.mixes_x_xi = bool(self.expr.has(X) and self.expr.has(XI))
        self.is_real = not self.expr.has(sp.I)

    def __repr__(self) -> str:
        return f"SemiclassicalSymbol({self.name!r}, h={self.h}, tau={self.tau})"

    def with_h(self, h: float) -> "SemiclassicalSymbol":
        """Same symbol expression bound to a different scale h."""
        return SemiclassicalSymbol(
            self.name,
            self.expr,
            h,
            tau=self.tau,
            gamma=self.gamma,
            support_hint=self.support_hint,
            xi_decay_bound=None if self.xi_bound_rule else self.xi_decay_bound,
            xi_bound_rule=self.xi_bound_rule,
            max_order=self.max_order,
        )

    def _check_order(self, dx: int, dxi: int) -> None:
        if dx < 0 or dxi < 0:
            raise ValueError("derivative orders must be nonnegative")
        if self.max_order is not None and dx + dxi > self.max_order:
            raise InsufficientRegularityError(
                f"symbol {self.name!r} provides derivatives up to total order "
                f"{self.max_order}, requested ({dx}, {dxi})"
            )

    def partial_expr(self, dx: int, dxi: int) -> sp.Expr:
        self._check_order(dx, dxi)
        return cached_diff(self.expr, dx, dxi)

    def sampler(self, dx: int = 0, dxi: int = 0) -> Callable:
        """Callable (x, xi) -> values of d_x^dx d_xi^dxi a at this symbol's h."""
        expr = self.partial_expr(dx, dxi)
        h = self.h

        def fn(x, xi):
            return evaluate_expr(expr, x, xi, h)

        return fn

    def __call__(self, x, xi, dx: int = 0, dxi: int = 0):
        return evaluate_expr(self.partial_expr(dx, dxi), x, xi, self.h)


def _scaled_xi(tau: float) -> sp.Expr:
    # h^(tau-1) * xi: the tau-rescaled frequency; tau = 1 leaves xi unscaled.
    return H ** (tau - 1.0) * XI if tau != 1.0 else sp.sympify(1) * XI


_LIBRARY_NAMES = ("z", "z_tilde", "chi", "psi", "a", "J_symbol", "s", "b_eps1")


def symbol_library(name: str, h: float, tau: float, params: Optional[dict] = None) -> SemiclassicalSymbol:
    """Named symbols used by the microlocal checks.

    Geometry (plateau levels are exact):
      z        : z1(h^(tau-1) xi) * z2(xi); z1 = 0 on |.| < 1.25, 1 on |.| > 1.5;
                 z2 = 1 on |xi| < 2, 0 on |xi| > 3.
      z_tilde  : 0 on |xi| < 1, 1 on |xi| > 1.5 (not compactly supported).
      chi      : spatial cutoff, 1 on |x| < sigma + sigma1/2, 0 on
                 |x| > sigma + sigma1; a square, so chi**(1/2) is smooth.
      psi      : psi0(h^(tau-1) xi) with psi0 = 1 on |.| < 2, 0 on |.| > 3;
                 also a square.
      a        : x*chi(x) * (h^(tau-1) xi) * psi(h^(tau-1) xi), the real escape
                 symbol; x*chi(x) is compactly supported inside (-pi, pi), so
                 it extends periodically without a branch cut.
      J_symbol : chi^(1/2)(x) * psi0^(1/2)(h^(tau-1) xi), the smooth roots.
      s        : 0 on |x| < sigma, 1 on |x| > sigma + sigma1/2 (constant == 1
                 through +-pi, hence smooth on the circle).
      b_eps1   : cos(pi x / (2 (sigma+eps1))) masked to vanish for
                 |x| > sigma + eps1; equals the pure cosine on
                 |x| < sigma + eps1/2, nonnegative everywhere.

    params keys (defaults): sigma (1.0), sigma1 (0.5), eps1 (0.1).
    """
    params = dict(params or {})
    sigma = float(params.get("sigma", 1.0))
    sigma1 = float(params.get("sigma1", 0.5))
    eps1 = float(params.get("eps1", 0.1))
    if not 0.0 < sigma < math.pi:
        raise ValueError(f"sigma must lie in (0, pi), got {sigma}")
    if name in ("chi", "a", "J_symbol", "s") and not 0.0 < sigma1 < math.pi - sigma:
        raise ValueError(f"sigma1 must lie in (0, pi - sigma), got {sigma1}")

    lam_xi = _scaled_xi(tau)

    def chi_sqrt() -> sp.Expr:
        return even_window(X, sigma + sigma1 / 2.0, sigma + sigma1)

    def psi_sqrt_of(v: sp.Expr) -> sp.Expr:
        return even_window(v, 2.0, 3.0)

    if name == "z":
        z1 = rising_step(sp.Abs(lam_xi), 1.25, 1.5)
        z2 = even_window(XI, 2.0, 3.0)
        return SemiclassicalSymbol(
            "z", z1 * z2, h, tau=tau,
            support_hint=(None, (-3.0, 3.0)),
            xi_decay_bound=3.0,
        )
    if name == "z_tilde":
        return SemiclassicalSymbol(
            "z_tilde", rising_step(sp.Abs(XI), 1.0, 1.5), h, tau=tau,
        )
    if name == "chi":
        return SemiclassicalSymbol(
            "chi", chi_sqrt() ** 2, h, tau=tau,
            support_hint=((-sigma - sigma1, sigma + sigma1), None),
        )
    if name == "psi":
        rule = (lambda hh: 3.0 * hh ** (1.0 - tau)) if tau != 1.0 else (lambda hh: 3.0)
        return SemiclassicalSymbol(
            "psi", psi_sqrt_of(lam_xi) ** 2, h, tau=tau,
            xi_bound_rule=rule,
        )
    if name == "a":
        rule = (lambda hh: 3.0 * hh ** (1.0 - tau)) if tau != 1.0 else (lambda hh: 3.0)
        expr = X * chi_sqrt() ** 2 * lam_xi * psi_sqrt_of(lam_xi) ** 2
        return SemiclassicalSymbol(
            "a", expr, h, tau=tau,
            support_hint=((-sigma - sigma1, sigma + sigma1), None),
            xi_bound_rule=rule,
        )
    if name == "J_symbol":
        rule = (lambda hh: 3.0 * hh ** (1.0 - tau)) if tau != 1.0 else (lambda hh: 3.0)
        return SemiclassicalSymbol(
            "J_symbol", chi_sqrt() * psi_sqrt_of(lam_xi), h, tau=tau,
            support_hint=((-sigma - sigma1, sigma + sigma1), None),
            xi_bound_rule=rule,
        )
    if name == "s":
        return SemiclassicalSymbol(
            "s", rising_step(sp.Abs(X), sigma, sigma + sigma1 / 2.0), h, tau=tau,
        )
    if name == "b_eps1":
        mask = even_window(X, sigma + eps1 / 2.0, sigma + eps1)
        expr = sp.cos(sp.pi * X / (2.0 * (sigma + eps1))) * mask
        return SemiclassicalSymbol(
            "b_eps1", expr, h, tau=tau,
            support_hint=((-sigma - eps1, sigma + eps1), None),
        )
    raise ValueError(
        f"unknown symbol name {name!r}; known names: {', '.join(_LIBRARY_NAMES)}"
    )
