"""The sine-wiggled tract: h(z) = a z + i b sin z on a strip, and W = exp(tract).

With the default coefficients a = 5*pi, b = 2*pi and the domain strip
{Re z > -1, |Im z| < pi/3}, h is univalent (Re h' > 0 there) and the tract
T = h^{-1}({Re w > 0, |Im w| < pi}) is a 2*pi-periodic wavy channel whose
boundary curves cross the real axis infinitely often, so T contains no
straight line unbounded to the right.  W = exp(T) sits inside the sector
{|z| > 1/e, |arg z| < pi/3} and its boundary is parametrized by radius on
the two arms plus the exact pullback of the left strip edge at the tip.

All evaluations accept python/numpy complex numbers or mpmath mpc values;
the mpmath path reconstructs the coefficient floats exactly, so both paths
compute the same function at different precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

_TWO_PI = 2.0 * math.pi


class OutsideImageError(ValueError):
    """Newton inversion of h failed or left the domain strip."""


class ContourConstructionError(RuntimeError):
    """Boundary construction failed (inversion near the tip, bad radius)."""


def _is_mp(z) -> bool:
    return isinstance(z, (mpmath.mpf, mpmath.mpc))


@dataclass(frozen=True)
class StripSpec:
    """Half-strip {Re z > alpha, |Im z| < beta}."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("strip half-height beta must be positive")

    def contains(self, z, margin: float = 0.0) -> bool:
        return (z.real > self.alpha + margin) and (
            abs(z.imag) < self.beta - margin
        )


@dataclass(frozen=True)
class TractSpec:
    """Coefficients and strips defining h and the tract.

    The univalence margin linear_coeff - wiggle_coeff*sinh(beta) must be
    positive; it bounds Re h' from below on the domain strip.
    """

    linear_coeff: float = 5.0 * math.pi
    wiggle_coeff: float = 2.0 * math.pi
    domain_strip: StripSpec = field(default_factory=lambda: StripSpec(-1.0, math.pi / 3.0))
    target_strip: StripSpec = field(default_factory=lambda: StripSpec(0.0, math.pi))

    def __post_init__(self):
        if self.linear_coeff <= 0 or self.wiggle_coeff < 0:
            raise ValueError("coefficients must be positive (wiggle may be 0)")
        if self.univalence_margin() <= 0:
            raise ValueError(
                "linear_coeff - wiggle_coeff*sinh(beta) must be positive "
                "(univalence on the domain strip)"
            )

    def univalence_margin(self) -> float:
        return self.linear_coeff - self.wiggle_coeff * math.sinh(
            self.domain_strip.beta
        )


def eval_h(spec: TractSpec, z):
    """h(z) = a z + i b sin z.  Entire; works on scalars, arrays, mpmath."""
    if _is_mp(z):
        a = mpmath.mpf(spec.linear_coeff)
        b = mpmath.mpf(spec.wiggle_coeff)
        return a * z + 1j * b * mpmath.sin(z)
    return spec.linear_coeff * z + 1j * spec.wiggle_coeff * np.sin(z)


def eval_h_prime(spec: TractSpec, z):
    """h'(z) = a + i b cos z."""
    if _is_mp(z):
        a = mpmath.mpf(spec.linear_coeff)
        b = mpmath.mpf(spec.wiggle_coeff)
        return a + 1j * b * mpmath.cos(z)
    return spec.linear_coeff + 1j * spec.wiggle_coeff * np.cos(z)


def im_h(spec: TractSpec, x, y):
    """Im h(x+iy) = a y + b sin x cosh y, vectorized over real arrays."""
    return spec.linear_coeff * y + spec.wiggle_coeff * np.sin(x) * np.cosh(y)


def re_h(spec: TractSpec, x, y):
    """Re h(x+iy) = a x - b cos x sinh y."""
    return spec.linear_coeff * x - spec.wiggle_coeff * np.cos(x) * np.sinh(y)


def invert_h(spec: TractSpec, w, seed=None, tol: float | None = None,
             max_iter: int = 100):
    """The unique z in the domain strip with h(z) = w.

    Damped Newton (factor 0.5 while far, full steps near the root) seeded
    at w/linear_coeff or the supplied seed.  On failure, retries with
    continuation along the straight segment from h(seed) to w.  Raises
    OutsideImageError if no root is found or the root leaves the strip.

    Works at mpmath precision when w (or seed) is an mpmath number; the
    tolerance then defaults to the current working precision.
    """
    use_mp = _is_mp(w) or _is_mp(seed)
    if use_mp:
        w = mpmath.mpc(w)
        if tol is None:
            # keep as mpf: beyond ~300 digits this underflows a double
            tol = mpmath.mpf(10) ** (-mpmath.mp.dps + 6)
    else:
        w = complex(w)
        if tol is None:
            tol = 1e-13

    z = _newton_h(spec, w, seed, tol, max_iter, use_mp)
    if z is None:
        z = _continuation_h(spec, w, seed, tol, max_iter, use_mp)
    if z is None:
        raise OutsideImageError(f"h-inversion did not converge for w={w}")
    strip = spec.domain_strip
    zr, zi = float(z.real), float(z.imag)
    slack = 1e-9
    if zr < strip.alpha - slack or abs(zi) > strip.beta + slack:
        raise OutsideImageError(
            f"h-inverse of w={w} left the domain strip: z={z}"
        )
    return z


def _newton_h(spec, w, seed, tol, max_iter, use_mp):
    z = seed if seed is not None else w / spec.linear_coeff
    if use_mp:
        z = mpmath.mpc(z)
    else:
        z = complex(z)
    damping_until = max_iter // 3
    for it in range(max_iter):
        r = eval_h(spec, z) - w
        if abs(r) < tol * max(1.0, abs(w)):
            return z
        step = r / eval_h_prime(spec, z)
        if it < damping_until and abs(step) > 0.5:
            step = step * 0.5
        z = z - step
        # keep the iterate inside the closed strip so sin z cannot blow up
        beta = spec.domain_strip.beta
        if abs(float(z.imag)) > beta:
            z = type(z)(z.real, beta if float(z.imag) > 0 else -beta) \
                if use_mp else complex(z.real, math.copysign(beta, z.imag))
    r = eval_h(spec, z) - w
    if abs(r) < tol * max(1.0, abs(w)) * 10:
        return z
    return None


def _continuation_h(spec, w, seed, tol, max_iter, use_mp):
    z0 = seed if seed is not None else w.real / spec.linear_coeff
    if use_mp:
        z0 = mpmath.mpc(z0)
    else:
        z0 = complex(z0)
    w0 = eval_h(spec, z0)
    z = z0
    n_steps = 32
    for k in range(1, n_steps + 1):
        wk = w0 + (w - w0) * (k / n_steps)
        z = _newton_h(spec, wk, z, tol, max_iter, use_mp)
        if z is None:
            return None
    return z


# ---------------------------------------------------------------------------
# boundary parametrization by radius
# ---------------------------------------------------------------------------

def boundary_phi(spec: TractSpec, t, side: str | None = None) -> float:
    """Angle phi of the boundary point |t| e^{i phi} of W at radius |t|.

    Solves a*phi + b*sin(Log|t|)*cosh(phi) = +pi (side "upper", t > 0) or
    -pi ("lower", t < 0) by bisection on [-beta, beta] with Newton polish.
    The left side is strictly increasing in phi because of the univalence
    margin, so the root is unique.
    """
    t = float(t)
    if t == 0.0:
        raise ValueError("radius parameter must be nonzero")
    if side is None:
        side = "upper" if t > 0 else "lower"
    if side not in ("upper", "lower"):
        raise ValueError("side must be 'upper' or 'lower'")
    a = spec.linear_coeff
    b = spec.wiggle_coeff
    beta = spec.domain_strip.beta
    target = spec.target_strip.beta if side == "upper" else -spec.target_strip.beta
    s = math.sin(math.log(abs(t)))

    def fval(p):
        return a * p + b * s * math.cosh(p) - target

    lo, hi = -beta, beta
    flo, fhi = fval(lo), fval(hi)
    if not (flo < 0.0 < fhi):
        raise ContourConstructionError(
            f"no boundary angle bracketed at radius {abs(t)} (side {side})"
        )
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if fval(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    p = 0.5 * (lo + hi)
    for _ in range(6):
        p -= fval(p) / (a + b * s * math.sinh(p))
    return p


def boundary_phi_prime(spec: TractSpec, t) -> float:
    """d phi/dt by implicit differentiation of the boundary equation."""
    t = float(t)
    p = boundary_phi(spec, t)
    a = spec.linear_coeff
    b = spec.wiggle_coeff
    x = math.log(abs(t))
    return -(b * math.cos(x) * math.cosh(p)) / (
        t * (a + b * math.sin(x) * math.sinh(p))
    )


def boundary_point(spec: TractSpec, t) -> complex:
    """gamma(t) = |t| e^{i phi(t)} on the arm at radius |t|."""
    p = boundary_phi(spec, t)
    return abs(t) * complex(math.cos(p), math.sin(p))


def boundary_tangent(spec: TractSpec, t) -> complex:
    """gamma'(t) = sgn(t) e^{i phi} (1 + i t phi'(t))."""
    p = boundary_phi(spec, t)
    pp = boundary_phi_prime(spec, t)
    return math.copysign(1.0, t) * complex(math.cos(p), math.sin(p)) * (
        1.0 + 1j * t * pp
    )


def corner(spec: TractSpec, side: str):
    """Log-plane corner of the tract: h(z) = alpha_target +- i*beta_target."""
    tgt = complex(
        spec.target_strip.alpha,
        spec.target_strip.beta if side == "upper" else -spec.target_strip.beta,
    )
    seed = tgt / spec.linear_coeff
    return invert_h(spec, tgt, seed=seed)


def left_edge_point(spec: TractSpec, tau, seed=None):
    """Pullback exp(h^{-1}(alpha + i tau)) of the left strip edge, |tau| <= beta."""
    tgt_re = spec.target_strip.alpha
    if _is_mp(tau):
        tgt = mpmath.mpc(tgt_re, tau)
    else:
        tgt = complex(tgt_re, tau)
    zlog = invert_h(spec, tgt, seed=seed if seed is not None else tgt / spec.linear_coeff)
    if _is_mp(zlog):
        return mpmath.exp(zlog)
    return np.exp(zlog)


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------

def tract_contains(spec: TractSpec, z_log) -> bool:
    """Strict membership of a log-plane point in the tract h^{-1}(target)."""
    z = complex(z_log)
    if not spec.domain_strip.contains(z):
        return False
    w = complex(eval_h(spec, z))
    return spec.target_strip.contains(w)


def w_contains(spec: TractSpec, z) -> bool:
    """Strict membership in W = exp(tract), via the principal logarithm."""
    z = complex(z)
    r = abs(z)
    if r <= math.exp(spec.domain_strip.alpha):
        return False
    if abs(np.angle(z)) >= spec.domain_strip.beta:
        return False
    return tract_contains(spec, complex(math.log(r), np.angle(z)))


@dataclass(frozen=True)
class ContourSample:
    """One boundary sample: global parameter, point, tangent, Re g hint."""

    t: float
    point: complex
    tangent: complex
    weight_hint: float


def membership_residual(spec: TractSpec, point: complex) -> float:
    """Distance of h(Log point) from the target-strip boundary (0 on it)."""
    w = complex(eval_h(spec, np.log(complex(point))))
    d_edges = abs(abs(w.imag) - spec.target_strip.beta)
    d_left = abs(w.real - spec.target_strip.alpha)
    return min(d_edges, d_left)


def boundary_contour(spec: TractSpec, t_max: float, max_step: float,
                     r_param: float | None = None) -> list[ContourSample]:
    """Ordered samples of the full boundary of W, tract on the right.

    Global parameter t: the arms carry t = -radius (lower, coming in from
    -t_max) and t = +radius (upper, going out to +t_max); the tip between
    the corner radii is the exact pullback of the left strip edge, with the
    edge height mapped affinely onto the parameter gap between the corner
    radii.  Adjacent samples differ by less than max_step.
    """
    r_lo = math.exp(float(corner(spec, "lower").real))
    r_up = math.exp(float(corner(spec, "upper").real))
    if r_param is None:
        r_param = math.exp(2.0)
    if t_max <= max(r_lo, r_up):
        raise ContourConstructionError("t_max must exceed the tip radii")

    samples: list[ContourSample] = []

    def emit_arm(sign: int):
        # walk radius from t_max down to the corner (lower arm) or up (upper)
        r_stop = r_lo if sign < 0 else r_up
        rs = _adaptive_radii(spec, r_stop, t_max, max_step, sign)
        ts = sorted((sign * r for r in rs), reverse=False)
        for t in ts:
            pt = boundary_point(spec, t)
            tg = boundary_tangent(spec, t)
            g = complex(eval_h(spec, np.log(complex(pt))))
            # Re g = e^{Re h} cos(Im h); clamp the exponent against overflow
            re_g = math.exp(min(g.real, 700.0)) * math.cos(g.imag)
            samples.append(ContourSample(t, complex(pt), complex(tg), re_g))

    emit_arm(-1)

    # tip: left edge, tau from -beta to +beta mapped to t in (-r_lo, r_up)
    beta_t = spec.target_strip.beta
    n_tip = max(16, int(math.ceil(2.5 * beta_t / max_step)))
    taus = np.linspace(-beta_t, beta_t, n_tip + 1)[1:-1]
    seed = corner(spec, "lower")
    for tau in taus:
        tgt = complex(spec.target_strip.alpha, float(tau))
        zlog = invert_h(spec, tgt, seed=seed)
        seed = zlog
        pt = np.exp(zlog)
        dz = 1j / eval_h_prime(spec, zlog)
        tg = pt * dz  # d gamma / d tau
        t_glob = -r_lo + (float(tau) + beta_t) / (2 * beta_t) * (r_lo + r_up)
        g = complex(tgt)
        samples.append(ContourSample(float(t_glob), complex(pt), complex(tg),
                                     float(np.exp(g).real)))

    emit_arm(+1)
    samples.sort(key=lambda s: s.t)
    _check_steps(samples, max_step)
    return samples


def _adaptive_radii(spec, r_min, r_max, max_step, sign):
    rs = [r_min]
    r = r_min
    while r < r_max:
        # |d gamma / d r| <= 3 on the arms, so stepping max_step/3 is safe
        step = max(max_step / 3.0, r * 1e-6)
        r = min(r + step, r_max)
        rs.append(r)
    return rs


def _check_steps(samples, max_step):
    for s0, s1 in zip(samples, samples[1:]):
        gap = abs(s1.point - s0.point)
        if gap > max_step * 1.5:
            raise ContourConstructionError(
                f"boundary sampling gap {gap:.3g} exceeds max_step near t={s0.t:.3g}"
            )


def real_axis_band_crossings(spec: TractSpec) -> list[float]:
    """x in [0, 2*pi) where the real axis crosses the tract's Im-band edges.

    On the axis Im h(x) = b sin x, so the crossings of Im h = +-beta_t are
    where |sin x| = beta_t/b (x = pi/6, 5pi/6, 7pi/6, 11pi/6 for the default
    coefficients).  The axis therefore exits and re-enters the band
    infinitely often: the tract contains no rightward line.
    """
    if spec.wiggle_coeff == 0.0:
        return []
    ratio = spec.target_strip.beta / spec.wiggle_coeff
    if ratio >= 1.0:
        return []
    x0 = math.asin(ratio)
    return [x0, math.pi - x0, math.pi + x0, _TWO_PI - x0]
