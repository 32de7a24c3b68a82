"""Cauchy-integral evaluation of the glued entire function.

The function is assembled from a contour integral of exp(g) over the
boundary of a growth region, traversed with the region on the right:

    f_tilde(z) = (1 / 2 pi i) Int exp(g(zeta)) / (zeta - z) dzeta,
    f(z)       = f_tilde(z)               outside the region,
                 f_tilde(z) + exp(g(z))   inside.

Two contour models are provided: the sine-wiggled tract W = exp(h^{-1}(strip))
with g = exp(h(Log z)), and the classical half-strip {Re z > 0, |Im z| < pi}
with g = exp(z), which serves as an independent oracle for the quadrature
machinery (there the inside term is exp(exp(z)) and the outside part is
provably bounded).

Near the contour the integral is taken over a deformed path with a circular
detour of radius kappa around the evaluation point, bulging away from the
point's host side; by Cauchy's theorem the value is unchanged.  Evaluating
with a forced bulge side yields the one-sided boundary limits, which is how
the continuity of the glued function across the contour is certified.

Everything here runs in double precision; quantities that would overflow
(exp(g) deep inside the tract) are carried as logarithms.
"""

from __future__ import annotations

import math
import cmath
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .tract import (
    ContourConstructionError,
    StripSpec,
    TractSpec,
    corner,
    eval_h,
    eval_h_prime,
    invert_h,
    tract_contains,
    w_contains,
)

LOG_SPACE_THRESHOLD = 700.0  # switch to log representation beyond this Re g

_GL15_X, _GL15_W = np.polynomial.legendre.leggauss(15)


class EvaluationOnContourError(ValueError):
    """Evaluation point is on the contour and no limit side was given."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Targets for the contour quadrature.

    eps is the absolute-error target per evaluation; kappa the detour
    radius (the kappa-neighborhood of the contour must stay inside the
    sector and keep Re g <= tube_re_g_bound, verified at engine
    construction; 3 is the bound satisfied by the default contour);
    t_truncate overrides the tail-bound truncation radius when set.
    """

    eps: float = 1e-10
    kappa: float = 0.05
    max_step: float = 0.05
    t_truncate: float | None = None
    tube_re_g_bound: float = 3.0

    def __post_init__(self):
        if self.eps <= 0 or self.kappa <= 0 or self.max_step <= 0:
            raise ValueError("eps, kappa, max_step must be positive")


@dataclass(frozen=True)
class ConstructionConstants:
    """Bound constants of the construction.

    C1: quadrature of exp(Re g)|gamma'| over the finite middle arc.
    C2: exp(-b sinh(beta)), the tail-decay constant.
    C3: global bound on |f_tilde|, the max of the straight-contour bound
        (C1 + 6/C2)/(2 pi) and the detour bound (C1 + 6/C2)/(2 pi kappa)
        + 2 pi e^3.
    order_bound: the linear coefficient, an upper bound for the order.
    """

    C1: float
    C2: float
    C3: float
    order_bound: float


@dataclass(frozen=True)
class FunctionValue:
    """Value with optional log-space representation and error bound.

    value may be inf/0.0 by overflow/underflow when log_value is the
    faithful representation (|value| beyond double range).
    """

    value: complex
    log_value: complex | None
    abs_error: float


@dataclass(frozen=True)
class Piece:
    """One smooth oriented contour piece over the parameter interval [a, b]."""

    a: float
    b: float
    point: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    log_density: Callable[[np.ndarray], np.ndarray]
    label: str


def _log1p_complex(w: complex) -> complex:
    if abs(w) < 1e-4:
        return w * (1 + w * (-0.5 + w / 3))
    return cmath.log(1 + w)


# ---------------------------------------------------------------------------
# contour models
# ---------------------------------------------------------------------------

class TractContourModel:
    """Boundary of W = exp(tract), density exp(g), g = exp(h(Log z))."""

    def __init__(self, spec: TractSpec, config: QuadratureConfig):
        self.spec = spec
        self.config = config
        self.corner_lower = complex(corner(spec, "lower"))
        self.corner_upper = complex(corner(spec, "upper"))
        self.r_lower = math.exp(self.corner_lower.real)
        self.r_upper = math.exp(self.corner_upper.real)
        self.t_truncate = (
            config.t_truncate
            if config.t_truncate is not None
            else self._tail_radius(config.eps, config.kappa)
        )
        self._edge_table = self._build_edge_table()
        self.pieces = self._build_pieces()

    # -- tail bound -------------------------------------------------------

    def tail_log_bound(self, t: float) -> float:
        """log of the rigorous bound on the integral mass beyond radius t.

        exp(Re g(gamma)) <= exp(-C2 |t|^p) with p = linear_coeff and
        C2 = exp(-b sinh(beta)); |gamma'| <= 3 on both arms, so the mass
        beyond t is at most 6 exp(-C2 t^p) / (C2 p t^{p-1}).
        """
        spec = self.spec
        c2 = math.exp(-spec.wiggle_coeff * math.sinh(spec.domain_strip.beta))
        p = spec.linear_coeff
        t = max(t, 1.0)
        return (
            math.log(6.0 / (c2 * p)) - (p - 1) * math.log(t) - c2 * t**p
        )

    def _tail_radius(self, eps: float, kappa: float) -> float:
        target = math.log(eps * 2 * math.pi * (kappa / 2) / 10.0)
        t = max(self.r_lower, self.r_upper, 1.0) + 0.05
        while self.tail_log_bound(t) > target:
            t *= 1.05
            if t > 1e6:
                raise ContourConstructionError("tail bound does not close")
        return t

    # -- geometry ---------------------------------------------------------

    def _phi_vec(self, radii: np.ndarray, sign: float) -> np.ndarray:
        spec = self.spec
        a, b = spec.linear_coeff, spec.wiggle_coeff
        beta = spec.domain_strip.beta
        target = sign * spec.target_strip.beta
        s = np.sin(np.log(radii))
        lo = np.full_like(radii, -beta)
        hi = np.full_like(radii, beta)
        for _ in range(52):
            mid = 0.5 * (lo + hi)
            neg = a * mid + b * s * np.cosh(mid) < target
            lo = np.where(neg, mid, lo)
            hi = np.where(neg, hi, mid)
        phi = 0.5 * (lo + hi)
        for _ in range(4):
            phi = phi - (a * phi + b * s * np.cosh(phi) - target) / (
                a + b * s * np.sinh(phi)
            )
        return phi

    def _phi_prime_vec(self, radii, phi, tsigned):
        spec = self.spec
        a, b = spec.linear_coeff, spec.wiggle_coeff
        x = np.log(radii)
        return -(b * np.cos(x) * np.cosh(phi)) / (
            tsigned * (a + b * np.sin(x) * np.sinh(phi))
        )

    def _build_edge_table(self):
        beta_t = self.spec.target_strip.beta
        alpha_t = self.spec.target_strip.alpha
        taus = np.linspace(-beta_t, beta_t, 513)
        zs = []
        seed = self.corner_lower
        for tau in taus:
            z = invert_h(self.spec, complex(alpha_t, float(tau)), seed=seed)
            zs.append(complex(z))
            seed = z
        return taus, np.array(zs)

    def _edge_zlog(self, taus: np.ndarray) -> np.ndarray:
        """Vectorized h-inverse of the left edge, seeded from the table."""
        tab_t, tab_z = self._edge_table
        z = np.interp(taus, tab_t, tab_z.real) + 1j * np.interp(
            taus, tab_t, tab_z.imag
        )
        spec = self.spec
        w = spec.target_strip.alpha + 1j * taus
        for _ in range(6):
            z = z - (eval_h(spec, z) - w) / eval_h_prime(spec, z)
        return z

    def _build_pieces(self) -> list[Piece]:
        spec = self.spec
        T = self.t_truncate
        beta_t = spec.target_strip.beta

        def lower_point(t):
            t = np.asarray(t, dtype=float)
            r = -t
            phi = self._phi_vec(r, -1.0)
            return r * np.exp(1j * phi)

        def lower_deriv(t):
            t = np.asarray(t, dtype=float)
            r = -t
            phi = self._phi_vec(r, -1.0)
            pp = self._phi_prime_vec(r, phi, t)
            return -np.exp(1j * phi) * (1 + 1j * t * pp)

        def upper_point(t):
            t = np.asarray(t, dtype=float)
            phi = self._phi_vec(t, 1.0)
            return t * np.exp(1j * phi)

        def upper_deriv(t):
            t = np.asarray(t, dtype=float)
            phi = self._phi_vec(t, 1.0)
            pp = self._phi_prime_vec(t, phi, t)
            return np.exp(1j * phi) * (1 + 1j * t * pp)

        def edge_point(tau):
            return np.exp(self._edge_zlog(np.asarray(tau, dtype=float)))

        def edge_deriv(tau):
            zlog = self._edge_zlog(np.asarray(tau, dtype=float))
            return np.exp(zlog) * 1j / eval_h_prime(spec, zlog)

        def edge_log_density(tau):
            # on the pulled-back edge h(Log gamma) = alpha + i tau exactly
            tau = np.asarray(tau, dtype=float)
            return np.exp(spec.target_strip.alpha + 1j * tau)

        def arm_log_density(point_fn):
            # g(gamma(t)) = exp(h(Log gamma(t))), negative real on the arms
            return lambda t: np.exp(eval_h(spec, np.log(point_fn(t))))

        return [
            Piece(-T, -self.r_lower, lower_point, lower_deriv,
                  arm_log_density(lower_point), "lower-arm"),
            Piece(-beta_t, beta_t, edge_point, edge_deriv, edge_log_density,
                  "tip-edge"),
            Piece(self.r_upper, T, upper_point, upper_deriv,
                  arm_log_density(upper_point), "upper-arm"),
        ]

    # -- region & glue ----------------------------------------------------

    def inside(self, z: complex) -> bool:
        return w_contains(self.spec, z)

    def in_sector(self, z: complex) -> bool:
        return abs(z) > math.exp(self.spec.domain_strip.alpha) and abs(
            np.angle(complex(z))
        ) < self.spec.domain_strip.beta

    def log_glue(self, z: complex) -> complex:
        """g(z) = exp(h(Log z)): the log of the inside term."""
        return complex(np.exp(complex(eval_h(self.spec, np.log(complex(z))))))

    def glue_log_deriv(self, z: complex) -> complex:
        """g'(z) = h'(Log z) g(z) / z."""
        z = complex(z)
        zlog = np.log(z)
        return complex(eval_h_prime(self.spec, zlog)) * self.log_glue(z) / z

    def log_density_offcontour(self, pts: np.ndarray) -> np.ndarray:
        return np.exp(eval_h(self.spec, np.log(pts)))

    def tail_log(self) -> float:
        return self.tail_log_bound(self.t_truncate)


class HalfStripModel:
    """Boundary of {Re z > 0, |Im z| < pi}, density exp(exp(zeta))."""

    def __init__(self, config: QuadratureConfig):
        self.config = config
        self.x_truncate = (
            config.t_truncate
            if config.t_truncate is not None
            else self._tail_x(config.eps, config.kappa)
        )
        self.pieces = self._build_pieces()

    def tail_log_bound(self, x: float) -> float:
        # on the horizontal edges Re e^zeta = -e^x; mass beyond x is
        # bounded by 2 e^{-e^x} / e^x * ... <= 2 exp(-e^x) for x >= 1
        return math.log(2.0) - math.exp(x)

    def _tail_x(self, eps: float, kappa: float) -> float:
        target = math.log(eps * 2 * math.pi * (kappa / 2) / 10.0)
        x = 1.0
        while self.tail_log_bound(x) > target:
            x += 0.05
            if x > 50:
                raise ContourConstructionError("strip tail does not close")
        return x

    def _build_pieces(self) -> list[Piece]:
        X = self.x_truncate

        def lo_point(t):
            t = np.asarray(t, dtype=float)
            return -t - 1j * math.pi

        def lo_deriv(t):
            t = np.asarray(t, dtype=float)
            return np.full(t.shape, -1.0 + 0j)

        def left_point(tau):
            tau = np.asarray(tau, dtype=float)
            return 1j * tau

        def left_deriv(tau):
            tau = np.asarray(tau, dtype=float)
            return np.full(tau.shape, 1j)

        def up_point(t):
            t = np.asarray(t, dtype=float)
            return t + 1j * math.pi

        def up_deriv(t):
            t = np.asarray(t, dtype=float)
            return np.full(t.shape, 1.0 + 0j)

        def dens(point_fn):
            return lambda t: np.exp(point_fn(t))

        return [
            Piece(-X, 0.0, lo_point, lo_deriv, dens(lo_point), "lower-edge"),
            Piece(-math.pi, math.pi, left_point, left_deriv,
                  dens(left_point), "left-edge"),
            Piece(0.0, X, up_point, up_deriv, dens(up_point), "upper-edge"),
        ]

    def inside(self, z: complex) -> bool:
        z = complex(z)
        return z.real > 0 and abs(z.imag) < math.pi

    def in_sector(self, z: complex) -> bool:
        return True

    def log_glue(self, z: complex) -> complex:
        return cmath.exp(complex(z))

    def glue_log_deriv(self, z: complex) -> complex:
        return cmath.exp(complex(z))

    def log_density_offcontour(self, pts: np.ndarray) -> np.ndarray:
        return np.exp(pts)

    def tail_log(self) -> float:
        return self.tail_log_bound(self.x_truncate)


# ---------------------------------------------------------------------------
# adaptive quadrature
# ---------------------------------------------------------------------------

def _gl15(fvec, a, b):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid + half * _GL15_X
    y = fvec(x)
    return half * np.sum(y * _GL15_W)


def _adaptive(fvec, a, b, tol, max_depth=38, max_panels=20_000):
    """Adaptive Gauss panels: parent vs two children as error estimate.

    Returns (integral, error_estimate).  Deterministic: the subdivision
    tree depends only on the integrand values.  The panel budget stops
    runaway refinement on integrands whose cancellation exceeds double
    resolution; the unresolved error is then reported honestly.
    """
    stack = [(a, b, _gl15(fvec, a, b), 0)]
    total = 0.0 + 0.0j
    err_total = 0.0
    length = b - a
    panels = 0
    while stack:
        pa, pb, parent_val, depth = stack.pop()
        mid = 0.5 * (pa + pb)
        left = _gl15(fvec, pa, mid)
        right = _gl15(fvec, mid, pb)
        children = left + right
        err = abs(parent_val - children)
        panels += 1
        local_tol = tol * max((pb - pa) / length, 1e-12)
        if err < local_tol or depth >= max_depth or panels >= max_panels:
            total += children
            err_total += err
        else:
            stack.append((pa, mid, left, depth + 1))
            stack.append((mid, pb, right, depth + 1))
    return total, err_total


# ---------------------------------------------------------------------------
# the engine
# ---------------------------------------------------------------------------

class CauchyEngine:
    """Evaluates f_tilde, f, f' for a contour model, with detours near it."""

    def __init__(self, model, config: QuadratureConfig | None = None):
        self.model = model
        self.config = config if config is not None else model.config
        self._grid = self._build_distance_grid()
        self._kappa_report = self._verify_kappa()

    @classmethod
    def for_tract(cls, spec: TractSpec | None = None,
                  config: QuadratureConfig | None = None) -> "CauchyEngine":
        spec = spec if spec is not None else TractSpec()
        config = config if config is not None else QuadratureConfig()
        return cls(TractContourModel(spec, config), config)

    @classmethod
    def polya_szego(cls, config: QuadratureConfig | None = None) -> "CauchyEngine":
        config = config if config is not None else QuadratureConfig()
        return cls(HalfStripModel(config), config)

    # -- distance bookkeeping ----------------------------------------------

    def _build_distance_grid(self):
        grids = []
        for piece in self.model.pieces:
            n = max(64, int(math.ceil((piece.b - piece.a) / min(
                self.config.kappa / 4, self.config.max_step))))
            ts = np.linspace(piece.a, piece.b, n + 1)
            grids.append((ts, piece.point(ts)))
        return grids

    def dist_to_contour(self, z: complex) -> float:
        z = complex(z)
        best = math.inf
        for (ts, pts), piece in zip(self._grid, self.model.pieces):
            d = np.abs(pts - z)
            i = int(np.argmin(d))
            lo = max(i - 1, 0)
            hi = min(i + 1, len(ts) - 1)
            best = min(best, self._refine_min(piece, ts[lo], ts[hi], z))
        return best

    @staticmethod
    def _refine_min(piece, ta, tb, z):
        for _ in range(72):
            m1 = ta + (tb - ta) / 3
            m2 = tb - (tb - ta) / 3
            d1, d2 = np.abs(piece.point(np.array([m1, m2])) - z)
            if d1 < d2:
                tb = m2
            else:
                ta = m1
        tm = 0.5 * (ta + tb)
        return abs(complex(piece.point(np.array([tm]))[0]) - z)

    # -- kappa-neighborhood verification ------------------------------------

    def _verify_kappa(self):
        """Sample the kappa-tube: must stay in the sector with Re g <= 3."""
        kappa = self.config.kappa
        max_re_g = -math.inf
        sector_ok = True
        for (ts, pts), piece in zip(self._grid, self.model.pieces):
            sub = slice(0, len(ts), max(1, len(ts) // 200))
            t_s = ts[sub]
            p_s = pts[sub]
            d_s = piece.deriv(t_s)
            normal = 1j * d_s / np.abs(d_s)
            for side in (+1.0, -1.0):
                off = p_s + side * kappa * normal
                for q in off:
                    if not self.model.in_sector(q):
                        sector_ok = False
                        continue
                    lg = self.model.log_glue(complex(q))
                    max_re_g = max(max_re_g, lg.real)
        bound = self.config.tube_re_g_bound
        ok = sector_ok and max_re_g <= bound
        if not ok:
            raise ContourConstructionError(
                f"kappa={kappa} violates the tube conditions "
                f"(sector_ok={sector_ok}, max Re g={max_re_g:.3f}, "
                f"bound={bound})"
            )
        return {"kappa": kappa, "max_re_g_on_tube": max_re_g,
                "sector_ok": sector_ok}

    @property
    def kappa_report(self):
        return dict(self._kappa_report)

    # -- main integrals ------------------------------------------------------

    def _kernel_integral(self, pieces, z, power, tol):
        total = 0.0 + 0.0j
        err = 0.0
        for piece in pieces:
            def f(t, piece=piece):
                pts = piece.point(t)
                logd = piece.log_density(t)
                mag = np.exp(np.clip(logd.real, -745.0, 700.0))
                dens = mag * np.exp(1j * logd.imag)
                return dens * piece.deriv(t) / (pts - z) ** power
            val, e = _adaptive(f, piece.a, piece.b, tol)
            total += val
            err += e
        return total / (2j * math.pi), err / (2 * math.pi)

    def _deformed_pieces(self, z, bulge_inside: bool):
        """Contour with a radius-kappa detour around z, arc on the requested side."""
        kappa = self.config.kappa
        crossings = self._kappa_window(z)
        if crossings is None:
            return None
        (i_in, t_in), (i_out, t_out) = crossings
        pieces = self.model.pieces
        p_in = complex(pieces[i_in].point(np.array([t_in]))[0])
        p_out = complex(pieces[i_out].point(np.array([t_out]))[0])
        psi1 = cmath.phase(p_in - z)
        psi2 = cmath.phase(p_out - z)
        delta = (psi2 - psi1) % (2 * math.pi)
        candidates = [delta, delta - 2 * math.pi]
        arc_delta = None
        for cand in candidates:
            if cand == 0.0:
                continue
            midpt = z + kappa * cmath.exp(1j * (psi1 + cand / 2))
            if self.model.inside(midpt) == bulge_inside:
                arc_delta = cand
                break
        if arc_delta is None:
            # degenerate tangency: fall back to the longer arc
            arc_delta = candidates[0] if candidates[0] != 0 else -2 * math.pi

        def arc_point(s):
            s = np.asarray(s, dtype=float)
            return z + kappa * np.exp(1j * (psi1 + arc_delta * s))

        def arc_deriv(s):
            s = np.asarray(s, dtype=float)
            return kappa * 1j * arc_delta * np.exp(1j * (psi1 + arc_delta * s))

        arc = Piece(0.0, 1.0, arc_point, arc_deriv,
                    lambda s: self.model.log_density_offcontour(arc_point(s)),
                    "detour-arc")
        # assemble: pieces before entry, clipped entry, arc, clipped exit, rest
        out = []
        for idx, piece in enumerate(pieces):
            if idx < i_in:
                out.append(piece)
            elif idx == i_in:
                if t_in > piece.a:
                    out.append(replace(piece, b=t_in))
                out.append(arc)
                if i_in == i_out and t_out < piece.b:
                    out.append(replace(piece, a=t_out))
            elif idx < i_out:
                continue
            elif idx == i_out and i_out != i_in:
                if t_out < piece.b:
                    out.append(replace(piece, a=t_out))
            else:
                out.append(piece)
        return out

    def _kappa_window(self, z):
        """First and last contour parameters at distance kappa from z."""
        kappa = self.config.kappa
        inside_flags = []
        for (ts, pts), piece in zip(self._grid, self.model.pieces):
            inside_flags.append(np.abs(pts - z) < kappa)
        found = [
            (i, j)
            for i, flags in enumerate(inside_flags)
            for j in np.nonzero(flags)[0]
        ]
        if not found:
            return None
        i_first, j_first = found[0]
        i_last, j_last = found[-1]

        def refine(i, j, forward):
            ts, pts = self._grid[i]
            piece = self.model.pieces[i]
            if forward:
                if j == 0:
                    return piece.a
                lo, hi = ts[j - 1], ts[j]
            else:
                if j == len(ts) - 1:
                    return piece.b
                lo, hi = ts[j], ts[j + 1]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                d = abs(complex(piece.point(np.array([mid]))[0]) - z)
                below = d < kappa
                if forward:
                    if below:
                        hi = mid
                    else:
                        lo = mid
                else:
                    if below:
                        lo = mid
                    else:
                        hi = mid
            return 0.5 * (lo + hi)

        t_in = refine(i_first, j_first, forward=True)
        t_out = refine(i_last, j_last, forward=False)
        return (i_first, t_in), (i_last, t_out)

    def f_tilde(self, z, limit_from: str | None = None,
                power: int = 1) -> FunctionValue:
        """Cauchy integral at z; limit_from in {"V","W"} gives boundary limits."""
        z = complex(z)
        d = self.dist_to_contour(z)
        tol = self.config.eps
        if limit_from is None:
            if d < 1e-12:
                raise EvaluationOnContourError(
                    "point is on the contour; pass limit_from='V' or 'W'"
                )
            if d >= self.config.kappa:
                val, err = self._kernel_integral(self.model.pieces, z, power, tol)
                return self._pack(val, err)
            bulge_inside = not self.model.inside(z)
        else:
            if limit_from not in ("V", "W"):
                raise ValueError("limit_from must be 'V' or 'W'")
            bulge_inside = limit_from == "V"
        pieces = self._deformed_pieces(z, bulge_inside)
        if pieces is None:
            val, err = self._kernel_integral(self.model.pieces, z, power, tol)
            return self._pack(val, err)
        val, err = self._kernel_integral(pieces, z, power, tol)
        return self._pack(val, err)

    def _pack(self, val: complex, err: float) -> FunctionValue:
        tail = math.exp(min(self.model.tail_log(), 100.0))
        err_total = err + tail + 1e-16 * abs(val)
        log_value = cmath.log(val) if val != 0 else None
        return FunctionValue(val, log_value, err_total)

    def f(self, z, limit_from: str | None = None) -> FunctionValue:
        """The glued entire function: f_tilde outside, f_tilde + exp(g) inside.

        In limit mode the gluing side follows limit_from, which is what
        makes the two one-sided limits comparable on the contour itself.
        """
        z = complex(z)
        ft = self.f_tilde(z, limit_from=limit_from)
        if limit_from is None:
            inside = self.model.inside(z)
        else:
            inside = limit_from == "W"
        if not inside:
            return ft
        lg = self.model.log_glue(z)
        if lg.real <= LOG_SPACE_THRESHOLD:
            glue = cmath.exp(lg)
            value = ft.value + glue
            log_value = cmath.log(value) if value != 0 else None
            return FunctionValue(value, log_value, ft.abs_error + 1e-16 * abs(value))
        # log-space: f = e^g (1 + f_tilde e^{-g}); the correction term is
        # bounded by C3 e^{-Re g}, far below double resolution here
        corr = 0.0 + 0.0j
        log_value = lg + corr
        return FunctionValue(complex(math.inf, 0.0), log_value, ft.abs_error)

    def f_prime(self, z, limit_from: str | None = None) -> FunctionValue:
        z = complex(z)
        ftp = self.f_tilde(z, limit_from=limit_from, power=2)
        if limit_from is None:
            inside = self.model.inside(z)
        else:
            inside = limit_from == "W"
        if not inside:
            return ftp
        lg = self.model.log_glue(z)
        gp = self.model.glue_log_deriv(z)
        if lg.real <= LOG_SPACE_THRESHOLD:
            value = ftp.value + gp * cmath.exp(lg)
            log_value = cmath.log(value) if value != 0 else None
            return FunctionValue(value, log_value,
                                 ftp.abs_error + 1e-15 * abs(value))
        log_value = lg + cmath.log(gp)
        return FunctionValue(complex(math.inf, 0.0), log_value, ftp.abs_error)

    # -- masses and constants ----------------------------------------------

    def total_mass(self) -> float:
        """Quadrature of |exp(g)| |gamma'| over the truncated contour."""
        total = 0.0
        for piece in self.model.pieces:
            def f(t, piece=piece):
                logd = piece.log_density(t)
                mag = np.exp(np.clip(logd.real, -745.0, 700.0))
                return mag * np.abs(piece.deriv(t)) + 0j
            val, _ = _adaptive(f, piece.a, piece.b, self.config.eps)
            total += val.real
        return total

    def f_tilde_kernel_bound(self, z) -> float:
        """(1/2 pi) total mass / dist: rigorous far-field bound on |f_tilde|."""
        d = self.dist_to_contour(z)
        return self.total_mass() / (2 * math.pi * d) + math.exp(
            min(self.model.tail_log(), 100.0))

    def f_tilde_global_bound(self) -> float:
        """z-independent bound on |f_tilde|: detour-contour estimate.

        Mass term over the non-detour part at distance >= kappa plus the
        detour arc (length <= 2 pi kappa at distance kappa) bounded by the
        verified tube maximum of |exp(g)|.
        """
        kappa = self.config.kappa
        return self.total_mass() / (2 * math.pi * kappa) + math.exp(
            self._kappa_report["max_re_g_on_tube"]) + math.exp(
            min(self.model.tail_log(), 100.0))


def shifted_tip_engine(engine: CauchyEngine, alpha: float) -> CauchyEngine:
    """Engine over the contour whose tip edge sits at Re h = alpha.

    The glued function is unchanged (contour homotopy through the region
    where exp(g) is analytic), which is what the contour-shift consistency
    checks exercise.  The kappa-tube density bound scales with exp(alpha).
    """
    model = engine.model
    if not isinstance(model, TractContourModel):
        raise TypeError("tip shifting is defined for the tract model")
    spec_c = replace(model.spec,
                     target_strip=StripSpec(alpha, model.spec.target_strip.beta))
    cfg_c = replace(engine.config,
                    tube_re_g_bound=math.exp(alpha + 1.2) + 3.0)
    return CauchyEngine(TractContourModel(spec_c, cfg_c), cfg_c)


def estimate_constants(engine: CauchyEngine) -> ConstructionConstants:
    """C1 by quadrature, C2 exact, C3 per the two contour bounds."""
    model = engine.model
    if not isinstance(model, TractContourModel):
        raise TypeError("construction constants are defined for the tract model")
    if engine.kappa_report["max_re_g_on_tube"] > 3.0:
        raise ValueError(
            "C3 uses the e^3 detour bound: the kappa tube must satisfy "
            "Re g <= 3 (true for the default contour)"
        )
    spec = model.spec
    c1 = engine.total_mass()
    c2 = math.exp(-spec.wiggle_coeff * math.sinh(spec.domain_strip.beta))
    kappa = engine.config.kappa
    straight = (c1 + 6.0 / c2) / (2 * math.pi)
    detour = (c1 + 6.0 / c2) / (2 * math.pi * kappa) + 2 * math.pi * math.e**3
    c3 = max(straight, detour)
    return ConstructionConstants(c1, c2, c3, spec.linear_coeff)


# ---------------------------------------------------------------------------
# order estimation
# ---------------------------------------------------------------------------

def log_log_max_modulus_on_circle(spec: TractSpec, r: float,
                                  n_scan: int = 200_001) -> float:
    """log log M(r) for the glued function, computed in log space.

    On the part of the circle |z| = r inside W the modulus is
    exp(Re g) (1 + O(e^{-Re g})), so log M(r) is the maximum of
    Re g = e^{Re h} cos(Im h) over the tract cross-section, and the value
    returned is the log of that maximum (= Re h + log cos(Im h) at the
    maximizer).  Off the tract the function is O(1) and never competes
    once the tract is hit.
    """
    x = math.log(r)
    beta = spec.domain_strip.beta
    ys = np.linspace(-beta + 1e-9, beta - 1e-9, n_scan)
    hv = eval_h(spec, x + 1j * ys)
    reh, imh = hv.real, hv.imag
    mask = (np.abs(imh) < spec.target_strip.beta) & (
        reh > spec.target_strip.alpha) & (np.cos(imh) > 0)
    if not mask.any():
        return -math.inf
    vals = np.where(mask, reh + np.log(np.abs(np.cos(imh)) + 1e-300), -np.inf)
    return float(vals.max())


def log_log_max_modulus_on_circle_strip(r: float,
                                        n_scan: int = 200_001) -> float:
    """log log M(r) analog for the half-strip model (log of max Re e^z)."""
    thetas = np.linspace(-math.pi / 2 + 1e-9, math.pi / 2 - 1e-9, n_scan)
    zs = r * np.exp(1j * thetas)
    mask = (zs.real > 0) & (np.abs(zs.imag) < math.pi)
    vals = np.where(mask, np.exp(zs).real, -np.inf)
    top = float(vals.max())
    return math.log(top) if top > 0 else -math.inf


class SectorDomainError(ValueError):
    """Point outside the sector {|z| > e^alpha, |arg z| < beta}."""


def eval_g(spec: TractSpec, z) -> FunctionValue:
    """g(z) = exp(h(Log z)) on the sector, log form always populated.

    For z = r e^{i theta}: |g| = r^a exp(-b cos(Log r) sinh theta).
    """
    z = complex(z)
    r = abs(z)
    if r <= math.exp(spec.domain_strip.alpha) or abs(
            np.angle(z)) >= spec.domain_strip.beta:
        raise SectorDomainError(f"{z} outside the admissible sector")
    log_value = complex(eval_h(spec, np.log(z)))
    if abs(log_value.real) <= LOG_SPACE_THRESHOLD:
        value = cmath.exp(log_value)
    else:
        value = complex(math.inf if log_value.real > 0 else 0.0, 0.0)
    return FunctionValue(value, log_value, 4e-16 * abs(value)
                         if math.isfinite(abs(value)) else 0.0)


class InsufficientDataError(ValueError):
    pass


def estimate_order(radii, loglog_m_values) -> float:
    """Least-squares slope of log log M(r) against log r.

    loglog_m_values are the doubly-logged circle maxima (log of log M),
    which is the scale on which an order-rho function is a straight line
    of slope rho.  Non-growing inputs (log log M <= 0, i.e. M bounded by
    e) give estimate 0: bounded-type growth.
    """
    radii = [float(r) for r in radii]
    vals = [float(v) for v in loglog_m_values]
    if len(radii) < 3 or len(radii) != len(vals):
        raise InsufficientDataError("need at least 3 radii with values")
    if any(v <= 0.0 for v in vals):
        return 0.0
    x = np.log(radii)
    return float(np.polyfit(x, vals, 1)[0])


def order_slope_sequence(radii, loglog_m_values) -> list[float]:
    """Consecutive pairwise slopes; increasing without bound flags infinite order."""
    radii = [float(r) for r in radii]
    vals = [float(v) for v in loglog_m_values]
    out = []
    for (r0, v0), (r1, v1) in zip(zip(radii, vals), zip(radii[1:], vals[1:])):
        out.append((v1 - v0) / (math.log(r1) - math.log(r0)))
    return out
