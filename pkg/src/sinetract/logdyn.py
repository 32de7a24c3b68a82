"""Disjoint-type rescaling and the logarithmic transform F.

The rescaled map is f0 = lambda f with lambda = 2^(-2^j): shrinking lambda
pushes the tract of f0 (the region where |f0| exceeds the reference disc)
to the right, and j is chosen so that the tract in logarithmic coordinates
sits in {Re z > r_log}, which is what the pullback certificates need.  At
that scale lambda itself underflows every fixed-precision format, so the
model stores j and all dynamics runs on log lambda = -2^j ln 2, an ordinary
multiprecision number.

On the tract array the transform is

    F(z) = log lambda + g(e^z) + log(1 + f_tilde(e^z) exp(-g(e^z))),

and the correction term is bounded by C3 exp(-Re g) < exp(-Lambda/2):
far below any precision carried here, so F and its inverse branches reduce
to the coefficient map exp(h(.)) shifted by log lambda, evaluated with
mpmath at a working precision that absorbs the Lambda-size cancellation.
Forward steps lose about log10(K) digits each; pullbacks gain them, which
is why hairs are computed by pullback only.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import mpmath
import numpy as np
from mpmath import mp

from .cauchy import CauchyEngine, estimate_constants
from .tract import TractSpec, eval_h, eval_h_prime, invert_h, tract_contains

TWO_PI = 2.0 * math.pi
LOG10_2 = math.log10(2.0)


class CalibrationError(RuntimeError):
    """No admissible scaling found (reported with the failing condition)."""


class TractDomainError(ValueError):
    """Point not in the tract array of the transform."""


class BranchInversionError(RuntimeError):
    """Inverse-branch Newton and continuation both failed."""


class OrbitEscapeError(RuntimeError):
    """Forward orbit left the tract array at a non-terminal step."""


class OrbitOverflowError(RuntimeError):
    """Forward orbit grew beyond the representable exponential tower."""


_ADDRESS_RE = re.compile(
    r"^\s*(?:(?P<pre>-?\d+(?:\s*,\s*-?\d+)*)\s*,\s*)?"
    r"\(\s*(?P<per>-?\d+(?:\s*,\s*-?\d+)*)\s*\)\s*$"
)


@dataclass(frozen=True)
class ExternalAddress:
    """Bounded, eventually periodic sequence of tract indices."""

    preperiod: tuple[int, ...]
    period: tuple[int, ...]
    bound: int = 8

    def __post_init__(self):
        if not self.period:
            raise ValueError("period part must be nonempty")
        worst = max((abs(s) for s in self.preperiod + self.period), default=0)
        if worst > self.bound:
            raise ValueError(
                f"address entry {worst} exceeds the symbol bound {self.bound}"
            )

    @classmethod
    def parse(cls, text: str, bound: int = 8) -> "ExternalAddress":
        """Parse "0,0,(1)" style text: preperiod entries, parenthesized period."""
        m = _ADDRESS_RE.match(text)
        if not m:
            raise ValueError(f"cannot parse address {text!r}")
        pre = tuple(
            int(s) for s in m.group("pre").split(",")) if m.group("pre") else ()
        per = tuple(int(s) for s in m.group("per").split(","))
        return cls(pre, per, bound)

    def __str__(self) -> str:
        per = ",".join(str(s) for s in self.period)
        if self.preperiod:
            pre = ",".join(str(s) for s in self.preperiod)
            return f"{pre},({per})"
        return f"({per})"

    def entry(self, n: int) -> int:
        if n < len(self.preperiod):
            return self.preperiod[n]
        return self.period[(n - len(self.preperiod)) % len(self.period)]

    def prefix(self, n: int) -> tuple[int, ...]:
        return tuple(self.entry(j) for j in range(n))

    def shift(self) -> "ExternalAddress":
        if self.preperiod:
            return ExternalAddress(self.preperiod[1:], self.period, self.bound)
        return ExternalAddress(
            (), self.period[1:] + self.period[:1], self.bound
        )


@dataclass(frozen=True)
class TractIndexedPoint:
    """Log-plane point together with the index of the tract containing it."""

    z: object  # complex or mpmath.mpc
    tract_index: int


@dataclass(frozen=True)
class DisjointTypeModel:
    """Verified scaling of the constructed function to disjoint type.

    lambda = 2^(-2^lambda_log2_exponent); r_log is the depth scale: the
    closure of the tract array lies in {Re z > r_log}, the fixed point
    attracts D(0, e^{r_log}), and every pullback certificate works on
    discs D(w_n, 4 pi) inside D(w_n, Re w_n) with Re w_n > r_log.
    """

    spec: TractSpec
    lambda_log2_exponent: int
    r_log: float
    k_expansion_log: float  # log of the verified lower bound of |F'|
    fixed_point_re: str     # mpf string (the value is microscopic)
    fixed_point_im: str
    symbol_bound: int = 8
    verification: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.r_log <= 4 * math.pi:
            raise ValueError("r_log must exceed 4 pi")
        if TWO_PI / self.r_log >= math.sqrt(2) - 1:
            raise ValueError("need 2 pi / r_log < sqrt(2) - 1")

    # -- scaling ------------------------------------------------------------

    def minus_log_lambda(self):
        """Lambda = 2^j ln 2 at the current working precision."""
        return mpmath.mpf(2) ** self.lambda_log2_exponent * mpmath.ln(2)

    def log_minus_log_lambda(self) -> float:
        j = self.lambda_log2_exponent
        return j * math.log(2) + math.log(math.log(2))

    def fixed_point(self):
        return mpmath.mpc(mpmath.mpf(self.fixed_point_re),
                          mpmath.mpf(self.fixed_point_im))

    def k_expansion(self):
        """Verified lower bound of |F'| on the tract array, as an mpf."""
        return mpmath.exp(mpmath.mpf(self.k_expansion_log))

    # -- precision budgeting --------------------------------------------------

    def base_dps(self) -> int:
        """Digits to resolve one Lambda-size cancellation plus headroom."""
        return int(self.lambda_log2_exponent * LOG10_2) + 60

    def chain_dps(self, depth: int) -> int:
        """Digits for a depth-fold pullback chain resolved below its scale."""
        per_level = int(self.k_expansion_log * math.log10(math.e)) + 10
        return self.base_dps() + max(depth, 0) * per_level + 40


# ---------------------------------------------------------------------------
# membership and evaluation
# ---------------------------------------------------------------------------

def nearest_tract_index(z) -> int:
    return int(round(float(mpmath.im(z)) / TWO_PI)) if isinstance(
        z, (mpmath.mpc, mpmath.mpf)) else int(round(z.imag / TWO_PI))


def dyn_tract_contains(model: DisjointTypeModel, z, k: int | None = None):
    """Membership of z in the tract array of F; returns (bool, index).

    The test |f0(e^z)| > 1 reduces to Re exp(h(zeta)) > Lambda for the
    2 pi i k-reduced point zeta; the f_tilde correction moves the boundary
    by less than exp(-Lambda/2), far below the resolution of the test.

    Bounded-orbit points sit within a double-width sliver of the tract
    edge (their depth coordinate Re F is a Lambda-size cancellation), so
    mpmath inputs are decided at the current working precision; plain
    complex inputs get the double-precision test with its edge fuzz.
    """
    zc = complex(z)
    if k is None:
        k = nearest_tract_index(zc)
    zeta_c = complex(zc.real, zc.imag - TWO_PI * k)
    if not tract_contains(model.spec, zeta_c):
        return False, k
    if isinstance(z, (mpmath.mpc, mpmath.mpf)):
        zeta = mpmath.mpc(z) - 2j * k * mpmath.pi
        v = mpmath.exp(eval_h(model.spec, zeta))
        return mpmath.re(v) > model.minus_log_lambda(), k
    hv = complex(eval_h(model.spec, zeta_c))
    if math.cos(hv.imag) <= 0.0:
        return False, k
    log_re_exp_h = hv.real + math.log(math.cos(hv.imag))
    return log_re_exp_h > model.log_minus_log_lambda(), k


def eval_F(model: DisjointTypeModel, z, k: int | None = None,
           check_domain: bool = True):
    """F(z) = log lambda + exp(h(z - 2 pi i k)) on the tract array.

    Evaluates at the current mpmath precision; the caller is responsible
    for choosing enough digits (model.base_dps() resolves a single step).
    """
    zm = mpmath.mpc(z)
    if k is None:
        k = nearest_tract_index(zm)
    if check_domain:
        ok, _ = dyn_tract_contains(model, zm, k)
        if not ok:
            raise TractDomainError(f"{complex(zm)} not in tract {k}")
    zeta = zm - 2j * k * mpmath.pi
    hv = eval_h(model.spec, zeta)
    if mpmath.mag(hv.real) > 200:
        raise OrbitOverflowError(
            "exp tower exceeds the representable exponent range"
        )
    return -model.minus_log_lambda() + mpmath.exp(hv)


def eval_F_prime(model: DisjointTypeModel, z, k: int | None = None):
    """F'(z) = h'(zeta) exp(h(zeta)), the chain rule through f0(e^z)."""
    zm = mpmath.mpc(z)
    if k is None:
        k = nearest_tract_index(zm)
    zeta = zm - 2j * k * mpmath.pi
    return eval_h_prime(model.spec, zeta) * mpmath.exp(eval_h(model.spec, zeta))


def inverse_branch(model: DisjointTypeModel, w, k: int,
                   max_newton: int = 8) -> TractIndexedPoint:
    """The unique z in tract k with F(z) = w, for Re w > 0.

    Seeded by the coefficient-map inverse h^{-1}(Log(w + Lambda)) + 2 pi i k,
    then polished by Newton on F itself.  On Newton failure, retries with
    continuation along the horizontal ray from far right toward w.
    """
    if abs(k) > model.symbol_bound:
        raise ValueError(f"tract index {k} exceeds symbol bound")
    wm = mpmath.mpc(w)
    if mpmath.re(wm) <= 0:
        raise ValueError("inverse branches are defined on the right half-plane")
    lam = model.minus_log_lambda()
    z = _branch_newton(model, wm, lam, max_newton)
    if z is None:
        z = _branch_continuation(model, wm, lam, max_newton)
    if z is None:
        raise BranchInversionError(
            f"branch inversion failed for w={complex(wm)} (k={k})"
        )
    z = z + 2j * k * mpmath.pi
    return TractIndexedPoint(z, k)


def _branch_newton(model, wm, lam, max_newton):
    spec = model.spec
    target = mpmath.log(wm + lam)
    try:
        z = invert_h(spec, target, seed=target / spec.linear_coeff)
    except Exception:
        return None
    # the achievable residual floor is Lambda * 10^{-dps}: the cancellation
    # -Lambda + exp(h) cannot resolve below the rounding of its big terms
    tol = mpmath.mpf(10) ** (-mp.dps + 10) * (1 + abs(wm) + lam)
    for _ in range(max_newton):
        resid = (-lam + mpmath.exp(eval_h(spec, z))) - wm
        if abs(resid) <= tol:
            return z
        z = z - resid / (eval_h_prime(spec, z) * mpmath.exp(eval_h(spec, z)))
    resid = (-lam + mpmath.exp(eval_h(spec, z))) - wm
    if abs(resid) <= tol * 100:
        return z
    return None


def _branch_continuation(model, wm, lam, max_newton):
    spec = model.spec
    w0 = mpmath.mpc(max(10.0 * model.r_log, float(mpmath.re(wm))), 0)
    z = None
    for s in np.linspace(0.0, 1.0, 33):
        wk = w0 + (wm - w0) * mpmath.mpf(float(s))
        z = _branch_newton(model, wk, lam, max_newton)
        if z is None:
            return None
    return z


def pullback_chain(model: DisjointTypeModel, w, symbols) -> list:
    """Successive pullbacks of w through the branches symbols[-1],...,symbols[0].

    Returns [w, F_{s_{d-1}}^{-1}(w), ..., (F_{s_0}^{-1} o ... )(w)]: entry
    j is the point whose forward orbit runs through the last j symbols.
    """
    out = [mpmath.mpc(w)]
    for s in reversed(list(symbols)):
        out.append(inverse_branch(model, out[-1], s).z)
    return out


def orbit(model: DisjointTypeModel, p, n: int):
    """Forward orbit w_0..w_n under F with realized tract indices.

    Every non-terminal point must lie in the tract array; the terminal
    value may be anywhere in the half-plane.  Returns (points, indices)
    with len(points) = n+1 and len(indices) = n (index of w_j consumed by
    the step w_j -> w_{j+1}).
    """
    if n < 0:
        raise ValueError("orbit length must be nonnegative")
    z = mpmath.mpc(p.z if isinstance(p, TractIndexedPoint) else p)
    points = [z]
    indices: list[int] = []
    for step in range(n):
        ok, k = dyn_tract_contains(model, points[-1])
        if not ok:
            raise OrbitEscapeError(
                f"orbit left the tract array at step {step}"
            )
        indices.append(k)
        points.append(eval_F(model, points[-1], k, check_domain=False))
    return points, indices


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

def _disc_max_log_re_g(spec: TractSpec, r_log: float, n_samples: int,
                       rng) -> float:
    """Max over disc samples of log Re g (log of log|f| up to O(1)).

    Samples are log-uniform in radius: the interesting set (the tract)
    occupies every radial scale, and uniform-area sampling would see only
    the rim.
    """
    xs = rng.uniform(spec.domain_strip.alpha, r_log, n_samples)
    ys = rng.uniform(-spec.domain_strip.beta, spec.domain_strip.beta,
                     n_samples)
    hv = eval_h(spec, xs + 1j * ys)
    reh, imh = hv.real, hv.imag
    in_tract = (np.abs(imh) < spec.target_strip.beta) & (
        reh > spec.target_strip.alpha)
    pos = in_tract & (np.cos(imh) > 0)
    vals = np.where(pos, reh + np.log(np.abs(np.cos(imh)) + 1e-300), -np.inf)
    return float(vals.max())


def _analytic_disc_bound(spec: TractSpec, r_log: float) -> float:
    """Rigorous upper bound for max log Re g over the disc Log|z| <= r_log."""
    beta = spec.domain_strip.beta
    return spec.linear_coeff * r_log + spec.wiggle_coeff * math.sinh(beta)


def _tract_grid_points(model_spec: TractSpec, log_lam: float, r_log: float,
                       n_points: int, rng):
    """Sample points of the tract array's base copy (index 0)."""
    a = model_spec.linear_coeff
    x_lo = (log_lam - _analytic_disc_bound(model_spec, 0.0)) / a
    pts = []
    attempts = 0
    while len(pts) < n_points and attempts < 400 * n_points:
        attempts += 1
        x = rng.uniform(x_lo, x_lo + 4.0)
        y = rng.uniform(-0.8, 0.8)
        z = complex(x, y)
        if not tract_contains(model_spec, z):
            continue
        hv = complex(eval_h(model_spec, z))
        if math.cos(hv.imag) <= 0:
            continue
        if hv.real + math.log(math.cos(hv.imag)) > log_lam:
            pts.append(z)
    if len(pts) < n_points:
        raise CalibrationError("could not sample the tract array")
    return pts


def calibrate(spec: TractSpec | None = None,
              engine: CauchyEngine | None = None,
              r_log: float = 50.0,
              k_target: float = 2.0,
              symbol_bound: int = 8,
              n_disc_samples: int = 10_000,
              n_tract_grid: int = 1_000,
              seed: int = 0,
              max_exponent: int = 4096) -> DisjointTypeModel:
    """Choose lambda = 2^(-2^j) and verify the disjoint-type conditions.

    The candidate scalings shrink by squaring (each step doubles
    log(1/lambda)), which reaches the required depth in ~r_log*a*log2(e)
    steps; all three conditions are monotone in j, so the first admissible
    exponent is taken:

    (a) containment: |f0| < e^{r_log} on the sampled disc D(0, e^{r_log}),
        checked in log space against both the sampled and the analytic
        maximum of Re g;
    (b) depth and expansion: the tract array lies in {Re z > r_log} and
        |F'| >= k_target on a sampled tract grid;
    (c) attracting fixed point: iteration of f0 from 0 converges with
        |f0'(fix)| < 1 and residual below 1e-12.
    """
    spec = spec if spec is not None else TractSpec()
    engine = engine if engine is not None else CauchyEngine.for_tract(spec)
    rng = np.random.default_rng(seed)

    disc_max_sampled = _disc_max_log_re_g(spec, r_log, n_disc_samples, rng)
    disc_max_analytic = _analytic_disc_bound(spec, r_log)
    need_log_lambda = max(disc_max_sampled, disc_max_analytic) + math.log(4.0)

    j = None
    for cand in range(8, max_exponent + 1):
        if cand * math.log(2) + math.log(math.log(2)) >= need_log_lambda:
            j = cand
            break
    if j is None:
        raise CalibrationError(
            f"no exponent up to {max_exponent} satisfies containment "
            f"(need log Lambda >= {need_log_lambda:.1f})"
        )

    log_lam = j * math.log(2) + math.log(math.log(2))

    # (a) re-verify containment on the samples: -Lambda + Re g < r_log
    margin_a = log_lam - disc_max_sampled
    if margin_a <= 0:
        raise CalibrationError("containment margin non-positive")

    # (b) tract depth and expansion on a fresh grid
    pts = _tract_grid_points(spec, log_lam, r_log, n_tract_grid, rng)
    min_x = min(p.real for p in pts)
    a = spec.linear_coeff
    b = spec.wiggle_coeff
    x_tip_analytic = (log_lam - b * math.sinh(0.76)) / a
    if x_tip_analytic <= r_log:
        raise CalibrationError(
            f"tract tip {x_tip_analytic:.3f} not beyond r_log={r_log}"
        )
    # log |F'| = log|h'| + Re h; minimize over the grid
    min_log_fprime = math.inf
    for p in pts:
        hp = complex(eval_h_prime(spec, p))
        hv = complex(eval_h(spec, p))
        min_log_fprime = min(min_log_fprime, math.log(abs(hp)) + hv.real)
    if min_log_fprime < math.log(k_target):
        raise CalibrationError(
            f"expansion check failed: min log|F'| = {min_log_fprime:.3f}"
        )
    # keep a safety margin below the grid minimum as the certified bound
    k_expansion_log = min_log_fprime - 0.5

    # (c) fixed point of f0 by iteration from 0, in mpf
    f0_val = engine.f(0.0 + 0.0j)
    fprime_bound = estimate_constants(engine).C3 / engine.config.kappa
    with mp.workdps(60):
        lam_log = -(mpmath.mpf(2) ** j) * mpmath.ln(2)
        lam = mpmath.exp(lam_log)
        xi = lam * mpmath.mpc(f0_val.value)
        # one more iteration moves xi by at most lam^2 |f'| |f(0)|
        resid_bound = abs(lam) ** 2 * fprime_bound * (
            abs(f0_val.value) + 1) + abs(lam) * f0_val.abs_error
        attract = abs(lam) * fprime_bound
        if not resid_bound < 1e-12:
            raise CalibrationError("fixed-point residual too large")
        if not attract < 1:
            raise CalibrationError("fixed point not attracting")
        fixed_re = mpmath.nstr(xi.real, 25)
        fixed_im = mpmath.nstr(xi.imag, 25)
        # the raw bounds have exponents beyond any float: store log10
        resid_log10 = float(mpmath.log10(resid_bound)) if resid_bound > 0 else -math.inf
        attract_log10 = float(mpmath.log10(attract)) if attract > 0 else -math.inf

    verification = {
        "disc_max_log_re_g_sampled": disc_max_sampled,
        "disc_max_log_re_g_analytic": disc_max_analytic,
        "containment_log_margin": margin_a,
        "n_disc_samples": n_disc_samples,
        "tract_grid_size": len(pts),
        "tract_min_re_sampled": min_x,
        "tract_tip_analytic": x_tip_analytic,
        "min_log_abs_f_prime": min_log_fprime,
        "fixed_point_residual_log10": resid_log10,
        "fixed_point_multiplier_log10": attract_log10,
        "seed": seed,
    }
    return DisjointTypeModel(
        spec=spec,
        lambda_log2_exponent=j,
        r_log=r_log,
        k_expansion_log=k_expansion_log,
        fixed_point_re=fixed_re,
        fixed_point_im=fixed_im,
        symbol_bound=symbol_bound,
        verification=verification,
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def model_to_dict(model: DisjointTypeModel) -> dict:
    spec = model.spec
    return {
        "tract": {
            "linear_coeff": spec.linear_coeff,
            "wiggle_coeff": spec.wiggle_coeff,
            "domain_strip": [spec.domain_strip.alpha, spec.domain_strip.beta],
            "target_strip": [spec.target_strip.alpha, spec.target_strip.beta],
        },
        "lambda_log2_exponent": model.lambda_log2_exponent,
        "r_log": model.r_log,
        "k_expansion_log": model.k_expansion_log,
        "fixed_point_re": model.fixed_point_re,
        "fixed_point_im": model.fixed_point_im,
        "symbol_bound": model.symbol_bound,
        "verification": model.verification,
    }


def model_from_dict(data: dict) -> DisjointTypeModel:
    from .tract import StripSpec

    t = data["tract"]
    spec = TractSpec(
        linear_coeff=t["linear_coeff"],
        wiggle_coeff=t["wiggle_coeff"],
        domain_strip=StripSpec(*t["domain_strip"]),
        target_strip=StripSpec(*t["target_strip"]),
    )
    return DisjointTypeModel(
        spec=spec,
        lambda_log2_exponent=data["lambda_log2_exponent"],
        r_log=data["r_log"],
        k_expansion_log=data["k_expansion_log"],
        fixed_point_re=data["fixed_point_re"],
        fixed_point_im=data["fixed_point_im"],
        symbol_bound=data["symbol_bound"],
        verification=data.get("verification", {}),
    )
