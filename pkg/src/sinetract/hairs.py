"""Hairs of the logarithmic transform and their wiggle certificates.

A hair with a prescribed tract-index sequence is computed by contracting
inverse-branch pullbacks of a horizontal base ray deep in the right
half-plane.  Certificates anchor a triangle at each forward-orbit point
w_n: two marker points on the level-n hair at prescribed real parts
(columns pi/2 + pi m, where the tract cross-section sits entirely above
+1/5 or below -1/5 of its central height), together with w_n itself.
Pulling the triangle back to the base point contracts its diameter by the
expansion factor per level while conformal distortion, bounded through
the Koebe estimate on D(w_n, 4 pi) inside D(w_n, Re w_n), keeps its
degeneracy measure essentially unchanged.  Shrinking non-degenerate
triangles along a curve rule out a nonzero derivative at the base point;
at finite depth the certificate documents exactly how far that evidence
reaches.

All pullback geometry runs in mpmath at a per-depth precision budget; the
reported pulled diameters are stored as log10 values because they fall
below every fixed-precision range after one level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
from mpmath import mp

from .geometry import koebe_distortion_bound
from .logdyn import (
    DisjointTypeModel,
    ExternalAddress,
    TractIndexedPoint,
    eval_F,
    inverse_branch,
    orbit,
    pullback_chain,
)
from .tract import eval_h

TWO_PI = 2.0 * math.pi
LOG10_E = math.log10(math.e)


class ShallowBaseError(ValueError):
    """An orbit point has Re w <= 4 pi: the disc geometry needs depth."""


class MarkerBracketError(RuntimeError):
    """The marker bisection could not bracket the requested column."""


class InconsistentCertificateError(RuntimeError):
    """A certificate violates its own invariants."""


class AddressUnrealizedError(RuntimeError):
    """Pullbacks left the admissible region: no hair with this address."""


@dataclass(frozen=True)
class HairSample:
    param: float
    point: object  # mpmath.mpc
    depth: int
    err_log10: float

    def err_text(self) -> str:
        """Error bound as text; the value underflows floats at depth >= 1."""
        if self.err_log10 == -math.inf:
            return "0"
        e = int(math.floor(self.err_log10))
        m = 10 ** (self.err_log10 - e)
        return f"{m:.2f}e{e:+d}"


@dataclass(frozen=True)
class HairPolyline:
    address: ExternalAddress
    samples: tuple[HairSample, ...]
    endpoint: object  # mpmath.mpc
    endpoint_err_log10: float
    depth: int
    x_base: float


@dataclass(frozen=True)
class MarkerPoint:
    n: int
    k: int
    column_x: float
    point: object  # mpmath.mpc
    side: int  # +1: above the tract center, -1: below


@dataclass(frozen=True)
class CertificateLevel:
    n: int
    s_n: int
    w_n: complex
    k_n: int
    markers: tuple[MarkerPoint, MarkerPoint]
    gap_x: float
    dy: float
    ambient_degeneracy: float
    ambient_diameter: float
    marker_angle: float
    fits_in_disc: bool
    koebe_bound: float
    convexity_ratio: float
    pulled_degeneracy: float
    pulled_diameter_log10: float
    shrink_factor_log: float
    pulled_offsets: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class WiggleCertificate:
    address: ExternalAddress
    w0_param: float
    base_point: complex
    w0: complex
    levels: tuple[CertificateLevel, ...]
    k_expansion_log: float
    r_log: float
    strict_markers: bool

    @property
    def delta_obs(self) -> float:
        return 1.0 - max(lv.pulled_degeneracy for lv in self.levels)


# ---------------------------------------------------------------------------
# mp geometry helpers (pulled triangles live far below float resolution)
# ---------------------------------------------------------------------------

def _deg_and_diam_mp(v1, v2, v3):
    d12 = abs(v1 - v2)
    d13 = abs(v1 - v3)
    d23 = abs(v2 - v3)
    if min(d12, d13, d23) == 0:
        raise InconsistentCertificateError("pulled triangle collapsed")
    deg = max(d12 / (d13 + d23), d13 / (d12 + d23), d23 / (d12 + d13))
    diam = max(d12, d13, d23)
    return float(deg), diam


def _angle_at_mp(a, b, c) -> float:
    """Interior angle at vertex a of the triangle (a, b, c)."""
    u = b - a
    v = c - a
    return abs(float(mpmath.arg(v / u)))


def x_base_default(model: DisjointTypeModel) -> float:
    return 2.0 * model.r_log


# ---------------------------------------------------------------------------
# tracing
# ---------------------------------------------------------------------------

def trace_hair(model: DisjointTypeModel, address: ExternalAddress,
               depth: int, base_params, x_base: float | None = None,
               validate_orbit: bool = False) -> HairPolyline:
    """Pull the base ray x_base + t back depth times along the address.

    Samples are ordered by the base parameter.  The per-sample error bound
    is (ray span + tract-array diameter gap) / K^depth, reported as log10:
    it underflows any float beyond depth 1.  The endpoint estimate is the
    pullback limit of the fixed base point with Cauchy stopping.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if x_base is None:
        x_base = x_base_default(model)
    params = [float(t) for t in base_params]
    symbols = address.prefix(depth)
    span = (max(params) - min(params)) if params else 0.0
    base_gap = span + x_base + TWO_PI * (model.symbol_bound + 1)
    err_log10 = math.log10(base_gap) - depth * model.k_expansion_log * LOG10_E

    samples = []
    with mp.workdps(model.chain_dps(depth)):
        for t in params:
            chain = pullback_chain(model, mpmath.mpc(x_base + t, 0.0), symbols)
            pt = chain[-1]
            if validate_orbit:
                _, idx = orbit(model, pt, depth)
                if tuple(idx) != tuple(symbols):
                    raise AddressUnrealizedError(
                        f"orbit prefix {idx} does not match {symbols}"
                    )
            samples.append(HairSample(t, pt, depth, err_log10))
        endpoint, end_err = _endpoint_estimate(model, address, x_base,
                                               start_depth=depth)
    return HairPolyline(address, tuple(samples), endpoint, end_err,
                        depth, x_base)


def _endpoint_estimate(model, address, x_base, start_depth=3,
                       max_depth=24, tol_log10=None):
    """Cauchy limit of the pullbacks of the fixed base point."""
    if tol_log10 is None:
        tol_log10 = -(mp.dps // 2)
    prev = None
    for d in range(max(start_depth, 1), max_depth + 1):
        chain = pullback_chain(model, mpmath.mpc(x_base, 0.0),
                               address.prefix(d))
        cur = chain[-1]
        if prev is not None:
            gap = abs(cur - prev)
            if gap == 0:
                return cur, -math.inf
            gap_log10 = float(mpmath.log10(gap))
            if gap_log10 < tol_log10:
                # geometric tail: the remaining error is below gap/(K-1)
                return cur, gap_log10
        prev = cur
    return prev, float(mpmath.log10(abs(gap))) if prev is not None else 0.0


def endpoint_of_level(model: DisjointTypeModel, address: ExternalAddress,
                      n: int, x_base: float | None = None):
    """Endpoint estimate of the level-n hair (address shifted n times)."""
    if x_base is None:
        x_base = x_base_default(model)
    shifted = address
    for _ in range(n):
        shifted = shifted.shift()
    return _endpoint_estimate(model, shifted, x_base)


# ---------------------------------------------------------------------------
# markers
# ---------------------------------------------------------------------------

def _column_anchor(model, address, n, x_base) -> int:
    """Smallest even m with pi/2 + pi m right of the level-n endpoint.

    Even m keeps the convention 'even offset = below the center, odd =
    above': the columns with sin x = +1 have their entire tract
    cross-section below -1/5 of the center height and vice versa.  The
    anchor can differ from ceil(Re endpoint / pi) by one: parity wins,
    which only relabels k by a bounded shift.
    """
    endpoint, _ = endpoint_of_level(model, address, n, x_base)
    e_re = float(endpoint.real)
    m = int(math.ceil((e_re - math.pi / 2) / math.pi + 1e-12))
    if math.pi / 2 + math.pi * m <= e_re:
        m += 1
    if m % 2:
        m += 1
    return m


def _hair_point_at_re(model: DisjointTypeModel, s_n: int, x_target: float,
                      re_tol: float = 1e-12):
    """Point on the level hair in tract s_n with the prescribed real part.

    Probes the curve F^{-1}_{s_n}((0, inf)): distance to the actual hair
    is below K^{-1} times the vertical gap to the next-level hair, which
    is invisible at every precision carried here.  Re along the probe is
    strictly increasing in the parameter, so bisection on its logarithm
    brackets robustly.
    """
    a = model.spec.linear_coeff
    b = model.spec.wiggle_coeff
    margin = b * math.sinh(0.8) + 1.0
    u_lo = mpmath.mpf(a) * x_target - margin
    u_hi = mpmath.mpf(a) * x_target + margin

    def probe(u):
        w = mpmath.exp(u)
        return inverse_branch(model, w, s_n).z

    z_lo = probe(u_lo)
    z_hi = probe(u_hi)
    if not (z_lo.real < x_target < z_hi.real):
        raise MarkerBracketError(
            f"column {x_target} not bracketed: probe Re in "
            f"[{float(z_lo.real):.4f}, {float(z_hi.real):.4f}]"
        )
    z = z_lo
    for _ in range(80):
        u_mid = 0.5 * (u_lo + u_hi)
        z = probe(u_mid)
        if z.real < x_target:
            u_lo = u_mid
        else:
            u_hi = u_mid
        if abs(float(z.real) - x_target) < re_tol:
            break
    return z


def find_markers(model: DisjointTypeModel, address: ExternalAddress,
                 n: int, count: int, x_base: float | None = None,
                 strict_sides: bool = True) -> list[MarkerPoint]:
    """Marker points z_{n,k}, k = 0..count-1, on the level-n hair.

    Columns x_{n,k} = pi/2 + pi (m_n + k) with the even anchor m_n right
    of the level-n endpoint; consecutive columns are exactly pi apart.
    With strict_sides the markers must clear +-1/5 of the tract center on
    the alternating side (guaranteed by the tract geometry for a nonzero
    wiggle; a straight control tract cannot satisfy it).
    """
    if x_base is None:
        x_base = x_base_default(model)
    s_n = address.entry(n)
    with mp.workdps(model.base_dps() + 40):
        m_anchor = _column_anchor(model, address, n, x_base)
        out = []
        for k in range(count):
            x_col = math.pi / 2 + math.pi * (m_anchor + k)
            z = _hair_point_at_re(model, s_n, x_col)
            rel_im = float(z.imag) - TWO_PI * s_n
            side = -1 if (m_anchor + k) % 2 == 0 else +1
            if strict_sides:
                if side < 0 and not rel_im < -0.2:
                    raise MarkerBracketError(
                        f"marker at column {x_col:.3f} not below -1/5: "
                        f"{rel_im:.4f}"
                    )
                if side > 0 and not rel_im > 0.2:
                    raise MarkerBracketError(
                        f"marker at column {x_col:.3f} not above +1/5: "
                        f"{rel_im:.4f}"
                    )
            out.append(MarkerPoint(n, k, x_col, z, side))
    return out


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

def build_certificate(model: DisjointTypeModel, address: ExternalAddress,
                      w0_param: float, levels: int,
                      x_base: float | None = None,
                      strict_markers: bool = True) -> WiggleCertificate:
    """Triangle certificate along the orbit of w0 = pullback of the base ray.

    For each n = 1..levels: w_n is the depth-(levels-n) pullback of the
    base point (numerically stable; forward iteration would shed a
    Lambda-size digit budget per step), k_n is the minimal admissible
    marker offset on the opposite side of the tract center from w_n, and
    the triangle (w_n, z_{n,k_n}, z_{n,k_n+1}) is pulled back to w0 by
    the branch composite for s_0..s_{n-1}.
    """
    if levels < 1:
        raise ValueError("need at least one level")
    if x_base is None:
        x_base = x_base_default(model)
    four_pi = 4 * math.pi

    # one extra pullback below the base ray, so that every orbit point
    # w_0..w_levels is a deep near-hair point (the raw ray is not)
    depth = levels + 1
    dps_chain = model.chain_dps(depth)
    with mp.workdps(dps_chain):
        base = mpmath.mpc(x_base + w0_param, 0.0)
        chain = pullback_chain(model, base, address.prefix(depth))
        # chain[j] is the pullback through the last j symbols: w_n = chain[depth-n]
        w = [chain[depth - n] for n in range(levels + 1)]
        for n in range(levels + 1):
            if float(w[n].real) <= four_pi:
                raise ShallowBaseError(
                    f"Re w_{n} = {float(w[n].real):.3f} <= 4 pi"
                )
        records = []
        k_exp_log = model.k_expansion_log
        for n in range(1, levels + 1):
            s_n = address.entry(n)
            w_n = w[n]
            rel_im = float(w_n.imag) - TWO_PI * s_n
            want_side = -1 if rel_im > 0 else +1
            markers = _select_markers(model, address, n, w_n, want_side,
                                      x_base, strict_markers)
            z1, z2 = markers[0].point, markers[1].point
            amb_deg, amb_diam = _deg_and_diam_mp(w_n, z1, z2)
            angle = _angle_at_mp(z1, w_n, z2)
            gap_x = float(z1.real - w_n.real)
            dy = float(w_n.imag - z1.imag)
            r_n = float(w_n.real)
            fits = max(abs(z1 - w_n), abs(z2 - w_n)) < four_pi
            koebe = koebe_distortion_bound(r_n, four_pi)
            conv_ratio = four_pi / r_n

            pulled = [
                pullback_chain(model, v, address.prefix(n))[-1]
                for v in (w_n, z1, z2)
            ]
            p_deg, p_diam = _deg_and_diam_mp(*pulled)
            p_diam_log10 = float(mpmath.log10(p_diam))
            shrink_log = (float(mpmath.log(amb_diam)) - float(
                mpmath.log(p_diam))) / n
            offsets = tuple(
                mpmath.nstr(q - pulled[0], 20) for q in pulled[1:]
            )
            records.append(CertificateLevel(
                n=n, s_n=s_n, w_n=complex(w_n), k_n=markers[0].k,
                markers=(markers[0], markers[1]),
                gap_x=gap_x, dy=dy,
                ambient_degeneracy=amb_deg,
                ambient_diameter=float(amb_diam),
                marker_angle=angle,
                fits_in_disc=bool(fits),
                koebe_bound=koebe,
                convexity_ratio=conv_ratio,
                pulled_degeneracy=p_deg,
                pulled_diameter_log10=p_diam_log10,
                shrink_factor_log=shrink_log,
                pulled_offsets=offsets,
            ))
        cert = WiggleCertificate(
            address=address, w0_param=w0_param,
            base_point=complex(base), w0=complex(w[0]),
            levels=tuple(records),
            k_expansion_log=k_exp_log, r_log=model.r_log,
            strict_markers=strict_markers,
        )
    validate_certificate(cert)
    return cert


def _select_markers(model, address, n, w_n, want_side, x_base, strict):
    """Minimal marker offset k_n of the wanted parity right of Re w_n."""
    probe = find_markers(model, address, n, count=8, x_base=x_base,
                         strict_sides=strict)
    re_w = float(w_n.real)
    for mk, mk_next in zip(probe, probe[1:]):
        if mk.column_x <= re_w + math.pi / 8:
            continue
        if strict and mk.side != want_side:
            continue
        return mk, mk_next
    raise MarkerBracketError(
        f"no admissible marker column beyond Re w_n = {re_w:.3f}"
    )


def validate_certificate(cert: WiggleCertificate) -> None:
    levels = cert.levels
    if not levels:
        raise InconsistentCertificateError("certificate has no levels")
    diam_logs = [lv.pulled_diameter_log10 for lv in levels]
    if any(b >= a for a, b in zip(diam_logs, diam_logs[1:])):
        raise InconsistentCertificateError(
            "pulled diameters not strictly decreasing"
        )
    ceiling = koebe_distortion_bound(cert.r_log, 4 * math.pi)
    for lv in levels:
        if lv.koebe_bound > ceiling + 1e-12:
            raise InconsistentCertificateError(
                f"level {lv.n}: koebe bound {lv.koebe_bound:.4f} above the "
                f"r_log ceiling {ceiling:.4f}"
            )
        if not lv.fits_in_disc:
            raise InconsistentCertificateError(
                f"level {lv.n}: triangle leaves D(w_n, 4 pi)"
            )
        if not 0.5 <= lv.pulled_degeneracy <= 1.0:
            raise InconsistentCertificateError(
                f"level {lv.n}: degeneracy {lv.pulled_degeneracy} out of range"
            )
        if lv.pulled_degeneracy > lv.koebe_bound * lv.ambient_degeneracy + 1e-9:
            raise InconsistentCertificateError(
                f"level {lv.n}: pulled degeneracy exceeds the distortion bound"
            )


def nondiff_report(cert: WiggleCertificate) -> dict:
    """Structured summary of a certificate with at least 3 levels.

    States the measured geometric shrinking rate of the pulled triangles
    and the uniform degeneracy margin delta_obs.  This is finite-scale
    evidence: triangles anchored on the hair stay uniformly far from
    collinear while their diameters collapse, which is incompatible with
    a nonzero derivative at the base point down to the certified scale.
    It is not, and cannot be, an infinite-scale proof.
    """
    if len(cert.levels) < 3:
        raise ValueError("a report needs at least 3 certificate levels")
    validate_certificate(cert)
    diam_logs = [lv.pulled_diameter_log10 for lv in cert.levels]
    ns = [lv.n for lv in cert.levels]
    num = len(ns)
    mean_n = sum(ns) / num
    mean_d = sum(diam_logs) / num
    slope = sum((a - mean_n) * (b - mean_d) for a, b in zip(ns, diam_logs)) \
        / sum((a - mean_n) ** 2 for a in ns)
    delta = cert.delta_obs
    return {
        "address": str(cert.address),
        "w0_param": cert.w0_param,
        "levels": len(cert.levels),
        "delta_obs": delta,
        "max_pulled_degeneracy": 1.0 - delta,
        "diameter_log10_per_level": slope,
        "expansion_log10_per_level": -cert.k_expansion_log * LOG10_E,
        "koebe_ceiling": koebe_distortion_bound(cert.r_log, 4 * math.pi),
        "strict_markers": cert.strict_markers,
        "per_level": [
            {
                "n": lv.n,
                "tract": lv.s_n,
                "w_n": [lv.w_n.real, lv.w_n.imag],
                "k_n": lv.k_n,
                "gap_x": lv.gap_x,
                "dy": lv.dy,
                "marker_angle": lv.marker_angle,
                "ambient_degeneracy": lv.ambient_degeneracy,
                "ambient_diameter": lv.ambient_diameter,
                "koebe_bound": lv.koebe_bound,
                "pulled_degeneracy": lv.pulled_degeneracy,
                "pulled_diameter_log10": lv.pulled_diameter_log10,
            }
            for lv in cert.levels
        ],
        "statement": (
            "finite-scale certificate: pulled triangles shrink at the "
            "measured geometric rate while staying uniformly non-degenerate "
            "(degeneracy <= 1 - delta_obs); consistent with, not a proof "
            "of, the absence of a derivative at the base point"
        ),
    }


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def certificate_to_dict(cert: WiggleCertificate) -> dict:
    return {
        "address": str(cert.address),
        "w0_param": cert.w0_param,
        "base_point": [cert.base_point.real, cert.base_point.imag],
        "w0": [cert.w0.real, cert.w0.imag],
        "k_expansion_log": cert.k_expansion_log,
        "r_log": cert.r_log,
        "strict_markers": cert.strict_markers,
        "delta_obs": cert.delta_obs,
        "levels": [
            {
                "n": lv.n,
                "s_n": lv.s_n,
                "w_n": [lv.w_n.real, lv.w_n.imag],
                "k_n": lv.k_n,
                "markers": [
                    {
                        "n": mk.n,
                        "k": mk.k,
                        "column_x": mk.column_x,
                        "point": [float(mk.point.real), float(mk.point.imag)],
                        "side": mk.side,
                    }
                    for mk in lv.markers
                ],
                "gap_x": lv.gap_x,
                "dy": lv.dy,
                "ambient_degeneracy": lv.ambient_degeneracy,
                "ambient_diameter": lv.ambient_diameter,
                "marker_angle": lv.marker_angle,
                "fits_in_disc": lv.fits_in_disc,
                "koebe_bound": lv.koebe_bound,
                "convexity_ratio": lv.convexity_ratio,
                "pulled_degeneracy": lv.pulled_degeneracy,
                "pulled_diameter_log10": lv.pulled_diameter_log10,
                "shrink_factor_log": lv.shrink_factor_log,
                "pulled_offsets": list(lv.pulled_offsets),
            }
            for lv in cert.levels
        ],
    }
