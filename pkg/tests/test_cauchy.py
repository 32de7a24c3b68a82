import cmath
import math

import numpy as np
import pytest

from sinetract.cauchy import (
    CauchyEngine,
    EvaluationOnContourError,
    QuadratureConfig,
    SectorDomainError,
    estimate_constants,
    estimate_order,
    eval_g,
    log_log_max_modulus_on_circle,
    log_log_max_modulus_on_circle_strip,
    order_slope_sequence,
    shifted_tip_engine,
)
from sinetract.tract import TractSpec, boundary_point, left_edge_point

EPS = 1e-10


@pytest.fixture(scope="module")
def engine():
    return CauchyEngine.for_tract()


@pytest.fixture(scope="module")
def ps_engine():
    return CauchyEngine.polya_szego()


@pytest.fixture(scope="module")
def constants(engine):
    return estimate_constants(engine)


SPEC = TractSpec()
A = SPEC.linear_coeff
B = SPEC.wiggle_coeff


def exterior_points(n, seed=0):
    """Deterministic sample points away from W (left half-plane biased)."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        z = complex(rng.uniform(-6, 0.2), rng.uniform(-5, 5))
        if abs(z) > 0.05:
            pts.append(z)
    return pts


class TestEvalG:
    def test_g_of_one_is_one(self):
        # Log 1 = 0, h(0) = 0, so g(1) = exp(0) = 1
        fv = eval_g(SPEC, 1.0)
        assert fv.value == 1.0
        assert fv.log_value == 0

    def test_negative_real_on_arm(self, engine):
        # on the boundary arms g lands on the negative real axis
        for t in [1.5, 2.0, -1.6]:
            p = boundary_point(SPEC, t)
            g = engine.model.log_glue(p)
            assert g.real < 0
            assert abs(g.imag) < 1e-6 * abs(g.real)

    def test_modulus_formula(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            r = rng.uniform(0.7, 20)
            th = rng.uniform(-1.0, 1.0)
            z = r * cmath.exp(1j * th)
            try:
                fv = eval_g(SPEC, z)
            except SectorDomainError:
                continue
            expected_log_abs = A * math.log(r) - B * math.cos(
                math.log(r)) * math.sinh(th)
            assert fv.log_value.real == pytest.approx(
                expected_log_abs, rel=1e-12, abs=1e-12
            )

    def test_modulus_bound_on_w(self, engine):
        rng = np.random.default_rng(2)
        found = 0
        cap = 2 * math.pi * math.sinh(math.pi / 3)
        while found < 60:
            z = complex(rng.uniform(-0.4, 3.0), rng.uniform(-0.9, 0.9))
            w = cmath.exp(z)
            if not engine.model.inside(w):
                continue
            fv = eval_g(SPEC, w)
            assert fv.log_value.real <= A * math.log(abs(w)) + cap + 1e-9
            found += 1

    def test_outside_sector_rejected(self):
        with pytest.raises(SectorDomainError):
            eval_g(SPEC, -2.0)
        with pytest.raises(SectorDomainError):
            eval_g(SPEC, 0.1)


class TestFTilde:
    def test_global_bound_on_sample(self, engine, constants):
        bound = (constants.C1 + 6.0 / constants.C2) / (2 * math.pi)
        for z in exterior_points(40):
            fv = engine.f_tilde(z)
            assert abs(fv.value) <= bound

    def test_far_field_decay(self, engine):
        fv = engine.f_tilde(-1e6 + 0j)
        assert abs(fv.value) < 1e-4
        assert abs(fv.value) <= engine.f_tilde_kernel_bound(-1e6 + 0j)

    def test_deformation_consistency(self, engine):
        # near-contour points: the deformed path must match the straight one
        for tau in [0.4, -1.1, 2.2]:
            p = complex(left_edge_point(SPEC, tau))
            z = p * (1 + 0.04 / abs(p))
            d = engine.dist_to_contour(z)
            assert d < engine.config.kappa
            deformed = engine.f_tilde(z)
            straight, _ = engine._kernel_integral(
                engine.model.pieces, z, 1, engine.config.eps
            )
            assert abs(deformed.value - straight) < 2 * EPS

    def test_on_contour_needs_side(self, engine):
        p = complex(left_edge_point(SPEC, 0.0))
        with pytest.raises(EvaluationOnContourError):
            engine.f_tilde(p)

    def test_truncation_stability(self):
        cfg = QuadratureConfig()
        eng1 = CauchyEngine.for_tract(config=cfg)
        t2 = 2.0 * eng1.model.t_truncate
        eng2 = CauchyEngine.for_tract(
            config=QuadratureConfig(t_truncate=t2)
        )
        for z in exterior_points(10, seed=3):
            a = eng1.f_tilde(z).value
            b = eng2.f_tilde(z).value
            assert abs(a - b) < EPS

    def test_tolerance_refinement(self):
        eng1 = CauchyEngine.for_tract()
        eng2 = CauchyEngine.for_tract(config=QuadratureConfig(eps=1e-12))
        for z in exterior_points(10, seed=4):
            assert abs(eng1.f_tilde(z).value - eng2.f_tilde(z).value) < EPS


class TestGluedFunction:
    def test_continuity_across_boundary(self, engine):
        # one-sided limits of the glued function agree on the contour
        for tau in np.linspace(-2.8, 2.8, 8):
            p = complex(left_edge_point(SPEC, float(tau)))
            fV = engine.f(p, limit_from="V")
            fW = engine.f(p, limit_from="W")
            assert abs(fV.value - fW.value) < 10 * EPS

    def test_jump_is_the_glue(self, engine):
        # Plemelj: f_tilde jumps by exactly exp(g) across the contour
        for tau in [0.0, 1.5, -2.4]:
            p = complex(left_edge_point(SPEC, float(tau)))
            jump = (
                engine.f_tilde(p, limit_from="V").value
                - engine.f_tilde(p, limit_from="W").value
            )
            assert abs(jump - cmath.exp(engine.model.log_glue(p))) < 10 * EPS

    def test_offsets_converge_to_limit(self, engine):
        p = complex(left_edge_point(SPEC, 0.9))
        zlog = np.log(p)
        from sinetract.tract import eval_h_prime
        normal = 1j * p / abs(p)  # radial-ish transversal direction
        limit = engine.f(p, limit_from="V").value
        gaps = []
        for delta in [1e-2, 1e-3, 1e-4]:
            z = p + delta * normal
            fv = engine.f(z)
            gaps.append(abs(fv.value - limit))
        assert gaps[2] < gaps[0]
        # the approach is linear at rate |f'(p)|
        fp = abs(engine.f_prime(p, limit_from="V").value)
        assert gaps[2] <= 3 * fp * 1e-4 + 10 * EPS

    def test_bounded_on_exterior(self, engine, constants):
        for z in exterior_points(30, seed=5):
            fv = engine.f(z)
            assert abs(fv.value) <= constants.C3

    def test_log_space_deep_in_tract(self, engine, constants):
        # centerline point at x = 3: solve Im h = 0 for y, where Re g = e^{Re h}
        x = 3.0
        y = 0.0
        for _ in range(50):
            y = -(B / A) * math.sin(x) * math.cosh(y)
        z = cmath.exp(complex(x, y))
        assert engine.model.inside(z)
        fv = engine.f(z)
        g = engine.model.log_glue(z)
        assert g.real > 700
        assert fv.log_value is not None
        assert abs(fv.log_value - g) <= constants.C3 * math.exp(-700) + EPS

    def test_value_log_consistency(self, engine):
        for z in [-2.0 + 1j, 1.02 + 0.03j, -0.5 - 2j]:
            fv = engine.f(z)
            if fv.log_value is None or not math.isfinite(abs(fv.value)):
                continue
            assert abs(cmath.exp(fv.log_value) - fv.value) <= max(
                2 * fv.abs_error, 1e-14 * abs(fv.value)
            )

    def test_contour_shift_consistency(self, engine):
        rng = np.random.default_rng(6)
        for alpha in (1.0, 2.0):
            shifted = shifted_tip_engine(engine, alpha)
            n = 0
            while n < 8:
                z = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
                if (
                    engine.dist_to_contour(z) < 1e-6
                    or shifted.dist_to_contour(z) < 1e-6
                ):
                    continue
                a = engine.f(z)
                b = shifted.f(z)
                if not (math.isfinite(abs(a.value)) and math.isfinite(abs(b.value))):
                    n += 1
                    continue
                assert abs(a.value - b.value) < 2 * EPS
                n += 1
            # a lens point: inside the default region, outside the shifted one
            zl = cmath.exp(0.05 + 0j)
            assert engine.model.inside(zl) != shifted.model.inside(zl)
            assert abs(engine.f(zl).value - shifted.f(zl).value) < 2 * EPS


class TestDerivative:
    def test_finite_differences_exterior(self, engine):
        h = 1e-4
        for z in [-1.5 + 0.8j, -3.0 - 1.0j, 0.2 + 2.0j]:
            fd = (engine.f(z + h).value - engine.f(z - h).value) / (2 * h)
            fp = engine.f_prime(z)
            assert abs(fp.value - fd) < 1e-5

    def test_f_tilde_prime_bound(self, engine, constants):
        bound = constants.C3 / engine.config.kappa
        for z in exterior_points(20, seed=7):
            fv = engine.f_tilde(z, power=2)
            assert abs(fv.value) <= bound

    def test_g_prime_lower_bound(self, engine):
        # |g'(z)| >= (a/2) e^{-3 pi} |z|^{a-1} on W samples with |z| >= 2
        rng = np.random.default_rng(8)
        found = 0
        while found < 40:
            z = complex(rng.uniform(0.7, 3.0), rng.uniform(-0.8, 0.8))
            w = cmath.exp(z)
            if abs(w) < 2 or not engine.model.inside(w):
                continue
            gp = engine.model.glue_log_deriv(w)
            floor = (A / 2) * math.exp(-3 * math.pi) * abs(w) ** (A - 1)
            assert abs(gp) >= floor
            assert abs(gp) >= 1.0
            found += 1

    def test_critical_values_bounded(self, engine, constants):
        # search for zeros of f' in the W band at moderate radius; any
        # critical value found must obey |f| <= C3 + C3/kappa
        rng = np.random.default_rng(9)
        bound = constants.C3 + constants.C3 / engine.config.kappa
        found = 0
        for _ in range(6):
            x = rng.uniform(0.75, 1.1)
            y = rng.uniform(-0.2, 0.2)
            z = cmath.exp(complex(x, y))
            if not engine.model.inside(z):
                continue
            # a few secant steps on f'
            z0, z1 = z, z * (1 + 1e-3)
            f0 = engine.f_prime(z0).value
            f1 = engine.f_prime(z1).value
            for _ in range(12):
                if f1 == f0:
                    break
                z2 = z1 - f1 * (z1 - z0) / (f1 - f0)
                if not engine.model.inside(z2) or abs(z2 - z1) > 1.0:
                    break
                z0, f0 = z1, f1
                z1 = z2
                f1 = engine.f_prime(z1).value
                if abs(f1) < 1e-6:
                    break
            if abs(f1) < 1e-3 and engine.model.inside(z1):
                fv = engine.f(z1)
                if math.isfinite(abs(fv.value)):
                    assert abs(fv.value) <= bound + EPS
                    found += 1
        # the search is best-effort; the assertion above ran when found > 0


class TestPolyaSzegoOracle:
    def test_bounded_difference_inside(self, ps_engine):
        bound = ps_engine.f_tilde_global_bound()
        rng = np.random.default_rng(10)
        for _ in range(25):
            z = complex(rng.uniform(0.2, 5.0), rng.uniform(-2.9, 2.9))
            fv = ps_engine.f(z)
            diff = fv.value - cmath.exp(cmath.exp(z))
            assert abs(diff) <= bound

    def test_bounded_outside(self, ps_engine):
        bound = ps_engine.f_tilde_global_bound()
        for z in [-3.0 + 0j, -1.0 + 4j, 2.0 + 4.0j, -5.0 - 2j]:
            assert abs(ps_engine.f(z).value) <= bound

    def test_continuity_across_strip_boundary(self, ps_engine):
        for p in [1.5 + 1j * math.pi, 2j, 0.7 - 1j * math.pi, 1j * math.pi]:
            fV = ps_engine.f(p, limit_from="V")
            fW = ps_engine.f(p, limit_from="W")
            assert abs(fV.value - fW.value) < 10 * EPS

    def test_conjugation_symmetry(self, ps_engine):
        # the half-strip construction is conjugation-symmetric exactly
        for z in [1.3 + 0.8j, -2.0 + 1.5j, 0.5 - 2.5j]:
            a = ps_engine.f(z).value
            b = ps_engine.f(z.conjugate()).value
            assert abs(b - a.conjugate()) < 10 * EPS


class TestTractConjugation:
    def test_asymmetry_is_measured_not_assumed(self, engine):
        # the wiggled tract is NOT conjugation-symmetric; record the fact
        z = 1.05 + 0.08j
        a = engine.f(z).value
        b = engine.f(z.conjugate()).value
        asym = abs(b - a.conjugate())
        # the asymmetry is a real feature (order 1 near the tip), far above
        # quadrature error; nothing downstream assumes the symmetry
        assert asym > 1e-6


class TestConstants:
    def test_c2_closed_form(self, constants):
        expected = math.exp(-2 * math.pi * math.sinh(math.pi / 3))
        assert constants.C2 == pytest.approx(expected, rel=1e-15)
        assert constants.C2 == pytest.approx(3.897501383222419e-04, rel=1e-9)

    def test_c1_finite_nonnegative(self, constants):
        assert 0 <= constants.C1 < math.inf

    def test_c3_consistency(self, constants):
        assert constants.C3 >= (constants.C1 + 6 / constants.C2) / (2 * math.pi)

    def test_order_bound(self, constants):
        assert constants.order_bound == pytest.approx(5 * math.pi)

    def test_kappa_tube_conditions(self, engine):
        rep = engine.kappa_report
        assert rep["sector_ok"]
        assert rep["max_re_g_on_tube"] <= 3.0


class TestOrderEstimate:
    def test_tract_order_in_range(self):
        radii = [math.exp(3), math.exp(5), math.exp(8), math.exp(13)]
        llm = [log_log_max_modulus_on_circle(SPEC, r) for r in radii]
        est = estimate_order(radii, llm)
        assert 4.5 * math.pi <= est <= 5 * math.pi + 0.5

    def test_strip_flags_infinite_order(self):
        radii = [3.0, 6.0, 12.0, 24.0]
        llm = [log_log_max_modulus_on_circle_strip(r) for r in radii]
        slopes = order_slope_sequence(radii, llm)
        assert all(b > a for a, b in zip(slopes, slopes[1:]))

    def test_constant_stub(self):
        assert estimate_order([3, 5, 8], [-1.0, -1.0, -1.0]) == 0.0

    def test_insufficient_data(self):
        from sinetract.cauchy import InsufficientDataError

        with pytest.raises(InsufficientDataError):
            estimate_order([3, 5], [1.0, 2.0])
