import json
import math

import mpmath
import pytest
from mpmath import mp

from sinetract.hairs import (
    InconsistentCertificateError,
    MarkerBracketError,
    build_certificate,
    certificate_to_dict,
    endpoint_of_level,
    find_markers,
    nondiff_report,
    trace_hair,
    x_base_default,
)
from sinetract.logdyn import (
    ExternalAddress,
    eval_F,
    orbit,
    pullback_chain,
)

TWO_PI = 2 * math.pi
LOG10_E = math.log10(math.e)

ADDR0 = ExternalAddress.parse("(0)")
ADDR1 = ExternalAddress.parse("(1)")
ADDR_MIX = ExternalAddress.parse("0,1,(2)")


@pytest.fixture(scope="module")
def cert6(model):
    return build_certificate(model, ADDR0, w0_param=0.0, levels=6)


class TestTrace:
    def test_sample_count_and_order(self, model):
        grid = [0.0, 5.0, 12.0, 30.0]
        hp = trace_hair(model, ADDR0, depth=2, base_params=grid)
        assert len(hp.samples) == len(grid)
        assert [s.param for s in hp.samples] == grid
        assert all(s.depth == 2 for s in hp.samples)

    def test_error_bound_decays_with_depth(self, model):
        errs = []
        for d in (1, 2, 3):
            hp = trace_hair(model, ADDR0, depth=d, base_params=[0.0])
            errs.append(hp.samples[0].err_log10)
        drop = model.k_expansion_log * LOG10_E
        assert errs[1] - errs[0] == pytest.approx(-drop, rel=1e-9)
        assert errs[2] - errs[1] == pytest.approx(-drop, rel=1e-9)

    def test_successive_depth_contraction(self, model):
        # measured contraction of the endpoint refinements vs the bound
        x0 = x_base_default(model)
        with mp.workdps(model.chain_dps(4)):
            pts = [
                pullback_chain(model, mpmath.mpc(x0, 0.0), ADDR0.prefix(d))[-1]
                for d in (1, 2, 3, 4)
            ]
            gaps = [abs(a - b) for a, b in zip(pts, pts[1:])]
            bound_log = -model.k_expansion_log + math.log(1.05)
            for g0, g1 in zip(gaps, gaps[1:]):
                assert mpmath.log(g1) - mpmath.log(g0) <= bound_log

    def test_orbit_recovers_address(self, model):
        hp = trace_hair(model, ADDR_MIX, depth=4, base_params=[0.0, 8.0],
                        validate_orbit=True)
        assert len(hp.samples) == 2

    def test_forward_iteration_returns_to_ray(self, model):
        # pushing a depth-d sample forward d times recovers base + t; the
        # real parts of successive pullbacks then increase toward the ray
        d = 3
        t = 7.0
        hp = trace_hair(model, ADDR0, depth=d, base_params=[t])
        with mp.workdps(model.chain_dps(d)):
            pts, _ = orbit(model, hp.samples[0].point, d)
            assert abs(pts[-1] - mpmath.mpc(hp.x_base + t, 0)) < 1e-6
            res = [float(p.real) for p in pts]
            assert res[-1] > res[0]

    def test_endpoint_limit(self, model):
        hp = trace_hair(model, ADDR0, depth=3, base_params=[0.0])
        assert hp.endpoint_err_log10 < -100
        # the endpoint attracts the deep samples
        with mp.workdps(model.chain_dps(3)):
            gap = abs(hp.samples[0].point - hp.endpoint)
            assert float(mpmath.log10(gap)) < -300

    def test_hair_disjointness(self, model):
        hp0 = trace_hair(model, ADDR0, depth=2, base_params=[0.0, 10.0])
        hp1 = trace_hair(model, ADDR1, depth=2, base_params=[0.0, 10.0])
        with mp.workdps(model.base_dps()):
            min_gap = min(
                abs(a.point - b.point)
                for a in hp0.samples
                for b in hp1.samples
            )
        # different first symbol: tracts are 2 pi apart; errors are 1e-600
        assert float(min_gap) > TWO_PI - 1.7
        assert hp0.samples[0].err_log10 + hp1.samples[0].err_log10 < -1000

    def test_exp_image_escapes(self, model):
        # the exp-image of a trace lies in the escaping set: the orbit's
        # log-moduli log|f0^j(exp z)| = Re w_j exceed r_log immediately
        hp = trace_hair(model, ADDR0, depth=3, base_params=[0.0])
        with mp.workdps(model.chain_dps(3)):
            pts, _ = orbit(model, hp.samples[0].point, 3)
            for w in pts[1:]:
                assert float(w.real) > model.r_log

    def test_shift_consistency(self, model):
        # trace of the shifted address at depth d = F of the trace at d+1
        d = 2
        x0 = x_base_default(model)
        with mp.workdps(model.chain_dps(d + 1)):
            deep = pullback_chain(model, mpmath.mpc(x0, 0.0),
                                  ADDR_MIX.prefix(d + 1))[-1]
            shifted = pullback_chain(model, mpmath.mpc(x0, 0.0),
                                     ADDR_MIX.shift().prefix(d))[-1]
            pushed = eval_F(model, deep, ADDR_MIX.entry(0))
            assert abs(pushed - shifted) < 1e-6


class TestMarkers:
    def test_side_invariants(self, model):
        for n in (1, 2):
            mks = find_markers(model, ADDR0, n=n, count=6)
            for mk in mks:
                rel = float(mk.point.imag) - TWO_PI * ADDR0.entry(n)
                if mk.side < 0:
                    assert rel < -0.2
                else:
                    assert rel > 0.2

    def test_spacing_exactly_pi(self, model):
        mks = find_markers(model, ADDR0, n=1, count=5)
        for a, b in zip(mks, mks[1:]):
            assert float(b.point.real - a.point.real) == pytest.approx(
                math.pi, abs=1e-9
            )

    def test_markers_in_other_tract(self, model):
        mks = find_markers(model, ADDR1, n=1, count=2)
        for mk in mks:
            assert abs(float(mk.point.imag) - TWO_PI) < 0.9

    def test_marker_is_on_hair_probe(self, model):
        # the defining property: F(marker) is on the positive real axis
        # (the probe ray), far to the right
        mks = find_markers(model, ADDR0, n=1, count=2)
        with mp.workdps(model.base_dps() + 40):
            for mk in mks:
                w = eval_F(model, mk.point, ADDR0.entry(1))
                # compare in logs: the image sits near exp(a * column)
                assert mpmath.log(w.real) > model.spec.linear_coeff * (
                    mk.column_x - 1
                )
                assert abs(float(mpmath.arg(w))) < 1e-12

    def test_anchor_right_of_endpoint(self, model):
        endpoint, _ = endpoint_of_level(model, ADDR0, 1)
        mks = find_markers(model, ADDR0, n=1, count=1)
        assert mks[0].column_x > float(endpoint.real)

    def test_control_has_no_strict_markers(self, control_model):
        with pytest.raises(MarkerBracketError):
            find_markers(control_model, ADDR0, n=1, count=2,
                         strict_sides=True)


class TestCertificate:
    def test_level_count_and_monotone_diameters(self, cert6):
        assert len(cert6.levels) == 6
        logs = [lv.pulled_diameter_log10 for lv in cert6.levels]
        assert all(b < a for a, b in zip(logs, logs[1:]))

    def test_degeneracy_margin(self, cert6):
        assert cert6.delta_obs > 0
        for lv in cert6.levels:
            assert 0.5 <= lv.pulled_degeneracy <= 1 - cert6.delta_obs + 1e-12

    def test_koebe_ceiling(self, cert6, model):
        from sinetract.geometry import koebe_distortion_bound

        ceiling = koebe_distortion_bound(model.r_log, 4 * math.pi)
        for lv in cert6.levels:
            assert lv.koebe_bound <= ceiling
            assert lv.pulled_degeneracy <= lv.koebe_bound * lv.ambient_degeneracy

    def test_distortion_bound_formula(self, cert6):
        # the koebe bound per level uses R_n = Re w_n
        from sinetract.geometry import koebe_distortion_bound

        for lv in cert6.levels:
            expected = koebe_distortion_bound(lv.w_n.real, 4 * math.pi)
            assert lv.koebe_bound == pytest.approx(expected, rel=1e-12)

    def test_shrink_factor(self, cert6, model):
        # per-level geometric-mean shrink >= K_expansion - 0.1
        k_log = model.k_expansion_log
        for lv in cert6.levels:
            # shrink >= K - 0.1 compared in logs (K is astronomically large)
            assert lv.shrink_factor_log >= k_log + math.log1p(
                -0.1 * math.exp(-k_log)
            ) - 1e-9

    def test_triangle_geometry(self, cert6):
        for lv in cert6.levels:
            assert lv.fits_in_disc
            assert math.pi / 2 < lv.marker_angle < 19 * math.pi / 20
            assert 0.2 < abs(lv.dy) < 1.5
            assert lv.gap_x > math.pi / 8
            assert lv.convexity_ratio < math.sqrt(2) - 1

    def test_soundness_pushforward(self, cert6, model):
        # pulled vertices pushed forward n steps return to their markers
        lv = cert6.levels[3]
        n = lv.n
        with mp.workdps(model.chain_dps(len(cert6.levels) + 1)):
            addr = cert6.address
            w_n = mpmath.mpc(lv.w_n)
            pulled = [
                pullback_chain(model, v, addr.prefix(n))[-1]
                for v in (w_n, lv.markers[0].point, lv.markers[1].point)
            ]
            for src, tgt in zip(pulled, (w_n, lv.markers[0].point,
                                         lv.markers[1].point)):
                pts, _ = orbit(model, src, n)
                assert abs(pts[-1] - tgt) < 1e-6

    def test_orbit_depth(self, cert6, model):
        for lv in cert6.levels:
            assert lv.w_n.real > 4 * math.pi
            assert lv.w_n.real > model.r_log

    def test_deterministic(self, model):
        c1 = build_certificate(model, ADDR1, w0_param=3.0, levels=2)
        c2 = build_certificate(model, ADDR1, w0_param=3.0, levels=2)
        assert certificate_to_dict(c1) == certificate_to_dict(c2)

    def test_serializable(self, cert6):
        blob = json.dumps(certificate_to_dict(cert6), sort_keys=True)
        assert "pulled_degeneracy" in blob

    def test_control_degenerates(self, control_model):
        cert = build_certificate(control_model, ADDR0, w0_param=0.0,
                                 levels=6, strict_markers=False)
        assert cert.levels[-1].pulled_degeneracy >= 0.99

    def test_validation_catches_tampering(self, cert6):
        import dataclasses

        bad_level = dataclasses.replace(cert6.levels[0], pulled_degeneracy=1.4)
        bad = dataclasses.replace(cert6, levels=(bad_level,) + cert6.levels[1:])
        with pytest.raises(InconsistentCertificateError):
            nondiff_report(bad)


class TestReport:
    def test_fields(self, cert6):
        rep = nondiff_report(cert6)
        assert rep["delta_obs"] > 0
        assert rep["levels"] == 6
        assert len(rep["per_level"]) == 6
        assert rep["diameter_log10_per_level"] < -300
        assert "finite-scale" in rep["statement"]

    def test_requires_three_levels(self, model):
        cert = build_certificate(model, ADDR0, w0_param=0.0, levels=1)
        with pytest.raises(ValueError):
            nondiff_report(cert)
