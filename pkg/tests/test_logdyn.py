import math

import mpmath
import numpy as np
import pytest
from mpmath import mp

from sinetract.logdyn import (
    BranchInversionError,
    CalibrationError,
    DisjointTypeModel,
    ExternalAddress,
    OrbitEscapeError,
    TractDomainError,
    calibrate,
    dyn_tract_contains,
    eval_F,
    eval_F_prime,
    inverse_branch,
    model_from_dict,
    model_to_dict,
    orbit,
    pullback_chain,
)
from sinetract.tract import TractSpec, eval_h, eval_h_prime

TWO_PI = 2 * math.pi


class TestExternalAddress:
    def test_parse_forms(self):
        a = ExternalAddress.parse("0,0,(1)")
        assert a.preperiod == (0, 0)
        assert a.period == (1,)
        assert str(a) == "0,0,(1)"
        b = ExternalAddress.parse("(2,-3)")
        assert b.preperiod == ()
        assert b.period == (2, -3)

    def test_entries(self):
        a = ExternalAddress.parse("0,1,(2,3)")
        assert [a.entry(i) for i in range(7)] == [0, 1, 2, 3, 2, 3, 2]
        assert a.prefix(5) == (0, 1, 2, 3, 2)

    def test_shift(self):
        a = ExternalAddress.parse("0,1,(2,3)")
        assert str(a.shift()) == "1,(2,3)"
        assert str(a.shift().shift()) == "(2,3)"
        assert str(a.shift().shift().shift()) == "(3,2)"

    def test_symbol_bound(self):
        with pytest.raises(ValueError):
            ExternalAddress.parse("(9)")
        ExternalAddress.parse("(9)", bound=10)

    def test_bad_syntax(self):
        with pytest.raises(ValueError):
            ExternalAddress.parse("0,0")
        with pytest.raises(ValueError):
            ExternalAddress.parse("()")


class TestCalibration:
    def test_invariants_recorded(self, model):
        v = model.verification
        assert v["containment_log_margin"] > 0
        assert v["tract_min_re_sampled"] > model.r_log
        assert v["tract_tip_analytic"] > model.r_log
        assert v["min_log_abs_f_prime"] >= model.k_expansion_log
        assert v["fixed_point_residual_log10"] < -12
        assert v["fixed_point_multiplier_log10"] < 0

    def test_k_expansion_exceeds_target(self, model):
        assert model.k_expansion_log >= math.log(2.0)

    def test_r_log_constraints(self, model):
        assert model.r_log > 4 * math.pi
        assert TWO_PI / model.r_log < math.sqrt(2) - 1

    def test_rejects_bad_r_log(self):
        with pytest.raises(ValueError):
            DisjointTypeModel(
                spec=TractSpec(), lambda_log2_exponent=100, r_log=10.0,
                k_expansion_log=1.0, fixed_point_re="0", fixed_point_im="0",
            )

    def test_reverification_on_fresh_grid(self, model):
        # re-run the expansion and containment checks with a new seed
        rng = np.random.default_rng(12345)
        spec = model.spec
        log_lam = model.log_minus_log_lambda()
        a, b = spec.linear_coeff, spec.wiggle_coeff
        found = 0
        while found < 200:
            x = rng.uniform(model.r_log, model.r_log + 3)
            y = rng.uniform(-0.8, 0.8)
            ok, _ = dyn_tract_contains(model, complex(x, y))
            if not ok:
                continue
            hv = complex(eval_h(spec, complex(x, y)))
            hp = complex(eval_h_prime(spec, complex(x, y)))
            log_fprime = math.log(abs(hp)) + hv.real
            assert log_fprime >= model.k_expansion_log
            found += 1

    def test_disjoint_type_margin(self, model):
        # every sampled tract point sits beyond r_log: the closed tract
        # array lies in the open half-plane with margin
        rng = np.random.default_rng(77)
        found = 0
        while found < 100:
            x = rng.uniform(model.r_log - 5, model.r_log + 4)
            y = rng.uniform(-0.8, 0.8)
            ok, _ = dyn_tract_contains(model, complex(x, y))
            if ok:
                assert x > model.r_log
                found += 1

    def test_serialization_roundtrip(self, model):
        m2 = model_from_dict(model_to_dict(model))
        assert m2.lambda_log2_exponent == model.lambda_log2_exponent
        assert m2.k_expansion_log == model.k_expansion_log
        assert m2.spec == model.spec
        with mp.workdps(m2.base_dps()):
            w = mpmath.mpc(80.0, 3.0)
            z1 = inverse_branch(model, w, 1).z
            z2 = inverse_branch(m2, w, 1).z
            assert z1 == z2  # identical evaluations after reload

    def test_calibration_failure_reported(self):
        with pytest.raises(CalibrationError):
            calibrate(r_log=50.0, max_exponent=64)


class TestEvalF:
    def test_exp_commutation(self, model):
        # exp(F(z)) = f0(exp z), checked as the log-space identity
        # F(z) + Lambda = exp(h(z - 2 pi i k)) to relative precision; the
        # f_tilde correction is below exp(-Lambda/2)
        with mp.workdps(model.base_dps()):
            lam = model.minus_log_lambda()
            rng = np.random.default_rng(1)
            count = 0
            while count < 100:
                w = mpmath.mpc(rng.uniform(1, 200), rng.uniform(-30, 30))
                if w.real <= 0:
                    continue
                k = rng.integers(-2, 3)
                p = inverse_branch(model, w, int(k))
                val = eval_F(model, p.z, int(k))
                lhs = val + lam
                rhs = mpmath.exp(eval_h(model.spec, p.z - 2j * int(k) * mpmath.pi))
                assert abs(lhs - rhs) / abs(rhs) < mpmath.mpf(10) ** (-mp.dps + 20)
                count += 1

    def test_periodicity(self, model):
        with mp.workdps(model.base_dps()):
            p = inverse_branch(model, mpmath.mpc(90.0, 2.0), 0)
            v0 = eval_F(model, p.z, 0)
            v1 = eval_F(model, p.z + 2j * mpmath.pi, 1)
            # resolution floor: Lambda-size cancellation at working precision
            floor = model.minus_log_lambda() * mpmath.mpf(10) ** (-mp.dps + 20)
            assert abs(v0 - v1) < floor

    def test_domain_error(self, model):
        with mp.workdps(model.base_dps()):
            with pytest.raises(TractDomainError):
                eval_F(model, mpmath.mpc(1.0, 0.0))

    def test_prime_matches_finite_difference(self, model):
        with mp.workdps(model.base_dps() + 20):
            p = inverse_branch(model, mpmath.mpc(120.0, -4.0), 0)
            h_step = mpmath.mpf(10) ** (-40)
            fd = (eval_F(model, p.z + h_step, 0, check_domain=False)
                  - eval_F(model, p.z - h_step, 0, check_domain=False)) / (2 * h_step)
            fp = eval_F_prime(model, p.z, 0)
            assert abs(fd - fp) / abs(fp) < 1e-20

    def test_prime_exceeds_expansion_bound(self, model):
        with mp.workdps(model.base_dps()):
            rng = np.random.default_rng(2)
            for _ in range(20):
                w = mpmath.mpc(rng.uniform(1, 500), rng.uniform(-50, 50))
                p = inverse_branch(model, w, 0)
                fp = eval_F_prime(model, p.z, 0)
                assert mpmath.log(abs(fp)) >= model.k_expansion_log

    def test_prime_periodicity(self, model):
        with mp.workdps(model.base_dps()):
            p = inverse_branch(model, mpmath.mpc(75.0, 1.0), 0)
            a = eval_F_prime(model, p.z, 0)
            b = eval_F_prime(model, p.z + 2j * mpmath.pi, 1)
            assert abs(a - b) < abs(a) * mpmath.mpf(10) ** (-mp.dps + 40)


class TestInverseBranch:
    def test_roundtrip(self, model):
        with mp.workdps(model.base_dps()):
            rng = np.random.default_rng(3)
            for _ in range(10):
                w = mpmath.mpc(rng.uniform(0.5, 300), rng.uniform(-80, 80))
                p = inverse_branch(model, w, 0)
                back = eval_F(model, p.z, 0)
                assert abs(back - w) < 1e-9

    def test_contraction(self, model):
        with mp.workdps(model.base_dps()):
            k_inv = mpmath.exp(-mpmath.mpf(model.k_expansion_log))
            rng = np.random.default_rng(4)
            for _ in range(10):
                w1 = mpmath.mpc(rng.uniform(10, 200), rng.uniform(-20, 20))
                w2 = w1 + mpmath.mpc(rng.uniform(-1, 1), rng.uniform(-1, 1))
                z1 = inverse_branch(model, w1, 0).z
                z2 = inverse_branch(model, w2, 0).z
                assert abs(z1 - z2) <= abs(w1 - w2) * k_inv

    def test_tract_containment_and_disjointness(self, model):
        with mp.workdps(model.base_dps()):
            w = mpmath.mpc(60.0, 5.0)
            zs = {}
            for k in (-2, 0, 3):
                p = inverse_branch(model, w, k)
                ok, idx = dyn_tract_contains(model, p.z)
                assert ok and idx == k
                zs[k] = p.z
            for k1 in zs:
                for k2 in zs:
                    if k1 < k2:
                        gap = abs(zs[k1] - zs[k2])
                        assert gap > TWO_PI * (k2 - k1) - 2.0

    def test_left_half_plane_rejected(self, model):
        with mp.workdps(model.base_dps()):
            with pytest.raises(ValueError):
                inverse_branch(model, mpmath.mpc(-1.0, 0.0), 0)

    def test_symbol_bound_enforced(self, model):
        with mp.workdps(model.base_dps()):
            with pytest.raises(ValueError):
                inverse_branch(model, mpmath.mpc(50.0, 0.0),
                               model.symbol_bound + 1)


class TestOrbit:
    def test_zero_steps(self, model):
        with mp.workdps(model.base_dps()):
            p = inverse_branch(model, mpmath.mpc(70.0, 0.0), 0)
            pts, idx = orbit(model, p, 0)
            assert len(pts) == 1 and idx == []

    def test_recovers_address_prefix(self, model):
        symbols = (0, 2, -1, 0)
        with mp.workdps(model.chain_dps(len(symbols))):
            chain = pullback_chain(model, mpmath.mpc(100.0, 0.0), symbols)
            pts, idx = orbit(model, chain[-1], len(symbols))
            assert tuple(idx) == symbols
            assert abs(pts[-1] - mpmath.mpc(100.0, 0.0)) < 1e-6

    def test_pullback_contraction_by_level(self, model):
        # |phi_n(w) - phi_n(w')| <= |w - w'| K^{-n} for n <= 10
        n = 10
        with mp.workdps(model.chain_dps(n)):
            symbols = tuple(ExternalAddress.parse("(0,1)").prefix(n))
            c1 = pullback_chain(model, mpmath.mpc(100.0, 0.0), symbols)
            c2 = pullback_chain(model, mpmath.mpc(101.0, 0.5), symbols)
            dw = abs(c1[0] - c2[0])
            k_inv_log = -model.k_expansion_log
            for j in range(1, n + 1):
                gap = abs(c1[j] - c2[j])
                assert mpmath.log(gap) <= mpmath.log(dw) + j * k_inv_log + 1e-9

    def test_escape_detection(self, model):
        with mp.workdps(model.base_dps()):
            with pytest.raises(OrbitEscapeError):
                orbit(model, mpmath.mpc(1.0, 0.0), 1)
