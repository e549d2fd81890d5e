import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpjacobi.errors import AllDegenerate, DegenerateSymbol, PoleProximity
from qpjacobi.symbols import (
    BlockModel,
    Dioph,
    MeroScalar,
    TrigPoly,
    check_nondegeneracy,
    eval_mero,
    eval_trig,
    is_diophantine,
    locate_zeros,
    regularizer_diag,
)

from conftest import GOLDEN, random_trig


def tan_symbol():
    return MeroScalar.from_ratio(TrigPoly.sine(), TrigPoly.cosine())


class TestTrigPoly:
    def test_constant(self):
        p = TrigPoly.constant(1.0)
        assert eval_trig(p, 0.37) == pytest.approx(1.0, abs=1e-15)

    def test_cosine_values(self):
        p = TrigPoly.cosine()
        assert p(0.0) == pytest.approx(1.0, abs=1e-15)
        assert p(1.0 / 6.0) == pytest.approx(0.5, abs=1e-15)

    @given(
        st.dictionaries(
            st.integers(-4, 4),
            st.tuples(st.floats(-2, 2), st.floats(-2, 2)).map(lambda t: complex(*t)),
            max_size=6,
        ),
        st.floats(0, 1, exclude_max=True),
    )
    def test_hermitian_symmetrization_gives_real_values(self, raw, x):
        p = TrigPoly(raw)
        for k, c in p.items():
            assert p.coeff(-k) == c.conjugate()
        assert abs(complex(p.eval_complex(x)).imag) < 1e-12

    def test_product_matches_pointwise(self):
        rng = np.random.default_rng(7)
        a = random_trig(rng, 3)
        b = random_trig(rng, 2)
        prod = a * b
        xs = rng.uniform(size=20)
        assert np.allclose(prod(xs), a(xs) * b(xs), atol=1e-12)

    def test_double_angle_identity(self):
        # sin * cos = sin(double frequency) / 2
        prod = TrigPoly.sine() * TrigPoly.cosine()
        half_double = TrigPoly.sine(k=2, amp=0.5)
        assert prod == half_double

    def test_vectorized_eval(self):
        p = TrigPoly.cosine()
        xs = np.array([0.0, 1.0 / 6.0, 0.25])
        assert np.allclose(p(xs), [1.0, 0.5, 0.0], atol=1e-12)


class TestMeroScalar:
    def test_tan_values(self):
        t = tan_symbol()
        assert eval_mero(t, 1.0 / 8.0) == pytest.approx(1.0, abs=1e-12)
        assert eval_mero(t, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_tan_pole(self):
        with pytest.raises(PoleProximity):
            eval_mero(tan_symbol(), 0.25)

    def test_zero_denominator_rejected(self):
        with pytest.raises(DegenerateSymbol):
            MeroScalar.from_ratio(TrigPoly.sine(), TrigPoly.zero())

    def test_pole_guard_matches_denominator_magnitude(self):
        t = tan_symbol()
        for x in np.linspace(0.2, 0.3, 41):
            d = abs(t.den(x))
            if d < t.pole_tol:
                with pytest.raises(PoleProximity):
                    t(float(x))
            else:
                t(float(x))


class TestLocateZeros:
    def test_cosine_zeros(self):
        zeros = locate_zeros(TrigPoly.cosine())
        assert len(zeros) == 2
        assert zeros[0] == pytest.approx(0.25, abs=1e-9)
        assert zeros[1] == pytest.approx(0.75, abs=1e-9)
        den = TrigPoly.cosine()
        assert all(abs(den(z)) <= 1e-10 for z in zeros)

    def test_constant_has_no_zeros(self):
        assert locate_zeros(TrigPoly.constant(1.0)) == ()

    def test_zero_symbol_rejected(self):
        with pytest.raises(DegenerateSymbol):
            locate_zeros(TrigPoly.zero())

    @pytest.mark.parametrize("seed", [3, 11, 42])
    def test_against_fine_grid_scan(self, seed):
        rng = np.random.default_rng(seed)
        den = random_trig(rng, 3) + TrigPoly.cosine(k=3)
        zeros = locate_zeros(den)
        # brute-force oracle: sign changes on a million-point grid
        xs = np.arange(1_000_000) / 1_000_000
        vals = den(xs)
        flips = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
        oracle = (xs[flips] + xs[flips + 1]) / 2.0
        if vals[-1] * vals[0] < 0:
            oracle = np.append(oracle, (xs[-1] + 1.0) / 2.0 % 1.0)
        assert len(zeros) == len(oracle)
        for z in zeros:
            gap = np.min(np.minimum(np.abs(oracle - z), 1.0 - np.abs(oracle - z)))
            assert gap < 2e-6


class TestDiophantine:
    def test_golden_ratio_passes(self):
        chk = is_diophantine(GOLDEN, 2.0, 0.1, 10_000)
        assert chk.ok

    def test_rational_fails_at_denominator(self):
        chk = is_diophantine(1.0 / 3.0, 2.0, 0.1, 100)
        assert not chk.ok
        assert chk.worst_k == 3

    def test_zero_rotation_fails_immediately(self):
        chk = is_diophantine(0.0, 2.0, 0.1, 100)
        assert not chk.ok
        assert chk.worst_k == 1

    @given(
        st.floats(0.01, 0.99),
        st.floats(1.5, 3.0),
        st.floats(0.01, 0.5),
        st.floats(0.1, 0.99),
    )
    @settings(max_examples=30)
    def test_monotone_in_c0(self, omega, A, c0, shrink):
        big = is_diophantine(omega, A, c0, 200)
        small = is_diophantine(omega, A, c0 * shrink, 200)
        if big.ok:
            assert small.ok


def _denominator_model():
    # F denominators (cos, 1), R denominators (1, cos)
    one = TrigPoly.constant(1.0)
    zero = TrigPoly.zero()
    f0 = MeroScalar.from_ratio(TrigPoly.sine(), TrigPoly.cosine())
    f1 = MeroScalar.analytic(TrigPoly.sine())
    r0 = MeroScalar.analytic(TrigPoly.zero())
    r1 = MeroScalar.from_ratio(TrigPoly.zero(), TrigPoly.cosine())
    return BlockModel(
        l=2,
        W=[[one, zero], [zero, one]],
        R=[[r0, zero], [zero, r1]],
        F=[[f0, zero], [zero, f1]],
        omega=GOLDEN,
        dioph=Dioph(2.0, 0.1),
    )


class TestRegularizerDiag:
    def test_maryland_values(self, maryland):
        assert np.allclose(regularizer_diag(maryland, 0.0), [[1.0]], atol=1e-15)
        assert np.allclose(regularizer_diag(maryland, 0.25), [[0.0]], atol=1e-12)

    def test_block_denominator_products(self):
        m = _denominator_model()
        d = regularizer_diag(m, 1.0 / 6.0)
        assert np.allclose(np.diag(d), [0.5, 0.5], atol=1e-12)
        assert np.allclose(d, np.diag(np.diag(d)))

    def test_product_of_diagonal_evaluations(self, mero2):
        rng = np.random.default_rng(5)
        for x in rng.uniform(size=100):
            got = np.diag(regularizer_diag(mero2, x))
            want = [
                mero2.F[i][i].den(x) * mero2.R[i][i].den(x) for i in range(mero2.l)
            ]
            assert np.max(np.abs(got - np.array(want))) <= 1e-14


class TestNondegeneracy:
    def test_maryland_witnesses(self, maryland):
        xs = np.arange(4096) / 4096
        rep = check_nondegeneracy(maryland, [-1.0, 0.0, 1.0], xs)
        assert rep.ok
        assert all(x is not None for _, x, _ in rep.witnesses)

    def test_constant_multiple_of_identity_degenerates(self):
        t0 = 0.8
        f = MeroScalar.analytic(TrigPoly.constant(t0))
        r = MeroScalar.analytic(TrigPoly.zero())
        model = BlockModel(
            l=1, W=[[TrigPoly.constant(1.0)]], R=[[r]], F=[[f]],
            omega=GOLDEN, dioph=Dioph(2.0, 0.1),
        )
        xs = np.arange(512) / 512
        with pytest.raises(AllDegenerate) as err:
            check_nondegeneracy(model, [t0], xs)
        assert err.value.failed == (t0,)
        # other t values pass
        assert check_nondegeneracy(model, [t0 + 0.5], xs).ok

    def test_agrees_with_dense_scan(self):
        rng = np.random.default_rng(17)
        from conftest import random_model

        model = random_model(rng, l=2, mero=True)
        ts = [-1.0, 0.0, 1.0]
        coarse = check_nondegeneracy(model, ts, np.arange(1024) / 1024)
        dense = check_nondegeneracy(model, ts, np.arange(100_000) / 100_000)
        assert coarse.ok == dense.ok
