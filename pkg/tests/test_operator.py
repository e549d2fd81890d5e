import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpjacobi.errors import PoleProximity
from qpjacobi.operator import (
    BlockTridiagonal,
    OperatorParams,
    assemble_hamiltonian,
    assemble_regularized,
    hopping_sup_bound,
    index_split,
    onsite_sup_bound,
    row_prefactors,
)
from qpjacobi.symbols import regularizer_diag

from conftest import GOLDEN, atomic_maryland, pole_free_x, random_model


class TestParams:
    def test_zero_coupling_allowed(self):
        OperatorParams(lam=0.0, x=0.0, E=0.0, window=(1, 4))

    def test_negative_coupling_rejected(self):
        with pytest.raises(ValueError):
            OperatorParams(lam=-1.0, x=0.0, E=0.0, window=(1, 4))

    def test_reversed_window_rejected(self):
        with pytest.raises(ValueError):
            OperatorParams(lam=1.0, x=0.0, E=0.0, window=(3, 1))


class TestIndexSplit:
    @pytest.mark.parametrize("alpha,l,expect", [(1, 3, (0, 1)), (3, 3, (0, 3)), (4, 3, (1, 1))])
    def test_examples(self, alpha, l, expect):
        assert index_split(alpha, l) == expect

    @given(st.integers(1, 500), st.integers(1, 8))
    def test_round_trip(self, alpha, l):
        p, q = index_split(alpha, l)
        assert 1 <= q <= l
        assert p * l + q == alpha

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            index_split(0, 2)
        with pytest.raises(IndexError):
            index_split(7, 2, n_sites=3)


class TestAssembleHamiltonian:
    def test_maryland_window(self, maryland):
        params = OperatorParams(lam=2.0, x=0.0, E=0.0, window=(1, 3))
        h = assemble_hamiltonian(maryland, params)
        expect = [2.0 * math.tan(2.0 * math.pi * ((n * GOLDEN) % 1.0)) for n in (1, 2, 3)]
        assert np.allclose(h.diag.ravel(), expect, rtol=1e-12)
        assert np.allclose(h.upper.ravel(), [-1.0, -1.0])
        assert np.allclose(h.lower.ravel(), [-1.0, -1.0])

    def test_zero_coupling_is_block_diagonal(self, maryland):
        model = atomic_maryland(maryland)
        params = OperatorParams(lam=2.0, x=0.1, E=0.0, window=(1, 5))
        dense = assemble_hamiltonian(model, params).to_dense()
        assert np.allclose(dense, np.diag(np.diag(dense)))

    def test_dense_symmetry(self):
        rng = np.random.default_rng(23)
        model = random_model(rng, l=2)
        x = pole_free_x(model, rng, (1, 4))
        dense = assemble_hamiltonian(
            model, OperatorParams(lam=1.3, x=x, E=0.0, window=(1, 4))
        ).to_dense()
        assert np.max(np.abs(dense - dense.T)) <= 1e-14 * max(1.0, np.max(np.abs(dense)))

    def test_translation_covariance_exact_arithmetic(self, maryland):
        # dyadic rotation and base phase make both phase paths bitwise equal,
        # isolating the indexing structure from float rounding
        model = maryland.with_omega(0.375)
        x = 13.0 / 128.0
        a = assemble_hamiltonian(model, OperatorParams(lam=2.0, x=x, E=0.0, window=(2, 6)))
        b = assemble_hamiltonian(
            model, OperatorParams(lam=2.0, x=x + 0.375, E=0.0, window=(1, 5))
        )
        assert np.array_equal(a.diag, b.diag)
        assert np.array_equal(a.upper, b.upper)
        assert np.array_equal(a.lower, b.lower)

    def test_translation_covariance_generic(self, mero2):
        rng = np.random.default_rng(3)
        x = pole_free_x(mero2, rng, (1, 6), margin=0.05)
        a = assemble_hamiltonian(mero2, OperatorParams(lam=2.0, x=x, E=0.0, window=(2, 6)))
        b = assemble_hamiltonian(
            mero2, OperatorParams(lam=2.0, x=x + mero2.omega, E=0.0, window=(1, 5))
        )
        scale = max(1.0, np.max(np.abs(a.diag)))
        assert np.max(np.abs(a.diag - b.diag)) <= 1e-12 * scale
        assert np.max(np.abs(a.upper - b.upper)) <= 1e-12 * scale

    def test_pole_reports_site(self, maryland):
        # site 2 lands exactly on the cosine zero
        x = (0.25 - 2.0 * GOLDEN) % 1.0
        with pytest.raises(PoleProximity) as err:
            assemble_hamiltonian(maryland, OperatorParams(lam=1.0, x=x, E=0.0, window=(1, 3)))
        assert err.value.site == 2


class TestAssembleRegularized:
    def test_single_site_value(self, maryland):
        ht = assemble_regularized(
            maryland, OperatorParams(lam=1.0, x=0.0, E=0.0, window=(1, 1))
        )
        assert ht.diag[0, 0, 0] == pytest.approx(math.sin(2.0 * math.pi * GOLDEN), abs=1e-15)

    def test_zero_energy_matches_h_times_m(self, maryland):
        rng = np.random.default_rng(11)
        x = pole_free_x(maryland, rng, (1, 5))
        params = OperatorParams(lam=2.0, x=x, E=0.0, window=(1, 5))
        ht = assemble_regularized(maryland, params).to_dense()
        h = assemble_hamiltonian(maryland, params).to_dense()
        m = np.diag(row_prefactors(maryland, params))  # E=0 so scale is exactly 1
        direct = h @ m
        assert np.max(np.abs(ht - direct)) <= 1e-12 * np.max(np.abs(direct))

    def test_two_route_equality(self, mero2):
        rng = np.random.default_rng(29)
        x = pole_free_x(mero2, rng, (1, 4))
        params = OperatorParams(lam=1.7, x=x, E=0.6, window=(1, 4))
        ht = assemble_regularized(mero2, params).to_dense()
        h = assemble_hamiltonian(mero2, params).to_dense()
        scale = 1.0 / math.sqrt(1.0 + params.E**2)
        m = np.zeros_like(h)
        for idx, site in enumerate(range(1, 5)):
            y = mero2.site_phase(params.x, site)
            m[idx * 2 : idx * 2 + 2, idx * 2 : idx * 2 + 2] = regularizer_diag(mero2, y)
        direct = (h - params.E * np.eye(h.shape[0])) @ m * scale
        assert np.max(np.abs(ht - direct)) <= 1e-12 * np.max(np.abs(direct))

    @pytest.mark.parametrize("name", ["maryland", "mero2"])
    def test_pole_cancellation(self, name, request):
        model = request.getfixturevalue(name)
        s1, s2, s3 = onsite_sup_bound(model)
        lam, E = 5.0, 2.0
        hop = hopping_sup_bound(model)
        zeros = [z for i in range(model.l) for z in model.F[i][i].zeros]
        assert zeros
        for z in zeros:
            for offset in (1e-6, -1e-6, 1e-9):
                # place site 2 of the window within `offset` of the pole
                x = (z + offset - 2.0 * model.omega) % 1.0
                ht = assemble_regularized(
                    model, OperatorParams(lam=lam, x=x, E=E, window=(1, 4))
                )
                worst = max(np.max(np.abs(ht.diag)), np.max(np.abs(ht.upper)))
                assert worst <= lam * s1 + s2 + abs(E) * s3 + hop + 1e-9
                assert worst <= (s1 + s2 + s3 + hop) * (lam + abs(E))

    def test_hopping_uniform_bound(self, mero2):
        rng = np.random.default_rng(4)
        bound = hopping_sup_bound(mero2)
        ys = rng.uniform(size=1000)
        worst = 0.0
        for i in range(mero2.l):
            for j in range(mero2.l):
                m_col = mero2.F[j][j].den(ys) * mero2.R[j][j].den(ys)
                worst = max(worst, np.max(np.abs(mero2.W[i][j](ys) * m_col)))
        assert worst <= bound + 1e-12

    def test_finite_at_pole_phase(self, maryland):
        # the plain operator is undefined here, the regularized one is not
        x = (0.25 - GOLDEN) % 1.0
        with pytest.raises(PoleProximity):
            assemble_hamiltonian(maryland, OperatorParams(lam=1.0, x=x, E=0.0, window=(1, 2)))
        ht = assemble_regularized(
            maryland, OperatorParams(lam=1.0, x=x, E=0.0, window=(1, 2))
        )
        assert np.all(np.isfinite(ht.to_dense()))


class TestBlockTridiagonal:
    def test_single_block_dense(self):
        b = BlockTridiagonal(1, 2, np.ones((1, 2, 2)), np.empty((0, 2, 2)), np.empty((0, 2, 2)))
        assert np.array_equal(b.to_dense(), np.ones((2, 2)))

    def test_two_site_scalar(self):
        b = BlockTridiagonal(
            2, 1, np.array([[[1.0]], [[2.0]]]), np.array([[[3.0]]]), np.array([[[4.0]]])
        )
        assert np.array_equal(b.to_dense(), np.array([[1.0, 4.0], [3.0, 2.0]]))

    def test_band_structure_and_accessors(self):
        rng = np.random.default_rng(2)
        n, l = 5, 2
        b = BlockTridiagonal(
            n, l, rng.normal(size=(n, l, l)), rng.normal(size=(n - 1, l, l)),
            rng.normal(size=(n - 1, l, l)),
        )
        dense = b.to_dense()
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                blk = dense[(i - 1) * l : i * l, (j - 1) * l : j * l]
                assert np.array_equal(blk, b.block(i, j))
                if abs(i - j) > 1:
                    assert np.all(blk == 0.0)

    def test_blocks_are_read_only(self):
        b = BlockTridiagonal(1, 1, np.ones((1, 1, 1)), np.empty((0, 1, 1)), np.empty((0, 1, 1)))
        with pytest.raises(ValueError):
            b.diag[0, 0, 0] = 2.0
