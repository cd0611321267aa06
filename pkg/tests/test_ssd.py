import math

import numpy as np
import pytest

from gsfim import ssd
from gsfim.errors import DimensionMismatchError, InvalidDimensionsError
from gsfim.precoder import EquivalentChannel


def random_block_channel(rng, n_f, n_rx, n_s):
    blocks = (rng.standard_normal((n_f, n_rx, n_s)) + 1j * rng.standard_normal((n_f, n_rx, n_s)))
    return EquivalentChannel(blocks=blocks / np.sqrt(2.0))


class TestCrmConstruction:
    def test_order2_angle0(self):
        a = ssd.build_crm(2, 0.0).matrix
        expected = np.array([[1.0, 1j], [1j, 1.0]]) / np.sqrt(2.0)
        assert np.allclose(a, expected, atol=1e-15)

    @pytest.mark.parametrize("order", (2, 4, 8, 16))
    @pytest.mark.parametrize("deg", (0.0, 15.0, 30.0, 45.0))
    def test_unitarity(self, order, deg):
        a = ssd.build_crm(order, math.radians(deg)).matrix
        assert np.linalg.norm(a.conj().T @ a - np.eye(order)) < 1e-12

    @pytest.mark.parametrize("order", (2, 4, 8, 16))
    def test_entry_magnitudes(self, order):
        a = ssd.build_crm(order, math.radians(30.0)).matrix
        assert np.allclose(np.abs(a), order ** -0.5, atol=1e-12)

    def test_recursion_structure_order4(self):
        a2 = ssd.build_crm(2, math.radians(30.0)).matrix
        a4 = ssd.build_crm(4, math.radians(30.0)).matrix
        assert np.allclose(a4[:2, :2], a2 / np.sqrt(2.0), atol=1e-15)
        assert np.allclose(a4[2:, 2:], -a2 / np.sqrt(2.0), atol=1e-15)

    @pytest.mark.parametrize("order", (0, 1, 3, 6))
    def test_invalid_order(self, order):
        with pytest.raises(InvalidDimensionsError):
            ssd.build_crm(order, 0.0)


class TestSpreading:
    def test_zero_maps_to_zero(self):
        crm = ssd.build_crm(4, 0.5)
        assert np.all(ssd.apply_crm(np.zeros(12), crm) == 0)

    def test_energy_preserved(self):
        rng = np.random.default_rng(1)
        crm = ssd.build_crm(8, math.radians(30.0))
        for _ in range(10):
            s = rng.standard_normal(24) + 1j * rng.standard_normal(24)
            assert abs(np.linalg.norm(ssd.apply_crm(s, crm)) - np.linalg.norm(s)) < 1e-12

    def test_roundtrip(self):
        rng = np.random.default_rng(2)
        crm = ssd.build_crm(4, math.radians(17.0))
        s = rng.standard_normal(20) + 1j * rng.standard_normal(20)
        assert np.allclose(ssd.remove_crm(ssd.apply_crm(s, crm), crm), s, atol=1e-12)

    def test_impulse_spreads_evenly(self):
        n_f, n_s = 4, 3
        crm = ssd.build_crm(n_f, math.radians(30.0))
        for j in range(n_f):
            s = np.zeros(n_f * n_s, dtype=np.complex128)
            s[j * n_s] = 1.0
            out = ssd.apply_crm(s, crm).reshape(n_f, n_s)
            assert np.allclose(np.abs(out[:, 0]), n_f ** -0.5, atol=1e-12)

    def test_dimension_mismatch(self):
        crm = ssd.build_crm(4, 0.0)
        with pytest.raises(DimensionMismatchError):
            ssd.apply_crm(np.zeros(10), crm)


class TestEffectiveChannel:
    def test_identity_crm_is_passthrough(self):
        rng = np.random.default_rng(3)
        eq = random_block_channel(rng, 4, 3, 2)
        h = ssd.effective_channel(eq, ssd.identity_crm(4))
        assert np.array_equal(h, eq.assembled)

    def test_matches_dense_composition(self):
        rng = np.random.default_rng(4)
        eq = random_block_channel(rng, 4, 3, 2)
        crm = ssd.build_crm(4, math.radians(30.0))
        h = ssd.effective_channel(eq, crm)
        dense = eq.assembled @ np.kron(crm.matrix, np.eye(2))
        assert np.allclose(h, dense, atol=1e-12)
        s = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        assert np.allclose(h @ s, eq.assembled @ ssd.apply_crm(s, crm), atol=1e-12)

    def test_block_structure(self):
        rng = np.random.default_rng(5)
        eq = random_block_channel(rng, 2, 3, 2)
        crm = ssd.build_crm(2, math.radians(10.0))
        h = ssd.effective_channel(eq, crm)
        for i in range(2):
            for j in range(2):
                block = h[i * 3 : (i + 1) * 3, j * 2 : (j + 1) * 2]
                assert np.allclose(block, crm.matrix[i, j] * eq.blocks[i], atol=1e-15)


class TestInterleaver:
    def test_example_positions(self):
        imap = ssd.build_interleaver(8, 4)
        assert imap.positions(0).tolist() == [0, 2, 4, 6]
        assert imap.positions(1).tolist() == [1, 3, 5, 7]

    def test_single_group_identity(self):
        imap = ssd.build_interleaver(4, 4)
        assert imap.forward.tolist() == [0, 1, 2, 3]

    def test_bijection_and_spacing(self):
        imap = ssd.build_interleaver(64, 4)
        assert sorted(imap.forward.tolist()) == list(range(64))
        for g in range(imap.n_groups):
            pos = imap.positions(g)
            assert np.all(np.diff(pos) >= 64 // 4)

    def test_invalid(self):
        with pytest.raises(InvalidDimensionsError):
            ssd.build_interleaver(10, 4)
