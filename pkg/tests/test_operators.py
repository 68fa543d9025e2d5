import json
import warnings

import numpy as np
import pytest

from dslab.model import ModelParams, q_entries
from dslab.operators import (
    DiscreteOperator,
    Grid,
    GridSizingWarning,
    ParitySector,
    assemble_free,
    assemble_H_square_block,
    assemble_L,
    assemble_Q,
    assemble_schrodinger_pair,
    commutator_norm,
    default_half_width,
    derivative_matrix,
    dump_matrix,
    load_matrix,
    parity_basis,
    relative_residual,
    restrict_parity,
    soliton_derivative_vector,
    soliton_vector,
    swapped_soliton_vector,
)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(10.0, 63)
    with pytest.raises(ValueError):
        Grid(10.0, 32)
    with pytest.raises(ValueError):
        Grid(0.0, 128)
    g = Grid(10.0, 128)
    assert g.h == pytest.approx(20.0 / 128)
    assert g.x[0] == -10.0 and g.x[64] == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(g.x[g.reflection()], -g.x + np.where(np.arange(128) == 0, -20.0, 0.0), atol=1e-12)


def test_default_width_rule():
    assert default_half_width(ModelParams(p=1, omega=0.6)) == pytest.approx(36 / 0.8)
    assert default_half_width(ModelParams(p=0.2, omega=0.6)) == pytest.approx(20 / (0.2 * 0.8))


class TestDerivative:
    def test_fourier_mode_exact(self):
        g = Grid(7.0, 128)
        k = np.pi / g.half_width
        d = derivative_matrix(g)
        np.testing.assert_allclose(d @ np.sin(k * g.x), k * np.cos(k * g.x), atol=1e-12 * k)

    def test_constant_annihilated_and_antisymmetric(self):
        d = derivative_matrix(Grid(5.0, 256))
        assert np.abs(d @ np.ones(256)).max() < 1e-12
        assert np.abs(d + d.T).max() == 0.0

    def test_gaussian(self):
        g = Grid(10.0, 256)
        x = g.x
        np.testing.assert_allclose(derivative_matrix(g) @ np.exp(-x * x), -2 * x * np.exp(-x * x), atol=1e-10)


@pytest.mark.parametrize("p,w,n", [(1.0, 0.5, 1024), (2.0, 0.8, 1024), (0.5, 0.9, 1024), (3.0, 0.3, 2048)])
def test_known_eigenvectors(p, w, n):
    # p = 3 at omega = 0.3 has a narrow core and needs the finer grid
    params = ModelParams(p=p, omega=w)
    grid = Grid.default(params, n)
    l0 = assemble_L(params, grid, mu=0.0)
    l2 = assemble_L(params, grid, mu=2.0)
    assert relative_residual(l0, soliton_vector(params, grid), 0.0) <= 1e-8
    assert relative_residual(l0, swapped_soliton_vector(params, grid), -2 * w) <= 1e-8
    assert relative_residual(l2, swapped_soliton_vector(params, grid), -2 * w) <= 1e-8
    assert relative_residual(l2, soliton_derivative_vector(params, grid), 0.0) <= 1e-8


def test_hermitian_assemblies(small_params, small_grid):
    for opr in (assemble_L(small_params, small_grid), assemble_Q(small_params, small_grid),
                *assemble_schrodinger_pair(small_params, small_grid)):
        a = opr.matrix
        assert np.abs(a - a.T).max() <= 1e-12 * np.abs(a).max()


def test_matrices_read_only(small_params, small_grid):
    opr = assemble_L(small_params, small_grid)
    with pytest.raises(ValueError):
        opr.matrix[0, 0] = 1.0


def test_q_blocks(small_params, small_grid):
    params, grid = small_params, small_grid
    q = assemble_Q(params, grid).matrix
    n = grid.n_points
    q11, q12, q22 = np.diag(q[:n, :n]), np.diag(q[:n, n:]), np.diag(q[n:, n:])
    # rank one, trace = p (v^2-u^2)^(p-1) (v^2+u^2)
    scale = np.abs(q).max()
    assert np.abs(q11 * q22 - q12 * q12).max() <= 1e-14 * scale**2
    assert np.all(q11 >= 0) and np.all(q22 >= 0)
    phi = swapped_soliton_vector(params, grid)
    assert np.abs(q @ phi).max() <= 1e-10 * np.abs(phi).max()


def test_q_trace_matches_components():
    from dslab.model import soliton_eval

    params = ModelParams(p=2.5, omega=0.4)
    x = np.linspace(-5, 5, 101)
    q11, _, q22 = q_entries(params, x)
    v, u = soliton_eval(params, x)
    s = v * v - u * u
    np.testing.assert_allclose(q11 + q22, params.p * s ** (params.p - 1) * (v * v + u * u), rtol=1e-12)


def test_sizing_warning_and_strict():
    params = ModelParams(p=1, omega=0.9)
    small = Grid(5.0, 128)
    with pytest.warns(GridSizingWarning):
        assemble_L(params, small)
    with pytest.raises(ValueError):
        assemble_L(params, small, strict=True)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assemble_L(params, Grid.default(params, 128))


def test_anticommutes_with_sigma1(small_params, small_grid):
    l0 = assemble_L(small_params, small_grid, mu=0.0).matrix
    n = small_grid.n_points
    a = l0 + small_params.omega * np.eye(2 * n)
    s = np.block([[np.zeros((n, n)), np.eye(n)], [np.eye(n), np.zeros((n, n))]])
    assert np.abs(a @ s + s @ a).max() <= 1e-10 * np.abs(a).max()


def test_l0_spectrum_symmetric_about_minus_omega(small_params, small_grid):
    ev = np.linalg.eigvalsh(assemble_L(small_params, small_grid, mu=0.0).matrix)
    np.testing.assert_allclose(np.sort(-2 * small_params.omega - ev), ev, atol=1e-8)


class TestParity:
    def test_basis_orthonormal(self, small_grid):
        for s in ParitySector:
            b = parity_basis(small_grid, s)
            assert b.shape == (2 * small_grid.n_points, small_grid.n_points)
            np.testing.assert_allclose(b.T @ b, np.eye(small_grid.n_points), atol=1e-14)
        e, o = (parity_basis(small_grid, s) for s in ParitySector)
        assert np.abs(e.T @ o).max() <= 1e-15

    def test_sectors_union_is_full_spectrum(self, small_params, small_grid):
        opr = assemble_L(small_params, small_grid, mu=2.0)
        parts = [np.linalg.eigvalsh(restrict_parity(opr, s).matrix) for s in ParitySector]
        np.testing.assert_allclose(np.sort(np.concatenate(parts)), np.linalg.eigvalsh(opr.matrix), atol=1e-8)

    def test_zero_lies_in_the_right_sector(self, gn_params, gn_grid):
        l0 = assemble_L(gn_params, gn_grid, mu=0.0)
        l2 = assemble_L(gn_params, gn_grid, mu=2.0)

        def near_zero(opr, s):
            return np.min(np.abs(np.linalg.eigvalsh(restrict_parity(opr, s).matrix)))

        # phi_0 is even, d/dx phi_0 is odd
        assert near_zero(l0, ParitySector.EVEN) < 1e-9
        assert near_zero(l0, ParitySector.ODD) > 1e-3
        assert near_zero(l2, ParitySector.ODD) < 1e-9
        assert near_zero(l2, ParitySector.EVEN) > 1e-3

    def test_rejects_non_commuting(self, small_params, small_grid):
        base = assemble_free(small_params, small_grid).matrix
        n = small_grid.n_points
        skew = base + np.diag(np.concatenate([small_grid.x, small_grid.x])) * 1e-3
        opr = DiscreteOperator(skew, small_grid, "skewed", small_params)
        assert commutator_norm(opr) > 1e-10
        with pytest.raises(ValueError, match="commutation"):
            restrict_parity(opr, ParitySector.EVEN)
        flagged = DiscreteOperator(base.copy(), small_grid, "free", small_params, parity_compatible=False)
        with pytest.raises(ValueError):
            restrict_parity(flagged, ParitySector.EVEN)
        restricted = restrict_parity(assemble_free(small_params, small_grid), ParitySector.ODD)
        with pytest.raises(ValueError):
            restrict_parity(restricted, ParitySector.ODD)
        assert n == restricted.matrix.shape[0]


class TestSquareBlock:
    def test_mu0_is_square(self, small_params, small_grid):
        a = assemble_H_square_block(small_params, small_grid, mu=0.0).matrix
        l0 = assemble_L(small_params, small_grid, mu=0.0).matrix
        np.testing.assert_allclose(a, l0 @ l0, atol=1e-12 * np.abs(a).max())
        ev = np.linalg.eigvalsh(0.5 * (a + a.T))
        assert ev.min() >= -1e-8

    def test_two_omega_squared(self, gn_params, gn_grid):
        opr = assemble_H_square_block(gn_params, gn_grid, mu=2.0)
        phi = swapped_soliton_vector(gn_params, gn_grid)
        assert relative_residual(opr, phi, (2 * gn_params.omega) ** 2) <= 1e-8

    def test_ab_and_ba_share_spectrum(self):
        params = ModelParams(p=1.0, omega=0.6)
        grid = Grid.default(params, 128)
        l0 = restrict_parity(assemble_L(params, grid, mu=0.0), ParitySector.ODD).matrix
        l2 = restrict_parity(assemble_L(params, grid, mu=2.0), ParitySector.ODD).matrix
        ab = np.linalg.eigvals(l0 @ l2)
        ba = np.linalg.eigvals(l2 @ l0)
        key = lambda z: np.lexsort((np.round(z.imag, 6), np.round(z.real, 6)))
        ab, ba = ab[key(ab)], ba[key(ba)]
        assert np.abs(ab - ba).max() <= 1e-8 * np.abs(ab).max()


@pytest.mark.parametrize("p,w", [(1.0, 0.5), (3.0, 0.7)])
def test_schrodinger_pair_groundstate(p, w):
    params = ModelParams(p=p, omega=w)
    grid = Grid.default(params)
    for opr in assemble_schrodinger_pair(params, grid):
        ev, vec = np.linalg.eigh(opr.matrix)
        assert ev[0] == pytest.approx(w * w, abs=1e-6)
        assert ev.min() >= w * w - 1e-6
        g = vec[:, 0] * np.sign(vec[np.argmax(np.abs(vec[:, 0])), 0])
        big = np.abs(g) > 1e-8 * np.abs(g).max()
        assert np.all(g[big] > 0)


@pytest.mark.parametrize("dtype", [np.float64, np.complex128])
def test_dump_roundtrip(tmp_path, small_params, small_grid, dtype):
    a = assemble_Q(small_params, small_grid).matrix.astype(dtype)
    if dtype is np.complex128:
        a = a + 1j * np.triu(a)
    opr = DiscreteOperator(a, small_grid, "Q", small_params)
    bin_path, side = dump_matrix(opr, tmp_path / "q.bin")
    raw = bin_path.read_bytes()
    assert raw[:4] == b"DSL1" and len(raw) == 32 + a.size * a.itemsize
    assert np.array_equal(load_matrix(bin_path), a)
    meta = json.loads(side.read_text())
    assert meta["grid"]["n_points"] == small_grid.n_points and meta["params"]["omega"] == small_params.omega


def test_load_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"XXXX" + bytes(28))
    with pytest.raises(ValueError, match="magic"):
        load_matrix(p)
