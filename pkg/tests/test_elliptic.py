import numpy as np
import pytest

from nlmfg.grid import Grid, make_grid
from nlmfg.pdhg.elliptic import PhiSolver, continuity_defect, laplacian_eigenvalues, prox_phi


def dense_operator(grid, tau_t, tau_grad, tau_0):
    """Space-time matrix assembled cell by cell with explicit neighbour lookups."""
    n1, n2, nt = grid.n_x1, grid.n_x2, grid.n_t
    dt = grid.dt
    size = nt * n1 * n2

    def idx(l, i, j):
        return (l * n1 + i) * n2 + j

    M = np.zeros((size, size))
    for l in range(nt):
        for i in range(n1):
            for j in range(n2):
                row = idx(l, i, j)
                for (di, dj, h) in ((1, 0, grid.dx1), (-1, 0, grid.dx1), (0, 1, grid.dx2), (0, -1, grid.dx2)):
                    ii, jj = i + di, j + dj
                    if grid.periodic:
                        ii, jj = ii % n1, jj % n2
                    elif not (0 <= ii < n1 and 0 <= jj < n2):
                        continue  # no-flux: the boundary face carries no gradient
                    M[row, row] += dt / tau_grad / h**2
                    M[row, idx(l, ii, jj)] -= dt / tau_grad / h**2
                w = 1.0 / (tau_t * dt)
                if l >= 1:
                    M[row, row] += w
                    M[row, idx(l - 1, i, j)] -= w
                M[row, row] += w
                if l + 1 < nt:
                    M[row, idx(l + 1, i, j)] -= w
                if l == 0:
                    M[row, row] += 1.0 / tau_0
    return M


@pytest.mark.parametrize("bc", ["noflux", "periodic"])
def test_dense_assembly_agreement(bc):
    grid = make_grid((0, 1, -1, 1), 4, 4, 3, bc)
    solver = PhiSolver(grid, 0.7, 0.4, 1.3)
    M = dense_operator(grid, 0.7, 0.4, 1.3)
    rng = np.random.default_rng(0)
    d = rng.normal(size=(3, 4, 4))
    np.testing.assert_allclose(solver.apply(d).ravel(), M @ d.ravel(), rtol=1e-12, atol=1e-12)
    rhs = rng.normal(size=(3, 4, 4))
    dense = np.linalg.solve(M, rhs.ravel()).reshape(3, 4, 4)
    assert np.max(np.abs(solver.solve(rhs) - dense)) <= 1e-9 * max(1.0, np.max(np.abs(dense)))


@pytest.mark.parametrize("bc", ["noflux", "periodic"])
def test_manufactured_solution(bc):
    grid = make_grid((0, 1, 0, 1), 16, 16, 8, bc)
    solver = PhiSolver(grid, 0.5, 0.5, 0.5)
    d = np.random.default_rng(1).normal(size=(8, 16, 16))
    rec = solver.solve(solver.apply(d))
    assert np.linalg.norm(rec - d) / np.linalg.norm(d) <= 1e-10


@pytest.mark.parametrize("bc", ["noflux", "periodic"])
def test_laplacian_eigenvalues_diagonalize_dense_operator(bc):
    grid = make_grid((0, 2, 0, 1), 5, 4, 2, bc)
    M = dense_operator(Grid(0.0, 2.0, 0.0, 1.0, 5, 4, 1, bc), 1e300, 1.0, 1e300)
    # with one time level and tiny time weights M reduces to dt * (-Laplacian), dt = 1
    expected = np.sort(laplacian_eigenvalues(grid).ravel())
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(M)), expected, rtol=1e-10, atol=1e-10)


def test_zero_data_gives_zero():
    grid = make_grid((0, 1, 0, 1), 4, 4, 3)
    solver = PhiSolver(grid, 0.5, 0.5, 0.5)
    zeros = np.zeros((4, 4, 4))
    out = prox_phi(solver, zeros, zeros, zeros[:3], zeros[:3], np.zeros((4, 4)))
    assert np.all(out == 0)


def _phi_objective(phi, phi_k, rho, rho0, m1, m2, grid, tau_t, tau_grad, tau_0):
    """phi-dependent part of the saddle function plus the H1-type proximity term, by explicit sums."""
    A, dt = grid.cell_area, grid.dt
    n1, n2, nt = grid.n_x1, grid.n_x2, grid.n_t
    total = -A * np.sum(phi[0] * rho0)
    for l in range(nt):
        total -= A * np.sum(rho[l + 1] * (phi[l + 1] - phi[l]))
        for i in range(n1):
            for j in range(n2):
                if i + 1 < n1:
                    total -= A * dt * m1[l, i, j] * (phi[l, i + 1, j] - phi[l, i, j]) / grid.dx1
                if j + 1 < n2:
                    total -= A * dt * m2[l, i, j] * (phi[l, i, j + 1] - phi[l, i, j]) / grid.dx2
    d = phi - phi_k
    prox = 0.0
    for l in range(nt):
        g1 = np.diff(d[l], axis=0) / grid.dx1
        g2 = np.diff(d[l], axis=1) / grid.dx2
        prox += dt / tau_grad * (np.sum(g1**2) + np.sum(g2**2))
        prox += np.sum((d[l + 1] - d[l]) ** 2) / (tau_t * dt)
    prox += np.sum(d[0] ** 2) / tau_0
    return total + 0.5 * A * prox


def test_prox_phi_is_stationary_point():
    grid = make_grid((0, 1, 0, 1), 4, 5, 3)
    rng = np.random.default_rng(4)
    rho = rng.random((4, 4, 5))
    m1, m2 = rng.normal(size=(2, 3, 4, 5))
    m1[:, -1, :] = 0
    m2[:, :, -1] = 0
    g = rng.normal(size=(4, 5))
    phi_k = rng.normal(size=(4, 4, 5))
    phi_k[-1] = g
    taus = (0.6, 0.8, 1.7)
    out = prox_phi(PhiSolver(grid, *taus), phi_k, rho, m1, m2, g)
    assert np.array_equal(out[-1], g)

    def J(phi):
        return _phi_objective(phi, phi_k, rho, rho[0], m1, m2, grid, *taus)

    base = abs(J(out)) + 1.0
    for _ in range(5):
        v = rng.normal(size=out.shape)
        v[-1] = 0
        eps = 1e-3
        slope = (J(out + eps * v) - J(out - eps * v)) / (2 * eps)
        assert abs(slope) <= 1e-8 * base
        assert J(out + eps * v) > J(out)


def test_continuity_defect():
    grid = make_grid((0, 1, 0, 1), 3, 3, 2)
    rho = np.ones((3, 3, 3))
    zeros = np.zeros((2, 3, 3))
    assert np.all(continuity_defect(rho, zeros, zeros, grid) == 0)
