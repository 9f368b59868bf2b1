import numpy as np
import pytest
import scipy.sparse as sp
import sympy

from archdam import geometry, kernels
from archdam.modal import (
    HexMesh,
    MaterialProps,
    MeshError,
    assemble,
    eigen_solve,
    mesh_dam,
    modal_analysis,
    structured_block,
    westergaard_mass,
    write_mesh,
)

UNIT_CUBE = 0.5 * (kernels.HEX_CORNERS + 1.0)


def sympy_unit_cube_stiffness():
    """Exact trilinear-hex stiffness of the unit cube, E = 1, nu = 0."""
    x, y, z = sympy.symbols("x y z")
    N = []
    for cx, cy, cz in UNIT_CUBE.astype(int):
        fx = x if cx else 1 - x
        fy = y if cy else 1 - y
        fz = z if cz else 1 - z
        N.append(fx * fy * fz)
    B = sympy.zeros(6, 24)
    for a, Na in enumerate(N):
        dx, dy, dz = sympy.diff(Na, x), sympy.diff(Na, y), sympy.diff(Na, z)
        B[0, 3 * a], B[1, 3 * a + 1], B[2, 3 * a + 2] = dx, dy, dz
        B[3, 3 * a], B[3, 3 * a + 1] = dy, dx
        B[4, 3 * a + 1], B[4, 3 * a + 2] = dz, dy
        B[5, 3 * a], B[5, 3 * a + 2] = dz, dx
    D = sympy.diag(1, 1, 1, sympy.Rational(1, 2), sympy.Rational(1, 2), sympy.Rational(1, 2))
    integrand = B.T * D * B

    def cube_integral(expr):
        # exact: each monomial x^a y^b z^c integrates to 1/((a+1)(b+1)(c+1))
        poly = sympy.Poly(sympy.expand(expr), x, y, z)
        return sum(c / ((a + 1) * (b + 1) * (d + 1)) for (a, b, d), c in poly.terms())

    return np.array([[float(cube_integral(integrand[i, j])) for j in range(24)] for i in range(24)])


def test_unit_cube_stiffness_matches_exact_integration():
    Ke, _ = kernels.hex8_matrices(UNIT_CUBE[None], 1.0, 0.0, 1.0, incompatible=False)
    assert np.allclose(Ke[0], sympy_unit_cube_stiffness(), rtol=0, atol=1e-9)


def test_incompatible_element_passes_patch_test():
    rng = np.random.default_rng(2)
    coords = (UNIT_CUBE * [2.0, 1.0, 1.5] + rng.uniform(-0.2, 0.2, (8, 3)))[None]
    K_plain, _ = kernels.hex8_matrices(coords, 1.0, 0.25, 1.0, incompatible=False)
    K_inc, _ = kernels.hex8_matrices(coords, 1.0, 0.25, 1.0, incompatible=True)
    A = rng.normal(size=(3, 3))
    u = (coords[0] @ A.T).ravel()  # linear displacement field: constant strain
    assert np.allclose(K_inc[0] @ u, K_plain[0] @ u, atol=1e-10 * np.abs(K_plain[0] @ u).max())


@pytest.mark.parametrize("incompatible", [False, True])
def test_element_matrices_symmetric_with_rigid_null_space(incompatible):
    coords = (UNIT_CUBE * [3.0, 1.0, 2.0])[None]
    Ke, me = kernels.hex8_matrices(coords, 5.0, 0.3, 2.0, incompatible)
    assert np.allclose(Ke[0], Ke[0].T, atol=1e-12)
    assert np.sum(np.linalg.eigvalsh(Ke[0]) < 1e-9 * np.abs(Ke[0]).max()) == 6
    assert me.sum() == pytest.approx(2.0 * 6.0)


# ---------------------------------------------------------------------- mesh

def slab_mesh(divisions):
    nodes, elements = structured_block(lambda s, k: 10 * s, lambda s, t, k: 2.0 * t, lambda k: 5.0 * k, divisions)
    return nodes, elements


def test_slab_counts():
    nodes, elements = slab_mesh((2, 2, 1))
    assert len(nodes) == 18 and len(elements) == 4


def test_baseline_mesh_jacobians_positive(baseline):
    mesh = mesh_dam(baseline, (16, 8, 2))
    assert np.all(mesh.jacobian_dets() > 0)
    assert mesh.n_elements == 16 * 8 * 2


def test_zero_thickness_rejected(canyon):
    x = geometry.morrow_point_design().to_array()
    x[2:8] = 0.0
    x[14:20] = x[8:14]
    with pytest.raises(MeshError):
        mesh_dam(geometry.make_shape(x, canyon), (4, 4, 1))


def test_lumped_mass_total(baseline):
    mesh = mesh_dam(baseline, (16, 8, 2))
    _, M = assemble(mesh)
    dets = mesh.jacobian_dets()
    volume = dets.sum()  # 2x2x2 Gauss weights are all 1
    assert M.sum() / 3 == pytest.approx(MaterialProps().rho_concrete * volume, rel=1e-12)
    assert volume == pytest.approx(baseline.volume, rel=0.01)


def test_westergaard_values():
    assert westergaard_mass(142.65, 0.0, 1.0) == pytest.approx(124818.75)
    assert westergaard_mass(142.65, 142.65, 1.0) == 0.0
    assert westergaard_mass(10.0, 12.0, 1.0) == 0.0


def test_write_mesh(tmp_path, baseline):
    mesh = mesh_dam(baseline, (4, 2, 1))
    path = tmp_path / "dam.vtk"
    write_mesh(mesh, path)
    text = path.read_text()
    assert f"POINTS {mesh.n_nodes} double" in text and f"CELLS {mesh.n_elements}" in text


# ------------------------------------------------------------------- eigen

def test_scalar_eigenproblem():
    res = eigen_solve(sp.csr_matrix([[4.0]]), np.array([1.0]), n_modes=1)
    assert res.frequencies[0] == pytest.approx(1 / np.pi, rel=1e-12)
    assert res.converged


def test_diagonal_eigenproblem():
    k = np.arange(1.0, 11.0)
    res = eigen_solve(sp.diags(k), np.ones(10), n_modes=10)
    assert np.allclose(res.frequencies, np.sqrt(k) / (2 * np.pi), rtol=1e-12)


def test_sparse_and_dense_paths_agree(baseline):
    mesh = mesh_dam(baseline, (8, 4, 1))
    K, M = assemble(mesh)
    dense = eigen_solve(K, M, 6, mesh.free_dofs(), method="dense")
    sparse = eigen_solve(K, M, 6, mesh.free_dofs(), method="sparse")
    assert np.allclose(dense.frequencies, sparse.frequencies, rtol=1e-8)
    assert dense.converged and sparse.converged
    assert np.all(sparse.residuals <= 1e-6)


def beam_mesh(n=20):
    nodes, elements = structured_block(lambda s, k: 0.5 * s, lambda s, t, k: t, lambda k: float(k), (1, n, 1))
    fixed = np.flatnonzero(nodes[:, 2] == 0.0)
    return HexMesh(nodes, elements, fixed)


def euler_bernoulli_f1(E, rho, L, b=1.0):
    inertia, area = b**4 / 12, b * b
    return 1.875104**2 / (2 * np.pi) * np.sqrt(E * inertia / (rho * area * L**4))


def test_cantilever_beam_oracle():
    mat = MaterialProps(E=2.0e10, nu=0.0, rho_concrete=2500.0)
    mesh = beam_mesh()
    K, M = assemble(mesh, mat)
    res = eigen_solve(K, M, 2, mesh.free_dofs())
    assert res.frequencies[0] == pytest.approx(euler_bernoulli_f1(mat.E, mat.rho_concrete, 20.0), rel=0.10)


def test_rigid_body_modes_without_supports():
    nodes, elements = slab_mesh((2, 2, 1))
    mesh = HexMesh(nodes, elements, np.zeros(0, dtype=np.int64))
    K, M = assemble(mesh, MaterialProps())
    res = eigen_solve(K, M, 7, method="dense")
    w = res.stats["eigenvalues"]
    assert np.all(np.abs(w[:6]) <= 1e-6 * w[6])


def test_stiffness_scaling_doubles_frequencies(baseline):
    a = modal_analysis(baseline, (8, 4, 1), MaterialProps(), "empty", 5)
    b = modal_analysis(baseline, (8, 4, 1), MaterialProps(E=4 * 27.579e9), "empty", 5)
    assert np.allclose(b.frequencies, 2 * a.frequencies, rtol=1e-9)


def test_added_mass_lowers_every_mode(baseline):
    empty = modal_analysis(baseline, (8, 4, 1), reservoir="empty", n_modes=10)
    full = modal_analysis(baseline, (8, 4, 1), reservoir="full", n_modes=10)
    assert np.all(full.frequencies <= empty.frequencies)


def test_frequencies_sorted_positive(baseline):
    res = modal_analysis(baseline, (16, 8, 2), reservoir="full", n_modes=10)
    f = res.frequencies
    assert res.converged and len(f) == 10 and np.all(f > 0) and np.all(np.diff(f) >= 0)


def test_mesh_convergence(baseline):
    coarse = modal_analysis(baseline, (16, 8, 2), reservoir="empty", n_modes=1).frequencies[0]
    fine = modal_analysis(baseline, (24, 12, 3), reservoir="empty", n_modes=1).frequencies[0]
    assert abs(fine - coarse) / fine < 0.05


def test_unknown_reservoir_rejected(baseline):
    with pytest.raises(ValueError):
        modal_analysis(baseline, (4, 2, 1), reservoir="half")
