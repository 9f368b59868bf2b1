"""Finite-element modal analysis of the dam body.

The body is meshed with a structured grid of 8-node hexahedra between the two
faces; base and abutment nodes are clamped (rigid rock). A full reservoir is
represented by Westergaard added masses on the upstream face nodes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from . import kernels
from .geometry import DamShape, faces

log = logging.getLogger(__name__)

DEFAULT_DIVISIONS = (16, 8, 2)
RESIDUAL_TOL = 1e-6
DENSE_LIMIT = 600
_G = 1.0 / np.sqrt(3.0)


class MeshError(ValueError):
    """The shape cannot be meshed (zero thickness, inverted element)."""


class ModelingError(RuntimeError):
    """The assembled system is unusable (singular stiffness after constraints)."""


@dataclass(frozen=True)
class MaterialProps:
    E: float = 27.579e9
    nu: float = 0.2
    rho_concrete: float = 2483.0
    rho_water: float = 1000.0

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError("E must be positive")
        if not 0.0 <= self.nu < 0.5:
            raise ValueError("nu must lie in [0, 0.5)")
        if not (self.rho_concrete > 0 and self.rho_water > 0):
            raise ValueError("densities must be positive")


@dataclass
class HexMesh:
    nodes: np.ndarray  # (n_nodes, 3)
    elements: np.ndarray  # (n_elem, 8) in kernels.HEX_CORNERS order
    fixed: np.ndarray  # node indices clamped in all directions
    upstream_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    upstream_area: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    def free_dofs(self) -> np.ndarray:
        mask = np.ones(3 * self.n_nodes, dtype=bool)
        for c in range(3):
            mask[3 * self.fixed + c] = False
        return np.flatnonzero(mask)

    def jacobian_dets(self) -> np.ndarray:
        return kernels.hex8_jacobian_dets(self.nodes[self.elements])


@dataclass
class ModalResult:
    frequencies: np.ndarray
    n_modes: int
    converged: bool
    residuals: np.ndarray
    stats: dict = field(default_factory=dict)


def structured_block(x_of, y_of, z_of, divisions) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and connectivity of a mapped (na, nt, nh) hexahedral block.

    ``x_of(s, k)``, ``y_of(s, t, k)``, ``z_of(k)`` map the arch parameter
    ``s`` in [-1, 1], thickness fraction ``t`` in [0, 1] and height index ``k``
    to coordinates. Node index is ``(k*(na+1) + j)*(nt+1) + l``.
    """
    na, nh, nt = divisions
    nodes = np.empty(((nh + 1) * (na + 1) * (nt + 1), 3))
    s = np.linspace(-1.0, 1.0, na + 1)
    t = np.linspace(0.0, 1.0, nt + 1)
    idx = 0
    for k in range(nh + 1):
        for j in range(na + 1):
            x = x_of(s[j], k)
            for l in range(nt + 1):
                nodes[idx] = (x, y_of(s[j], t[l], k), z_of(k))
                idx += 1

    def nid(k, j, l):
        return (k * (na + 1) + j) * (nt + 1) + l

    elements = np.empty((nh * na * nt, 8), dtype=np.int64)
    e = 0
    for k in range(nh):
        for j in range(na):
            for l in range(nt):
                elements[e] = (
                    nid(k, j, l),
                    nid(k, j + 1, l),
                    nid(k, j + 1, l + 1),
                    nid(k, j, l + 1),
                    nid(k + 1, j, l),
                    nid(k + 1, j + 1, l),
                    nid(k + 1, j + 1, l + 1),
                    nid(k + 1, j, l + 1),
                )
                e += 1
    return nodes, elements


def _quad_area(p):
    # bilinear quad area by 2x2 Gauss integration of |dr/du x dr/dv|
    area = 0.0
    for u in (-_G, _G):
        for v in (-_G, _G):
            du = 0.25 * ((1 - v) * (p[1] - p[0]) + (1 + v) * (p[2] - p[3]))
            dv = 0.25 * ((1 - u) * (p[3] - p[0]) + (1 + u) * (p[2] - p[1]))
            area += np.linalg.norm(np.cross(du, dv))
    return area


def mesh_dam(shape: DamShape, divisions=DEFAULT_DIVISIONS) -> HexMesh:
    """Structured hexahedral mesh of the dam body.

    Raises:
        MeshError: nonpositive thickness or a nonpositive Jacobian anywhere.
    """
    na, nh, nt = divisions
    if min(divisions) < 1:
        raise MeshError("mesh divisions must be positive")
    h = shape.height
    zk = np.linspace(0.0, h, nh + 1)
    xa = shape.canyon.half_width(zk)

    def x_of(s, k):
        return s * xa[k]

    def y_of(s, t, k):
        yu, yd = faces(shape, s * xa[k], zk[k])
        return float(yu + t * (yd - yu))

    nodes, elements = structured_block(x_of, y_of, lambda k: zk[k], divisions)
    if not np.all(np.isfinite(nodes)):
        raise MeshError("non-finite face coordinates (nonpositive radius)")
    thick = nodes.reshape(nh + 1, na + 1, nt + 1, 3)[..., -1, 1] - nodes.reshape(nh + 1, na + 1, nt + 1, 3)[..., 0, 1]
    if np.any(thick <= 0):
        raise MeshError("nonpositive thickness in the dam body")
    dets = kernels.hex8_jacobian_dets(nodes[elements])
    if np.any(dets <= 0):
        raise MeshError(f"{int(np.sum(np.any(dets <= 0, axis=1)))} inverted elements")

    grid = np.arange(nodes.shape[0]).reshape(nh + 1, na + 1, nt + 1)
    fixed = np.unique(np.concatenate([grid[0].ravel(), grid[:, 0].ravel(), grid[:, -1].ravel()]))

    face = grid[:, :, 0]
    area = np.zeros(nodes.shape[0])
    for k in range(nh):
        for j in range(na):
            quad = [face[k, j], face[k, j + 1], face[k + 1, j + 1], face[k + 1, j]]
            a = _quad_area(nodes[quad])
            area[quad] += 0.25 * a
    up = face.ravel()
    return HexMesh(nodes, elements, fixed, up, area[up])


def westergaard_mass(depth_total: float, z, area, rho_water: float = 1000.0):
    """Westergaard added mass (7/8) rho_w sqrt(H (H - z)) A for face points at elevation z.

    Points above the free surface receive nothing.
    """
    z = np.asarray(z, dtype=float)
    wet = np.clip(depth_total - z, 0.0, None)
    return 0.875 * rho_water * np.sqrt(depth_total * wet) * np.asarray(area, dtype=float)


def assemble(mesh: HexMesh, mat: MaterialProps = MaterialProps(), reservoir_depth: float | None = None,
             incompatible: bool = True):
    """Global stiffness (CSR) and diagonal lumped mass (1-D array) over all DOFs.

    ``reservoir_depth=None`` is an empty reservoir; a depth H adds Westergaard
    masses to the three translational DOFs of every upstream-face node.
    """
    Ke, me = kernels.hex8_matrices(mesh.nodes[mesh.elements], mat.E, mat.nu, mat.rho_concrete, incompatible)
    dofs = (3 * mesh.elements[:, :, None] + np.arange(3)).reshape(mesh.n_elements, 24)
    rows = np.repeat(dofs, 24, axis=1).ravel()
    cols = np.tile(dofs, (1, 24)).ravel()
    n = 3 * mesh.n_nodes
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    nodal = np.zeros(mesh.n_nodes)
    np.add.at(nodal, mesh.elements.ravel(), me.ravel())
    if reservoir_depth is not None and len(mesh.upstream_nodes):
        z = mesh.nodes[mesh.upstream_nodes, 2]
        nodal[mesh.upstream_nodes] += westergaard_mass(reservoir_depth, z, mesh.upstream_area, mat.rho_water)
    return K, np.repeat(nodal, 3)


def eigen_solve(K, M, n_modes: int = 10, free=None, method: str = "auto") -> ModalResult:
    """Lowest ``n_modes`` eigenpairs of K phi = w^2 M phi on the free DOFs.

    ``M`` may be a diagonal given as a 1-D array or a sparse/dense matrix.
    Small systems use a dense symmetric solver, larger ones ARPACK in
    shift-invert mode about zero. A mode whose relative residual exceeds
    ``RESIDUAL_TOL`` or an ARPACK failure clears ``converged``.
    """
    K = sp.csr_matrix(K)
    n_total = K.shape[0]
    if free is None:
        free = np.arange(n_total)
    Kf = K[free][:, free]
    if sp.issparse(M):
        Mf = sp.csr_matrix(M)[free][:, free]
    else:
        M = np.asarray(M, dtype=float)
        Mf = sp.diags(M[free]) if M.ndim == 1 else sp.csr_matrix(M[np.ix_(free, free)])
    n = Kf.shape[0]
    k = min(n_modes, n)
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT or k >= n - 1 else "sparse"
    converged = True
    if method == "dense":
        w, phi = scipy.linalg.eigh(Kf.toarray(), Mf.toarray(), subset_by_index=[0, k - 1])
    else:
        try:
            w, phi = eigsh(Kf.tocsc(), k=k, M=Mf.tocsc(), sigma=0.0, which="LM")
        except ArpackNoConvergence as exc:
            log.warning("ARPACK did not converge: %s", exc)
            w, phi = exc.eigenvalues, exc.eigenvectors
            converged = False
        except RuntimeError as exc:  # singular factorisation
            raise ModelingError(f"stiffness is singular on the free DOFs: {exc}") from exc
        order = np.argsort(w)
        w, phi = w[order], phi[:, order]
    KP = Kf @ phi
    MP = Mf @ phi
    denom = np.maximum(np.linalg.norm(KP, axis=0), np.finfo(float).tiny)
    residuals = np.linalg.norm(KP - MP * w, axis=0) / denom
    if np.any(residuals > RESIDUAL_TOL) or len(w) < k:
        converged = False
    freqs = np.sqrt(np.clip(w, 0.0, None)) / (2.0 * np.pi)
    return ModalResult(freqs, int(k), converged and bool(np.all(w > 0)), residuals,
                       {"n_dofs": int(n), "method": method, "eigenvalues": w})


def modal_analysis(shape: DamShape, divisions=DEFAULT_DIVISIONS, mat: MaterialProps = MaterialProps(),
                   reservoir: str = "full", n_modes: int = 10, incompatible: bool = True) -> ModalResult:
    """Mesh, assemble and solve; ``reservoir`` is ``"full"`` (depth = dam height) or ``"empty"``."""
    if reservoir not in ("full", "empty"):
        raise ValueError(f"reservoir must be 'full' or 'empty', got {reservoir!r}")
    mesh = mesh_dam(shape, divisions)
    depth = shape.height if reservoir == "full" else None
    K, M = assemble(mesh, mat, depth, incompatible)
    result = eigen_solve(K, M, n_modes, mesh.free_dofs())
    result.stats.update(n_nodes=mesh.n_nodes, n_elements=mesh.n_elements, divisions=tuple(divisions))
    return result


def write_mesh(mesh: HexMesh, path) -> None:
    """Dump the mesh as a legacy ASCII VTK unstructured grid (readable by ParaView)."""
    lines = ["# vtk DataFile Version 3.0", "arch dam hexahedral mesh", "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_nodes} double"]
    lines += [f"{x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.nodes]
    lines.append(f"CELLS {mesh.n_elements} {9 * mesh.n_elements}")
    lines += ["8 " + " ".join(str(int(i)) for i in el) for el in mesh.elements]
    lines.append(f"CELL_TYPES {mesh.n_elements}")
    lines += ["12"] * mesh.n_elements
    fixed = np.zeros(mesh.n_nodes, dtype=int)
    fixed[mesh.fixed] = 1
    lines += [f"POINT_DATA {mesh.n_nodes}", "SCALARS fixed int 1", "LOOKUP_TABLE default"]
    lines += [str(v) for v in fixed]
    Path(path).write_text("\n".join(lines) + "\n")
