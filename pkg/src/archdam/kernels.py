"""Hot numeric kernels with a numba path and a pure-numpy path.

Public functions dispatch on :func:`archdam._accel.backend` at call time.
Both paths must agree to rounding; ``tests/test_kernels.py`` checks that and
``benchmarks/bench_kernels.py`` times them against each other.
"""

from __future__ import annotations

import numpy as np

from ._accel import backend, njit

# 8-node hexahedron: natural coordinates of the corner nodes. Nodes 0-3 are
# the zeta=-1 face counter-clockwise seen from +zeta, nodes 4-7 the zeta=+1 face.
HEX_CORNERS = np.array(
    [
        [-1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0],
        [1.0, 1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
        [1.0, -1.0, 1.0],
        [1.0, 1.0, 1.0],
        [-1.0, 1.0, 1.0],
    ]
)
_G = 1.0 / np.sqrt(3.0)
GAUSS_POINTS = np.array([[a, b, c] for c in (-_G, _G) for b in (-_G, _G) for a in (-_G, _G)])


def isotropic_d(E: float, nu: float) -> np.ndarray:
    """Voigt elasticity matrix, strain order (xx, yy, zz, xy, yz, zx), engineering shear."""
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    D = np.zeros((6, 6))
    D[:3, :3] = lam
    D[0, 0] = D[1, 1] = D[2, 2] = lam + 2.0 * mu
    D[3, 3] = D[4, 4] = D[5, 5] = mu
    return D


def _shape_tables():
    n_gp = GAUSS_POINTS.shape[0]
    N = np.empty((n_gp, 8))
    dN = np.empty((n_gp, 8, 3))
    for g, (xi, eta, zeta) in enumerate(GAUSS_POINTS):
        for a, (xa, ea, za) in enumerate(HEX_CORNERS):
            N[g, a] = 0.125 * (1 + xi * xa) * (1 + eta * ea) * (1 + zeta * za)
            dN[g, a, 0] = 0.125 * xa * (1 + eta * ea) * (1 + zeta * za)
            dN[g, a, 1] = 0.125 * ea * (1 + xi * xa) * (1 + zeta * za)
            dN[g, a, 2] = 0.125 * za * (1 + xi * xa) * (1 + eta * ea)
    dN0 = 0.125 * HEX_CORNERS.copy()
    # incompatible modes (1 - xi^2), (1 - eta^2), (1 - zeta^2): diagonal natural derivatives
    dP = np.zeros((n_gp, 3, 3))
    for g in range(n_gp):
        for m in range(3):
            dP[g, m, m] = -2.0 * GAUSS_POINTS[g, m]
    return N, dN, dN0, dP


SHAPE_N, SHAPE_DN, SHAPE_DN0, MODE_DP = _shape_tables()


# --------------------------------------------------------------------------
# Hexahedron element matrices
# --------------------------------------------------------------------------


@njit
def _fill_b(B, dNdx, n):
    for a in range(n):
        c = 3 * a
        dx = dNdx[a, 0]
        dy = dNdx[a, 1]
        dz = dNdx[a, 2]
        B[0, c] = dx
        B[1, c + 1] = dy
        B[2, c + 2] = dz
        B[3, c] = dy
        B[3, c + 1] = dx
        B[4, c + 1] = dz
        B[4, c + 2] = dy
        B[5, c] = dz
        B[5, c + 2] = dx


@njit
def _hex8_numba(coords, D, rho, incompatible, N, dN, dN0, dP):
    ne = coords.shape[0]
    n_gp = N.shape[0]
    Ke = np.zeros((ne, 24, 24))
    me = np.zeros((ne, 8))
    B = np.zeros((6, 24))
    Bi = np.zeros((6, 9))
    for e in range(ne):
        X = coords[e]
        Kcc = np.zeros((24, 24))
        Kci = np.zeros((24, 9))
        Kii = np.zeros((9, 9))
        J0 = dN0.T @ X
        det0 = np.linalg.det(J0)
        J0inv = np.linalg.inv(J0)
        for g in range(n_gp):
            J = dN[g].T @ X
            detJ = np.linalg.det(J)
            dNdx = (np.linalg.inv(J) @ dN[g].T).T
            B[:, :] = 0.0
            _fill_b(B, dNdx, 8)
            DB = D @ B
            Kcc += B.T @ DB * detJ
            for a in range(8):
                me[e, a] += rho * N[g, a] * detJ
            if incompatible:
                dPdx = (J0inv @ dP[g].T).T
                Bi[:, :] = 0.0
                _fill_b(Bi, dPdx, 3)
                Kci += DB.T @ Bi * det0
                Kii += Bi.T @ (D @ Bi) * (det0 * det0 / detJ)
        if incompatible:
            Kcc -= Kci @ np.linalg.solve(Kii, Kci.T)
        Ke[e] = 0.5 * (Kcc + Kcc.T)
    return Ke, me


def _b_batch(dNdx: np.ndarray) -> np.ndarray:
    ne, n, _ = dNdx.shape
    B = np.zeros((ne, 6, 3 * n))
    dx, dy, dz = dNdx[..., 0], dNdx[..., 1], dNdx[..., 2]
    B[:, 0, 0::3] = dx
    B[:, 1, 1::3] = dy
    B[:, 2, 2::3] = dz
    B[:, 3, 0::3] = dy
    B[:, 3, 1::3] = dx
    B[:, 4, 1::3] = dz
    B[:, 4, 2::3] = dy
    B[:, 5, 0::3] = dz
    B[:, 5, 2::3] = dx
    return B


def _hex8_numpy(coords, D, rho, incompatible, N, dN, dN0, dP):
    ne = coords.shape[0]
    Kcc = np.zeros((ne, 24, 24))
    Kci = np.zeros((ne, 24, 9))
    Kii = np.zeros((ne, 9, 9))
    me = np.zeros((ne, 8))
    J0 = np.einsum("ai,eaj->eij", dN0, coords)
    det0 = np.linalg.det(J0)
    J0inv = np.linalg.inv(J0)
    for g in range(N.shape[0]):
        J = np.einsum("ai,eaj->eij", dN[g], coords)
        detJ = np.linalg.det(J)
        dNdx = np.einsum("eij,aj->eai", np.linalg.inv(J), dN[g])
        B = _b_batch(dNdx)
        DB = np.einsum("ij,ejk->eik", D, B)
        Kcc += np.einsum("eji,ejk->eik", B, DB) * detJ[:, None, None]
        me += rho * N[g][None, :] * detJ[:, None]
        if incompatible:
            Bi = _b_batch(np.einsum("eij,mj->emi", J0inv, dP[g]))
            Kci += np.einsum("eji,ejk->eik", DB, Bi) * det0[:, None, None]
            Kii += np.einsum("eji,jk,ekl->eil", Bi, D, Bi) * (det0**2 / detJ)[:, None, None]
    if incompatible:
        Kcc -= Kci @ np.linalg.solve(Kii, np.transpose(Kci, (0, 2, 1)))
    return 0.5 * (Kcc + np.transpose(Kcc, (0, 2, 1))), me


def hex8_matrices(coords, E: float, nu: float, rho: float, incompatible: bool = True):
    """Element stiffness and lumped nodal masses for a batch of hexahedra.

    Args:
        coords: (n_elem, 8, 3) corner coordinates in :data:`HEX_CORNERS` order.
        E, nu: isotropic elastic constants.
        rho: mass density; the lumped mass is the row sum of the consistent mass.
        incompatible: add the nine Wilson bubble modes (with Taylor's
            constant-Jacobian correction) and condense them out statically.

    Returns:
        ``(Ke, me)`` with shapes (n_elem, 24, 24) and (n_elem, 8).
    """
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    D = isotropic_d(E, nu)
    args = (coords, D, float(rho), bool(incompatible), SHAPE_N, SHAPE_DN, SHAPE_DN0, MODE_DP)
    if backend() == "numba":
        return _hex8_numba(*args)
    return _hex8_numpy(*args)


@njit
def _hex8_dets_numba(coords, dN):
    ne = coords.shape[0]
    out = np.empty((ne, dN.shape[0]))
    for e in range(ne):
        for g in range(dN.shape[0]):
            out[e, g] = np.linalg.det(dN[g].T @ coords[e])
    return out


def hex8_jacobian_dets(coords) -> np.ndarray:
    """Jacobian determinants at the 2x2x2 Gauss points, shape (n_elem, 8)."""
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    if backend() == "numba":
        return _hex8_dets_numba(coords, SHAPE_DN)
    return np.linalg.det(np.einsum("gai,eaj->egij", SHAPE_DN, coords))


# --------------------------------------------------------------------------
# Constrained Pareto dominance
# --------------------------------------------------------------------------


@njit
def _dominance_numba(F, viol):
    n, k = F.shape
    out = np.zeros((n, n), dtype=np.bool_)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            vi = viol[i]
            vj = viol[j]
            if vi != vj and (vi > 0.0 or vj > 0.0):
                out[i, j] = vi < vj
                continue
            no_worse = True
            better = False
            for m in range(k):
                if F[i, m] > F[j, m]:
                    no_worse = False
                    break
                if F[i, m] < F[j, m]:
                    better = True
            out[i, j] = no_worse and better
    return out


def _dominance_numpy(F, viol):
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    obj = le & lt
    vi, vj = viol[:, None], viol[None, :]
    by_violation = (vi != vj) & ((vi > 0.0) | (vj > 0.0))
    out = np.where(by_violation, vi < vj, obj)
    np.fill_diagonal(out, False)
    return out


def dominance_matrix(F, violation=None) -> np.ndarray:
    """Boolean matrix ``D[i, j]``: member i constrained-dominates member j.

    Feasible (zero violation) beats infeasible; between two infeasible
    members the smaller violation wins; otherwise ordinary Pareto dominance
    for minimisation.
    """
    F = np.ascontiguousarray(F, dtype=np.float64)
    if violation is None:
        violation = np.zeros(F.shape[0])
    violation = np.ascontiguousarray(violation, dtype=np.float64)
    if backend() == "numba":
        return _dominance_numba(F, violation)
    return _dominance_numpy(F, violation)


# --------------------------------------------------------------------------
# Charged-particle forces
# --------------------------------------------------------------------------


@njit
def _forces_numba(Xn, X, q, rank, ar, a, eps, literal_gate):
    n, d = X.shape
    out = np.zeros((n, d))
    inv_a3 = 1.0 / (a * a * a)
    for j in range(n):
        for i in range(n):
            if i == j:
                continue
            if literal_gate:
                if rank[i] <= rank[j]:
                    continue
            elif rank[i] >= rank[j]:
                continue
            s = 0.0
            for m in range(d):
                t = Xn[i, m] - Xn[j, m]
                s += t * t
            r = np.sqrt(s) + eps
            if r < a:
                mag = q[i] * inv_a3 * r
            else:
                mag = q[i] / (r * r)
            mag *= ar[i, j]
            for m in range(d):
                out[j, m] += mag * (X[i, m] - X[j, m])
    return out


def _forces_numpy(Xn, X, q, rank, ar, a, eps, literal_gate):
    r = np.sqrt(((Xn[:, None, :] - Xn[None, :, :]) ** 2).sum(axis=2)) + eps
    mag = np.where(r < a, q[:, None] * r / a**3, q[:, None] / r**2)
    if literal_gate:
        gate = rank[:, None] > rank[None, :]
    else:
        gate = rank[:, None] < rank[None, :]
    w = np.where(gate, mag * ar, 0.0)  # w[i, j]: weight of i acting on j
    return w.T @ X - w.sum(axis=0)[:, None] * X


def css_forces(Xn, X, q, rank, ar, a: float, eps: float = 1e-9, literal_gate: bool = False) -> np.ndarray:
    """Resultant force on every particle.

    Args:
        Xn: (n, d) positions scaled to the unit box, used for separations.
        X: (n, d) raw positions, used for the force directions.
        q: (n,) charges. rank: (n,) front indices (1 = best).
        ar: (n, n) attract (+1) / repel (-1) signs, ``ar[i, j]`` for i acting on j.
        a: sphere radius separating the linear and inverse-square regimes.
        literal_gate: let worse-ranked particles attract instead of better ones.
    """
    Xn = np.ascontiguousarray(Xn, dtype=np.float64)
    X = np.ascontiguousarray(X, dtype=np.float64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    rank = np.ascontiguousarray(rank, dtype=np.int64)
    ar = np.ascontiguousarray(ar, dtype=np.float64)
    if backend() == "numba":
        return _forces_numba(Xn, X, q, rank, ar, float(a), float(eps), bool(literal_gate))
    return _forces_numpy(Xn, X, q, rank, ar, float(a), float(eps), bool(literal_gate))
