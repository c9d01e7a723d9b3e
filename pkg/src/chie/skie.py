"""The 2x2 block second-kind boundary system (D + A) sigma = g, its GMRES
solver, and dense conditioning diagnostics.

D = -1/2 [[1, 0], [lambda_2^2, -1]] collects the one-sided jump terms of the
interior limits; A holds the principal-value layer operators

    A11 = dn S1 + c S1,   A12 = dn S0 + c S0,
    A21 = lambda_2^2 dn S1,   A22 = -dn S1 + lambda_1^2 dn S0.

The stabilized variant keeps only the first row with the single density
representation u = S1[sigma_1] + C.
"""

import numpy as np

from .kernels import KernelKind
from .layer_potentials import get_onsurface_ops


class SkieSystem:
    """Operator bundle for one boundary mesh + parameter set."""

    def __init__(self, mesh, params, stabilized=False, p=None):
        self.mesh = mesh
        self.params = params
        self.stabilized = bool(stabilized)
        ops = get_onsurface_ops(mesh, params, p=p)
        self.ops = ops
        self.s1 = ops.matrix(KernelKind.G1, deriv=False, side="pv")
        self.s0 = ops.matrix(KernelKind.G0, deriv=False, side="pv")
        self.d1 = ops.matrix(KernelKind.G1, deriv=True, side="pv")
        self.d0 = ops.matrix(KernelKind.G0, deriv=True, side="pv")
        self.n_b = mesh.n_nodes

    @property
    def size(self):
        return self.n_b if self.stabilized else 2 * self.n_b

    def diag_part(self, sigma):
        """D sigma, applied pointwise (exact)."""
        l2s = self.params.lambda2_sq
        if self.stabilized:
            return -0.5 * sigma
        s1, s2 = sigma[:self.n_b], sigma[self.n_b:]
        return np.concatenate([-0.5 * s1, -0.5 * (l2s * s1 - s2)])

    def compact_part(self, sigma):
        """A sigma via the principal-value operator matrices."""
        c = self.params.c
        l1s = self.params.lambda1_sq
        l2s = self.params.lambda2_sq
        if self.stabilized:
            return (self.d1 + c * self.s1) @ sigma
        s1, s2 = sigma[:self.n_b], sigma[self.n_b:]
        r1 = (self.d1 + c * self.s1) @ s1 + (self.d0 + c * self.s0) @ s2
        r2 = l2s * (self.d1 @ s1) + (-self.d1 + l1s * self.d0) @ s2
        return np.concatenate([r1, r2])

    def apply(self, sigma):
        sigma = np.asarray(sigma, dtype=np.complex128)
        return self.diag_part(sigma) + self.compact_part(sigma)

    def matrix(self):
        """Densely assembled (D + A); used for conditioning and small-N
        oracle checks."""
        n = self.n_b
        c = self.params.c
        l1s = self.params.lambda1_sq
        l2s = self.params.lambda2_sq
        eye = np.eye(n)
        if self.stabilized:
            return -0.5 * eye + self.d1 + c * self.s1
        m = np.empty((2 * n, 2 * n), dtype=np.complex128)
        m[:n, :n] = -0.5 * eye + self.d1 + c * self.s1
        m[:n, n:] = self.d0 + c * self.s0
        m[n:, :n] = l2s * (-0.5 * eye + self.d1)
        m[n:, n:] = 0.5 * eye - self.d1 + l1s * self.d0
        return m


def apply_system(sigma, system):
    return system.apply(sigma)


class GmresError(RuntimeError):
    def __init__(self, message, residuals):
        super().__init__(message)
        self.residuals = residuals


def gmres_solve(system, g, tol=1e-14, max_iter=400):
    """Unrestarted GMRES (Arnoldi + Givens) on the flattened system.

    ``system`` may be a SkieSystem, a dense matrix, or any object with an
    ``apply(x)`` method.  Returns (sigma, iterations, relative_residual).
    Deterministic; raises GmresError with the residual history on stagnation
    past max_iter.
    """
    if hasattr(system, "apply"):
        op = system.apply
        n = system.size
    else:
        mat = np.asarray(system)
        op = lambda x: mat @ x
        n = mat.shape[0]
    b = np.asarray(g, dtype=np.complex128).ravel()
    if b.size != n:
        raise ValueError("right-hand side size mismatch")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n, dtype=np.complex128), 0, 0.0

    max_iter = min(max_iter, n)
    V = np.zeros((max_iter + 1, n), dtype=np.complex128)
    H = np.zeros((max_iter + 1, max_iter), dtype=np.complex128)
    cs = np.zeros(max_iter, dtype=np.complex128)
    sn = np.zeros(max_iter, dtype=np.complex128)
    beta = np.zeros(max_iter + 1, dtype=np.complex128)

    V[0] = b / bnorm
    beta[0] = bnorm
    residuals = []
    k_used = 0
    for k in range(max_iter):
        w = op(V[k])
        for j in range(k + 1):
            H[j, k] = np.vdot(V[j], w)
            w = w - H[j, k] * V[j]
        H[k + 1, k] = np.linalg.norm(w)
        if abs(H[k + 1, k]) > 1e-300:
            V[k + 1] = w / H[k + 1, k]
        # apply previous Givens rotations to the new column
        for j in range(k):
            t = cs[j] * H[j, k] + sn[j] * H[j + 1, k]
            H[j + 1, k] = -np.conj(sn[j]) * H[j, k] + np.conj(cs[j]) * H[j + 1, k]
            H[j, k] = t
        denom = np.sqrt(abs(H[k, k]) ** 2 + abs(H[k + 1, k]) ** 2)
        if denom == 0.0:
            cs[k], sn[k] = 1.0, 0.0
        else:
            cs[k] = np.conj(H[k, k]) / denom
            sn[k] = np.conj(H[k + 1, k]) / denom
        H[k, k] = cs[k] * H[k, k] + sn[k] * H[k + 1, k]
        H[k + 1, k] = 0.0
        beta[k + 1] = -np.conj(sn[k]) * beta[k]
        beta[k] = cs[k] * beta[k]
        rel = abs(beta[k + 1]) / bnorm
        residuals.append(rel)
        k_used = k + 1
        if rel <= tol:
            break
    else:
        raise GmresError(
            f"GMRES did not reach tol={tol:g} in {max_iter} iterations "
            f"(residual {residuals[-1]:.3e})", residuals)

    y = np.linalg.solve(H[:k_used, :k_used], beta[:k_used])
    x = (V[:k_used].T @ y)
    return x, k_used, residuals[-1]


def condition_number(system):
    """2-norm condition number of the dense Nystrom matrix (SVD)."""
    if system.n_b > 2000:
        raise MemoryError("dense conditioning limited to N_b <= 2000")
    m = system.matrix()
    sv = np.linalg.svd(m, compute_uv=False)
    return float(sv[0] / sv[-1])


# {{{ manufactured solution from an exterior point source

def manufactured_data(mesh, params, y_star):
    """Boundary data (g1, g2) whose pure-BVP solution is u* = G0(., y*).

    v* = (-Delta + b) u* = -G1 + lambda_1^2 G0; g1 = (dn + c) u*,
    g2 = dn v*; y* must lie outside the domain."""
    from .kernels import greens, greens_grad

    y = np.asarray(y_star, dtype=float)
    r = np.hypot(mesh.nodes[:, 0] - y[0], mesh.nodes[:, 1] - y[1])
    n = mesh.nodes.shape[0]
    u = np.asarray(greens(KernelKind.G0, r, params))
    g1 = np.empty(n, dtype=np.complex128)
    g2 = np.empty(n, dtype=np.complex128)
    l1s = params.lambda1_sq
    c = params.c
    for i in range(n):
        gr0 = greens_grad(KernelKind.G0, mesh.nodes[i], y, params)
        gr1 = greens_grad(KernelKind.G1, mesh.nodes[i], y, params)
        nrm = mesh.normals[i]
        g1[i] = nrm @ gr0 + c * u[i]
        g2[i] = nrm @ (-gr1 + l1s * gr0)
    return g1, g2


def manufactured_field(points, params, y_star):
    from .kernels import greens

    pts = np.atleast_2d(points)
    r = np.hypot(pts[:, 0] - y_star[0], pts[:, 1] - y_star[1])
    return np.asarray(greens(KernelKind.G0, r, params))

# }}}
