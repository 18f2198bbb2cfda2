"""Small dense linear algebra and a portable seeded random stream.

Everything here works on plain numpy arrays. Vectors are 1-d float arrays and
symmetric matrices are square 2-d float arrays whose symmetry is checked on
entry.
"""

import hashlib
import math

import numpy as np

MASK64 = (1 << 64) - 1


class EigenNotConverged(RuntimeError):
    """Raised when the Jacobi sweep cap is hit before the off-diagonal vanishes."""

    def __init__(self, sweeps, off_norm, residual):
        self.sweeps = sweeps
        self.off_norm = off_norm
        self.residual = residual
        super().__init__(
            f"Jacobi eigensolver did not converge after {sweeps} sweeps "
            f"(off-diagonal norm {off_norm:.3e}, residual {residual:.3e})"
        )


def as_symmetric(A, rtol=1e-12):
    """Return a float copy of `A`, made exactly symmetric.

    Raises ValueError if `A` is not square or its asymmetry exceeds `rtol`
    relative to its Frobenius norm.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.T) > rtol * max(scale, 1.0):
        raise ValueError("matrix is not symmetric")
    return 0.5 * (A + A.T)


def jacobi_eigh(A, tol=1e-14, max_sweeps=100):
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    A : array_like, shape (d, d)
        Symmetric matrix.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm drops below
        ``tol * ||A||_F``.
    max_sweeps : int
        Sweep cap; exceeding it raises :class:`EigenNotConverged`.

    Returns
    -------
    eigvals : ndarray, shape (d,)
        Eigenvalues in ascending order.
    eigvecs : ndarray, shape (d, d)
        Orthonormal eigenvectors stored as columns, matching `eigvals`.
    """
    A0 = as_symmetric(A)
    d = A0.shape[0]
    a = A0.copy()
    V = np.eye(d)
    fro = np.linalg.norm(a)
    if fro == 0.0:
        return np.zeros(d), V

    threshold = tol * fro
    sweeps = 0
    off = _off_norm(a)
    while off > threshold:
        if sweeps >= max_sweeps:
            vals = np.diag(a)
            raise EigenNotConverged(sweeps, off, _residual(A0, vals, V))
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                v_p = V[:, p].copy()
                v_q = V[:, q].copy()
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q
        sweeps += 1
        off = _off_norm(a)

    vals = np.diag(a).copy()
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    V = V[:, order]

    spectral = np.max(np.abs(vals))
    residual = _residual(A0, vals, V)
    if residual > 1e-10 * max(spectral, np.finfo(float).tiny):
        raise EigenNotConverged(sweeps, off, residual)
    return vals, V


def _off_norm(a):
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _residual(A, vals, V):
    return float(np.max(np.linalg.norm(A @ V - V * vals, axis=0)))


def sym_frac_power(M, p):
    """Real power ``V diag(lambda**p) V^T`` of a symmetric positive definite matrix."""
    vals, V = jacobi_eigh(M)
    if vals[0] <= 0.0:
        raise ValueError(
            f"matrix is not positive definite (smallest eigenvalue {vals[0]:.3e})"
        )
    P = (V * vals**p) @ V.T
    return 0.5 * (P + P.T)


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(seed, tag):
    """Child seed for a named sub-stream.

    The rule is ``splitmix64(seed XOR h)`` where ``h`` is the first 8 bytes
    (little endian) of the BLAKE2b digest of the UTF-8 tag. Distinct tags give
    statistically independent streams, and adding a new tag never changes the
    stream of an existing one.
    """
    h = int.from_bytes(hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest(), "little")
    return _splitmix64((int(seed) & MASK64) ^ h)


class Rng:
    """Seeded random stream on top of the counter-based Philox-4x64 generator.

    Philox output is a fixed function of (key, counter), so a seed maps to the
    same raw 64-bit words on every platform. Uniforms take the top 53 bits of a
    word; Gaussians use the Box-Muller transform on pairs of uniforms.
    """

    def __init__(self, seed):
        self.seed = int(seed) & MASK64
        self._bits = np.random.Philox(key=self.seed)

    def spawn(self, tag):
        return Rng(derive_seed(self.seed, tag))

    def raw(self, size):
        return self._bits.random_raw(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        """Uniform draws on the open interval (low, high)."""
        n = 1 if size is None else int(np.prod(size))
        u = ((self.raw(n) >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53
        out = low + (high - low) * u
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def standard_normal(self, size):
        size = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(size))
        m = (n + 1) // 2
        u = self.uniform(size=2 * m)
        r = np.sqrt(-2.0 * np.log(u[:m]))
        phi = 2.0 * np.pi * u[m:]
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(phi)
        z[1::2] = r * np.sin(phi)
        return z[:n].reshape(size)


def gauss_vec(rng, d, sigma=1.0):
    """`d` independent N(0, sigma**2) draws."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    return sigma * rng.standard_normal(d)
