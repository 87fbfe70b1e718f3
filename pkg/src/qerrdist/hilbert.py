"""Dense linear algebra and state primitives on finite composite spaces.

Operators are plain complex ``numpy`` arrays. The validators below check the
defining invariant of each operator class and return a fresh complex copy, so
downstream code never has to ask what kind of array it was handed.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.stats import unitary_group

from .config import TOL
from .errors import NonConvergenceError, NumericalError, ShapeError, ValidationError

__all__ = [
    "CompositeSpace",
    "as_square",
    "hermitian",
    "unitary",
    "density",
    "ket_to_dm",
    "tensor_product",
    "partial_trace",
    "hermitian_eig",
    "expm_i",
    "expectation",
    "uncertainty",
    "commutator",
    "anticommutator",
    "random_hermitian",
    "random_unitary",
    "random_density",
    "random_ket",
]


@dataclass(frozen=True)
class CompositeSpace:
    """Ordered tensor factors of a composite Hilbert space.

    Parameters
    ----------
    dims : tuple of int
        Factor dimensions, outermost (slowest index) first.
    """

    dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ShapeError(f"factor dims must be positive, got {self.dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self):
        return int(np.prod(self.dims))

    def __len__(self):
        return len(self.dims)

    def __add__(self, other):
        return CompositeSpace(self.dims + tuple(other.dims))


def as_square(M, name="operator"):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"{name} must be a square matrix, got shape {M.shape}")
    return M.astype(complex, copy=True)


def hermitian(M, label=None, tol=TOL):
    """Validate and return a Hermitian matrix.

    The matrix is symmetrised after the check so that later eigendecompositions
    see an exactly Hermitian input.
    """
    M = as_square(M, label or "Hermitian operator")
    dev = np.max(np.abs(M - M.conj().T)) if M.size else 0.0
    if dev > tol.hermitian * max(1.0, np.max(np.abs(M))):
        raise ValidationError(f"{label or 'operator'} is not Hermitian (max deviation {dev:.3e})")
    return 0.5 * (M + M.conj().T)


def unitary(U, tol=TOL):
    U = as_square(U, "unitary")
    dev = np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))
    if dev > tol.unitary:
        raise ValidationError(f"matrix is not unitary (max deviation {dev:.3e})")
    return U


def ket_to_dm(psi):
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def density(rho, tol=TOL):
    """Validate a density operator.

    A 1-d input is read as a state vector and converted to its projector after
    normalisation is checked. Eigenvalues in ``[-tol.positivity, 0)`` are
    accepted as rounding slack.
    """
    rho = np.asarray(rho)
    if rho.ndim == 1:
        nrm = np.linalg.norm(rho)
        if abs(nrm - 1.0) > tol.trace:
            raise ValidationError(f"state vector not normalised (norm {nrm:.12g})")
        return ket_to_dm(rho)
    rho = hermitian(rho, "density operator", tol)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol.trace:
        raise ValidationError(f"density operator trace is {tr:.12g}, not 1")
    lam_min = np.linalg.eigvalsh(rho)[0]
    if lam_min < -tol.positivity:
        raise ValidationError(f"density operator has negative eigenvalue {lam_min:.3e}")
    return rho


def tensor_product(*ops):
    """Kronecker product with the first argument as the outermost factor.

    Vectors and matrices can be mixed only if all arguments have the same
    number of dimensions.
    """
    if not ops:
        raise ShapeError("tensor_product needs at least one operand")
    ndims = {np.ndim(o) for o in ops}
    if len(ndims) != 1 or ndims.pop() not in (1, 2):
        raise ShapeError("operands must be all vectors or all matrices")
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def partial_trace(rho, dims, keep):
    """Trace out every factor of ``rho`` not listed in ``keep``.

    Parameters
    ----------
    rho : ndarray
        Operator on the composite space.
    dims : sequence of int or CompositeSpace
        Factor dimensions.
    keep : int or sequence of int
        Factor indices retained, in their original order.

    Returns
    -------
    ndarray
        Reduced operator on the kept factors.
    """
    dims = CompositeSpace(dims.dims if isinstance(dims, CompositeSpace) else tuple(dims)).dims
    rho = np.asarray(rho, dtype=complex)
    n = len(dims)
    N = int(np.prod(dims))
    if rho.shape != (N, N):
        raise ShapeError(f"operator shape {rho.shape} does not match dims {dims}")
    keep = [keep] if np.isscalar(keep) else list(keep)
    if any(k < 0 or k >= n for k in keep) or len(set(keep)) != len(keep):
        raise ShapeError(f"invalid factor index in keep={keep} for {n} factors")
    keep = sorted(keep)
    drop = [k for k in range(n) if k not in keep]
    t = rho.reshape(dims + dims)
    perm = keep + drop + [n + k for k in keep] + [n + k for k in drop]
    t = t.transpose(perm)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    dd = int(np.prod([dims[k] for k in drop])) if drop else 1
    t = t.reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", t)


def hermitian_eig(H, tol=TOL, check=True):
    """Eigendecomposition of a Hermitian matrix.

    Returns
    -------
    evals : ndarray
        Real eigenvalues in ascending order.
    evecs : ndarray
        Orthonormal eigenvectors as columns.

    Raises
    ------
    NonConvergenceError
        If LAPACK reports failure, or the reconstruction residual exceeds
        ``tol.eig_residual * ||H||``.
    """
    H = np.asarray(H)
    try:
        evals, evecs = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NonConvergenceError(f"Hermitian eigensolver failed: {exc}") from exc
    if check and H.size:
        scale = max(1.0, np.max(np.abs(H)))
        res = np.max(np.abs(H @ evecs - evecs * evals))
        if res > tol.eig_residual * scale:
            raise NonConvergenceError(f"eigendecomposition residual {res:.3e} exceeds tolerance")
    return evals, evecs


def expm_i(H, scale=1.0, blocks=None):
    """Return ``exp(i * scale * H)`` for Hermitian ``H``.

    Parameters
    ----------
    H : ndarray
        Hermitian generator.
    scale : float
        Real multiplier in the exponent.
    blocks : array_like of int, optional
        Integer label per basis vector. When ``H`` has no matrix elements
        between different labels (for instance a number-conserving
        generator), each block is exponentiated separately.
    """
    H = np.asarray(H, dtype=complex)
    n = H.shape[0]
    if blocks is None:
        w, V = hermitian_eig(H, check=False)
        return (V * np.exp(1j * scale * w)) @ V.conj().T
    blocks = np.asarray(blocks)
    if blocks.shape != (n,):
        raise ShapeError("blocks must label every basis vector")
    U = np.zeros_like(H)
    for lab in np.unique(blocks):
        idx = np.flatnonzero(blocks == lab)
        w, V = hermitian_eig(H[np.ix_(idx, idx)], check=False)
        U[np.ix_(idx, idx)] = (V * np.exp(1j * scale * w)) @ V.conj().T
    return U


def expectation(A, rho, tol=TOL):
    """Real expectation value ``Tr(A rho)``.

    ``rho`` may be a density matrix or a state vector.

    Raises
    ------
    NumericalError
        If the imaginary part exceeds ``tol.imag_residue`` (relative to the
        size of ``A``), which signals a non-Hermitian input.
    """
    A = np.asarray(A)
    rho = np.asarray(rho)
    if rho.ndim == 1:
        if A.shape != (rho.size, rho.size):
            raise ShapeError(f"operator {A.shape} does not act on vector of size {rho.size}")
        val = np.vdot(rho, A @ rho)
    else:
        if A.shape != rho.shape:
            raise ShapeError(f"operator {A.shape} and state {rho.shape} differ in shape")
        val = np.einsum("ij,ji->", A, rho)
    if abs(val.imag) > tol.imag_residue * max(1.0, abs(val.real)):
        raise NumericalError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def uncertainty(A, rho, tol=TOL):
    """Standard deviation ``sqrt(<A^2> - <A>^2)``.

    Negative variances down to ``-tol.variance_clamp`` are clamped to zero;
    anything more negative raises :class:`NumericalError`.
    """
    A = np.asarray(A)
    mean = expectation(A, rho, tol)
    shifted = A - mean * np.eye(A.shape[0])
    var = expectation(shifted @ shifted, rho, tol)
    if var < 0:
        if var < -tol.variance_clamp * max(1.0, mean * mean):
            raise NumericalError(f"negative variance {var:.3e}")
        var = 0.0
    return float(np.sqrt(var))


def commutator(A, B):
    A, B = np.asarray(A), np.asarray(B)
    if A.shape != B.shape:
        raise ShapeError(f"shapes {A.shape} and {B.shape} differ")
    return A @ B - B @ A


def anticommutator(A, B):
    A, B = np.asarray(A), np.asarray(B)
    if A.shape != B.shape:
        raise ShapeError(f"shapes {A.shape} and {B.shape} differ")
    return A @ B + B @ A


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_hermitian(d, seed=None, scale=1.0):
    rng = _rng(seed)
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (G + G.conj().T)


def random_unitary(d, seed=None):
    """Haar-random unitary."""
    if d == 1:
        return np.ones((1, 1), dtype=complex)
    return unitary_group.rvs(d, random_state=_rng(seed))


def random_ket(d, seed=None, support=None):
    """Random unit vector, optionally supported on the first ``support`` levels."""
    rng = _rng(seed)
    k = d if support is None else int(support)
    psi = np.zeros(d, dtype=complex)
    psi[:k] = rng.normal(size=k) + 1j * rng.normal(size=k)
    return psi / np.linalg.norm(psi)


def random_density(d, rank=None, seed=None, support=None):
    """Random density matrix of given rank (Ginibre construction)."""
    rng = _rng(seed)
    k = d if support is None else int(support)
    r = k if rank is None else int(rank)
    G = rng.normal(size=(k, r)) + 1j * rng.normal(size=(k, r))
    small = G @ G.conj().T
    rho = np.zeros((d, d), dtype=complex)
    rho[:k, :k] = small / np.trace(small).real
    return 0.5 * (rho + rho.conj().T)
