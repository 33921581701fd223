"""Dense complex-matrix kernels for a single fiber.

A fiber algebra is a finite direct sum of full matrix algebras; an element is
stored as an ordered tuple of square complex blocks (never flattened into one
big matrix, so the cost of a product is the sum of the per-block costs).
Everything here is a pure function of its inputs: arithmetic, a self-contained
Hermitian eigensolver (cyclic Jacobi with a fixed sweep order, hence
bit-deterministic), functional calculus, polar decomposition, and spectral
projections built on top of it.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ContractViolationError, ShapeMismatchError

HERMITIAN_INPUT_TOL = 1e-10   # max-abs tolerance on ``a - a*`` for Hermitian-only kernels
JACOBI_OFFDIAG_TOL = 1e-14    # off-diagonal Frobenius norm stopping threshold
JACOBI_MAX_SWEEPS = 100
PINV_CUTOFF = 1e-10           # singular values at or below this count as kernel directions
EIGENVALUE_CLAMP = 1e-12      # eigenvalues this close to a spectral cut snap onto it


def _jacobi_hermitian(a):
    """Eigendecomposition of one Hermitian complex block by cyclic Jacobi.

    Returns ``(w, u)`` with ``a = u @ diag(w) @ u*`` and ``w`` unordered.
    Rotations are applied in a fixed row-major (p, q) order, so the output is
    a deterministic function of the input bits.
    """
    n = a.shape[0]
    h = a.copy()
    u = np.eye(n, dtype=np.complex128)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += 2.0 * (h[p, q].real ** 2 + h[p, q].imag ** 2)
        if math.sqrt(off) <= JACOBI_OFFDIAG_TOL:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                hpq = h[p, q]
                r = abs(hpq)
                if r == 0.0:
                    continue
                # Unimodular phase w turns the (p, q) plane Hermitian block
                # into a real symmetric one; then a classical Jacobi rotation
                # annihilates it.  The combined plane transform is
                # j = [[c, s], [-s*conj(w), c*conj(w)]].
                w = hpq / r
                wc = w.conjugate()
                tau = (h[q, q].real - h[p, p].real) / (2.0 * r)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = 1.0 / (tau - math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for i in range(n):
                    hip = h[i, p]
                    hiq = h[i, q]
                    h[i, p] = c * hip - s * wc * hiq
                    h[i, q] = s * hip + c * wc * hiq
                for i in range(n):
                    hpi = h[p, i]
                    hqi = h[q, i]
                    h[p, i] = c * hpi - s * w * hqi
                    h[q, i] = s * hpi + c * w * hqi
                for i in range(n):
                    uip = u[i, p]
                    uiq = u[i, q]
                    u[i, p] = c * uip - s * wc * uiq
                    u[i, q] = s * uip + c * wc * uiq
    w = np.empty(n, dtype=np.float64)
    for i in range(n):
        w[i] = h[i, i].real
    return w, u


try:  # jit the kernel; the pure-Python body above is the reference fallback
    from numba import njit

    _jacobi_hermitian = njit(cache=True)(_jacobi_hermitian)
except ImportError:  # pragma: no cover
    pass


class FiberElement:
    """Element of one fiber algebra: an ordered tuple of square complex blocks."""

    __slots__ = ("blocks",)

    def __init__(self, blocks):
        mats = []
        for k, b in enumerate(blocks):
            m = np.array(b, dtype=np.complex128)
            if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
                raise ShapeMismatchError(f"block {k} is not a square matrix: shape {m.shape}")
            if not np.all(np.isfinite(m.view(np.float64))):
                raise ContractViolationError(f"block {k} contains NaN or Inf entries")
            mats.append(m)
        if not mats:
            raise ShapeMismatchError("a fiber element needs at least one block")
        self.blocks = tuple(mats)

    @classmethod
    def _raw(cls, blocks):
        # internal fast path: caller guarantees well-formed complex128 blocks
        self = object.__new__(cls)
        self.blocks = tuple(blocks)
        return self

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(b.shape[0] for b in self.blocks)

    def _require_same_shape(self, other: "FiberElement"):
        if self.dims != other.dims:
            raise ShapeMismatchError(f"fiber shapes differ: {self.dims} vs {other.dims}")

    def __add__(self, other: "FiberElement") -> "FiberElement":
        self._require_same_shape(other)
        return FiberElement._raw([a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other: "FiberElement") -> "FiberElement":
        self._require_same_shape(other)
        return FiberElement._raw([a - b for a, b in zip(self.blocks, other.blocks)])

    def __mul__(self, other):
        """Algebra product for a FiberElement argument, scaling for a scalar."""
        if isinstance(other, FiberElement):
            self._require_same_shape(other)
            return FiberElement._raw([a @ b for a, b in zip(self.blocks, other.blocks)])
        return FiberElement._raw([complex(other) * b for b in self.blocks])

    def __rmul__(self, scalar):
        return FiberElement._raw([complex(scalar) * b for b in self.blocks])

    def __neg__(self):
        return FiberElement._raw([-b for b in self.blocks])

    def adjoint(self) -> "FiberElement":
        return FiberElement._raw([b.conj().T for b in self.blocks])

    def copy(self) -> "FiberElement":
        return FiberElement._raw([b.copy() for b in self.blocks])

    def max_abs(self) -> float:
        return max(float(np.abs(b).max()) for b in self.blocks)

    def __repr__(self):
        return f"FiberElement(dims={self.dims})"


def identity_fiber(dims) -> FiberElement:
    return FiberElement._raw([np.eye(n, dtype=np.complex128) for n in dims])


def zero_fiber(dims) -> FiberElement:
    return FiberElement._raw([np.zeros((n, n), dtype=np.complex128) for n in dims])


class HermEig:
    """Spectral data of a Hermitian fiber element.

    Per block: real eigenvalues in descending order and the matching unitary
    basis, satisfying ``block = basis @ diag(eigenvalues) @ basis*``.
    """

    __slots__ = ("eigenvalues", "bases")

    def __init__(self, eigenvalues, bases):
        self.eigenvalues = tuple(eigenvalues)
        self.bases = tuple(bases)

    def apply(self, fn) -> FiberElement:
        """Functional calculus: assemble ``u @ diag(fn(w)) @ u*`` blockwise."""
        out = []
        for w, u in zip(self.eigenvalues, self.bases):
            fw = np.asarray(fn(w), dtype=np.float64)
            out.append((u * fw) @ u.conj().T)
        return FiberElement._raw(out)


def herm_eig(a: FiberElement) -> HermEig:
    """Deterministic Hermitian eigendecomposition of every block of ``a``.

    Raises ContractViolationError when ``a`` is not Hermitian to within
    HERMITIAN_INPUT_TOL (max-abs entrywise).
    """
    eigenvalues = []
    bases = []
    for k, b in enumerate(a.blocks):
        drift = float(np.abs(b - b.conj().T).max())
        if drift > HERMITIAN_INPUT_TOL:
            raise ContractViolationError(
                f"block {k} is not Hermitian: max |a - a*| = {drift:.3e}"
            )
        w, u = _jacobi_hermitian(np.ascontiguousarray(b))
        order = np.argsort(-w, kind="stable")
        eigenvalues.append(w[order])
        bases.append(np.ascontiguousarray(u[:, order]))
    return HermEig(eigenvalues, bases)


def _gram_eig(x: FiberElement) -> HermEig:
    """Eigendecomposition of ``x* x`` with negatives clamped to zero."""
    gram = FiberElement._raw([b.conj().T @ b for b in x.blocks])
    eig = herm_eig(gram)
    return HermEig([np.maximum(w, 0.0) for w in eig.eigenvalues], eig.bases)


def abs_power(x: FiberElement, p: float) -> FiberElement:
    """``|x|**p`` computed as ``(x* x)**(p/2)`` through the eigensolver.

    Intended for p >= 1 (the Lp norms); any nonnegative power works the same
    way since ``x* x`` is positive semidefinite.
    """
    return _gram_eig(x).apply(lambda w: w ** (p / 2.0))


def polar(x: FiberElement) -> tuple[FiberElement, FiberElement]:
    """Polar decomposition ``x = u h`` with ``h = |x|`` positive.

    ``u`` is the partial isometry ``x h^+`` (pseudo-inverse with singular
    cutoff PINV_CUTOFF), so it vanishes on the kernel of ``h``.
    """
    def cut_inverse(s):
        out = np.zeros_like(s)
        supported = s > PINV_CUTOFF
        out[supported] = 1.0 / s[supported]
        return out

    eig = _gram_eig(x)
    singulars = HermEig([np.sqrt(w) for w in eig.eigenvalues], eig.bases)
    h = singulars.apply(lambda s: s)
    return x * singulars.apply(cut_inverse), h


def spectral_projection(x: FiberElement, threshold: float) -> FiberElement:
    """Projection onto the eigenspaces of Hermitian ``x`` strictly above ``threshold``.

    Eigenvalues within EIGENVALUE_CLAMP of the threshold snap down onto it and
    are excluded, which keeps the projection stable for spectra numerically at
    the cut.
    """
    eig = herm_eig(x)

    def indicator(w):
        snapped = np.where(np.abs(w - threshold) <= EIGENVALUE_CLAMP, threshold, w)
        return (snapped > threshold).astype(np.float64)

    return eig.apply(indicator)


def singular_values(x: FiberElement) -> tuple[np.ndarray, ...]:
    """Per-block singular values in descending order."""
    eig = _gram_eig(x)
    return tuple(np.sqrt(w) for w in eig.eigenvalues)


def gram_eigenvalues(x: FiberElement) -> list[np.ndarray]:
    """Eigenvalues of ``x* x`` per block, clamped nonnegative, unordered.

    Lean path for norm computations that need only the spectrum; skips the
    Hermiticity check (the Gram matrix is Hermitian by construction), the
    descending sort, and the basis bookkeeping of ``herm_eig``.
    """
    out = []
    for b in x.blocks:
        w, _ = _jacobi_hermitian(np.ascontiguousarray(b.conj().T @ b))
        out.append(np.maximum(w, 0.0))
    return out


def spectral_norm(x: FiberElement) -> float:
    """Largest singular value across the blocks of ``x``."""
    return math.sqrt(max(float(w.max()) for w in gram_eigenvalues(x)))
