"""The global algebra as a bundle of matrix fibers over a finite atom space.

A bundle spec fixes, per atom, the fiber shape (block dimensions) and strictly
positive per-block trace weights; a section assigns a fiber element to every
atom.  All section arithmetic is fiberwise with no cross-fiber data flow, so
evaluating at an atom commutes with every operation by construction (same
arithmetic path, bit for bit).
"""

from __future__ import annotations

import numpy as np

from .center import CenterElement, MeasureSpace
from .errors import ContractViolationError, ShapeMismatchError, UsageError
from .fiber import (
    FiberElement,
    herm_eig,
    identity_fiber,
    polar,
    spectral_norm,
    spectral_projection,
    zero_fiber,
)

SECTION_KINDS = ("general", "hermitian", "positive", "unitary", "projection")
_KIND_CODE = {kind: i for i, kind in enumerate(SECTION_KINDS)}


class BundleSpec:
    """Measure space plus, per atom, the fiber block dimensions and trace weights."""

    __slots__ = ("space", "fiber_shapes", "trace_weights")

    def __init__(self, space: MeasureSpace, fiber_shapes, trace_weights):
        self.space = space
        shapes = tuple(tuple(int(n) for n in shape) for shape in fiber_shapes)
        weights = tuple(tuple(float(c) for c in cs) for cs in trace_weights)
        if len(shapes) != space.size or len(weights) != space.size:
            raise ShapeMismatchError("need one fiber shape and one weight list per atom")
        for label, shape, cs in zip(space.labels, shapes, weights):
            if len(shape) < 1 or any(n < 1 for n in shape):
                raise UsageError(f"fiber at {label!r} needs block dims >= 1, got {shape}")
            if len(cs) != len(shape):
                raise ShapeMismatchError(f"fiber at {label!r}: one trace weight per block")
            if any(not np.isfinite(c) or c <= 0.0 for c in cs):
                raise ContractViolationError(
                    f"fiber at {label!r}: trace weights must be positive (faithfulness)"
                )
        self.fiber_shapes = shapes
        self.trace_weights = weights

    def shape_at(self, label: str) -> tuple[int, ...]:
        return self.fiber_shapes[self.space.index_of(label)]

    def algebra_dims(self) -> tuple[int, ...]:
        """Linear dimension of each fiber algebra (sum of squared block dims)."""
        return tuple(sum(n * n for n in shape) for shape in self.fiber_shapes)

    def restrict(self, labels) -> "BundleSpec":
        """Sub-bundle over a subset of atoms (same weights, shapes, order)."""
        labels = [str(l) for l in labels]
        idx = [self.space.index_of(l) for l in labels]
        sub = MeasureSpace(labels, self.space.weights[idx])
        return BundleSpec(
            sub,
            [self.fiber_shapes[i] for i in idx],
            [self.trace_weights[i] for i in idx],
        )

    def __eq__(self, other):
        return (
            isinstance(other, BundleSpec)
            and self.space == other.space
            and self.fiber_shapes == other.fiber_shapes
            and self.trace_weights == other.trace_weights
        )

    def __hash__(self):
        return hash((self.space, self.fiber_shapes, self.trace_weights))

    def __repr__(self):
        return (
            f"BundleSpec(atoms={self.space.labels}, shapes={self.fiber_shapes})"
        )


class Section:
    """Element of the bundle algebra: one fiber element per atom."""

    __slots__ = ("bundle", "fibers")

    def __init__(self, bundle: BundleSpec, fibers):
        fibers = tuple(fibers)
        if len(fibers) != bundle.space.size:
            raise ShapeMismatchError("need one fiber element per atom")
        for label, shape, f in zip(bundle.space.labels, bundle.fiber_shapes, fibers):
            if f.dims != shape:
                raise ShapeMismatchError(
                    f"fiber at {label!r} has dims {f.dims}, bundle expects {shape}"
                )
        self.bundle = bundle
        self.fibers = fibers

    @classmethod
    def _raw(cls, bundle, fibers):
        self = object.__new__(cls)
        self.bundle = bundle
        self.fibers = tuple(fibers)
        return self

    def _require_same_bundle(self, other: "Section"):
        if self.bundle is not other.bundle and self.bundle != other.bundle:
            raise ShapeMismatchError("sections live on different bundles")

    def fiber(self, label: str) -> FiberElement:
        """Evaluate the section at an atom (the lifting realized as storage)."""
        return self.fibers[self.bundle.space.index_of(label)]

    def __add__(self, other: "Section") -> "Section":
        self._require_same_bundle(other)
        return Section._raw(self.bundle, [a + b for a, b in zip(self.fibers, other.fibers)])

    def __sub__(self, other: "Section") -> "Section":
        self._require_same_bundle(other)
        return Section._raw(self.bundle, [a - b for a, b in zip(self.fibers, other.fibers)])

    def __mul__(self, other):
        """Algebra product for a Section argument, scaling for a scalar."""
        if isinstance(other, Section):
            self._require_same_bundle(other)
            return Section._raw(
                self.bundle, [a * b for a, b in zip(self.fibers, other.fibers)]
            )
        return Section._raw(self.bundle, [f * other for f in self.fibers])

    def __rmul__(self, scalar):
        return Section._raw(self.bundle, [scalar * f for f in self.fibers])

    def __neg__(self):
        return Section._raw(self.bundle, [-f for f in self.fibers])

    def adjoint(self) -> "Section":
        return Section._raw(self.bundle, [f.adjoint() for f in self.fibers])

    def max_abs(self) -> float:
        return max(f.max_abs() for f in self.fibers)

    def restrict(self, labels) -> "Section":
        sub = self.bundle.restrict(labels)
        return Section._raw(sub, [self.fiber(l) for l in sub.space.labels])

    def __repr__(self):
        return f"Section(atoms={self.bundle.space.labels})"


def identity_section(bundle: BundleSpec) -> Section:
    return Section._raw(bundle, [identity_fiber(s) for s in bundle.fiber_shapes])


def zero_section(bundle: BundleSpec) -> Section:
    return Section._raw(bundle, [zero_fiber(s) for s in bundle.fiber_shapes])


def center_scale(z: CenterElement, x: Section) -> Section:
    """Module action of the center: atom ``w`` gets ``z(w) * x(w)``."""
    if z.space is not x.bundle.space and z.space != x.bundle.space:
        raise ShapeMismatchError("center element and section live on different spaces")
    return Section._raw(
        x.bundle, [complex(v) * f for v, f in zip(z.values, x.fibers)]
    )


def uniform_norm(x: Section) -> float:
    """The C*-norm: max over atoms of the largest singular value of the fiber."""
    return max(spectral_norm(f) for f in x.fibers)


def random_section(bundle: BundleSpec, seed: int, kind: str = "general") -> Section:
    """Seed-deterministic random section.

    Entries are standard complex Gaussians; ``hermitian`` symmetrizes,
    ``positive`` forms ``g* g``, ``unitary`` takes the polar isometry of a
    general draw, and ``projection`` cuts a random Hermitian at its median
    eigenvalue per block.  Identical ``(bundle, seed, kind)`` give bitwise
    identical sections.
    """
    if kind not in _KIND_CODE:
        raise UsageError(f"unknown section kind {kind!r}; choose from {SECTION_KINDS}")
    rng = np.random.default_rng([_KIND_CODE[kind], int(seed) & 0xFFFFFFFFFFFFFFFF])
    total = sum(n * n for shape in bundle.fiber_shapes for n in shape)
    draw = rng.standard_normal(2 * total)
    entries = (draw[:total] + 1j * draw[total:]) / np.sqrt(2.0)
    offset = 0
    fibers = []
    for shape in bundle.fiber_shapes:
        blocks = []
        for n in shape:
            blocks.append(np.ascontiguousarray(entries[offset : offset + n * n].reshape(n, n)))
            offset += n * n
        g = FiberElement._raw(blocks)
        if kind == "general":
            fibers.append(g)
        elif kind == "hermitian":
            fibers.append(0.5 * (g + g.adjoint()))
        elif kind == "positive":
            fibers.append(g.adjoint() * g)
        elif kind == "unitary":
            u, _ = polar(g)
            fibers.append(u)
        else:  # projection
            h = 0.5 * (g + g.adjoint())
            all_w = np.concatenate(herm_eig(h).eigenvalues)
            fibers.append(spectral_projection(h, float(np.median(all_w))))
    return Section._raw(bundle, fibers)


def section_to_records(x: Section):
    """Flatten a section to ``(atom label, block index, row, col, re, im)`` rows."""
    rows = []
    for label, f in zip(x.bundle.space.labels, x.fibers):
        for k, b in enumerate(f.blocks):
            n = b.shape[0]
            for i in range(n):
                for j in range(n):
                    v = b[i, j]
                    rows.append((label, k, i, j, float(v.real), float(v.imag)))
    return rows


def section_from_records(bundle: BundleSpec, rows) -> Section:
    """Rebuild a section from the flat record format of ``section_to_records``."""
    blocks = {
        label: [np.zeros((n, n), dtype=np.complex128) for n in shape]
        for label, shape in zip(bundle.space.labels, bundle.fiber_shapes)
    }
    for label, k, i, j, re, im in rows:
        label = str(label)
        if label not in blocks:
            raise UsageError(f"record references unknown atom {label!r}")
        shape = bundle.shape_at(label)
        k, i, j = int(k), int(i), int(j)
        if k >= len(shape) or i >= shape[k] or j >= shape[k]:
            raise ShapeMismatchError(
                f"record ({label}, {k}, {i}, {j}) is outside the fiber shape {shape}"
            )
        blocks[label][k][i, j] = complex(float(re), float(im))
    return Section(
        bundle,
        [FiberElement(blocks[label]) for label in bundle.space.labels],
    )
