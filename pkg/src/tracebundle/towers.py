"""Named subalgebra presets used to build filtration towers.

A level spec is one of:

* ``"scalars"``   span of the fiber identity,
* ``"diagonal"``  all diagonal matrix units of every block,
* ``"full"``      all matrix units of every block (the whole fiber algebra),
* ``"block(k1,...,kr)"``  a block-diagonal refinement: the requested part
  sizes are laid out along each fiber's matrix blocks in order, a part that
  would cross a block boundary is truncated at the boundary, and once the
  requested parts are used up the remainder of every block becomes one full
  part.  ``block(1,1)`` on a Mat(2)+Mat(2) fiber therefore pins the first
  block to its diagonal and keeps the second block whole.

Every preset contains the scalars and is contained in ``full``, and
``scalars <= diagonal <= block(...) <= full`` holds levelwise, so towers built
from these names are nested by construction.
"""

from __future__ import annotations

import re

import numpy as np

from .bundle import BundleSpec
from .errors import UsageError
from .fiber import FiberElement, identity_fiber

_BLOCK_RE = re.compile(r"^block\(\s*(\d+(?:\s*,\s*\d+)*)\s*\)$")


def _partition(shape, parts):
    """Per matrix block, the list of (start, stop) index ranges of the parts."""
    remaining = list(parts)
    out = []
    for n in shape:
        ranges = []
        pos = 0
        while pos < n and remaining:
            size = min(int(remaining.pop(0)), n - pos)
            ranges.append((pos, pos + size))
            pos += size
        if pos < n:
            ranges.append((pos, n))
        out.append(ranges)
    return out


def _pinching_generators(shape, partition):
    """Matrix units of every sub-block of the partition."""
    gens = []
    for bi, (n, ranges) in enumerate(zip(shape, partition)):
        for start, stop in ranges:
            for i in range(start, stop):
                for j in range(start, stop):
                    blocks = [np.zeros((m, m), dtype=np.complex128) for m in shape]
                    blocks[bi][i, j] = 1.0
                    gens.append(FiberElement._raw(blocks))
    return gens


def fiber_level_generators(shape, spec: str):
    """Generators of one preset level on one fiber shape."""
    spec = spec.strip()
    if spec == "scalars":
        return [identity_fiber(shape)]
    if spec == "diagonal":
        return _pinching_generators(shape, _partition(shape, [1] * sum(shape)))
    if spec == "full":
        return _pinching_generators(shape, [[(0, n)] for n in shape])
    m = _BLOCK_RE.match(spec)
    if m:
        parts = [int(s) for s in m.group(1).split(",")]
        if any(k < 1 for k in parts):
            raise UsageError(f"block part sizes must be >= 1: {spec!r}")
        return _pinching_generators(shape, _partition(shape, parts))
    raise UsageError(
        f"unknown tower level {spec!r}; use scalars | diagonal | block(k1,...) | full"
    )


def level_generators(bundle: BundleSpec, spec: str):
    """Per-atom generator lists of one preset level across the whole bundle."""
    return [fiber_level_generators(shape, spec) for shape in bundle.fiber_shapes]
