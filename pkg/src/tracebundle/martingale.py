"""Filtrations, martingales, and their convergence diagnostics.

A filtration is a nested tower of validated subalgebras whose inclusions and
projection-composition law are verified numerically at construction.  Towers
are finite; the infinite-index regime of the averaging statements is emulated
by holding the terminal element fixed for extra steps, which drives the
cumulative weight to infinity while every limit stays exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bundle import BundleSpec, Section
from .center import center_sup
from .condexp import ConditionalExpectation, SubalgebraBasis, validate_subalgebra
from .errors import (
    InconsistencyError,
    ShapeMismatchError,
    UnsupportedConfigurationError,
    UsageError,
)
from .towers import fiber_level_generators
from .tracelp import lp_norm

INCLUSION_BUILD_TOL = 1e-8      # hard failure bound on tower inclusions
COMPOSITION_TOL = 1e-9          # E_m . E_n = E_min(m,n) on a spanning set
MARTINGALE_TOL = 1e-9           # defining property of a martingale sequence
LIMIT_RECONSTRUCTION_TOL = 1e-9


class Filtration:
    """Verified tower of subalgebras with their conditional expectations."""

    __slots__ = (
        "tower", "cond_exps", "terminal_is_full",
        "inclusion_residual", "composition_residual",
    )

    def __init__(self, tower, cond_exps, terminal_is_full,
                 inclusion_residual, composition_residual):
        self.tower = list(tower)
        self.cond_exps = list(cond_exps)
        self.terminal_is_full = terminal_is_full
        self.inclusion_residual = inclusion_residual
        self.composition_residual = composition_residual

    @property
    def bundle(self) -> BundleSpec:
        return self.tower[0].bundle

    @property
    def depth(self) -> int:
        return len(self.tower)

    def expectation(self, level: int) -> ConditionalExpectation:
        return self.cond_exps[level]

    def restrict(self, labels) -> "Filtration":
        """The same tower rebuilt on a sub-bundle (per-atom data is identical)."""
        sub = self.bundle.restrict(labels)
        idx = [self.bundle.space.index_of(l) for l in sub.space.labels]
        specs = [[level.generators[i] for i in idx] for level in self.tower]
        return build_filtration(sub, specs)

    def __repr__(self):
        dims = [t.dims for t in self.tower]
        return f"Filtration(depth={self.depth}, dims={dims})"


def _matrix_unit_fibers(bundle: BundleSpec):
    """Per atom, a spanning list of matrix-unit fiber elements."""
    return [fiber_level_generators(shape, "full") for shape in bundle.fiber_shapes]


def build_filtration(bundle: BundleSpec, level_generator_lists) -> Filtration:
    """Validate a tower from per-level, per-atom generator lists.

    Generators of level n are folded into every later level's generating set
    before closure, so the inclusions hold by construction; they are then
    re-verified numerically, as is the composition law of the projections on
    a spanning set of matrix units.
    """
    levels = [list(map(tuple, gens)) for gens in level_generator_lists]
    if not levels:
        raise UsageError("a filtration needs at least one level")
    tower = []
    accumulated = [tuple() for _ in range(bundle.space.size)]
    for gens in levels:
        if len(gens) != bundle.space.size:
            raise ShapeMismatchError("each level needs one generator list per atom")
        accumulated = [acc + new for acc, new in zip(accumulated, gens)]
        tower.append(validate_subalgebra(bundle, accumulated))

    inclusion = 0.0
    for lower, upper in zip(tower, tower[1:]):
        for p_low, p_up in zip(lower.projectors, upper.projectors):
            for e in p_low.basis_elements():
                inclusion = max(inclusion, p_up.membership_residual(e))
    if inclusion > INCLUSION_BUILD_TOL:
        raise InconsistencyError(
            f"tower inclusion residual {inclusion:.2e} exceeds {INCLUSION_BUILD_TOL:.0e}"
        )

    units = _matrix_unit_fibers(bundle)
    composition = 0.0
    for m, level_m in enumerate(tower):
        for n, level_n in enumerate(tower):
            low = tower[min(m, n)]
            for pm, pn, plow, atom_units in zip(
                level_m.projectors, level_n.projectors, low.projectors, units
            ):
                for u in atom_units:
                    got = pm.project(pn.project(u))
                    want = plow.project(u)
                    composition = max(composition, (got - want).max_abs())
    if composition > COMPOSITION_TOL:
        raise InconsistencyError(
            f"tower composition residual {composition:.2e} exceeds {COMPOSITION_TOL:.0e}"
        )

    return Filtration(
        tower=tower,
        cond_exps=[ConditionalExpectation(t) for t in tower],
        terminal_is_full=tower[-1].is_full(),
        inclusion_residual=inclusion,
        composition_residual=composition,
    )


def martingale_defect(elements, filtration: Filtration) -> float:
    """Worst defect of the martingale property over the whole sequence.

    The defect at step n is the pointwise max over atoms of the L1 center
    norm of ``E(x_{n+1} | M_n) - x_n``.
    """
    elements = list(elements)
    if len(elements) > filtration.depth:
        raise UsageError("more elements than tower levels")
    worst = 0.0
    for n in range(len(elements) - 1):
        diff = filtration.expectation(n)(elements[n + 1]) - elements[n]
        worst = max(worst, float(lp_norm(diff, 1).values.max()))
    return worst


def is_martingale(elements, filtration: Filtration, tol: float = MARTINGALE_TOL) -> bool:
    """True iff projecting each element one level down reproduces its predecessor."""
    return martingale_defect(elements, filtration) <= tol


class MartingaleSeq:
    """A sequence adapted to a filtration with the martingale property."""

    __slots__ = ("filtration", "elements", "p")

    def __init__(self, filtration: Filtration, elements, p: float = 2.0, check: bool = True):
        self.filtration = filtration
        self.elements = list(elements)
        self.p = float(p)
        if not self.elements:
            raise UsageError("a martingale needs at least one element")
        if len(self.elements) > filtration.depth:
            raise UsageError("more elements than tower levels")
        if check and not is_martingale(self.elements, filtration):
            raise UsageError(
                "sequence violates the martingale property beyond tolerance"
            )

    def __len__(self):
        return len(self.elements)


def martingale_from_target(x: Section, filtration: Filtration, p: float = 2.0) -> MartingaleSeq:
    """The canonical martingale: project one target through every tower level."""
    elements = [E(x) for E in filtration.cond_exps]
    return MartingaleSeq(filtration, elements, p=p)


@dataclass
class MartingaleLimit:
    """Terminal element of a full tower together with its consistency data."""

    limit: Section
    reconstruction_residual: float
    residual_trace: list  # max over atoms of ||x_n - limit||_p, per level

    def to_dict(self) -> dict:
        return {
            "reconstruction_residual": self.reconstruction_residual,
            "residual_trace": list(self.residual_trace),
        }


def martingale_limit(seq: MartingaleSeq) -> MartingaleLimit:
    """Recover the generating element of a martingale on a full finite tower.

    On a tower whose top level is the whole algebra the terminal element is
    the limit; projecting it down every level must reproduce the sequence,
    which is re-verified here.
    """
    f = seq.filtration
    if not f.terminal_is_full:
        raise UnsupportedConfigurationError(
            "martingale limits need a tower whose terminal level is the full algebra"
        )
    if len(seq.elements) != f.depth:
        raise UsageError("sequence does not reach the terminal level")
    x = seq.elements[-1]
    recon = 0.0
    trace = []
    for n, x_n in enumerate(seq.elements):
        recon = max(recon, float(lp_norm(f.expectation(n)(x) - x_n, 1).values.max()))
        trace.append(float(lp_norm(x_n - x, seq.p).values.max()))
    if recon > LIMIT_RECONSTRUCTION_TOL:
        raise InconsistencyError(
            f"limit reconstruction residual {recon:.2e} exceeds "
            f"{LIMIT_RECONSTRUCTION_TOL:.0e}"
        )
    return MartingaleLimit(limit=x, reconstruction_residual=recon, residual_trace=trace)


@dataclass
class DoubleSequenceReport:
    """Grid diagnostics for projecting a convergent sequence through a tower."""

    p: float
    grid: list                 # grid[n][m] = max_w ||E(x_n | M_m) - x||_p
    sequence_residuals: list   # max_w ||x_n - x||_p
    tower_residuals: list      # max_w ||E(x | M_m) - x||_p
    corner: float
    corner_bound: float
    corner_ok: bool
    triangle_violation: float  # max of grid - (seq + tower) bound
    bound_monotone_ok: bool

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "grid": self.grid,
            "sequence_residuals": self.sequence_residuals,
            "tower_residuals": self.tower_residuals,
            "corner": self.corner,
            "corner_bound": self.corner_bound,
            "corner_ok": self.corner_ok,
            "triangle_violation": self.triangle_violation,
            "bound_monotone_ok": self.bound_monotone_ok,
        }


def double_sequence_check(xs, x: Section, filtration: Filtration, p: float,
                          slack: float = 1e-9) -> DoubleSequenceReport:
    """Check that projections of a convergent sequence converge to its limit.

    For every sequence index n and tower level m the residual
    ``||E(x_n | M_m) - x||_p`` is bounded by the triangle estimate
    ``||x_n - x||_p + ||E(x | M_m) - x||_p``; with a full terminal level the
    corner entry must fall below that combined bound.
    """
    if not filtration.terminal_is_full:
        raise UnsupportedConfigurationError(
            "the double-sequence diagnostic needs a full terminal level"
        )
    xs = list(xs)
    if not xs:
        raise UsageError("empty sequence")
    seq_res = [float(lp_norm(x_n - x, p).values.max()) for x_n in xs]
    tower_res = [
        float(lp_norm(E(x) - x, p).values.max()) for E in filtration.cond_exps
    ]
    grid = []
    violation = -np.inf
    for n, x_n in enumerate(xs):
        row = []
        for m, E in enumerate(filtration.cond_exps):
            r = float(lp_norm(E(x_n) - x, p).values.max())
            row.append(r)
            violation = max(violation, r - (seq_res[n] + tower_res[m]))
        grid.append(row)
    bound_ok = all(
        seq_res[n + 1] <= seq_res[n] + slack for n in range(len(seq_res) - 1)
    ) and all(
        tower_res[m + 1] <= tower_res[m] + slack for m in range(len(tower_res) - 1)
    )
    corner = grid[-1][-1]
    corner_bound = seq_res[-1] + tower_res[-1] + slack
    return DoubleSequenceReport(
        p=float(p),
        grid=grid,
        sequence_residuals=seq_res,
        tower_residuals=tower_res,
        corner=corner,
        corner_bound=corner_bound,
        corner_ok=corner <= corner_bound,
        triangle_violation=float(violation),
        bound_monotone_ok=bound_ok,
    )


def _check_weights(w, needed: int):
    w = [float(v) for v in w]
    if len(w) < needed:
        raise UsageError(f"need at least {needed} weights, got {len(w)}")
    if any(not np.isfinite(v) or v <= 0.0 for v in w):
        raise UsageError("averaging weights must be finite and strictly positive")
    return w


def _held_elements(seq: MartingaleSeq, extend_by: int):
    return seq.elements + [seq.elements[-1]] * int(extend_by)


def weighted_averages(seq: MartingaleSeq, w) -> list:
    """Normalized weighted running means ``(1/W_n) sum_{k<=n} w_k x_k``."""
    elements = seq.elements
    w = _check_weights(w, len(elements))
    return _sigma_sequence(elements, w)


def _sigma_sequence(elements, w):
    out = []
    running = None
    total = 0.0
    for x_k, w_k in zip(elements, w):
        running = w_k * x_k if running is None else running + w_k * x_k
        total += w_k
        out.append((1.0 / total) * running)
    return out


def sup_norm_comparison(seq: MartingaleSeq, w, p: float, extend_by: int = 0):
    """Pointwise sup of element norms against sup of averaged norms.

    Returns ``(sup_x, sup_sigma, gap)`` as center elements with
    ``gap = sup_x - sup_sigma``.  Convexity forces ``sup_sigma <= sup_x`` up
    to roundoff on any finite range; the two sups meet only asymptotically,
    which the ``extend_by`` holding scheme emulates.
    """
    elements = _held_elements(seq, extend_by)
    w = _check_weights(w, len(elements))
    sigmas = _sigma_sequence(elements, w)
    sup_x = center_sup([lp_norm(x_n, p) for x_n in seq.elements])
    sup_sigma = center_sup([lp_norm(s, p) for s in sigmas])
    return sup_x, sup_sigma, sup_x - sup_sigma


@dataclass
class CesaroReport:
    """Joint convergence verdict for a martingale and its weighted averages."""

    p: float
    tol: float
    verdict: str                 # "both" | "neither" | "exactly-one"
    element_trace: list          # max over atoms of ||x_n - y||_p
    average_trace: list          # max over atoms of ||sigma_n - y||_p
    element_trace_per_atom: list = field(default_factory=list)
    average_trace_per_atom: list = field(default_factory=list)

    def converged(self) -> tuple[bool, bool]:
        return (
            self.element_trace[-1] <= self.tol,
            self.average_trace[-1] <= self.tol,
        )

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "tol": self.tol,
            "verdict": self.verdict,
            "element_trace": list(self.element_trace),
            "average_trace": list(self.average_trace),
        }


def cesaro_equivalence(seq: MartingaleSeq, w, p: float, tol: float,
                       extend_by: int = 0) -> CesaroReport:
    """Either both the martingale and its averages converge, or neither does.

    The run is extended by holding the terminal element for ``extend_by``
    additional steps, which sends the cumulative weight to infinity (the
    hypothesis behind the averaging equivalence) while keeping the limit
    exact.  Refuses sequences that are not martingales to tolerance.
    """
    if not is_martingale(seq.elements, seq.filtration):
        raise UsageError("input sequence is not a martingale to tolerance")
    y = martingale_limit(seq).limit
    elements = _held_elements(seq, extend_by)
    w = _check_weights(w, len(elements))
    sigmas = _sigma_sequence(elements, w)

    xa, sa, xt, st = [], [], [], []
    for x_n, s_n in zip(elements, sigmas):
        xv = lp_norm(x_n - y, p).values
        sv = lp_norm(s_n - y, p).values
        xa.append([float(v) for v in xv])
        sa.append([float(v) for v in sv])
        xt.append(float(xv.max()))
        st.append(float(sv.max()))

    x_conv = xt[-1] <= tol
    s_conv = st[-1] <= tol
    verdict = "both" if (x_conv and s_conv) else ("neither" if not (x_conv or s_conv) else "exactly-one")
    return CesaroReport(
        p=float(p),
        tol=float(tol),
        verdict=verdict,
        element_trace=xt,
        average_trace=st,
        element_trace_per_atom=xa,
        average_trace_per_atom=sa,
    )
