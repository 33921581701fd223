"""Config-driven experiment orchestration with machine-readable reports.

Every check produces a named worst residual compared against its configured
tolerance; the JSON summary enumerates all of them (nothing is skipped
silently) and the residual traces stream to CSV.  All randomness derives from
the configured seed, so identical configs produce byte-identical artifacts.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .bundle import random_section, section_from_records, section_to_records
from .condexp import check_cond_exp_axioms
from .config import ExperimentConfig, config_hash
from .errors import UsageError
from .fiber import spectral_norm
from .martingale import (
    Filtration,
    build_filtration,
    cesaro_equivalence,
    martingale_defect,
    martingale_from_target,
    martingale_limit,
    sup_norm_comparison,
)
from .tracelp import center_trace, derive_seed, duality_check, lp_norm

ALL_PARTS = ("trace", "condexp", "duality", "martingale")
FAITHFULNESS_TRACE_CUT = 1e-12  # trace values below this trigger the norm check


@dataclass
class CheckResult:
    name: str
    worst_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.worst_residual <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "worst_residual": self.worst_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def _flag(ok: bool) -> float:
    # boolean verdicts ride the same residual-vs-tolerance schema
    return 0.0 if ok else 1.0


def run_trace_checks(cfg: ExperimentConfig, bundle) -> list[CheckResult]:
    """Traciality, positivity, and the faithfulness contrapositive."""
    tol = cfg.tolerances["trace_axioms"]
    traciality = positivity = faithfulness = 0.0
    for t in range(cfg.trials["trace_sections"]):
        x = random_section(bundle, derive_seed(cfg.seed, "trace-x", t), "general")
        y = random_section(bundle, derive_seed(cfg.seed, "trace-y", t), "general")
        d = np.abs(center_trace(x * y).values - center_trace(y * x).values)
        traciality = max(traciality, float(d.max()))
        gram = center_trace(x.adjoint() * x).values
        positivity = max(
            positivity,
            float(np.abs(gram.imag).max()),
            max(0.0, float(-gram.real.min())),
        )
        tiny = 1e-9 * x
        tiny_tr = center_trace(tiny.adjoint() * tiny).values.real
        for i, label in enumerate(bundle.space.labels):
            if tiny_tr[i] < FAITHFULNESS_TRACE_CUT:
                faithfulness = max(faithfulness, spectral_norm(tiny.fiber(label)))
    return [
        CheckResult("trace/traciality", traciality, tol),
        CheckResult("trace/positivity", positivity, tol),
        CheckResult("trace/faithfulness", faithfulness, cfg.tolerances["faithfulness_norm"]),
    ]


def build_tower(cfg: ExperimentConfig, bundle) -> Filtration:
    return build_filtration(bundle, cfg.tower_generators(bundle))


def run_condexp_checks(cfg: ExperimentConfig, filtration: Filtration):
    """Conditional-expectation axiom reports for every tower level."""
    tol = cfg.tolerances["condexp_axioms"]
    worst: dict[str, float] = {}
    reports = []
    for level, E in enumerate(filtration.cond_exps):
        rep = check_cond_exp_axioms(
            E, cfg.trials["axioms"], derive_seed(cfg.seed, "axioms", level)
        )
        reports.append({"level": level, "dims": list(E.target.dims), **rep.to_dict()})
        for name, value in rep.residuals.items():
            worst[name] = max(worst.get(name, 0.0), value)
    checks = [
        CheckResult(f"condexp/{name}", value, tol)
        for name, value in sorted(worst.items())
    ]
    return checks, reports


def run_duality_checks(cfg: ExperimentConfig, bundle):
    """Sampled dual-ball violations and extremal attainment for every exponent."""
    checks = []
    reports = []
    for p in cfg.exponents:
        violation = attainment = 0.0
        for s in range(cfg.trials["duality_sections"]):
            x = random_section(bundle, derive_seed(cfg.seed, "duality-x", p, s), "general")
            rep = duality_check(
                x, p, cfg.trials["duality_samples"], derive_seed(cfg.seed, "duality", p, s)
            )
            reports.append(rep.to_dict())
            violation = max(violation, rep.max_violation)
            attainment = max(attainment, rep.attainment_residual)
        checks.append(
            CheckResult(f"duality/p={p:g}/violation", violation, cfg.tolerances["duality_violation"])
        )
        checks.append(
            CheckResult(f"duality/p={p:g}/attainment", attainment, cfg.tolerances["duality_attainment"])
        )
    return checks, reports


def run_martingale_checks(cfg: ExperimentConfig, filtration: Filtration):
    """Tower-projection martingales: convergence, averaging, and traces."""
    bundle = filtration.bundle
    mart_p = 2.0 if 2.0 in cfg.exponents else cfg.exponents[0]
    defect = recon = terminal = monotone = pythagoras = gap = 0.0
    all_both = True
    never_one = True
    rows = []
    limit_section = None
    for s in range(cfg.trials["martingale_seeds"]):
        x = random_section(bundle, derive_seed(cfg.seed, "mart-x", s), "general")
        seq = martingale_from_target(x, filtration, p=mart_p)
        defect = max(defect, martingale_defect(seq.elements, filtration))
        lim = martingale_limit(seq)
        if limit_section is None:
            limit_section = lim.limit
        recon = max(recon, lim.reconstruction_residual)
        terminal = max(terminal, lim.residual_trace[-1])
        for a, b in zip(lim.residual_trace, lim.residual_trace[1:]):
            monotone = max(monotone, b - a)
        norm_x_sq = lp_norm(x, 2).values ** 2
        for x_n in seq.elements:
            drift = np.abs(
                norm_x_sq - lp_norm(x_n, 2).values ** 2 - lp_norm(x - x_n, 2).values ** 2
            )
            pythagoras = max(pythagoras, float(drift.max()))
        steps = len(seq) + cfg.extension
        w = cfg.weight_list(steps)
        sup_x, sup_sigma, _ = sup_norm_comparison(seq, w, mart_p, extend_by=cfg.extension)
        gap = max(gap, max(0.0, float((sup_sigma.values - sup_x.values).max())))
        rep = cesaro_equivalence(
            seq, w, mart_p, cfg.tolerances["cesaro"], extend_by=cfg.extension
        )
        all_both = all_both and rep.verdict == "both"
        never_one = never_one and rep.verdict != "exactly-one"
        tag = f"{cfg.experiment_id}:seed={s}"
        for n, (xv, sv) in enumerate(
            zip(rep.element_trace_per_atom, rep.average_trace_per_atom), start=1
        ):
            for label, rx, rs in zip(bundle.space.labels, xv, sv):
                rows.append((tag, n, label, rx, rs))
    checks = [
        CheckResult("martingale/defect", defect, cfg.tolerances["martingale_defect"]),
        CheckResult("martingale/limit_reconstruction", recon, cfg.tolerances["martingale_defect"]),
        CheckResult("martingale/terminal_residual", terminal, cfg.tolerances["martingale_terminal"]),
        CheckResult("martingale/monotone_residuals", monotone, cfg.tolerances["martingale_defect"]),
        CheckResult("martingale/pythagoras_p2", pythagoras, cfg.tolerances["pythagoras"]),
        CheckResult("martingale/sup_gap", gap, cfg.tolerances["sup_gap"]),
        CheckResult("martingale/cesaro_both", _flag(all_both), 0.5),
        CheckResult("martingale/cesaro_never_one", _flag(never_one), 0.5),
    ]
    return checks, rows, limit_section


def write_json(path: str, payload: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_trace_csv(path: str, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("experiment_id,n,omega,residual_xp,residual_sigma\n")
        for tag, n, label, rx, rs in rows:
            fh.write(f"{tag},{n},{label},{rx!r},{rs!r}\n")


def write_section_csv(path: str, section):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("omega,block,row,col,re,im\n")
        for label, k, i, j, re, im in section_to_records(section):
            fh.write(f"{label},{k},{i},{j},{re!r},{im!r}\n")


def read_section_csv(path: str, bundle):
    """Rebuild a section from a golden file written by ``write_section_csv``."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline().strip()
        if header != "omega,block,row,col,re,im":
            raise UsageError(f"not a section file: unexpected header {header!r}")
        rows = []
        for line in fh:
            label, k, i, j, re, im = line.rstrip("\n").split(",")
            rows.append((label, int(k), int(i), int(j), float(re), float(im)))
    return section_from_records(bundle, rows)


def run_experiment(cfg: ExperimentConfig, out_dir: str, parts=ALL_PARTS):
    """Run the configured experiment parts and write summary/trace artifacts.

    Returns ``(summary_dict, all_pass)``.  The summary enumerates every check
    the config defines for the requested parts.
    """
    unknown = [p for p in parts if p not in ALL_PARTS]
    if unknown:
        raise UsageError(f"unknown experiment parts: {unknown}")
    os.makedirs(out_dir, exist_ok=True)
    bundle = cfg.build_bundle()

    checks: list[CheckResult] = []
    filtration = None
    if "condexp" in parts or "martingale" in parts:
        filtration = build_tower(cfg, bundle)

    if "trace" in parts:
        checks.extend(run_trace_checks(cfg, bundle))
    if "condexp" in parts:
        cx_checks, cx_reports = run_condexp_checks(cfg, filtration)
        checks.extend(cx_checks)
        write_json(os.path.join(out_dir, "axioms.json"), {
            "experiment_id": cfg.experiment_id,
            "seed": cfg.seed,
            "levels": cx_reports,
        })
    if "duality" in parts:
        du_checks, du_reports = run_duality_checks(cfg, bundle)
        checks.extend(du_checks)
        write_json(os.path.join(out_dir, "duality.json"), {
            "experiment_id": cfg.experiment_id,
            "seed": cfg.seed,
            "reports": du_reports,
        })
    if "martingale" in parts:
        ma_checks, rows, limit_section = run_martingale_checks(cfg, filtration)
        checks.extend(ma_checks)
        write_trace_csv(os.path.join(out_dir, cfg.outputs["traces"]), rows)
        if limit_section is not None:
            write_section_csv(os.path.join(out_dir, "limit_section.csv"), limit_section)

    summary = {
        "experiment_id": cfg.experiment_id,
        "seed": cfg.seed,
        "config_hash": config_hash(cfg),
        "checks": [c.to_dict() for c in checks],
    }
    write_json(os.path.join(out_dir, cfg.outputs["summary"]), summary)
    return summary, all(c.passed for c in checks)
