"""Sweep driver and output writers.

``comparison.csv`` columns, in order:

``eps, tau, cluster, branch, kind, clause``
    sweep point and pole identity, classification and deciding clause;
``re_/im_lam_asym1``
    leading term ``Lambda_p - (eps mu)**2``;
``re_/im_lam_asym2``
    two-term series;
``re_/im_lam_refined``
    from the refined matrix pole;
``re_/im_lam_direct``
    direct eigenvalue (empty when absent);
``direct_status``
    ``found``, ``absent``, ``absence-verified``, ``eigenvalue-near-resonance``,
    ``skipped``, ``unsupported`` or ``error``;
``residual, tail_mass, message``
    direct-solve diagnostics.

Wall-clock times go to ``timings.csv`` so that ``comparison.csv`` is
byte-identical between runs.
"""
import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .asymptotics import Kind, lambda_of_k, predict_group
from .direct_solver import find_emergent_state
from .errors import DomainError, NumericalFailureError, QuadratureAccuracyError, ThresholdLabError

COLUMNS = (
    "eps", "tau", "cluster", "branch", "kind", "clause",
    "re_lam_asym1", "im_lam_asym1", "re_lam_asym2", "im_lam_asym2",
    "re_lam_refined", "im_lam_refined", "re_lam_direct", "im_lam_direct",
    "direct_status", "residual", "tail_mass", "message",
)
FAILURE_STATUS = "error"


@dataclass
class ComparisonRow:
    eps: float
    tau: int
    cluster: int
    branch: int
    kind: str
    clause: str
    lam_asym1: Optional[complex]
    lam_asym2: Optional[complex]
    lam_refined: Optional[complex]
    lam_direct: Optional[complex] = None
    direct_status: str = "skipped"
    residual: Optional[float] = None
    tail_mass: Optional[float] = None
    message: str = ""
    runtime_ms: float = field(default=0.0, compare=False)

    @property
    def failed(self):
        return self.direct_status == FAILURE_STATUS


@dataclass
class RunResult:
    rows: list
    summary: dict
    failures: int


def _cx(z):
    return None if z is None else complex(z)


def _direct_task(cfg, group, pred, eps):
    """``(lam, status, residual, tail, message)`` for one direct solve."""
    try:
        res = find_emergent_state(cfg.spectrum, cfg.pair, eps, group, pred, cfg.solver)
    except DomainError as exc:
        return None, "unsupported", None, None, str(exc)
    except (NumericalFailureError, QuadratureAccuracyError, ThresholdLabError) as exc:
        return None, FAILURE_STATUS, getattr(exc, "best_residual", None), None, str(exc)
    if pred.kind is Kind.RESONANCE:
        if res.found is None:
            return None, "absence-verified", None, None, ""
        f = res.found
        return f.lam, "eigenvalue-near-resonance", f.residual, f.tail_mass, ""
    if res.found is None:
        near = ", ".join(f"{c.lam.real:.10g}{c.lam.imag:+.3g}j" for c in res.candidates[:3])
        return None, "absent", None, None, f"nearest: {near}"
    f = res.found
    return f.lam, "found", f.residual, f.tail_mass, ""


def _wants_direct(cfg, pred):
    if not cfg.direct:
        return False
    if pred.kind is Kind.EIGENVALUE:
        return True
    return pred.kind is Kind.RESONANCE and cfg.verify_absence


def run_experiment(cfg):
    """Evaluate every (eps, tau, pole) of the sweep; rows sorted deterministically."""
    group = cfg.group
    gp = predict_group(cfg.spectrum, group, cfg.pair, cfg.jmax, cfg.order)
    rows, jobs = [], []
    for eps in cfg.eps:
        for tau in gp.taus:
            refined = gp.refined_k(tau, eps)
            for pred, kr in zip(gp.predictions[tau], refined):
                pl = pred.pole
                show = cfg.asymptotics
                row = ComparisonRow(
                    eps=float(eps), tau=tau, cluster=pl.cluster, branch=pl.branch,
                    kind=pred.kind.value, clause=pred.clause,
                    lam_asym1=_cx(pred.lam_leading(eps)) if show else None,
                    lam_asym2=_cx(pred.lam(eps)) if show else None,
                    lam_refined=_cx(lambda_of_k(group.value, kr)) if show else None,
                )
                rows.append(row)
                if _wants_direct(cfg, pred):
                    jobs.append((row, pred))

    def work(job):
        row, pred = job
        t0 = time.perf_counter()
        out = _direct_task(cfg, group, pred, row.eps)
        return out, 1e3 * (time.perf_counter() - t0)

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        for (row, _), (out, ms) in zip(jobs, pool.map(work, jobs)):
            lam, row.direct_status, row.residual, row.tail_mass, row.message = out
            row.lam_direct = _cx(lam)
            row.runtime_ms = ms
    rows.sort(key=lambda r: (r.eps, r.tau, r.cluster, r.branch))
    failures = sum(r.failed for r in rows)
    return RunResult(rows, _summary(cfg, gp, rows), failures)


def _matrix(M):
    M = np.atleast_2d(M)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def _summary(cfg, gp, rows):
    mats = gp.matrices
    statuses = {}
    for r in rows:
        statuses[r.direct_status] = statuses.get(r.direct_status, 0) + 1
    return {
        "name": cfg.name,
        "model": cfg.model,
        "p": cfg.p,
        "threshold": gp.group.value,
        "multiplicity": gp.group.multiplicity,
        "eps": list(cfg.eps),
        "M1": _matrix(mats.M1),
        "M2": {f"{t:+d}": _matrix(mats.M2[t]) for t in gp.taus},
        "jmax": mats.jmax,
        "tail_estimate": mats.tail_estimate,
        "poles": [p.record() for t in gp.taus for p in gp.predictions[t]],
        "direct_status_counts": dict(sorted(statuses.items())),
    }


def _fmt(x):
    return "" if x is None else repr(float(x))


def _row_cells(r):
    def pair(z):
        return ["", ""] if z is None else [_fmt(z.real), _fmt(z.imag)]

    return ([repr(r.eps), f"{r.tau:+d}", str(r.cluster), str(r.branch), r.kind, r.clause]
            + pair(r.lam_asym1) + pair(r.lam_asym2) + pair(r.lam_refined) + pair(r.lam_direct)
            + [r.direct_status, _fmt(r.residual), _fmt(r.tail_mass), r.message])


def write_comparison(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow(_row_cells(r))


def read_comparison(path):
    """Parse a ``comparison.csv`` back into rows (timings are not stored there)."""

    def num(s):
        return None if s == "" else float(s)

    def cx(re, im):
        return None if re == "" else complex(float(re), float(im))

    rows = []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = tuple(next(rd))
        if header != COLUMNS:
            raise ValueError(f"{path}: unexpected header")
        for c in rd:
            rows.append(ComparisonRow(
                eps=float(c[0]), tau=int(c[1]), cluster=int(c[2]), branch=int(c[3]),
                kind=c[4], clause=c[5], lam_asym1=cx(c[6], c[7]), lam_asym2=cx(c[8], c[9]),
                lam_refined=cx(c[10], c[11]), lam_direct=cx(c[12], c[13]), direct_status=c[14],
                residual=num(c[15]), tail_mass=num(c[16]), message=c[17],
            ))
    return rows


METHODS = (("asym1", "lam_asym1"), ("asym2", "lam_asym2"), ("refined", "lam_refined"),
           ("direct", "lam_direct"))


def write_fig_data(rows, path):
    """One line per (tau, pole, eps): real and imaginary part for each method."""
    head = ["tau", "cluster", "branch", "eps"]
    for m, _ in METHODS:
        head += [f"re_{m}", f"im_{m}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(head)
        for r in sorted(rows, key=lambda r: (r.tau, r.cluster, r.branch, r.eps)):
            cells = [f"{r.tau:+d}", str(r.cluster), str(r.branch), repr(r.eps)]
            for _, attr in METHODS:
                z = getattr(r, attr)
                cells += ["", ""] if z is None else [_fmt(z.real), _fmt(z.imag)]
            w.writerow(cells)


COLORS = {"asym1": "#1f77b4", "asym2": "#2ca02c", "refined": "#9467bd", "direct": "#d62728"}


def svg_plot(series, title, xlabel, ylabel, width=640, height=420):
    """Polyline plot; ``series`` maps a label to ``(x, y, color)``."""
    pts = [(x, y) for xs, ys, _ in series.values() for x, y in zip(xs, ys)]
    ml, mr, mt, mb = 70, 150, 40, 50
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="14">{title}</text>']
    if pts:
        xs, ys = np.array(pts).T
        x0, x1 = xs.min(), xs.max()
        y0, y1 = ys.min(), ys.max()
        x1 = x1 if x1 > x0 else x0 + 1.0
        pad = 0.05 * (y1 - y0) if y1 > y0 else max(abs(y0), 1.0) * 0.05
        y0, y1 = y0 - pad, y1 + pad
        pw, ph = width - ml - mr, height - mt - mb

        def px(x):
            return ml + (x - x0) / (x1 - x0) * pw

        def py(y):
            return mt + (y1 - y) / (y1 - y0) * ph

        out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
        for v in np.linspace(x0, x1, 5):
            out.append(f'<text x="{px(v):.1f}" y="{mt + ph + 16}" text-anchor="middle" font-size="10">{v:.3g}</text>')
        for v in np.linspace(y0, y1, 5):
            out.append(f'<text x="{ml - 4}" y="{py(v) + 3:.1f}" text-anchor="end" font-size="10">{v:.6g}</text>')
        out.append(f'<text x="{ml + pw / 2}" y="{height - 10}" text-anchor="middle" font-size="12">{xlabel}</text>')
        out.append(f'<text x="14" y="{mt + ph / 2}" font-size="12" transform="rotate(-90 14 {mt + ph / 2})" '
                   f'text-anchor="middle">{ylabel}</text>')
        for k, (label, (sx, sy, color)) in enumerate(series.items()):
            if len(sx):
                path = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(sx, sy))
                out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
                for a, b in zip(sx, sy):
                    out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="2.5" fill="{color}"/>')
            ly = mt + 14 + 16 * k
            out.append(f'<line x1="{width - mr + 10}" y1="{ly}" x2="{width - mr + 30}" y2="{ly}" '
                       f'stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{width - mr + 34}" y="{ly + 4}" font-size="11">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _plot_series(rows, part):
    series = {}
    keys = sorted({(r.tau, r.cluster, r.branch) for r in rows})
    for key in keys:
        sel = sorted((r for r in rows if (r.tau, r.cluster, r.branch) == key), key=lambda r: r.eps)
        tag = f"tau={key[0]:+d}" + (f" pole {key[1]}.{key[2]}" if len(keys) > 2 else "")
        for m, attr in METHODS:
            xs = [r.eps for r in sel if getattr(r, attr) is not None]
            ys = [getattr(getattr(r, attr), part) for r in sel if getattr(r, attr) is not None]
            if xs:
                series[f"{m} {tag}"] = (xs, ys, COLORS[m])
    return series


def emit_outputs(result, cfg, out_dir=None):
    """Write the run's files into ``out_dir``; returns the list of paths."""
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "comparison.csv", out / "summary.json", out / f"fig_data_{cfg.name}.csv",
             out / "timings.csv"]
    write_comparison(result.rows, paths[0])
    with open(paths[1], "w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_fig_data(result.rows, paths[2])
    with open(paths[3], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps", "tau", "cluster", "branch", "direct_runtime_ms"])
        for r in result.rows:
            w.writerow([repr(r.eps), f"{r.tau:+d}", r.cluster, r.branch, f"{r.runtime_ms:.1f}"])
    if cfg.svg and result.rows:
        for part, label in (("real", "Re"), ("imag", "Im")):
            p = out / f"plot_{cfg.name}_{part[:2]}.svg"
            p.write_text(svg_plot(_plot_series(result.rows, part), f"{cfg.name}: {label} lambda",
                                  "eps", f"{label} lambda"))
            paths.append(p)
    return paths
