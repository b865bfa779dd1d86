"""Run reports and their on-disk form: CSV tables, metrics.json and SVG panels."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .bundle import FunctionBundle, fmt
from .funcs import Warp, compose
from .soft import LoocvResult, MultiAlignResult, SoftPairResult
from .svg import Series, write_plot

METRIC_KEYS = (
    "lambda",
    "d_lambda_matrix",
    "objective_trace",
    "dispersion",
    "iterations",
    "best_lambda",
    "loocv_errors",
)


class ResultsError(OSError):
    pass


@dataclass(eq=False)
class RunReport:
    """Everything one CLI run emits. Optional parts are skipped when absent."""

    bundle: FunctionBundle
    aligned: np.ndarray | None = None
    warps: Sequence[Warp] = ()
    consensus: np.ndarray | None = None
    lam: float | None = None
    d_lambda_matrix: np.ndarray | None = None
    objective_trace: np.ndarray | None = None
    dispersion: np.ndarray | None = None
    iterations: int | None = None
    best_lambda: float | None = None
    lambda_grid: np.ndarray | None = None
    loocv_errors: np.ndarray | None = None
    # rows of (lambda, dispersion per landmark)
    dispersion_curve: list[tuple[float, np.ndarray]] = field(default_factory=list)
    extra_metrics: dict = field(default_factory=dict)

    @property
    def names(self) -> tuple[str, ...]:
        return self.bundle.names

    @classmethod
    def from_multi(cls, bundle: FunctionBundle, res: MultiAlignResult) -> "RunReport":
        curve = [(res.lam, res.dispersion)] if res.dispersion.size else []
        return cls(
            bundle,
            aligned=np.array([f.values for f in res.aligned]),
            warps=res.warps_total,
            consensus=res.consensus_function.values,
            lam=res.lam,
            d_lambda_matrix=res.d_lambda_matrix,
            objective_trace=res.objective_trace,
            dispersion=res.dispersion,
            iterations=res.iterations,
            dispersion_curve=curve,
            extra_metrics={"converged": res.converged, "medoid": bundle.names[res.medoid]},
        )

    @classmethod
    def from_pair(cls, bundle: FunctionBundle, res: SoftPairResult) -> "RunReport":
        # gamma_extra is a warp of the hard-registered f2; report each function's total warp
        total2 = compose(res.gamma_hard_2, res.gamma_extra)
        d = np.array([[0.0, res.d_lambda], [res.d_lambda, 0.0]])
        return cls(
            bundle,
            aligned=np.array([res.aligned_f1.values, res.aligned_f2.values]),
            warps=[res.gamma_hard_1, total2],
            lam=res.lam,
            d_lambda_matrix=d,
        )

    def add_loocv(self, res: LoocvResult) -> None:
        self.best_lambda = res.best_lambda
        self.lambda_grid = res.lambda_grid
        self.loocv_errors = res.errors
        if res.dispersion_curve is not None:
            self.dispersion_curve = [(float(l), d) for l, d in zip(res.lambda_grid, res.dispersion_curve)]

    def metrics(self) -> dict:
        out = {
            "lambda": self.lam,
            "d_lambda_matrix": self.d_lambda_matrix,
            "objective_trace": self.objective_trace,
            "dispersion": self.dispersion,
            "iterations": self.iterations,
            "best_lambda": self.best_lambda,
            "loocv_errors": None,
        }
        if self.loocv_errors is not None:
            out["loocv_errors"] = {"lambda_grid": self.lambda_grid, "errors": self.loocv_errors}
        out.update(self.extra_metrics)
        return _jsonable(out)


def _jsonable(x):
    """numpy to plain Python; non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _table(t: np.ndarray, cols: np.ndarray) -> list[list[str]]:
    return [[fmt(t[k]), *(fmt(v) for v in cols[:, k])] for k in range(t.size)]


def write_results(report: RunReport, out_dir) -> list[Path]:
    """Write the tables, metrics.json and SVG panels for one run; return the paths.

    Values are written with 17 significant digits, so reading aligned.csv back
    with the same n_samples reproduces the aligned values exactly.
    """
    if len(report.names) == 0:
        raise ResultsError("nothing to write: the run has no functions")
    if report.aligned is not None and report.aligned.shape[0] != len(report.names):
        raise ResultsError(f"{report.aligned.shape[0]} aligned functions for {len(report.names)} names")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return _write_all(report, out)
    except OSError as exc:
        where = exc.filename or out
        raise ResultsError(f"cannot write results to {where}: {exc.strerror or exc}") from None


def _write_all(report: RunReport, out: Path) -> list[Path]:
    b = report.bundle
    t_norm = b.grid.t
    t = b.to_original_time(t_norm)
    written: list[Path] = []

    if report.aligned is not None:
        p = out / "aligned.csv"
        _write_csv(p, ["t", *report.names], _table(t, report.aligned))
        written.append(p)
    if report.warps:
        p = out / "warps.csv"
        _write_csv(p, ["name", *(f"g{k}" for k in range(b.grid.n_samples))],
                   [[n, *(fmt(v) for v in w.values)] for n, w in zip(report.names, report.warps)])
        written.append(p)
    if report.consensus is not None:
        p = out / "consensus.csv"
        _write_csv(p, ["t", "consensus"], _table(t, np.asarray(report.consensus)[None, :]))
        written.append(p)
    if report.dispersion_curve:
        p = out / "dispersion.csv"
        n_lm = report.dispersion_curve[0][1].size
        _write_csv(p, ["lambda", *(f"tau{j + 1}" for j in range(n_lm))],
                   [[fmt(lam), *(fmt(v) for v in d)] for lam, d in report.dispersion_curve])
        written.append(p)

    p = out / "metrics.json"
    p.write_text(json.dumps(report.metrics(), indent=2))
    written.append(p)
    written.extend(_write_plots(report, out, t))
    return written


def _write_plots(report: RunReport, out: Path, t: np.ndarray) -> list[Path]:
    b = report.bundle
    paths = [
        write_plot(out / "originals.svg", [Series(t, v, n) for n, v in zip(b.names, b.values)],
                   title="Original functions", xlabel="t", ylabel="f(t)")
    ]
    if report.aligned is not None:
        series = [Series(t, v, n) for n, v in zip(report.names, report.aligned)]
        if report.consensus is not None:
            series.append(Series(t, report.consensus, "consensus", dashed=True))
        lam = "" if report.lam is None else f" (lambda = {report.lam:g})"
        paths.append(write_plot(out / "aligned.svg", series, title=f"Aligned functions{lam}", xlabel="t", ylabel="f(t)"))
    if report.warps:
        series = [Series(b.grid.t, w.values, n) for n, w in zip(report.names, report.warps)]
        paths.append(write_plot(out / "warps.svg", series, title="Warping functions", xlabel="t", ylabel="gamma(t)"))
    if report.loocv_errors is not None:
        grid = np.asarray(report.lambda_grid, dtype=float)
        errs = np.asarray(report.loocv_errors, dtype=float)
        # lambda = 0 cannot sit on a log axis; it is drawn at a tenth of the smallest positive value
        pos = grid[grid > 0]
        x = np.where(grid > 0, grid, (pos.min() / 10.0) if pos.size else 1.0)
        paths.append(write_plot(out / "loocv.svg", [Series(x, errs, "LOOCV error", markers=True)],
                                title="Leave-one-out error", xlabel="lambda", ylabel="error", logx=True))
    if len(report.dispersion_curve) > 1:
        lams = np.array([l for l, _ in report.dispersion_curve])
        disp = np.array([d for _, d in report.dispersion_curve])
        pos = lams[lams > 0]
        x = np.where(lams > 0, lams, (pos.min() / 10.0) if pos.size else 1.0)
        series = [Series(x, disp[:, j], f"tau{j + 1}", markers=True) for j in range(disp.shape[1])]
        paths.append(write_plot(out / "dispersion.svg", series, title="Landmark dispersion",
                                xlabel="lambda", ylabel="std of mapped landmarks", logx=True))
    return paths
