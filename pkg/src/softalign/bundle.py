"""Function bundles: a grid, named functions and optional landmarks, plus CSV/JSON I/O.

Functions CSV: header ``t,name1,name2,...``; the time column must be strictly
increasing and is mapped affinely onto [0, 1]. Landmarks JSON maps each
function name to its landmark positions on the original time axis.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .funcs import Grid, SampledFunction
from .landmarks import LandmarkError, LandmarkSet


class BundleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FunctionBundle:
    grid: Grid
    names: tuple[str, ...]
    values: np.ndarray = field(repr=False)
    landmarks: tuple[LandmarkSet, ...] | None = None
    time_span: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape != (len(self.names), self.grid.n_samples):
            raise BundleError(
                f"values must have shape ({len(self.names)}, {self.grid.n_samples}), got {vals.shape}"
            )
        if len(set(self.names)) != len(self.names):
            raise BundleError("function names must be unique")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "names", tuple(self.names))
        if self.landmarks is not None:
            lms = tuple(self.landmarks)
            if len(lms) != len(self.names):
                raise BundleError("need one landmark set per function")
            if len({len(s) for s in lms}) > 1:
                raise BundleError("every function must carry the same number of landmarks")
            object.__setattr__(self, "landmarks", lms)

    def __len__(self) -> int:
        return len(self.names)

    @property
    def functions(self) -> list[SampledFunction]:
        return [SampledFunction(self.grid, v) for v in self.values]

    def landmark_sets(self) -> list[LandmarkSet]:
        if self.landmarks is None:
            return [LandmarkSet() for _ in self.names]
        return list(self.landmarks)

    def select(self, names: Sequence[str]) -> "FunctionBundle":
        idx = [self.names.index(n) for n in names]
        lms = None if self.landmarks is None else tuple(self.landmarks[i] for i in idx)
        return FunctionBundle(self.grid, tuple(names), self.values[idx], lms, self.time_span)

    def to_original_time(self, x):
        lo, hi = self.time_span
        return lo + (hi - lo) * np.asarray(x, dtype=float)


def _parse_float(text: str, row: int, col: str, path) -> float:
    try:
        val = float(text)
    except ValueError:
        raise BundleError(f"{path}: row {row}, column {col!r}: not a number: {text!r}") from None
    if not math.isfinite(val):
        raise BundleError(f"{path}: row {row}, column {col!r}: non-finite value {text!r}")
    return val


def read_functions_csv(path) -> tuple[np.ndarray, list[str], np.ndarray]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise BundleError(f"{path}: empty file") from None
        if len(header) < 2:
            raise BundleError(f"{path}: need a time column and at least one function column")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise BundleError(f"{path}: row {lineno} has {len(row)} fields, header has {len(header)}")
            rows.append([_parse_float(c, lineno, header[k], path) for k, c in enumerate(row)])
    if len(rows) < 3:
        raise BundleError(f"{path}: need at least 3 samples, found {len(rows)}")
    data = np.array(rows)
    t = data[:, 0]
    bad = np.flatnonzero(np.diff(t) <= 0)
    if bad.size:
        raise BundleError(f"{path}: time column not strictly increasing at row {bad[0] + 3}")
    return t, header[1:], data[:, 1:].T


def read_landmarks_json(path, names: Sequence[str], time_span: tuple[float, float]) -> tuple[LandmarkSet, ...]:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BundleError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise BundleError(f"{path}: expected an object mapping function name to landmark list")
    missing = [n for n in names if n not in raw]
    if missing:
        raise BundleError(f"{path}: no landmarks for function(s) {missing}")
    lo, hi = time_span
    sets = []
    for name in names:
        vals = raw[name]
        if not isinstance(vals, list) or not all(isinstance(v, (int, float)) for v in vals):
            raise BundleError(f"{path}: landmarks for {name!r} must be a list of numbers")
        arr = np.array(vals, dtype=float)
        if np.any((arr <= lo) | (arr >= hi)):
            raise BundleError(f"{path}: landmark for {name!r} outside the open interval ({lo:g}, {hi:g}): {vals}")
        if np.any(np.diff(arr) <= 0):
            raise BundleError(f"{path}: landmarks for {name!r} are not strictly increasing: {vals}")
        try:
            sets.append(LandmarkSet((arr - lo) / (hi - lo)))
        except LandmarkError as exc:
            raise BundleError(f"{path}: landmarks for {name!r}: {exc}") from None
    if len({len(s) for s in sets}) > 1:
        raise BundleError(f"{path}: functions carry different numbers of landmarks")
    return tuple(sets)


def read_bundle(path_csv, path_landmarks=None, n_samples: int = 201) -> FunctionBundle:
    """Read a functions CSV (and optional landmarks JSON), resampled to a uniform grid.

    A CSV whose time column already is that grid (after the affine map) is
    taken as is, so write/read round trips are bit-exact.
    """
    t, names, vals = read_functions_csv(path_csv)
    span = (float(t[0]), float(t[-1]))
    u = (t - t[0]) / (t[-1] - t[0])
    grid = Grid(n_samples)
    if u.size == grid.n_samples and np.max(np.abs(u - grid.t)) < 1e-9 * grid.dt:
        # already on the grid up to rounding of the time column: keep the samples verbatim
        resampled = vals
    else:
        resampled = np.array([np.interp(grid.t, u, v) for v in vals])
    lms = None if path_landmarks is None else read_landmarks_json(path_landmarks, names, span)
    return FunctionBundle(grid, tuple(names), resampled, lms, span)


def fmt(x: float) -> str:
    return repr(float(x))


def write_bundle(bundle: FunctionBundle, out_dir, stem: str = "functions") -> list[Path]:
    """Write ``<stem>.csv`` and, with landmarks, ``<stem>_landmarks.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *bundle.names])
        t = bundle.to_original_time(bundle.grid.t)
        for k in range(bundle.grid.n_samples):
            w.writerow([fmt(t[k]), *(fmt(v) for v in bundle.values[:, k])])
    written = [csv_path]
    if bundle.landmarks is not None:
        lm_path = out / f"{stem}_landmarks.json"
        payload = {n: bundle.to_original_time(s.positions).tolist() for n, s in zip(bundle.names, bundle.landmarks)}
        lm_path.write_text(json.dumps(payload, indent=2))
        written.append(lm_path)
    return written
