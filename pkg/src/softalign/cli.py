"""Command-line entry point: ``softalign <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bundle import FunctionBundle, read_bundle, write_bundle
from .dp import DpConfig, penalized_l2_baseline
from .funcs import Warp, compose, to_srvf, warp_apply
from .landmarks import ReferencePolicy
from .results import RunReport, write_results
from .soft import Workspace, loocv_lambda, soft_multiple, soft_pair
from .synth import SCENARIOS, synth_scenario

log = logging.getLogger("softalign")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # one line on stderr instead of the usage block
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    n_samples: int
    lam: float
    lambda_grid: np.ndarray | None
    reference: str
    slope_cap: int
    center: bool
    tol: float
    max_iter: int
    out: Path
    seed: int

    def __post_init__(self):
        if self.n_samples < 3:
            raise UsageError("--n-samples must be at least 3")
        if not self.lam >= 0:
            raise UsageError("--lambda must be non-negative")
        if not 1 <= self.slope_cap <= 20:
            raise UsageError("--slope-cap must be between 1 and 20")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.max_iter < 1:
            raise UsageError("--max-iter must be at least 1")

    @property
    def dp(self) -> DpConfig:
        return DpConfig(slope_cap=self.slope_cap)


def parse_lambda_grid(text: str) -> np.ndarray:
    """``lo:hi:k`` gives 0 followed by k log-spaced values from lo to hi."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--lambda-grid expects lo:hi:k, got {text!r}")
    try:
        lo, hi, k = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"--lambda-grid expects lo:hi:k with numbers, got {text!r}") from None
    if not (0 < lo <= hi) or k < 1:
        raise UsageError(f"--lambda-grid needs 0 < lo <= hi and k >= 1, got {text!r}")
    return np.concatenate([[0.0], np.logspace(np.log10(lo), np.log10(hi), k)])


def parse_reference(text: str, names) -> ReferencePolicy:
    if text in ("mean", "medoid"):
        return ReferencePolicy(text)
    if text.startswith("fixed:"):
        try:
            vals = [float(v) for v in text[6:].split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"--reference fixed: expects comma-separated numbers, got {text!r}") from None
        return ReferencePolicy.fixed(vals)
    if text.startswith("from:"):
        name = text[5:]
        if name not in names:
            raise UsageError(f"--reference from:{name}: no function named {name!r}")
        return ReferencePolicy.from_function(list(names).index(name))
    raise UsageError(f"--reference must be mean, medoid, fixed:a,b,... or from:name, got {text!r}")


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="softalign", description="Soft landmark-guided elastic alignment of sampled functions.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_args(sp, landmarks=True):
        src = sp.add_argument_group("input (a CSV file or a synthetic scenario)")
        src.add_argument("--input", type=Path, help="functions CSV: t,name1,name2,...")
        if landmarks:
            src.add_argument("--landmarks", type=Path, help="landmarks JSON: {name: [positions]}")
        src.add_argument("--scenario", choices=SCENARIOS, help="generate a synthetic scenario instead")
        src.add_argument("--seed", type=int, default=0, help="scenario seed (default 0)")
        sp.add_argument("--n-samples", type=int, default=201, help="grid size (default 201)")
        sp.add_argument("--slope-cap", type=int, default=5, help="largest DP step ratio (default 5)")
        sp.add_argument("--out", type=Path, default=Path("out"), help="output directory (default ./out)")

    def align_args(sp):
        sp.add_argument("--lambda", dest="lam", type=_float, default=0.0, help="penalty weight; 'inf' for hard")
        sp.add_argument("--reference", default="medoid", help="mean | medoid | fixed:a,b,... | from:name")
        sp.add_argument("--center", action="store_true", help="centre hard warps of a pair on their mean")
        sp.add_argument("--tol", type=float, default=1e-4, help="consensus convergence tolerance")
        sp.add_argument("--max-iter", type=int, default=20, help="iteration cap for multiple alignment")
        sp.add_argument("--workers", type=int, default=None, help="threads for the pairwise stage")

    sp = sub.add_parser("align-pair", help="soft alignment of two functions")
    data_args(sp)
    align_args(sp)
    sp.add_argument("--pair", help="two function names, comma-separated (default: the first two)")

    sp = sub.add_parser("align-multi", help="soft multiple alignment around a consensus")
    data_args(sp)
    align_args(sp)

    sp = sub.add_parser("loocv", help="choose lambda by leave-one-out shape error")
    data_args(sp)
    align_args(sp)
    sp.add_argument("--lambda-grid", help="lo:hi:k, 0 plus k log-spaced values (default: data-scaled grid)")
    sp.add_argument("--dispersion-curve", action="store_true",
                    help="also run full-data alignments on the grid and record landmark dispersion")

    sp = sub.add_parser("distance", help="matrix of pairwise soft distances")
    data_args(sp)
    align_args(sp)

    sp = sub.add_parser("hard", help="hard landmark registration to the medoid")
    data_args(sp)
    align_args(sp)

    sp = sub.add_parser("baseline", help="penalised L2 time warping of a pair (no SRVF)")
    data_args(sp, landmarks=False)
    sp.add_argument("--lambda", dest="lam", type=_float, default=0.0, help="roughness penalty weight")
    sp.add_argument("--order", type=int, choices=(1, 2), default=1, help="penalise gamma' (1) or gamma'' (2)")
    sp.add_argument("--pair", help="two function names, comma-separated (default: the first two)")

    sp = sub.add_parser("synth", help="write a synthetic scenario as CSV + landmarks JSON")
    sp.add_argument("--name", required=True, choices=SCENARIOS)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-samples", type=int, default=201)
    sp.add_argument("--out", type=Path, default=Path("out"))
    return p


def _config(args) -> RunConfig:
    grid = parse_lambda_grid(args.lambda_grid) if getattr(args, "lambda_grid", None) else None
    return RunConfig(
        n_samples=args.n_samples,
        lam=getattr(args, "lam", 0.0),
        lambda_grid=grid,
        reference=getattr(args, "reference", "medoid"),
        slope_cap=getattr(args, "slope_cap", 5),
        center=getattr(args, "center", False),
        tol=getattr(args, "tol", 1e-4),
        max_iter=getattr(args, "max_iter", 20),
        out=args.out,
        seed=args.seed,
    )


def load_bundle(args, cfg: RunConfig) -> FunctionBundle:
    if (args.input is None) == (args.scenario is None):
        raise UsageError("give exactly one of --input or --scenario")
    if args.scenario is not None:
        if getattr(args, "landmarks", None) is not None:
            raise UsageError("--landmarks only applies to --input")
        return synth_scenario(args.scenario, args.seed, cfg.n_samples)
    return read_bundle(args.input, getattr(args, "landmarks", None), cfg.n_samples)


def _pick_pair(bundle: FunctionBundle, spec: str | None) -> FunctionBundle:
    if spec is None:
        if len(bundle) < 2:
            raise UsageError("a pair command needs at least two functions")
        return bundle.select(bundle.names[:2])
    names = [n.strip() for n in spec.split(",")]
    if len(names) != 2 or names[0] == names[1]:
        raise UsageError(f"--pair expects two distinct names, got {spec!r}")
    missing = [n for n in names if n not in bundle.names]
    if missing:
        raise UsageError(f"--pair: unknown function(s) {missing}")
    return bundle.select(names)


def _need_landmarks(bundle: FunctionBundle, what: str) -> None:
    if bundle.landmarks is None:
        raise UsageError(f"{what} needs landmarks (--landmarks or a --scenario)")


def _done(paths) -> None:
    for p in paths:
        print(p)


def cmd_align_pair(args, cfg: RunConfig) -> int:
    bundle = _pick_pair(load_bundle(args, cfg), args.pair)
    f1, f2 = bundle.functions
    t1, t2 = bundle.landmark_sets()
    policy = parse_reference(cfg.reference, bundle.names)
    if policy.kind == "medoid":
        policy = ReferencePolicy("mean")
    res = soft_pair(f1, t1, f2, t2, cfg.lam, policy, cfg.dp, center=cfg.center)
    print(f"d_lambda({bundle.names[0]}, {bundle.names[1]}) = {res.d_lambda:.10g} at lambda = {cfg.lam:g}")
    _done(write_results(RunReport.from_pair(bundle, res), cfg.out))
    return 0


def _workspace(bundle: FunctionBundle, args, cfg: RunConfig) -> Workspace:
    qs = [to_srvf(f) for f in bundle.functions]
    policy = parse_reference(cfg.reference, bundle.names)
    return Workspace(qs, bundle.landmark_sets(), policy, cfg.dp, args.workers)


def cmd_align_multi(args, cfg: RunConfig) -> int:
    bundle = load_bundle(args, cfg)
    ws = _workspace(bundle, args, cfg)
    res = soft_multiple(bundle.functions, bundle.landmark_sets(), cfg.lam, cfg=cfg.dp, tol=cfg.tol,
                        max_iter=cfg.max_iter, workspace=ws)
    state = "converged" if res.converged else "stopped"
    print(f"{state} after {res.iterations} iterations; objective {res.objective_trace[-1]:.6g}")
    if res.dispersion.size:
        print("landmark dispersion: " + " ".join(f"{d:.4g}" for d in res.dispersion))
    _done(write_results(RunReport.from_multi(bundle, res), cfg.out))
    return 0


def cmd_loocv(args, cfg: RunConfig) -> int:
    bundle = load_bundle(args, cfg)
    _need_landmarks(bundle, "loocv")
    policy = parse_reference(cfg.reference, bundle.names)
    lo = loocv_lambda(bundle.functions, bundle.landmark_sets(), cfg.lambda_grid, policy, cfg.dp, cfg.tol,
                      cfg.max_iter, full_runs=args.dispersion_curve, workers=args.workers)
    for lam, err in zip(lo.lambda_grid, lo.errors):
        print(f"lambda {lam:<12.6g} error {err:.6g}")
    print(f"best lambda = {lo.best_lambda:.6g}")
    ws = _workspace(bundle, args, cfg)
    final = soft_multiple(bundle.functions, bundle.landmark_sets(), lo.best_lambda, cfg=cfg.dp, tol=cfg.tol,
                          max_iter=cfg.max_iter, workspace=ws)
    report = RunReport.from_multi(bundle, final)
    report.add_loocv(lo)
    _done(write_results(report, cfg.out))
    return 0


def cmd_distance(args, cfg: RunConfig) -> int:
    bundle = load_bundle(args, cfg)
    ws = _workspace(bundle, args, cfg)
    mat = ws.distance_matrix(cfg.lam)
    width = max(len(n) for n in bundle.names)
    print(" " * width + "".join(f"{n:>14}" for n in bundle.names))
    for n, row in zip(bundle.names, mat):
        print(f"{n:<{width}}" + "".join(f"{v:14.6g}" for v in row))
    _done(write_results(RunReport(bundle, lam=cfg.lam, d_lambda_matrix=mat), cfg.out))
    return 0


def cmd_hard(args, cfg: RunConfig) -> int:
    bundle = load_bundle(args, cfg)
    _need_landmarks(bundle, "hard")
    ws = _workspace(bundle, args, cfg)
    res = soft_multiple(bundle.functions, bundle.landmark_sets(), np.inf, cfg=cfg.dp, max_iter=1, workspace=ws)
    print("landmark dispersion: " + " ".join(f"{d:.4g}" for d in res.dispersion))
    _done(write_results(RunReport.from_multi(bundle, res), cfg.out))
    return 0


def cmd_baseline(args, cfg: RunConfig) -> int:
    bundle = _pick_pair(load_bundle(args, cfg), args.pair)
    f1, f2 = bundle.functions
    fwd = penalized_l2_baseline(f1, f2, cfg.lam, args.order, cfg.dp)
    rev = penalized_l2_baseline(f2, f1, cfg.lam, args.order, cfg.dp)
    asym = compose(fwd.warp, rev.warp).deviation()
    print(f"cost {fwd.cost:.6g}; sup|g12 o g21 - id| = {asym:.6g}")
    report = RunReport(
        bundle,
        aligned=np.array([f1.values, warp_apply(f2, fwd.warp).values]),
        warps=[Warp.identity(f1.grid), fwd.warp],
        lam=cfg.lam,
        extra_metrics={"cost": fwd.cost, "reverse_cost": rev.cost, "composition_deviation": asym},
    )
    _done(write_results(report, cfg.out))
    return 0


def cmd_synth(args, cfg: RunConfig) -> int:
    bundle = synth_scenario(args.name, args.seed, cfg.n_samples)
    _done(write_bundle(bundle, cfg.out))
    return 0


COMMANDS = {
    "align-pair": cmd_align_pair,
    "align-multi": cmd_align_multi,
    "loocv": cmd_loocv,
    "distance": cmd_distance,
    "hard": cmd_hard,
    "baseline": cmd_baseline,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.command == "synth":
            args.scenario = None
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"softalign: usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"softalign: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
