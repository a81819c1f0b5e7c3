"""Command-line driver: sweep the feedback-noise variance and write bounds as CSV.

Usage::

    noisyfb [--n 30] [--power 10] [--alpha 0.1,0.5,0.9]
            [--sigma 0.001:10:20:log] [--bounds upper,lower,openloop,idealfb]
            [--tol-gap 1e-6] [--tol-feas 1e-8] [--max-iter 500]
            [--mc-samples N] [--seed 0] [--jobs 1] [--no-timing] [--out sweep.csv]
    noisyfb summarize sweep.csv

Exit codes: 0 all solves optimal, 1 some solve not optimal, 2 usage error,
3 I/O error, 4 malformed CSV.
"""

import argparse
import csv
import io
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bounds import BoundKind, compute_bound
from .channel import ChannelSpec
from .errors import NoisyFBError, SchemaError
from .simulate import mc_rate

log = logging.getLogger(__name__)

HEADER = (
    "n,power,alpha,sigma,upper_bits,lower_bits,openloop_bits,idealfb_bits,"
    "status_upper,status_lower,gap_upper,gap_lower,wall_ms_upper,wall_ms_lower,mc_rate"
).split(",")

ALL_BOUNDS = ("upper", "lower", "openloop", "idealfb")
SHUTOFF_BITS = 0.01

EXIT_OK, EXIT_NOT_OPTIMAL, EXIT_USAGE, EXIT_IO, EXIT_SCHEMA = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class SigmaGrid:
    start: float
    stop: float
    points: int
    spacing: str = "log"

    def values(self) -> list[float]:
        if self.points == 1:
            return [self.start]
        if self.spacing == "log":
            vals = np.geomspace(self.start, self.stop, self.points)
        else:
            vals = np.linspace(self.start, self.stop, self.points)
        return sorted(float(v) for v in vals)


@dataclass(frozen=True)
class SweepConfig:
    n: int = 30
    power: float = 10.0
    alpha: tuple = (0.1, 0.5, 0.9)
    sigma_grid: SigmaGrid = field(default_factory=lambda: SigmaGrid(1e-3, 10.0, 20, "log"))
    bounds: tuple = ALL_BOUNDS
    tol_gap: float = 1e-6
    tol_feas: float = 1e-8
    max_iter: int = 500
    mc_samples: Optional[int] = None
    seed: int = 0
    out_path: str = "sweep.csv"
    jobs: int = 1
    timing: bool = True

    @property
    def solver_opts(self) -> dict:
        return {"tol_gap": self.tol_gap, "tol_feas": self.tol_feas, "max_iter": self.max_iter}


@dataclass
class SweepRow:
    n: int
    power: float
    alpha: float
    sigma: float
    upper_bits: Optional[float] = None
    lower_bits: Optional[float] = None
    openloop_bits: Optional[float] = None
    idealfb_bits: Optional[float] = None
    status_upper: str = ""
    status_lower: str = ""
    gap_upper: Optional[float] = None
    gap_lower: Optional[float] = None
    wall_ms_upper: Optional[float] = None
    wall_ms_lower: Optional[float] = None
    mc_rate: Optional[float] = None

    def fields(self) -> list[str]:
        out = []
        for name in HEADER:
            value = getattr(self, name)
            if name in ("n", "power", "alpha", "sigma"):
                out.append(_fmt_exact(value))
            elif isinstance(value, str):
                out.append(value)
            else:
                out.append(_fmt(value))
        return out


def _fmt_exact(x) -> str:
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _fmt(x: Optional[float]) -> str:
    """Nine significant digits, shortest round-trip spelling, ``NaN`` for failures."""
    if x is None:
        return ""
    if math.isnan(x):
        return "NaN"
    return repr(float(f"{x:.9g}"))


# ---------------------------------------------------------------------------
# argument parsing


def _parse_sigma(text: str) -> SigmaGrid:
    parts = text.split(":")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"expected start:stop:points:lin|log, got {text!r}")
    try:
        start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed sigma grid {text!r}") from None
    spacing = {"lin": "linear", "linear": "linear", "log": "log"}.get(parts[3])
    if spacing is None:
        raise argparse.ArgumentTypeError(f"spacing must be lin or log, got {parts[3]!r}")
    if not start > 0:
        raise argparse.ArgumentTypeError(f"sigma start must be > 0, got {start}")
    if not stop >= start:
        raise argparse.ArgumentTypeError(f"sigma stop {stop} is below start {start}")
    if points < 1:
        raise argparse.ArgumentTypeError(f"sigma points must be >= 1, got {points}")
    return SigmaGrid(start, stop, points, spacing)


def _parse_alpha(text: str) -> tuple:
    try:
        vals = tuple(float(a) for a in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed alpha list {text!r}") from None
    if any(not abs(a) < 1 for a in vals):
        raise argparse.ArgumentTypeError("every alpha must satisfy |alpha| < 1")
    return tuple(sorted(set(vals)))


def _parse_bounds(text: str) -> tuple:
    names = tuple(b.strip() for b in text.split(",") if b.strip())
    unknown = [b for b in names if b not in ALL_BOUNDS]
    if unknown or not names:
        raise argparse.ArgumentTypeError(f"unknown bound(s) {unknown}; choose from {','.join(ALL_BOUNDS)}")
    return tuple(b for b in ALL_BOUNDS if b in names)


def _positive(kind):
    def check(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid value {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return check


def build_parser() -> argparse.ArgumentParser:
    d = SweepConfig()
    p = argparse.ArgumentParser(
        prog="noisyfb",
        description="Bounds on the largest n-block rate of Gaussian channels with noisy linear feedback. "
        "Use 'noisyfb summarize FILE' to summarize a sweep CSV.",
    )
    p.add_argument("--n", type=_positive(int), default=d.n, help="block length (default %(default)s)")
    p.add_argument("--power", type=_positive(float), default=d.power, help="power per channel use (default %(default)s)")
    p.add_argument("--alpha", type=_parse_alpha, default=d.alpha, help="comma-separated MA(1) parameters")
    p.add_argument(
        "--sigma", type=_parse_sigma, default=d.sigma_grid, help="feedback noise variance grid start:stop:points:lin|log"
    )
    p.add_argument("--bounds", type=_parse_bounds, default=d.bounds, help="subset of upper,lower,openloop,idealfb")
    p.add_argument("--tol-gap", type=_positive(float), default=d.tol_gap)
    p.add_argument("--tol-feas", type=_positive(float), default=d.tol_feas)
    p.add_argument("--max-iter", type=_positive(int), default=d.max_iter)
    p.add_argument("--mc-samples", type=_positive(int), default=None, help="Monte Carlo check of the lower-bound scheme")
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--jobs", type=_positive(int), default=d.jobs, help="worker processes")
    p.add_argument("--no-timing", action="store_true", help="leave wall_ms columns empty (byte-stable output)")
    p.add_argument("--out", default=d.out_path, help="CSV destination, '-' for stdout")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def parse_args(argv) -> SweepConfig:
    """Parse sweep flags; usage errors exit with status 2."""
    ns = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(ns.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return SweepConfig(
        n=ns.n,
        power=ns.power,
        alpha=ns.alpha,
        sigma_grid=ns.sigma,
        bounds=ns.bounds,
        tol_gap=ns.tol_gap,
        tol_feas=ns.tol_feas,
        max_iter=ns.max_iter,
        mc_samples=ns.mc_samples,
        seed=ns.seed,
        out_path=ns.out,
        jobs=ns.jobs,
        timing=not ns.no_timing,
    )


# ---------------------------------------------------------------------------
# sweep


def _task_seed(seed: int, ia: int, isg: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(ia, isg)).generate_state(1, np.uint64)[0])


def _solve_point(task: tuple) -> dict:
    kind, alpha, sigma, config, mc_seed = task
    chan = ChannelSpec.ma1(alpha, sigma, config.n, config.power)
    started = time.perf_counter()
    try:
        res = compute_bound(kind, chan, **config.solver_opts)
    except NoisyFBError as exc:
        log.warning("%s alpha=%g sigma=%g failed: %s", kind, alpha, sigma, exc)
        return {"rate": math.nan, "status": type(exc).__name__, "gap": math.nan,
                "wall_ms": 1e3 * (time.perf_counter() - started), "mc": None}
    out = {"rate": res.rate, "status": "Optimal", "gap": math.nan, "mc": None,
           "wall_ms": 1e3 * (time.perf_counter() - started)}
    if res.report is not None:
        out["status"] = res.report.status.value
        out["gap"] = res.report.gap
        if not res.report.ok:
            out["rate"] = math.nan
    if mc_seed is not None and res.scheme is not None and res.ok:
        try:
            out["mc"] = mc_rate(res.scheme, chan, config.mc_samples, mc_seed).rate_estimate
        except NoisyFBError as exc:
            log.warning("Monte Carlo check failed at alpha=%g sigma=%g: %s", alpha, sigma, exc)
            out["mc"] = math.nan
    return out


def _rows(config: SweepConfig) -> tuple[list[SweepRow], bool]:
    sigmas = config.sigma_grid.values()
    # sigma-independent bounds are solved at the first grid value only
    tasks, keys = [], []
    for ia, alpha in enumerate(config.alpha):
        for kind in ("openloop", "idealfb"):
            if kind in config.bounds:
                tasks.append((kind, alpha, sigmas[0], config, None))
                keys.append((kind, ia, None))
        for isg, sigma in enumerate(sigmas):
            for kind in ("upper", "lower"):
                if kind in config.bounds:
                    mc_seed = None
                    if kind == "lower" and config.mc_samples:
                        mc_seed = _task_seed(config.seed, ia, isg)
                    tasks.append((kind, alpha, sigma, config, mc_seed))
                    keys.append((kind, ia, isg))
    if config.jobs > 1:
        with ProcessPoolExecutor(config.jobs) as pool:
            results = list(pool.map(_solve_point, tasks))
    else:
        results = [_solve_point(t) for t in tasks]
    by_key = dict(zip(keys, results))

    rows, all_ok = [], True
    for ia, alpha in enumerate(config.alpha):
        for isg, sigma in enumerate(sigmas):
            row = SweepRow(config.n, config.power, alpha, sigma)
            for kind in ("openloop", "idealfb"):
                r = by_key.get((kind, ia, None))
                if r is not None:
                    setattr(row, f"{kind}_bits", r["rate"])
                    all_ok &= r["status"] == "Optimal"
            for kind in ("upper", "lower"):
                r = by_key.get((kind, ia, isg))
                if r is None:
                    continue
                setattr(row, f"{kind}_bits", r["rate"])
                setattr(row, f"status_{kind}", r["status"])
                setattr(row, f"gap_{kind}", r["gap"])
                if config.timing:
                    setattr(row, f"wall_ms_{kind}", r["wall_ms"])
                all_ok &= r["status"] == "Optimal"
                if kind == "lower":
                    row.mc_rate = r["mc"]
            rows.append(row)
    return rows, all_ok


def write_csv(rows: list[SweepRow], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(HEADER)
    for row in rows:
        writer.writerow(row.fields())


def run_sweep(config: SweepConfig) -> int:
    """Run the sweep and write the CSV; returns the process exit code."""
    rows, all_ok = _rows(config)
    buf = io.StringIO()
    write_csv(rows, buf)
    try:
        if config.out_path == "-":
            sys.stdout.write(buf.getvalue())
        else:
            with open(config.out_path, "w", newline="") as fh:
                fh.write(buf.getvalue())
    except OSError as exc:
        print(f"noisyfb: cannot write {config.out_path}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK if all_ok else EXIT_NOT_OPTIMAL


# ---------------------------------------------------------------------------
# summary


def _float(text: str) -> float:
    return math.nan if text in ("", "NaN") else float(text)


def read_sweep(csv_path: str) -> list[dict]:
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != HEADER:
            raise SchemaError(f"{csv_path}: header does not match the sweep schema")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(HEADER):
                raise SchemaError(f"{csv_path}:{lineno}: expected {len(HEADER)} fields, got {len(rec)}")
            rows.append(dict(zip(HEADER, rec)))
    return rows


def summarize(csv_path: str, stream=None) -> list[dict]:
    """Per-alpha feedback gain and shut-off point of a sweep CSV."""
    stream = stream or sys.stdout
    rows = read_sweep(csv_path)
    blocks: dict[float, list] = {}
    try:
        for r in rows:
            blocks.setdefault(float(r["alpha"]), []).append(
                (float(r["sigma"]), _float(r["upper_bits"]), _float(r["openloop_bits"]), _float(r["idealfb_bits"]))
            )
    except ValueError as exc:
        raise SchemaError(f"{csv_path}: non-numeric field ({exc})") from None
    summary = []
    for alpha in sorted(blocks):
        pts = sorted(blocks[alpha])
        gains = [u - o for _, u, o, _ in pts]
        finite = [g for g in gains if not math.isnan(g)]
        shutoff = next((s for (s, *_), g in zip(pts, gains) if g < SHUTOFF_BITS), math.nan)
        ideal_gain = pts[0][3] - pts[0][2]
        summary.append({
            "alpha": alpha,
            "max_gain_bits": max(finite) if finite else math.nan,
            "ideal_gain_bits": ideal_gain,
            "shutoff_sigma": shutoff,
        })
    for s in summary:
        print(
            f"alpha={s['alpha']:g} max_gain_bits={s['max_gain_bits']:.6g} "
            f"ideal_gain_bits={s['ideal_gain_bits']:.6g} shutoff_sigma={s['shutoff_sigma']:.6g}",
            file=stream,
        )
    return summary


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "summarize":
        if len(argv) != 2:
            print("usage: noisyfb summarize FILE", file=sys.stderr)
            return EXIT_USAGE
        try:
            summarize(argv[1])
        except SchemaError as exc:
            print(f"noisyfb: {exc}", file=sys.stderr)
            return EXIT_SCHEMA
        except OSError as exc:
            print(f"noisyfb: cannot read {argv[1]}: {exc}", file=sys.stderr)
            return EXIT_IO
        return EXIT_OK
    try:
        config = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return run_sweep(config)


if __name__ == "__main__":
    sys.exit(main())
