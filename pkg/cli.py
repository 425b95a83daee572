"""
Command-line front end: run the engines, cross-check them, and write the
CSV / plot-script artifacts for the scaled area law.

Usage:
  uv run python cli.py counts --n 4 --engine dp
  uv run python cli.py figure1 --out figure1
  uv run python cli.py verify --max-n 12
"""

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence

import numpy as np
import pandas as pd
from dotenv import load_dotenv

import asymptotics as asym
from distribution import AreaDistribution, write_distribution
from errors import AreaWalksError, CalibrationError, ConsistencyError
from exact_dp import check_distribution, dp_counts, moments
from harper_spectral import (
    INTEGER_RECOVERY_LIMIT,
    PHASE_FACTOR,
    RationalFlux,
    calibrate_phase,
    calibration_residuals,
    invert_counts_detailed,
    landau_edge_check,
    trace_power,
    write_trace_table,
)
from walk_core import ENUMERATION_LIMIT, enumerate_counts, max_area

# Load environment variables early so thread and log settings can come from .env.
load_dotenv()

logger = logging.getLogger(__name__)

COMMANDS = ("counts", "oracle", "charfn", "density", "figure1", "verify", "calibrate")
ENGINES = ("enumerate", "dp", "spectral")
FORMATS = ("csv", "json")
DISTRIBUTION_COMMANDS = ("counts", "oracle")
FIGURE_SIZES = (16, 18, 20)
FIGURE_CORRECTED = (20, 40)
LANDAU_DENOMINATORS = (100, 200, 400)
CHARFN_XS = (1.0, 2.0, 4.0, 8.0)
CHARFN_SIZES = (16, 18, 20)
FIGURE_GATED = (0.0, 0.1, 0.2)
TRACE_SIZES = (6, 10, 16)
TRACE_FLUXES = (Fraction(1, 7), Fraction(3, 8), Fraction(2, 9), Fraction(1, 2))
FOURIER_XS = (1.0, 4.0, 10.0)
LEVEL_SUM_N = 400
TREND_X = 4.0
# The corrected densities are below 1e-9 past |a| = 2.
MASS_SPAN = 2.0
MASS_POINTS = 801

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONSISTENCY = 2


class UsageError(ValueError):
    """Invalid flags or a config that no engine can serve."""


def _env(name: str, default: Optional[str] = None) -> Optional[str]:
    value = os.getenv(name, default)
    if value is not None and not value.strip():
        return default
    return value


def _default_threads() -> int:
    raw = _env("AREA_WALKS_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"AREA_WALKS_THREADS must be an integer (got {raw!r}).") from None


@dataclass
class RunConfig:
    command: str
    N: int = 20
    engine: str = "dp"
    out: Optional[Path] = None
    format: str = "csv"
    x_max: float = 20.0
    a_max: float = 0.6
    step: Optional[float] = None
    threads: int = 1
    max_n: int = 20
    phase_factor: int = PHASE_FACTOR
    trace_table: Optional[Path] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(
            command=args.command,
            N=args.n,
            engine=args.engine,
            out=Path(args.out) if args.out else None,
            format=args.format,
            x_max=args.x_max,
            a_max=args.a_max,
            step=args.step,
            threads=args.threads if args.threads is not None else _default_threads(),
            max_n=args.max_n,
            phase_factor=args.phase_factor,
            trace_table=Path(args.trace_table) if args.trace_table else None,
        )

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"Unknown command {self.command!r}.")
        if self.N < 0 or self.N % 2:
            raise UsageError(f"--n must be a non-negative even integer (got {self.N}); odd walks never close.")
        if self.engine not in ENGINES:
            raise UsageError(f"--engine must be one of {', '.join(ENGINES)}.")
        if self.format not in FORMATS:
            raise UsageError(f"--format must be one of {', '.join(FORMATS)}.")
        if self.format != "csv" and self.command not in DISTRIBUTION_COMMANDS:
            raise UsageError(f"--format {self.format} applies to area counts only; {self.command} always writes CSV.")
        if self.engine == "enumerate" and self.N > ENUMERATION_LIMIT and self.command == "counts":
            raise UsageError(f"The enumerate engine visits 4^N walks and is limited to N <= {ENUMERATION_LIMIT}.")
        if self.command == "oracle" and self.N > ENUMERATION_LIMIT:
            raise UsageError(f"The oracle is limited to N <= {ENUMERATION_LIMIT}.")
        if self.engine == "spectral" and self.N > INTEGER_RECOVERY_LIMIT and self.command == "counts":
            raise UsageError(
                f"Spectral integer recovery is limited to N <= {INTEGER_RECOVERY_LIMIT} by double precision."
            )
        if self.command in ("charfn", "density") and self.N == 0:
            raise UsageError("Scaled areas need N > 0.")
        if self.step is not None and self.step <= 0:
            raise UsageError("--step must be positive.")
        if self.x_max < 0 or self.a_max < 0:
            raise UsageError("--x-max and --a-max must be non-negative.")
        if self.threads < 1:
            raise UsageError("--threads must be at least 1.")
        if self.max_n < 0:
            raise UsageError("--max-n must be non-negative.")
        return self


def _run_engine(cfg: RunConfig) -> AreaDistribution:
    if cfg.engine == "enumerate":
        return enumerate_counts(cfg.N, threads=cfg.threads)
    if cfg.engine == "spectral":
        inversion = invert_counts_detailed(cfg.N, cfg.phase_factor, threads=cfg.threads)
        if cfg.trace_table is not None:
            write_trace_table(inversion.traces, cfg.trace_table)
        return inversion.distribution
    return dp_counts(cfg.N, threads=cfg.threads)


def _emit_distribution(dist: AreaDistribution, cfg: RunConfig) -> str:
    expected = asym.omega_exact(dist.N)
    if dist.total != expected:
        logger.error("Refusing to write inconsistent distribution: %s", dist.to_json().strip())
        raise ConsistencyError(f"N={dist.N}: total {dist.total} differs from binomial(N, N/2)^2 = {expected}.")
    return write_distribution(dist, cfg.out, cfg.format)


def cmd_counts(cfg: RunConfig) -> str:
    """Area counts from the selected engine, gated on the closed-form total."""
    return _emit_distribution(_run_engine(cfg), cfg)


def cmd_oracle(cfg: RunConfig) -> str:
    """Brute-force counts, checked for symmetry and the isoperimetric bound before writing."""
    dist = enumerate_counts(cfg.N, threads=cfg.threads)
    check_distribution(dist)
    observed = max((abs(a) for a in dist.counts), default=0)
    if observed != max_area(cfg.N):
        raise ConsistencyError(f"N={cfg.N}: largest area {observed} differs from the bound {max_area(cfg.N)}.")
    return _emit_distribution(dist, cfg)


def cmd_charfn(cfg: RunConfig) -> str:
    xs = asym.symmetric_grid(cfg.x_max, cfg.step or 0.25)
    samples = [
        asym.limit_samples(xs),
        asym.corrected_samples(cfg.N, xs),
        asym.characteristic_exact(dp_counts(cfg.N, threads=cfg.threads), xs),
    ]
    return asym.write_samples(samples, cfg.out)


def cmd_density(cfg: RunConfig) -> str:
    a_grid = asym.symmetric_grid(cfg.a_max, cfg.step or 0.01)
    curves = [
        asym.limit_curve(a_grid),
        asym.corrected_curve(cfg.N, a_grid),
        asym.empirical_density(dp_counts(cfg.N, threads=cfg.threads)),
    ]
    return asym.write_curves(curves, cfg.out)


def _plot_script(files: Dict[str, str]) -> str:
    symbols = {16: 12, 18: 1, 20: 8}  # diamond, plus, triangle
    clauses: List[str] = []
    for n in FIGURE_SIZES:
        clauses.append(f"'{files[f'empirical_{n}']}' skip 1 using 1:2 with points pt {symbols[n]} title 'N = {n}'")
    clauses.append(f"'{files['limit']}' skip 1 using 1:2 with lines dt 1 lc rgb 'black' title 'N -> infinity'")
    for n in FIGURE_CORRECTED:
        clauses.append(f"'{files[f'corrected_{n}']}' skip 1 using 1:2 with lines dt 2 title '1/N correction, N = {n}'")
    lines = [
        "# gnuplot script: scaled area distribution of closed random walks",
        "set datafile separator ','",
        "set xlabel 'a = A/N'",
        "set ylabel 'P_N(a)'",
        "set key top right",
        "plot " + ", \\\n     ".join(clauses),
        "",
    ]
    return "\n".join(lines)


def cmd_figure1(cfg: RunConfig) -> str:
    """Empirical N = 16, 18, 20 points, the limit curve and 1/N-corrected curves, plus a plot script."""
    out_dir = cfg.out or Path("figure1")
    out_dir.mkdir(parents=True, exist_ok=True)
    a_grid = asym.symmetric_grid(cfg.a_max, cfg.step or 0.005)
    files: Dict[str, str] = {}
    for n in FIGURE_SIZES:
        dist = dp_counts(n, threads=cfg.threads)
        check_distribution(dist)
        files[f"empirical_{n}"] = f"empirical_N{n}.csv"
        asym.write_curves([asym.empirical_density(dist)], out_dir / files[f"empirical_{n}"])
    files["limit"] = "limit.csv"
    asym.write_curves([asym.limit_curve(a_grid)], out_dir / files["limit"])
    for n in FIGURE_CORRECTED:
        files[f"corrected_{n}"] = f"corrected_N{n}.csv"
        asym.write_curves([asym.corrected_curve(n, a_grid)], out_dir / files[f"corrected_{n}"])
    script = out_dir / "figure1.gp"
    with script.open("w", newline="", encoding="utf-8") as fh:
        fh.write(_plot_script(files))
    written = sorted(files.values()) + [script.name]
    return "".join(f"{out_dir / name}\n" for name in written)


@dataclass
class VerifyCheck:
    name: str
    status: str
    residue: float


def _check(name: str, passed: bool, residue: float) -> VerifyCheck:
    return VerifyCheck(name, "pass" if passed else "FAIL", float(residue))


def _verify_checks(cfg: RunConfig) -> Iterator[VerifyCheck]:
    residuals = calibration_residuals()
    try:
        calibrated: Optional[int] = calibrate_phase()
    except CalibrationError:
        calibrated = None
    yield _check("calibration", calibrated == cfg.phase_factor, residuals.get(cfg.phase_factor, math.inf))

    dp_cache: Dict[int, AreaDistribution] = {}

    def dp(n: int) -> AreaDistribution:
        if n not in dp_cache:
            dp_cache[n] = dp_counts(n, threads=cfg.threads)
        return dp_cache[n]

    for n in range(0, min(ENUMERATION_LIMIT, cfg.max_n) + 1, 2):
        oracle = enumerate_counts(n, threads=cfg.threads)
        areas = set(oracle.counts) | set(dp(n).counts)
        mismatched = sum(1 for a in areas if oracle.count(a) != dp(n).count(a))
        yield _check(f"oracle_vs_dp N={n}", mismatched == 0, mismatched)
        observed = max((abs(a) for a in oracle.counts), default=0)
        yield _check(f"max_area N={n}", observed == max_area(n), abs(observed - max_area(n)))

    for n in range(0, min(20, cfg.max_n) + 1, 2):
        try:
            inversion = invert_counts_detailed(n, cfg.phase_factor, threads=cfg.threads)
        except ConsistencyError as exc:
            logger.error("Spectral inversion failed: %s", exc)
            yield _check(f"spectral_vs_dp N={n}", False, math.inf)
            continue
        same = inversion.distribution.counts == dp(n).counts
        yield _check(f"spectral_vs_dp N={n}", same, inversion.max_residue)

    for n in range(0, cfg.max_n + 1, 2):
        dist = dp(n)
        yield _check(f"dp_total N={n}", dist.total == asym.omega_exact(n), abs(dist.total - asym.omega_exact(n)))
        odd = max(abs(moments(dist, 1)), abs(moments(dist, 3))) if dist.total else 0
        yield _check(f"odd_moments N={n}", odd == 0, float(odd))

    for n in range(0, min(INTEGER_RECOVERY_LIMIT, cfg.max_n) + 1, 2):
        value = trace_power(n, RationalFlux(0, 1)).real
        exact = asym.omega_exact(n)
        rel = abs(value - exact) / exact
        yield _check(f"trace_zero_flux N={n}", rel <= 1e-10, rel)

    variances = [float(moments(dp(n), 2)) / n**2 for n in range(2, cfg.max_n + 1, 2)]
    increasing = all(b > a for a, b in zip(variances, variances[1:]))
    below = all(v < asym.LIMIT_VARIANCE for v in variances)
    gap = asym.LIMIT_VARIANCE - variances[-1] if variances else 0.0
    yield _check("variance_increasing_to_1/48", increasing and below, gap)

    mass = asym.limit_moment(0)
    yield _check("limit_mass", abs(mass - 1.0) <= 1e-9, abs(mass - 1.0))
    second = asym.limit_moment(2)
    yield _check("limit_second_moment", abs(second - asym.LIMIT_VARIANCE) <= 1e-9, abs(second - asym.LIMIT_VARIANCE))
    peak = asym.density_limit(0.0)
    yield _check("limit_peak", peak == math.pi, abs(peak - math.pi))

    dev = {n: abs(asym.omega_exact(n) / asym.omega_semiclassical(n) - 1.0) for n in (20, 40)}
    yield _check("omega_semiclassical N=20", dev[20] < 0.013, dev[20])
    yield _check("omega_semiclassical_decay 20->40", dev[20] / dev[40] >= 3.5, dev[20] / dev[40])

    edge: Dict[int, Dict[tuple, float]] = {}
    separated = True
    for q in LANDAU_DENOMINATORS:
        rows = landau_edge_check(RationalFlux(1, q), num_levels=3)
        edge[q] = {(r.level, r.sign): abs(r.deviation) for r in rows}
        separated = separated and all(r.separated for r in rows)
    for level in range(3):
        factors = [
            edge[q][(level, 1)] / edge[2 * q][(level, 1)] for q in LANDAU_DENOMINATORS[:-1]
        ]
        yield _check(f"landau_shrink l={level}", separated and min(factors) >= 6.0, min(factors))

    for n in TRACE_SIZES:
        if n > cfg.max_n:
            continue
        zero = trace_power(n, RationalFlux(0, 1)).real
        mirror = 0.0
        excess = -math.inf
        for f in TRACE_FLUXES:
            flux = RationalFlux.from_fraction(f)
            value = trace_power(n, flux).real
            mirror = max(mirror, abs(value - trace_power(n, flux.mirrored()).real) / zero)
            excess = max(excess, (abs(value) - zero) / zero)
        yield _check(f"trace_mirror_symmetry N={n}", mirror <= 1e-10, mirror)
        yield _check(f"trace_bounded_by_zero_flux N={n}", excess <= 1e-12, excess)

    fourier = max(abs(asym.limit_fourier(x) - asym.characteristic_limit(x)) for x in FOURIER_XS)
    yield _check("limit_fourier_matches_closed_form", fourier <= 1e-9, fourier)

    level_sum = max(
        abs(asym.landau_level_sum_scaled(LEVEL_SUM_N, x) / asym.trace_semiclassical_scaled(LEVEL_SUM_N, x) - 1.0)
        for x in CHARFN_XS
    )
    yield _check(f"landau_level_sum N={LEVEL_SUM_N}", level_sum <= 20.0 / LEVEL_SUM_N**2, level_sum)

    a_grid = np.linspace(-MASS_SPAN, MASS_SPAN, MASS_POINTS)
    for n in FIGURE_CORRECTED:
        mass = float(np.trapezoid(asym.density_corrected(n, a_grid), a_grid))
        yield _check(f"corrected_mass N={n}", abs(mass - 1.0) <= 1e-8, abs(mass - 1.0))

    for n in CHARFN_SIZES:
        if n > cfg.max_n:
            continue
        exact = asym.characteristic_exact(dp(n), CHARFN_XS).phi
        corrected = asym.characteristic_corrected(n, np.array(CHARFN_XS))
        worst = float(max(abs(exact - corrected)))
        yield _check(f"charfn_1/N N={n}", worst <= 5.0 / n**2, worst)

    trend_sizes = [n for n in CHARFN_SIZES if n <= cfg.max_n]
    if len(trend_sizes) > 1:
        scaled = [
            abs(float(asym.characteristic_exact(dp(n), [TREND_X]).phi[0]) - asym.characteristic_corrected(n, TREND_X))
            * n**2
            for n in trend_sizes
        ]
        spread = max(scaled) / min(scaled) - 1.0
        yield _check(f"charfn_1/N^2_trend x={TREND_X:g}", spread <= 0.1, spread)

    if cfg.max_n >= 20:
        empirical = asym.empirical_density(dp(20))
        for a in FIGURE_GATED:
            point = empirical.value_at(a)
            gain = abs(asym.density_limit(a) - point) - abs(float(asym.density_corrected(20, a)) - point)
            yield _check(f"figure1_corrected_closer a={a:g}", gain > 0, gain)

    centre = [float(asym.density_corrected(n, 0.0)) for n in FIGURE_CORRECTED]
    yield _check("figure1_corrected_between a=0", math.pi < centre[1] < centre[0], centre[0] - centre[1])


def cmd_verify(cfg: RunConfig) -> tuple:
    """Run every cross-engine and closed-form check; returns (report CSV, all gated checks passed)."""
    checks = list(_verify_checks(cfg))
    frame = pd.DataFrame(
        {
            "check": [c.name for c in checks],
            "status": [c.status for c in checks],
            "residue": [c.residue for c in checks],
        }
    )
    report = frame.to_csv(index=False, float_format=asym.FLOAT_FORMAT, lineterminator="\n")
    ok = all(c.status != "FAIL" for c in checks)
    report += f"# {'all checks passed' if ok else 'verification FAILED'}\n"
    if cfg.out is not None:
        cfg.out.parent.mkdir(parents=True, exist_ok=True)
        with cfg.out.open("w", newline="", encoding="utf-8") as fh:
            fh.write(report)
    return report, ok


def cmd_calibrate(cfg: RunConfig) -> str:
    residuals = calibration_residuals()
    frame = pd.DataFrame({"candidate": list(residuals), "residual": list(residuals.values())})
    text = frame.to_csv(index=False, float_format=asym.FLOAT_FORMAT, lineterminator="\n")
    return text + f"# calibrated phase factor: {calibrate_phase()}\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with status 2
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--n", type=int, default=20, help="even walk length N")
    common.add_argument("--engine", default="dp", help="enumerate | dp | spectral")
    common.add_argument("--out", default=None, help="output file (directory for figure1); stdout when omitted")
    common.add_argument("--format", default="csv", help="csv | json (counts and oracle only)")
    common.add_argument("--x-max", type=float, default=20.0, help="charfn: x range [-x_max, x_max]")
    common.add_argument("--a-max", type=float, default=0.6, help="density/figure1: a range [-a_max, a_max]")
    common.add_argument("--step", type=float, default=None, help="grid step for x or a")
    common.add_argument("--threads", type=int, default=None, help="parallelism (default AREA_WALKS_THREADS or all cores)")
    common.add_argument("--max-n", type=int, default=20, help="verify: largest N cross-checked")
    common.add_argument("--phase-factor", type=int, default=PHASE_FACTOR, help="verify: phase factor to assert")
    common.add_argument("--trace-table", default=None, help="counts --engine spectral: write the trace samples here")

    parser = _Parser(description="Exact and asymptotic area distributions of closed lattice walks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _write_stdout(text: str, cfg: RunConfig) -> None:
    if cfg.out is None or cfg.command in ("figure1", "verify", "calibrate"):
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=(_env("AREA_WALKS_LOG_LEVEL", "WARNING") or "WARNING").upper(),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers: Dict[str, Callable[[RunConfig], str]] = {
        "counts": cmd_counts,
        "oracle": cmd_oracle,
        "charfn": cmd_charfn,
        "density": cmd_density,
        "figure1": cmd_figure1,
        "calibrate": cmd_calibrate,
    }
    try:
        args = build_parser().parse_args(argv)
        cfg = RunConfig.from_args(args).validate()
        if cfg.command == "verify":
            report, ok = cmd_verify(cfg)
            _write_stdout(report, cfg)
            return EXIT_OK if ok else EXIT_CONSISTENCY
        _write_stdout(handlers[cfg.command](cfg), cfg)
        return EXIT_OK
    except (UsageError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AreaWalksError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
