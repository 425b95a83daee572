"""
Closed forms and the semiclassical side of the area law.

Conventions: a = A/N is the scaled area, x is conjugate to a, and
phi(x) = (x/4)/sinh(x/4) is the limiting characteristic function. The
4^{N+1}/(2 pi N) prefactor of the trace is kept in log form; quantities named
`*_scaled` are ratios to it and stay finite for any N.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np
import pandas as pd
from scipy import integrate

from distribution import AreaDistribution
from errors import QuadratureError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

SERIES_THRESHOLD = 1e-4
LIMIT_VARIANCE = 1.0 / 48.0
# Fourier inversion of the corrected characteristic function.
X_MAX = 160.0
MAX_STEP = 0.05
TAIL_TOLERANCE = 1e-12
HALVING_TOLERANCE = 1e-9
# The limit density is below 1e-20 beyond |a| = 4.
LIMIT_SPAN = 4.0
FLOAT_FORMAT = "%.17g"


def _as_output(values: np.ndarray) -> ArrayLike:
    return float(values) if np.ndim(values) == 0 else values


def _require_positive_even(N: int) -> None:
    if N <= 0 or N % 2:
        raise ValueError(f"N must be a positive even integer (got {N}).")


def omega_exact(N: int) -> int:
    """Number of closed N-step walks, binomial(N, N/2)^2."""
    if N < 0 or N % 2:
        raise ValueError(f"N must be a non-negative even integer (got {N}).")
    return math.comb(N, N // 2) ** 2


def log_omega_asymptotic(N: int) -> float:
    _require_positive_even(N)
    return (N + 1) * math.log(4.0) - math.log(2.0 * math.pi * N)


def _prefactor(N: int) -> float:
    # inf once 4^{N+1}/(2 pi N) leaves the double range (N around 510).
    try:
        return math.exp(log_omega_asymptotic(N))
    except OverflowError:
        return math.inf


def omega_asymptotic(N: int) -> float:
    """Leading form 4^{N+1}/(2 pi N); its relative error is -1/(2N) + O(1/N^2)."""
    return _prefactor(N)


def omega_semiclassical(N: int) -> float:
    """4^{N+1}/(2 pi N) * (1 - 1/(2N)): the semiclassical trace at x = 0, exact to O(1/N^2)."""
    return omega_asymptotic(N) * (1.0 - 1.0 / (2 * N))


def characteristic_limit(x: ArrayLike) -> ArrayLike:
    """(x/4)/sinh(x/4), with a series guard near x = 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_THRESHOLD
    s = np.where(small, 1.0, x / 4.0)
    with np.errstate(over="ignore"):
        exact = s / np.sinh(s)
    series = 1.0 - x**2 / 96.0 + 7.0 * x**4 / 92160.0
    return _as_output(np.where(small, series, exact))


def trace_semiclassical_scaled(N: int, x: ArrayLike) -> ArrayLike:
    """phi(x) [1 - phi(x)^2/(2N)]: the semiclassical trace divided by 4^{N+1}/(2 pi N)."""
    _require_positive_even(N)
    phi = np.asarray(characteristic_limit(x))
    return _as_output(phi * (1.0 - phi**2 / (2.0 * N)))


def trace_semiclassical(N: int, x: ArrayLike) -> ArrayLike:
    """Semiclassical T(H^N) at gamma = x/N including the 1/(2N) bracket."""
    scaled = np.asarray(trace_semiclassical_scaled(N, x))
    with np.errstate(invalid="ignore"):
        values = np.where(scaled > 0, _prefactor(N) * scaled, 0.0)
    return _as_output(values)


def characteristic_corrected(N: int, x: ArrayLike) -> ArrayLike:
    """Finite-N characteristic function to O(1/N), normalized so that it equals 1 at x = 0."""
    return _as_output(np.asarray(trace_semiclassical_scaled(N, x)) / (1.0 - 1.0 / (2.0 * N)))


@dataclass(frozen=True)
class LandauLevel:
    """Band-edge Landau sublevel of the Harper spectrum at small flux."""

    level: int
    sign: int = 1

    def __post_init__(self) -> None:
        if self.level < 0:
            raise ValueError(f"Landau level index must be non-negative (got {self.level}).")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1 (got {self.sign}).")

    def energy(self, gamma: float) -> float:
        return landau_energy(self.level, gamma, self.sign)

    @staticmethod
    def multiplicity_per_area(gamma: float) -> float:
        return gamma / (2.0 * math.pi)


def landau_energy(level: int, gamma: float, sign: int = 1) -> float:
    """sign * (4 - gamma (2l+1) + gamma^2/16 [1 + (2l+1)^2])."""
    u = 2 * level + 1
    return sign * (4.0 - gamma * u + gamma**2 / 16.0 * (1.0 + u**2))


def landau_level_sum_scaled(N: int, x: float, max_level: Optional[int] = None) -> float:
    """
    sum over both signs and levels of E_l^N * gamma/(2 pi) at gamma = x/N,
    divided by 4^{N+1}/(2 pi N). Levels run to floor(1/gamma) unless given.
    """
    _require_positive_even(N)
    x = abs(x)
    if x == 0:
        raise ValueError("The level sum needs x != 0 (the multiplicity gamma/(2 pi) vanishes).")
    gamma = x / N
    top = int(1.0 / gamma) if max_level is None else max_level
    u = 2 * np.arange(top + 1) + 1
    energies = 4.0 - gamma * u + gamma**2 / 16.0 * (1.0 + u**2)
    # Even N: both signs give the same power.
    terms = np.exp(N * np.log(energies / 4.0)) * (x / 2.0)
    return math.fsum(terms)


def density_limit(a: ArrayLike) -> ArrayLike:
    """pi / cosh^2(2 pi a)."""
    a = np.asarray(a, dtype=float)
    with np.errstate(over="ignore"):
        values = math.pi / np.cosh(2.0 * math.pi * a) ** 2
    return _as_output(values)


def limit_moment(k: int) -> float:
    """integral of a^k pi/cosh^2(2 pi a) da by adaptive quadrature."""
    value, _ = integrate.quad(
        lambda a: a**k * density_limit(a), -LIMIT_SPAN, LIMIT_SPAN, epsabs=1e-13, epsrel=1e-12, limit=200
    )
    return value


def limit_fourier(x: float) -> float:
    """integral of exp(i x a) pi/cosh^2(2 pi a) da; should equal characteristic_limit(x)."""
    value, _ = integrate.quad(
        lambda a: math.cos(x * a) * density_limit(a), -LIMIT_SPAN, LIMIT_SPAN, epsabs=1e-13, epsrel=1e-12, limit=400
    )
    return value


def _inverse_cosine_transform(N: Optional[int], a: np.ndarray, step: float, x_max: float) -> np.ndarray:
    n = int(round(x_max / step))
    xs = step * np.arange(n + 1)
    weights = np.full(n + 1, step)
    weights[0] = weights[-1] = step / 2.0
    phi = characteristic_limit(xs) if N is None else characteristic_corrected(N, xs)
    weighted = weights * np.asarray(phi)
    out = np.empty(a.size)
    for start in range(0, a.size, 256):
        chunk = a[start : start + 256]
        out[start : start + 256] = np.cos(np.outer(chunk, xs)) @ weighted
    # Even integrand: (1/2 pi) int_R = (1/pi) int_0^inf.
    return out / math.pi


def density_corrected(N: int, a: ArrayLike, x_max: float = X_MAX, step: float = MAX_STEP) -> ArrayLike:
    """Density of a from the 1/N-corrected characteristic function, by trapezoid Fourier inversion."""
    _require_positive_even(N)
    if step > MAX_STEP:
        raise ValueError(f"Quadrature step must be <= {MAX_STEP} (got {step}).")
    tail = abs(float(characteristic_corrected(N, x_max)))
    if tail >= TAIL_TOLERANCE:
        raise QuadratureError(f"Integrand is {tail:.3g} at x_max = {x_max}; increase x_max.")
    grid = np.atleast_1d(np.asarray(a, dtype=float))
    coarse = _inverse_cosine_transform(N, grid, step, x_max)
    fine = _inverse_cosine_transform(N, grid, step / 2.0, x_max)
    error = float(np.max(np.abs(fine - coarse))) if grid.size else 0.0
    if error > HALVING_TOLERANCE:
        raise QuadratureError(f"Step halving changed the density by {error:.3g} (N={N}, step={step}).")
    logger.debug("density_corrected N=%d: %d points, step-halving error %.3g", N, grid.size, error)
    return _as_output(fine.reshape(np.shape(a)))


@dataclass
class DensityCurve:
    order: str
    a: np.ndarray
    p: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"a": self.a, "p": self.p, "order": self.order})

    def value_at(self, a: float) -> float:
        index = int(np.argmin(np.abs(self.a - a)))
        return float(self.p[index])


@dataclass
class CharacteristicSamples:
    order: str
    x: np.ndarray
    phi: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.x, "phi": self.phi, "order": self.order})


def symmetric_grid(limit: float, step: float) -> np.ndarray:
    """step * {-n, ..., n} with n = round(limit/step); exactly symmetric about 0."""
    if step <= 0 or limit < 0:
        raise ValueError(f"Grid needs step > 0 and limit >= 0 (got limit={limit}, step={step}).")
    n = int(round(limit / step))
    return step * np.arange(-n, n + 1)


def limit_curve(a: np.ndarray) -> DensityCurve:
    return DensityCurve("limit", np.asarray(a, dtype=float), np.asarray(density_limit(a), dtype=float))


def corrected_curve(N: int, a: np.ndarray) -> DensityCurve:
    values = np.atleast_1d(density_corrected(N, np.asarray(a, dtype=float)))
    return DensityCurve(f"corrected(N={N})", np.asarray(a, dtype=float), values)


def empirical_density(d: AreaDistribution) -> DensityCurve:
    """Points (A/N, N C(N,A)/Omega_N): the density of a on the lattice of spacing 1/N."""
    _require_positive_even(d.N)
    areas = np.array(d.areas, dtype=float)
    total = d.total
    p = np.array([float(d.N * c / total) for c in d.counts.values()])
    return DensityCurve(f"empirical(N={d.N})", areas / d.N, p)


def limit_samples(x: np.ndarray) -> CharacteristicSamples:
    return CharacteristicSamples("limit", np.asarray(x, dtype=float), np.asarray(characteristic_limit(x), dtype=float))


def corrected_samples(N: int, x: np.ndarray) -> CharacteristicSamples:
    values = np.asarray(characteristic_corrected(N, x), dtype=float)
    return CharacteristicSamples(f"corrected(N={N})", np.asarray(x, dtype=float), values)


def characteristic_exact(d: AreaDistribution, x: Iterable[float]) -> CharacteristicSamples:
    """sum_A (C(N,A)/Omega_N) exp(i x A/N); real by A -> -A symmetry."""
    _require_positive_even(d.N)
    xs = np.atleast_1d(np.asarray(list(x), dtype=float))
    areas = np.array(d.areas, dtype=float)
    total = d.total
    probs = np.array([c / total for c in d.counts.values()])
    values = np.cos(np.outer(xs, areas) / d.N) @ probs
    return CharacteristicSamples(f"exact(N={d.N})", xs, values)


def _write_frames(frames: Iterable[pd.DataFrame], path: Optional[Union[str, Path]]) -> str:
    text = pd.concat(list(frames), ignore_index=True).to_csv(
        index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
    )
    if path is not None:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    return text


def write_curves(curves: Iterable[DensityCurve], path: Optional[Union[str, Path]] = None) -> str:
    """CSV `a,p,order`; returns the text and writes it when a path is given."""
    return _write_frames((c.to_frame() for c in curves), path)


def write_samples(samples: Iterable[CharacteristicSamples], path: Optional[Union[str, Path]] = None) -> str:
    """CSV `x,phi,order`."""
    return _write_frames((s.to_frame() for s in samples), path)
