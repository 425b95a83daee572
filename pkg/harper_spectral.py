"""
Harper operator at rational flux and the walk-sum trace identity.

At flux p/q the Harper operator reduces to q x q Bloch matrices H(k1, k2).
With the gauge used here, (1/q) times the Brillouin-zone average of
tr H(k)^N equals sum over closed N-step walks of exp(i gamma A), A the
plaquette area, gamma = 2 pi p/q. tr H(k)^N is a trigonometric polynomial of
degree <= N in each quasimomentum, so the uniform (N+1) x (N+1) grid average
is exact up to rounding. Sampling the trace at M = 2 A_max + 1 equally spaced
phases and applying an inverse DFT recovers the area counts.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from asymptotics import FLOAT_FORMAT, landau_energy, omega_exact
from distribution import AreaDistribution
from errors import BudgetExceededError, CalibrationError, ConsistencyError, SpectralError
from walk_core import enumerate_counts, max_area

logger = logging.getLogger(__name__)

# exp(i c gamma A / 2) is the phase per walk; c = 2 for the Bloch gauge below.
PHASE_FACTOR = 2
PHASE_CANDIDATES = (1, 2)
CALIBRATION_FLUXES = (Fraction(1, 6), Fraction(1, 4), Fraction(1, 3), Fraction(2, 5))
CALIBRATION_TOLERANCE = 1e-9
# Counts stay below 2^53 up to here, so nearest-integer rounding is sound.
INTEGER_RECOVERY_LIMIT = 24
ROUNDING_GATE = 0.25
NORM_BOUND = 4.0
EIGEN_TOLERANCE = 1e-9
HERMITIAN_TOLERANCE = 1e-12


@dataclass(frozen=True)
class RationalFlux:
    """Flux p/q per plaquette; gamma = 2 pi p/q with 0 <= p < 2q."""

    p: int
    q: int

    def __post_init__(self) -> None:
        if self.q < 1:
            raise ValueError(f"Flux denominator must be positive (got {self.q}).")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"Flux {self.p}/{self.q} is not reduced.")
        if not 0 <= self.p < 2 * self.q:
            raise ValueError(f"Flux numerator must lie in [0, 2q) (got {self.p}/{self.q}).")

    @classmethod
    def from_fraction(cls, value: Union[Fraction, int, str]) -> "RationalFlux":
        """Reduce a fraction modulo 2 (gamma modulo 4 pi)."""
        frac = Fraction(value) % 2
        return cls(frac.numerator, frac.denominator)

    @property
    def gamma(self) -> float:
        return 2.0 * math.pi * self.p / self.q

    def mirrored(self) -> "RationalFlux":
        """Flux (q - p)/q, i.e. gamma -> 2 pi - gamma."""
        return RationalFlux.from_fraction(1 - Fraction(self.p, self.q))

    def phase_offsets(self) -> np.ndarray:
        """n * gamma modulo 2 pi for n = 0..q-1, reduced in integers first."""
        n = np.arange(self.q)
        return 2.0 * math.pi * ((n * self.p) % self.q) / self.q

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"


@dataclass
class BlochMatrix:
    q: int
    k1: float
    k2: float
    entries: np.ndarray

    @property
    def hermitian_residue(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        return _eigenvalues(self.entries[None, :, :])[0]


@dataclass
class TraceValue:
    N: int
    flux: RationalFlux
    value: complex
    quadrature_order: int

    def __post_init__(self) -> None:
        # Real by A -> -A symmetry.
        if abs(self.value.imag) > 1e-9 * abs(self.value) + 1e-9:
            raise SpectralError(f"Trace for N={self.N}, flux {self.flux} has imaginary part {self.value.imag:.3g}.")

    @property
    def real(self) -> float:
        return self.value.real


def _bloch_stack(flux: RationalFlux, k1: np.ndarray, k2: np.ndarray) -> np.ndarray:
    """Bloch matrices for paired quasimomenta; Hermitian by construction (lower triangle mirrored)."""
    q = flux.q
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    idx = np.arange(q)
    stack = np.zeros((k1.size, q, q), dtype=complex)
    stack[:, idx, idx] = 2.0 * np.cos(k2[:, None] + flux.phase_offsets()[None, :])
    if q == 1:
        stack[:, 0, 0] += 2.0 * np.cos(k1)
        return stack
    lower = np.zeros_like(stack)
    lower[:, idx[1:], idx[:-1]] = np.exp(-1j * k1)[:, None]
    # The cycle closes with the same hop phase, keeping tr H^N of degree <= N in k1.
    lower[:, q - 1, 0] += np.exp(1j * k1)
    return stack + lower + np.conj(np.swapaxes(lower, 1, 2))


def bloch_matrix(flux: RationalFlux, k1: float, k2: float) -> BlochMatrix:
    """q x q Harper Bloch matrix: diagonal 2cos(k2 + n gamma), hops exp(-/+ i k1) around the cycle."""
    entries = _bloch_stack(flux, np.array([k1]), np.array([k2]))[0]
    return BlochMatrix(q=flux.q, k1=float(k1), k2=float(k2), entries=entries)


def _eigenvalues(stack: np.ndarray) -> np.ndarray:
    try:
        eig = np.linalg.eigvalsh(stack)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"Eigendecomposition did not converge: {exc}") from exc
    worst = float(np.max(np.abs(eig)))
    if worst > NORM_BOUND + EIGEN_TOLERANCE:
        raise SpectralError(f"Eigenvalue {worst:.15g} exceeds the Harper norm bound {NORM_BOUND}.")
    return eig


def _k_grid(order: int) -> tuple:
    k = 2.0 * math.pi * np.arange(order) / order
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    return k1.ravel(), k2.ravel()


def trace_power(N: int, flux: RationalFlux, grid: Optional[int] = None) -> TraceValue:
    """(1/q) BZ average of tr H(k)^N on a uniform grid of order >= N + 1 per axis."""
    if N < 0 or N % 2:
        raise ValueError(f"N must be a non-negative even integer (got {N}).")
    order = N + 1 if grid is None else grid
    if order < N + 1:
        raise ValueError(f"Grid order {order} is below N + 1 = {N + 1}; the average would not be exact.")
    k1, k2 = _k_grid(order)
    eig = _eigenvalues(_bloch_stack(flux, k1, k2))
    # fsum: correctly rounded, independent of summation order.
    total = math.fsum((eig**N).ravel()) / (flux.q * order * order)
    return TraceValue(N=N, flux=flux, value=complex(total, 0.0), quadrature_order=order)


def walk_phase_sum(dist: AreaDistribution, gamma: float, phase_factor: int) -> complex:
    """sum_A C(N, A) exp(i c gamma A / 2)."""
    return complex(
        math.fsum(c * math.cos(phase_factor * gamma * a / 2.0) for a, c in dist.counts.items()),
        math.fsum(c * math.sin(phase_factor * gamma * a / 2.0) for a, c in dist.counts.items()),
    )


def calibration_residuals() -> Dict[int, float]:
    """Worst |trace - walk sum| over the calibration fluxes, per candidate phase factor."""
    oracle = enumerate_counts(4)
    traces = [trace_power(4, RationalFlux.from_fraction(f)) for f in CALIBRATION_FLUXES]
    residuals: Dict[int, float] = {}
    for c in PHASE_CANDIDATES:
        residuals[c] = max(abs(t.value - walk_phase_sum(oracle, t.flux.gamma, c)) for t in traces)
    return residuals


def calibrate_phase() -> int:
    """The unique c in {1, 2} with T(H^4) = sum_A C(4, A) exp(i c gamma A / 2)."""
    residuals = calibration_residuals()
    matches = [c for c, r in residuals.items() if r <= CALIBRATION_TOLERANCE]
    if len(matches) != 1:
        raise CalibrationError(
            f"Phase calibration found {len(matches)} matching candidates (residuals {residuals}); "
            "check the Bloch matrix signs and ordering."
        )
    logger.info("Calibrated phase factor c=%d (residuals %s)", matches[0], residuals)
    return matches[0]


def flux_for_phase(j: int, samples: int, phase_factor: int = PHASE_FACTOR) -> RationalFlux:
    """Flux whose walk phase is exp(2 pi i j A / samples)."""
    return RationalFlux.from_fraction(Fraction(2 * j, phase_factor * samples))


def sample_traces(N: int, phase_factor: int = PHASE_FACTOR, threads: int = 1) -> List[TraceValue]:
    """Traces at the M = 2 A_max + 1 phases 2 pi j / M, j = 0..M-1."""
    samples = 2 * max_area(N) + 1
    # gamma -> -gamma symmetry: only j <= M/2 are evaluated.
    half = [flux_for_phase(j, samples, phase_factor) for j in range(samples // 2 + 1)]
    logger.info("Sampling T(H^%d) at %d fluxes (%d distinct)", N, samples, len(half))

    def run(flux: RationalFlux) -> TraceValue:
        return trace_power(N, flux)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            computed = list(pool.map(run, half))
    else:
        computed = [run(f) for f in half]
    traces = list(computed)
    for j in range(samples // 2 + 1, samples):
        mirror = computed[samples - j]
        traces.append(TraceValue(N, flux_for_phase(j, samples, phase_factor), mirror.value, mirror.quadrature_order))
    return traces


def _inverse_dft(traces: Sequence[TraceValue]) -> np.ndarray:
    values = np.array([t.value for t in traces], dtype=complex)
    return np.fft.fft(values) / values.size


@dataclass
class SpectralInversion:
    distribution: AreaDistribution
    traces: List[TraceValue] = field(default_factory=list)
    max_residue: float = 0.0


def invert_counts_detailed(N: int, phase_factor: int = PHASE_FACTOR, threads: int = 1) -> SpectralInversion:
    if N < 0 or N % 2:
        raise ValueError(f"N must be a non-negative even integer (got {N}).")
    if N > INTEGER_RECOVERY_LIMIT:
        raise BudgetExceededError(
            f"Integer recovery is limited to N <= {INTEGER_RECOVERY_LIMIT} by double precision (got {N}); "
            "use invert_probabilities."
        )
    traces = sample_traces(N, phase_factor, threads)
    coeffs = _inverse_dft(traces)
    bound = max_area(N)
    counts: Dict[int, int] = {}
    worst = 0.0
    for area in range(-bound, bound + 1):
        value = coeffs[area % coeffs.size]
        nearest = round(value.real)
        residue = abs(value - nearest)
        if residue > ROUNDING_GATE or nearest < 0:
            raise ConsistencyError(
                f"N={N}: coefficient for A={area} is {value.real:.6g}{value.imag:+.3g}i, "
                f"not a non-negative integer (residue {residue:.3g})."
            )
        worst = max(worst, residue)
        counts[area] = int(nearest)
    dist = AreaDistribution(N=N, counts=counts)
    if dist.total != omega_exact(N):
        raise ConsistencyError(f"N={N}: spectral total {dist.total} differs from {omega_exact(N)}.")
    logger.info("Spectral inversion N=%d: max rounding residue %.3g", N, worst)
    return SpectralInversion(distribution=dist, traces=traces, max_residue=worst)


def invert_counts(N: int, phase_factor: int = PHASE_FACTOR, threads: int = 1) -> AreaDistribution:
    """C(N, A) from flux-sampled traces by inverse DFT, rounded and gated."""
    return invert_counts_detailed(N, phase_factor, threads).distribution


@dataclass
class SpectralProbabilities:
    N: int
    probabilities: Dict[int, float]
    error: float


def invert_probabilities(N: int, phase_factor: int = PHASE_FACTOR, threads: int = 1) -> SpectralProbabilities:
    """Float mode for any even N: P_N(A) with an error estimate (imaginary and negative residue)."""
    if N < 0 or N % 2:
        raise ValueError(f"N must be a non-negative even integer (got {N}).")
    coeffs = _inverse_dft(sample_traces(N, phase_factor, threads)) / omega_exact(N)
    bound = max_area(N)
    probabilities = {a: float(coeffs[a % coeffs.size].real) for a in range(-bound, bound + 1)}
    error = max(
        float(np.max(np.abs(coeffs.imag))),
        max(0.0, -min(probabilities.values())),
    )
    return SpectralProbabilities(N=N, probabilities=probabilities, error=error)


@dataclass
class LandauEdgeRow:
    level: int
    sign: int
    measured: float
    predicted: float
    deviation: float
    separated: bool


def landau_edge_check(flux: RationalFlux, num_levels: int, grid: int = 4) -> List[LandauEdgeRow]:
    """Band-edge sub-band centres of the Bloch spectrum against the Landau-level expansion."""
    k1, k2 = _k_grid(grid)
    eig = _eigenvalues(_bloch_stack(flux, k1, k2))  # ascending per k
    q = flux.q
    if flux.p == 0:
        top, bottom = float(np.max(eig)), float(np.min(eig))
        return [
            LandauEdgeRow(0, 1, top, 4.0, top - 4.0, True),
            LandauEdgeRow(0, -1, bottom, -4.0, bottom + 4.0, True),
        ]
    gamma = flux.gamma % (2.0 * math.pi)
    gamma = min(gamma, 2.0 * math.pi - gamma)
    # States per k in one sub-band: q * gamma / (2 pi).
    width = int(round(q * gamma / (2.0 * math.pi)))
    if (num_levels + 1) * width > q:
        raise ValueError(f"Flux {flux} has room for fewer than {num_levels + 1} edge sub-bands.")
    if gamma > 0.5:
        logger.warning("gamma=%.3f is not small; the Landau expansion is not expected to hold.", gamma)

    def cluster(level: int, sign: int) -> np.ndarray:
        if sign > 0:
            return eig[:, q - (level + 1) * width : q - level * width]
        return eig[:, level * width : (level + 1) * width]

    rows: List[LandauEdgeRow] = []
    for level in range(num_levels):
        for sign in (1, -1):
            band = cluster(level, sign)
            inner = cluster(level + 1, sign)
            separated = bool(np.min(band) > np.max(inner)) if sign > 0 else bool(np.max(band) < np.min(inner))
            if not separated:
                logger.warning("Sub-band %d (sign %+d) overlaps its neighbour at flux %s", level, sign, flux)
            measured = float(np.mean(band))
            predicted = landau_energy(level, gamma, sign)
            rows.append(LandauEdgeRow(level, sign, measured, predicted, measured - predicted, separated))
    return rows


def write_trace_table(traces: Sequence[TraceValue], path: Optional[Union[str, Path]] = None) -> str:
    """CSV `N,p,q,re,im,grid` for audit."""
    frame = pd.DataFrame(
        {
            "N": [t.N for t in traces],
            "p": [t.flux.p for t in traces],
            "q": [t.flux.q for t in traces],
            "re": [t.value.real for t in traces],
            "im": [t.value.imag for t in traces],
            "grid": [t.quadrature_order for t in traces],
        }
    )
    text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    if path is not None:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    return text
