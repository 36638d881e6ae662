"""Differential absorption analysis: measured absorbance, polynomial detrending,
differential cross-sections, linear least-squares retrieval, and time tracking.

Sign convention: the differential absorbance is the measured absorbance minus
its slow polynomial part, which keeps absorption features positive. Masked
points are carried as NaN and excluded from every fit rather than imputed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from numpy.polynomial import chebyshev

from .core import (
    GasSpecies,
    Spectrum,
    SpectrumKind,
    WavenumberGrid,
    number_density,
    resample,
)
from .errors import (
    BandNotCovered,
    EmptyInput,
    GridMismatch,
    IllConditionedFit,
    InsufficientPoints,
    NonMonotonicTimestamps,
    ReferenceNonPositive,
    SingularDesign,
)
from .forward import apply_response, _species_map

#: condition-number threshold on the scaled polynomial normal system
_COND_LIMIT = 1e10


@dataclass(frozen=True)
class DifferentialBand:
    """Analysis band and detrending polynomial degree."""

    low: float
    high: float
    poly_degree: int = 9

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError("band must satisfy low < high")
        if self.poly_degree < 0:
            raise ValueError("poly_degree must be >= 0")


@dataclass(frozen=True)
class RetrievalResult:
    """Concentrations with residual statistics.

    detection_limits follow |c|/snr, evaluated in the algebraically equivalent
    form noise_std / max|column|, which stays defined at zero concentration.
    A species is classified present when its snr exceeds 1, i.e. |c| above the
    detection limit.
    """

    concentrations: dict[str, float]
    covariance: np.ndarray
    residual: Spectrum
    noise_std: float
    snr: dict[str, float]
    detection_limits: dict[str, float]

    @property
    def species(self) -> tuple[str, ...]:
        return tuple(self.concentrations)

    def is_present(self, name: str) -> bool:
        return self.snr[name] > 1.0


def measured_absorbance(
    sample: Spectrum, reference: Spectrum, band: DifferentialBand | None = None
) -> Spectrum:
    """A(nu) = ln(reference / sample) pointwise on the shared grid.

    Points where the sample (or reference) is non-positive are masked (NaN).
    When ``band`` is given, a non-positive reference inside the band is an
    error: the analysis cannot proceed without a valid reference there.
    """
    if sample.grid != reference.grid:
        raise GridMismatch("sample and reference must share one grid")
    ref = reference.values
    sam = sample.values
    if band is not None:
        i0, i1 = reference.grid.index_range(band.low, band.high)
        seg = ref[i0:i1]
        if np.any(~(seg > 0)):
            raise ReferenceNonPositive(
                f"reference has non-positive points in [{band.low}, {band.high}]"
            )
    good = (sam > 0) & (ref > 0)
    vals = np.full(sam.shape, np.nan)
    vals[good] = np.log(ref[good] / sam[good])
    return Spectrum(sample.grid, vals, SpectrumKind.ABSORBANCE)


def _cheb_design(nu: np.ndarray, band: DifferentialBand) -> np.ndarray:
    x = 2.0 * (nu - band.low) / (band.high - band.low) - 1.0
    return chebyshev.chebvander(x, band.poly_degree)


def detrend(absorbance: Spectrum, band: DifferentialBand) -> tuple[Spectrum, Spectrum]:
    """Split a spectrum into (slow polynomial part, differential part) on the band.

    The polynomial is fitted by least squares on a Chebyshev basis over the
    band affinely mapped to [-1, 1]; masked points are excluded from the fit.
    Both returned spectra live on the band-restricted grid; masked points stay
    masked in the differential.
    """
    restricted = absorbance.restrict(band.low, band.high)
    nu = restricted.grid.points()
    vals = restricted.values
    good = ~np.isnan(vals)
    if good.sum() < band.poly_degree + 2:
        raise InsufficientPoints(
            f"{int(good.sum())} unmasked points in band, need >= {band.poly_degree + 2}"
        )
    design = _cheb_design(nu, band)
    v = design[good]
    normal_cond = np.linalg.cond(v.T @ v)
    if normal_cond > _COND_LIMIT:
        raise IllConditionedFit(f"polynomial normal system condition {normal_cond:.2e}")
    coef, *_ = np.linalg.lstsq(v, vals[good], rcond=None)
    slow_vals = design @ coef
    slow = Spectrum(restricted.grid, slow_vals, SpectrumKind.ABSORBANCE)
    differential = Spectrum(restricted.grid, vals - slow_vals, SpectrumKind.ABSORBANCE)
    return slow, differential


def differential_cross_sections(
    species_db,
    band: DifferentialBand,
    resolution: float,
    grid: WavenumberGrid,
) -> dict[str, Spectrum]:
    """Per-species instrument-view differential cross-sections on the band.

    Each cross-section is resampled onto the analysis grid, convolved with the
    line-shape response at ``resolution``, and detrended with the band's
    polynomial, which is exactly the processing the measured differential
    absorbance has seen.
    """
    db = _species_map(species_db)
    out: dict[str, Spectrum] = {}
    for name, species in db.items():
        xs = species.cross_section
        if xs.grid.start > band.low or xs.grid.end < band.high:
            raise BandNotCovered(
                f"{name}: cross-section [{xs.grid.start}, {xs.grid.end}] does not "
                f"cover band [{band.low}, {band.high}]"
            )
        resampled = resample(xs, grid)
        convolved = apply_response(resampled, resolution)
        _, diff = detrend(
            Spectrum(convolved.grid, convolved.values, SpectrumKind.ABSORBANCE), band
        )
        out[name] = Spectrum(diff.grid, diff.values, SpectrumKind.CROSS_SECTION)
    return out


def retrieve(
    differential_absorbance: Spectrum,
    diff_xs: Mapping[str, Spectrum],
    path_length: float,
    conditions: tuple[float, float],
) -> RetrievalResult:
    """Solve min_c || dA - M c ||_2 with M_k = L * n_air * 1e-6 * diff_xs_k.

    Unconstrained (signed) solution via SVD-based least squares; masked rows
    are dropped. Residual statistics give the noise estimate, per-species SNR
    (peak fitted signal over residual std) and detection limits.
    """
    if not diff_xs:
        raise EmptyInput("no differential cross-sections")
    names = list(diff_xs)
    grid = differential_absorbance.grid
    for name in names:
        if diff_xs[name].grid != grid:
            raise GridMismatch(f"{name}: differential cross-section grid differs")
    temperature, pressure = conditions
    scale = path_length * number_density(temperature, pressure) * 1e-6
    m = np.column_stack([scale * diff_xs[name].values for name in names])
    if np.isnan(m).any():
        raise GridMismatch("differential cross-sections contain masked points")
    for j, name in enumerate(names):
        if not np.any(m[:, j] != 0.0):
            raise SingularDesign(f"column for {name} is identically zero")
    y = differential_absorbance.values
    rows = ~np.isnan(y)
    if rows.sum() < len(names):
        raise InsufficientPoints("fewer unmasked points than species")
    m_fit = m[rows]
    c, _, rank, _ = np.linalg.lstsq(m_fit, y[rows], rcond=None)
    if rank < len(names):
        raise SingularDesign(f"design matrix rank {rank} < {len(names)} species")
    fitted = m @ c
    resid_vals = np.where(rows, y - fitted, np.nan)
    residual = Spectrum(grid, resid_vals, SpectrumKind.ABSORBANCE)
    noise_std = float(np.std(resid_vals[rows]))
    covariance = noise_std**2 * np.linalg.inv(m_fit.T @ m_fit)
    snr: dict[str, float] = {}
    limits: dict[str, float] = {}
    concentrations: dict[str, float] = {}
    for j, name in enumerate(names):
        peak = float(np.max(np.abs(m[:, j]))) * abs(float(c[j]))
        col_peak = float(np.max(np.abs(m[:, j])))
        concentrations[name] = float(c[j])
        if noise_std > 0:
            snr[name] = peak / noise_std
        else:
            snr[name] = float("inf") if peak > 0 else 0.0
        limits[name] = noise_std / col_peak
    return RetrievalResult(
        concentrations=concentrations,
        covariance=covariance,
        residual=residual,
        noise_std=noise_std,
        snr=snr,
        detection_limits=limits,
    )


@dataclass(frozen=True)
class TrackStep:
    """One time step of a concentration series; error is None on success."""

    timestamp: float
    result: RetrievalResult | None
    error: str | None = None


def track(
    series,
    species_db,
    band: DifferentialBand,
    resolution: float,
    path_length: float,
    conditions: tuple[float, float],
) -> list[TrackStep]:
    """Run the absorbance -> detrend -> retrieve pipeline per time step.

    ``series`` is an iterable of (timestamp, reference Spectrum, sample
    Spectrum). Steps that fail are recorded with their error message; the
    series keeps going.
    """
    steps = list(series)
    if not steps:
        raise EmptyInput("empty time series")
    times = [t for t, _, _ in steps]
    if any(t1 >= t2 for t1, t2 in zip(times, times[1:])):
        raise NonMonotonicTimestamps("timestamps must be strictly increasing")
    xs_cache: dict[tuple, Mapping[str, Spectrum]] = {}
    out: list[TrackStep] = []
    for timestamp, reference, sample in steps:
        try:
            absorbance = measured_absorbance(sample, reference, band)
            _, differential = detrend(absorbance, band)
            key = (
                differential.grid.start,
                differential.grid.step,
                differential.grid.count,
            )
            if key not in xs_cache:
                xs_cache[key] = differential_cross_sections(
                    species_db, band, resolution, differential.grid
                )
            result = retrieve(differential, xs_cache[key], path_length, conditions)
            out.append(TrackStep(timestamp, result))
        except Exception as exc:  # per-step isolation is the contract
            out.append(TrackStep(timestamp, None, f"{type(exc).__name__}: {exc}"))
    return out
