"""Interferogram processing: bandpass filtering, fringe-referenced resampling,
Fourier reconstruction, and batch averaging.

The reconstruction takes the magnitude of the FFT; no phase correction is
applied. With the mirror scanning symmetrically through zero path difference
the transform is real up to a linear (shift) phase, so the magnitude equals
the convolved spectrum up to rectification of small negative ringing lobes,
and the noise floor comes out rectified (non-negative) — accounted for where
noise statistics are estimated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .core import Spectrum, SpectrumKind, WavenumberGrid, average_spectra
from .errors import (
    EmptyInput,
    InsufficientFringes,
    InvalidBand,
    NonFiniteSamples,
    NonMonotonicPhase,
    TooManyFailedScans,
    WrongAxis,
)

if TYPE_CHECKING:  # runtime import would be circular; forward imports Interferogram
    from .forward import InstrumentModel


@dataclass(frozen=True)
class TimeSampledAxis:
    """Raw detector samples taken uniformly in time during a scan."""

    sampling_rate: float
    scan_speed: float

    def __post_init__(self):
        if self.sampling_rate <= 0 or self.scan_speed <= 0:
            raise ValueError("sampling_rate and scan_speed must be > 0")


@dataclass(frozen=True)
class UniformPathAxis:
    """Samples on a uniform optical-path-difference grid."""

    step: float

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("path step must be > 0")


@dataclass(frozen=True, eq=False)
class Interferogram:
    """Detector samples versus time or optical path difference.

    Finiteness of the samples is a processing-time validity check (corrupt
    scans are a normal input to batch processing and are skipped there), not a
    construction invariant.
    """

    samples: np.ndarray
    axis: TimeSampledAxis | UniformPathAxis
    scan_length: float

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float, copy=True)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D array")
        if self.scan_length <= 0:
            raise ValueError("scan_length must be > 0")
        if isinstance(self.axis, UniformPathAxis):
            span = self.axis.step * (samples.size - 1)
            if span > self.scan_length * (1 + 1e-9):
                raise ValueError(
                    f"uniform-path span {span} exceeds scan_length {self.scan_length}"
                )
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)


def _require_finite(ig: Interferogram) -> None:
    if not np.isfinite(ig.samples).all():
        raise NonFiniteSamples("interferogram contains non-finite samples")


def bandpass(ig: Interferogram, low: float, high: float) -> Interferogram:
    """Zero-phase Butterworth bandpass (order 4, forward-backward).

    Padding uses even reflection: the interferogram is symmetric about ZPD and
    even extension is the physically consistent boundary, keeping the filter
    transient error negligible at the scan ends.
    """
    if not isinstance(ig.axis, TimeSampledAxis):
        raise WrongAxis("bandpass expects a time-sampled interferogram")
    _require_finite(ig)
    fs = ig.axis.sampling_rate
    if not 0 < low < high < fs / 2:
        raise InvalidBand(f"need 0 < low < high < {fs / 2}, got ({low}, {high})")
    sos = butter(4, (low, high), btype="bandpass", fs=fs, output="sos")
    padlen = min(ig.samples.size - 1, int(10 * fs / low))
    filtered = sosfiltfilt(sos, ig.samples, padtype="even", padlen=padlen)
    return Interferogram(filtered, ig.axis, ig.scan_length)


def resample_by_reference(
    signal: Interferogram, reference: Interferogram, pump_wavelength: float
) -> Interferogram:
    """Resample the signal onto the uniform path grid set by reference fringes.

    Zero crossings of the (mean-removed) reference are located with linear
    sub-sample interpolation; consecutive crossings are lambda_p/4 apart in
    path (double-pass fringes), giving uniform path spacing regardless of
    scan-speed jitter. The signal is linearly interpolated at the crossing
    times.
    """
    if not isinstance(signal.axis, TimeSampledAxis) or not isinstance(reference.axis, TimeSampledAxis):
        raise WrongAxis("resample_by_reference expects time-sampled interferograms")
    if signal.axis != reference.axis or signal.samples.size != reference.samples.size:
        raise WrongAxis("signal and reference must share one time base")
    _require_finite(signal)
    _require_finite(reference)
    if pump_wavelength <= 0:
        raise ValueError("pump_wavelength must be > 0")
    fs = signal.axis.sampling_rate
    ref = reference.samples - reference.samples.mean()
    sign = np.signbit(ref)
    idx = np.nonzero(sign[1:] != sign[:-1])[0]
    if idx.size < 16:
        raise InsufficientFringes(f"only {idx.size} reference zero crossings found")
    denom = ref[idx] - ref[idx + 1]
    if np.any(denom == 0):
        raise NonMonotonicPhase("degenerate zero crossing in reference")
    frac = ref[idx] / denom
    t_cross = (idx + frac) / fs
    gaps = np.diff(t_cross)
    if np.any(gaps <= 0):
        raise NonMonotonicPhase("reference crossing times are not strictly increasing")
    # each gap should be ~ lambda_p/4 of mirror travel; a gap far beyond the
    # typical spacing means the fringe counter stalled (mirror stopped or
    # reference dropped out) and the path grid would be silently wrong
    if gaps.max() > 8.0 * np.median(gaps):
        raise NonMonotonicPhase("reference fringes stalled mid-scan")
    t = np.arange(signal.samples.size) / fs
    values = np.interp(t_cross, t, signal.samples)
    step = pump_wavelength * 1e-7 / 4.0
    scan_length = step * (values.size - 1)
    return Interferogram(values, UniformPathAxis(step), scan_length)


def _complex_spectrum(ig: Interferogram, pad_factor: int = 4) -> tuple[WavenumberGrid, np.ndarray]:
    """Complex one-sided DFT on the zero-padded path grid (scaled by 2*step).

    Shared by spectrum_from_interferogram (which takes the magnitude) and by
    linearity/Parseval tests that need the pre-magnitude transform.
    """
    if not isinstance(ig.axis, UniformPathAxis):
        raise WrongAxis("spectrum reconstruction expects a uniform-path interferogram")
    _require_finite(ig)
    step = ig.axis.step
    n = ig.samples.size
    nfft = 1
    while nfft < pad_factor * n:
        nfft *= 2
    spec = 2.0 * step * np.fft.rfft(ig.samples, nfft)
    grid = WavenumberGrid(start=0.0, step=1.0 / (nfft * step), count=spec.size)
    return grid, spec


def spectrum_from_interferogram(ig: Interferogram) -> Spectrum:
    """Magnitude FFT of a uniform-path interferogram, on nu_j = j/(nfft*step).

    The interferogram is zero-padded to the next power of two >= 4x its length
    (grid densification only; resolution stays 1/scan_length). The returned
    band is the full one-sided transform, 0 to the path-grid Nyquist
    1/(2*step). Scaling: a monochromatic fringe of visibility V over spectrum
    integral A reconstructs a line of peak (V/2) * A * (2/resolution).
    """
    grid, spec = _complex_spectrum(ig)
    return Spectrum(grid, np.abs(spec), SpectrumKind.INTENSITY)


@dataclass(frozen=True)
class BatchResult:
    """Averaged spectrum plus the scan bookkeeping the batch contract reports."""

    spectrum: Spectrum
    n_failed: int
    n_total: int


def process_scan(
    signal: Interferogram, reference: Interferogram, instrument: "InstrumentModel"
) -> Spectrum:
    """Single-scan pipeline: bandpass -> fringe resampling -> magnitude FFT."""
    low, high = instrument.bandpass
    filtered = bandpass(signal, low, high)
    uniform = resample_by_reference(filtered, reference, instrument.pump_wavelength)
    return spectrum_from_interferogram(uniform)


def process_scan_batch(
    scans: Sequence[tuple[Interferogram, Interferogram]], instrument: "InstrumentModel"
) -> BatchResult:
    """Process and average a batch of (signal, reference) scans.

    Scans that fail per-scan validation (non-finite samples, too few fringes,
    axis problems) are skipped and counted; more than 20 % failures is an
    error. The average is accumulated in input order, so results are identical
    however the per-scan work is scheduled.
    """
    if len(scans) == 0:
        raise EmptyInput("no scans to process")
    spectra = []
    failed = 0
    first_error: Exception | None = None
    for signal, reference in scans:
        try:
            spectra.append(process_scan(signal, reference, instrument))
        except (NonFiniteSamples, InsufficientFringes, NonMonotonicPhase, WrongAxis, InvalidBand) as exc:
            failed += 1
            if first_error is None:
                first_error = exc
    if failed > 0.2 * len(scans):
        raise TooManyFailedScans(
            f"{failed}/{len(scans)} scans failed (first error: {first_error})"
        )
    return BatchResult(average_spectra(spectra), failed, len(scans))
