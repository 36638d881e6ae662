"""Forward model: Beer-Lambert transmission, idler spectra, instrument response,
and raw interferogram synthesis.

The interferogram model is a Michelson-type scan of total path difference
``scan_length``, sampled uniformly in time while the mirror moves at
``scan_speed``; zero path difference sits at mid-scan (the mirror travels
symmetrically through ZPD), which is what makes a phase-correction-free
magnitude reconstruction exact for smooth spectra.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import czt

from .core import (
    GasMixture,
    GasSpecies,
    Spectrum,
    SpectrumKind,
    WavenumberGrid,
    number_density,
    resample,
)
from .errors import (
    GridMismatch,
    GridTooCoarse,
    NegativeConcentration,
    NonOverlappingGrids,
    NyquistViolation,
    UnknownSpecies,
)
from .interferometry import Interferogram, TimeSampledAxis


@dataclass(frozen=True)
class InstrumentModel:
    """Scan and detection parameters of the interferometer.

    scan_length   total optical path difference per scan, cm
    scan_speed    mirror speed in path-difference units, cm/s
    sampling_rate detector sampling rate, Hz
    pump_wavelength  reference-interferometer pump wavelength, nm
    visibility    fringe visibility in [0, 1]
    noise_std     relative intensity noise per detector sample
    bandpass      electronic filter band (low, high), Hz

    The spectral resolution is derived, never stored: resolution = 1/scan_length.
    """

    scan_length: float
    scan_speed: float
    sampling_rate: float
    pump_wavelength: float
    visibility: float = 0.5
    noise_std: float = 0.0
    bandpass: tuple[float, float] = (300.0, 10_000.0)

    def __post_init__(self):
        if self.scan_length <= 0 or self.scan_speed <= 0 or self.sampling_rate <= 0:
            raise ValueError("scan_length, scan_speed, sampling_rate must be > 0")
        if self.pump_wavelength <= 0:
            raise ValueError("pump_wavelength must be > 0")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError("visibility must lie in [0, 1]")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        low, high = self.bandpass
        if not 0 < low < high < self.sampling_rate / 2:
            raise ValueError("bandpass must satisfy 0 < low < high < sampling_rate/2")

    @property
    def resolution(self) -> float:
        """Spectral resolution, cm^-1 (= 1/scan_length)."""
        return 1.0 / self.scan_length

    @property
    def path_step(self) -> float:
        """Path increment per reference zero crossing: lambda_p/4, cm."""
        return self.pump_wavelength * 1e-7 / 4.0

    @property
    def samples_per_scan(self) -> int:
        return int(np.floor(self.scan_length * self.sampling_rate / self.scan_speed)) + 1

    def check_nyquist(self, nu_max: float) -> None:
        if self.sampling_rate <= 2.0 * self.scan_speed * nu_max:
            raise NyquistViolation(
                f"sampling_rate {self.sampling_rate} Hz cannot represent fringes up "
                f"to {nu_max} cm^-1 at {self.scan_speed} cm/s "
                f"(need > {2.0 * self.scan_speed * nu_max:.1f} Hz)"
            )


class EnvelopeShape(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RAISED_COSINE = "raised_cosine"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class EnvelopeModel:
    """Phenomenological idler spectral envelope, normalized to unit peak.

    For GAUSSIAN, width is the standard deviation; for RAISED_COSINE, the
    half-width of the support (zero outside |nu - center| > width).
    """

    shape: EnvelopeShape
    center: float = 2900.0
    width: float = 200.0
    table: Spectrum | None = None

    def __post_init__(self):
        object.__setattr__(self, "shape", EnvelopeShape(self.shape))
        if self.shape is EnvelopeShape.TABULATED:
            if self.table is None:
                raise ValueError("tabulated envelope requires a table spectrum")
            if np.isnan(self.table.values).any() or (self.table.values < 0).any():
                raise ValueError("tabulated envelope must be finite and >= 0")
        elif self.width <= 0:
            raise ValueError("envelope width must be > 0")

    def evaluate(self, grid: WavenumberGrid) -> Spectrum:
        nu = grid.points()
        if self.shape is EnvelopeShape.GAUSSIAN:
            vals = np.exp(-0.5 * ((nu - self.center) / self.width) ** 2)
        elif self.shape is EnvelopeShape.RAISED_COSINE:
            u = (nu - self.center) / self.width
            vals = np.where(np.abs(u) <= 1.0, 0.5 * (1.0 + np.cos(np.pi * u)), 0.0)
        else:
            # tabulated: zero outside the stored support by definition
            tab = self.table
            vals = np.interp(nu, tab.grid.points(), tab.values, left=0.0, right=0.0)
            peak = vals.max()
            if peak > 0:
                vals = vals / peak
        return Spectrum(grid, vals, SpectrumKind.INTENSITY)


def default_envelope() -> EnvelopeModel:
    """Raised cosine over 2700-3100 cm^-1, the band stated for the source."""
    return EnvelopeModel(EnvelopeShape.RAISED_COSINE, center=2900.0, width=200.0)


def _species_map(species_db) -> Mapping[str, GasSpecies]:
    if isinstance(species_db, Mapping):
        return species_db
    if isinstance(species_db, GasSpecies):
        return {species_db.name: species_db}
    if isinstance(species_db, Iterable):
        return {sp.name: sp for sp in species_db}
    raise TypeError("species_db must be a mapping or iterable of GasSpecies")


def beer_lambert_transmission(
    mixture: GasMixture, species_db, path_length: float, grid: WavenumberGrid
) -> Spectrum:
    """T(nu) = exp(-L * n_air * sum_k c_k*1e-6 * sigma_k(nu)).

    Cross-sections are resampled onto ``grid`` (zero outside their support).
    Concentrations are ppm by volume; n_air comes from the mixture's T and P.
    """
    if path_length <= 0:
        raise ValueError("path_length must be > 0")
    db = _species_map(species_db)
    n_air = number_density(mixture.temperature, mixture.pressure)
    total = np.zeros(grid.count)
    for name, conc in mixture.components:
        if conc < 0:
            raise NegativeConcentration(f"{name}: {conc} ppm")
        if name not in db:
            raise UnknownSpecies(name)
        sigma = resample(db[name].cross_section, grid).values
        total += conc * 1e-6 * sigma
    transmission = np.exp(-path_length * n_air * total)
    return Spectrum(grid, transmission, SpectrumKind.TRANSMISSION)


def idler_spectrum(envelope: EnvelopeModel, transmission: Spectrum) -> Spectrum:
    """I(nu) = S(nu) * T(nu) on the transmission grid."""
    if transmission.kind is not SpectrumKind.TRANSMISSION:
        raise GridMismatch("idler_spectrum expects a Transmission spectrum")
    try:
        env = envelope.evaluate(transmission.grid)
    except NonOverlappingGrids as exc:
        raise GridMismatch(str(exc)) from exc
    return Spectrum(transmission.grid, env.values * transmission.values, SpectrumKind.INTENSITY)


def _next_pow2(n: int) -> int:
    m = 1
    while m < n:
        m *= 2
    return m


def apply_response(spectrum: Spectrum, resolution: float, _min_fft: int = 131072) -> Spectrum:
    """Convolve with the instrument line shape H(nu) = (2/dnu) sinc(2 pi nu / dnu).

    Implemented in the path-difference domain: FFT, multiply by the rectangular
    window passing |x| <= 1/dnu, inverse FFT. The window edge is placed with a
    linear half-bin ramp so the result is continuous in ``resolution`` (needed
    by finite-difference Jacobians in calibration). The signal is extended by a
    linear bridge from last to first sample before the FFT, which makes the
    implied circular signal continuous and keeps constants exactly constant.
    """
    if resolution <= 0:
        raise ValueError("resolution must be > 0")
    step = spectrum.grid.step
    if step > resolution / 5.0:
        raise GridTooCoarse(
            f"grid step {step} too coarse for resolution {resolution} "
            f"(need >= 5 points per resolution element)"
        )
    vals = spectrum.values
    if np.isnan(vals).any():
        raise ValueError("apply_response does not accept masked (NaN) spectra")
    n = vals.size
    nfft = _next_pow2(max(4 * n, _min_fft))
    ext = np.empty(nfft)
    ext[:n] = vals
    ext[n:] = np.linspace(vals[-1], vals[0], nfft - n)
    x = np.fft.rfftfreq(nfft, d=step)
    dx = x[1] - x[0]
    window = np.clip((1.0 / resolution - x) / dx + 0.5, 0.0, 1.0)
    out = np.fft.irfft(np.fft.rfft(ext) * window, nfft)[:n]
    return Spectrum(spectrum.grid, out, spectrum.kind)


def synthesize_interferogram(
    spectrum: Spectrum,
    instrument: InstrumentModel,
    seed: int,
    speed_jitter: float = 0.0,
    jitter_freq_hz: float = 0.0,
) -> Interferogram:
    """Simulate one detector scan of the given idler spectrum.

    s(t_j) = integral S(nu) [1 + visibility cos(2 pi nu (x_j - dx/2))] dnu
    with x_j = scan_speed * j / sampling_rate, plus Gaussian noise of standard
    deviation noise_std * max(s). ``speed_jitter`` adds a sinusoidal mirror
    speed modulation of the given relative amplitude and frequency (shared
    convention with synthesize_reference_fringes so signal and reference see
    the same mirror motion).
    """
    if spectrum.kind is not SpectrumKind.INTENSITY:
        raise ValueError("synthesize_interferogram expects an Intensity spectrum")
    if np.isnan(spectrum.values).any():
        raise ValueError("spectrum contains masked points")
    instrument.check_nyquist(spectrum.grid.end)
    m = instrument.samples_per_scan
    t = np.arange(m) / instrument.sampling_rate
    paths = _mirror_path(t, instrument, speed_jitter, jitter_freq_hz)
    dc = float(np.sum(spectrum.values) * spectrum.grid.step)
    zpd = instrument.scan_length / 2.0
    if speed_jitter == 0.0:
        fringes = _fringes_uniform(spectrum, paths, zpd)
    else:
        fringes = _fringes_arbitrary(spectrum, paths, zpd)
    samples = dc + instrument.visibility * fringes
    if instrument.noise_std > 0:
        rng = np.random.default_rng(seed)
        samples = samples + rng.normal(0.0, instrument.noise_std * samples.max(), m)
    axis = TimeSampledAxis(instrument.sampling_rate, instrument.scan_speed)
    return Interferogram(samples=samples, axis=axis, scan_length=instrument.scan_length)


def synthesize_reference_fringes(
    instrument: InstrumentModel,
    seed: int,
    n_samples: int | None = None,
    speed_jitter: float = 0.0,
    jitter_freq_hz: float = 0.0,
) -> Interferogram:
    """Pump-leak reference: cos(2 pi (2/lambda_p) x(t)) on the signal time base.

    Double-pass fringes: spatial frequency 2/lambda_p, i.e. one zero crossing
    per lambda_p/4 of path. ``seed`` is accepted for signature symmetry with
    the signal synthesis; the trace itself is deterministic.
    """
    del seed  # reference trace carries no noise
    m = n_samples if n_samples is not None else instrument.samples_per_scan
    t = np.arange(m) / instrument.sampling_rate
    paths = _mirror_path(t, instrument, speed_jitter, jitter_freq_hz)
    lam_p_cm = instrument.pump_wavelength * 1e-7
    samples = np.cos(2.0 * np.pi * (2.0 / lam_p_cm) * paths)
    axis = TimeSampledAxis(instrument.sampling_rate, instrument.scan_speed)
    return Interferogram(samples=samples, axis=axis, scan_length=instrument.scan_length)


def synthesize_scan_pair(
    spectrum: Spectrum,
    instrument: InstrumentModel,
    seed: int,
    speed_jitter: float = 0.0,
    jitter_freq_hz: float = 0.0,
) -> tuple[Interferogram, Interferogram]:
    """One (signal, reference) scan pair with shared mirror motion."""
    sig = synthesize_interferogram(spectrum, instrument, seed, speed_jitter, jitter_freq_hz)
    ref = synthesize_reference_fringes(instrument, seed, len(sig.samples), speed_jitter, jitter_freq_hz)
    return sig, ref


def _mirror_path(t: np.ndarray, instrument: InstrumentModel, speed_jitter: float, jitter_freq_hz: float) -> np.ndarray:
    base = instrument.scan_speed * t
    if speed_jitter == 0.0:
        return base
    if jitter_freq_hz <= 0:
        raise ValueError("jitter_freq_hz must be > 0 when speed_jitter is set")
    # speed modulation v(t) = v (1 + a cos(2 pi f t)) integrates to this path
    amp = speed_jitter * instrument.scan_speed / (2.0 * np.pi * jitter_freq_hz)
    return base + amp * np.sin(2.0 * np.pi * jitter_freq_hz * t)


def _fringes_uniform(spectrum: Spectrum, paths: np.ndarray, zpd: float) -> np.ndarray:
    """sum_k S_k cos(2 pi nu_k (x_j - zpd)) * dnu on a uniform path grid.

    Uses the chirp-z transform, which evaluates the sum exactly (to round-off)
    in O((N+M) log(N+M)): with y_j = x_j - zpd,

        G_j = e^{2 pi i nu0 y_j} * czt(S; w = e^{2 pi i dnu dx}, a = e^{-2 pi i dnu y0})

    and the fringe term is Re G.
    """
    nu0 = spectrum.grid.start
    dnu = spectrum.grid.step
    y = paths - zpd
    if y.size == 1:
        nu = spectrum.grid.points()
        return np.array([np.sum(spectrum.values * np.cos(2 * np.pi * nu * y[0]))]) * dnu
    dx = y[1] - y[0]
    g = czt(
        spectrum.values.astype(complex),
        y.size,
        w=np.exp(2j * np.pi * dnu * dx),
        a=np.exp(-2j * np.pi * dnu * y[0]),
    )
    g *= np.exp(2j * np.pi * nu0 * y)
    return g.real * dnu


def _fringes_arbitrary(spectrum: Spectrum, paths: np.ndarray, zpd: float) -> np.ndarray:
    """Fringe sum at arbitrary (jittered) path positions.

    Evaluates the exact sum on a dense uniform grid spanning the requested
    paths, then cubic-spline interpolates. At 32 points per shortest fringe
    period the spline error is ~2e-5 of the fringe amplitude, far below the
    jitter effects this path exists to simulate.
    """
    step = 1.0 / (32.0 * spectrum.grid.end)
    lo = paths.min() - 2 * step
    hi = paths.max() + 2 * step
    n_dense = int(np.ceil((hi - lo) / step)) + 1
    dense = lo + step * np.arange(n_dense)
    vals = _fringes_uniform(spectrum, dense, zpd)
    return CubicSpline(dense, vals)(paths)
