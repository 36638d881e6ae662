"""Differential-absorption gas analysis for scanned dual-output interferometers.

The package covers the full measurement chain: forward simulation of idler
interferograms through a gas path, reference-fringe resampling and FFT spectrum
estimation, differential-absorbance retrieval of trace-gas concentrations with
detection limits, and nonlinear gas-cell calibration. The `qftir` CLI wires the
pieces into simulate / analyze / calibrate / track batch commands.
"""
from .calibration import (
    DEFAULT_CELL_LENGTH_CM,
    CalibrationResult,
    LinearityPoint,
    calibrate,
    linearity_check,
)
from .config import AnalysisConfig, load_config
from .core import (
    BOLTZMANN_J_PER_K,
    GasMixture,
    GasSpecies,
    Spectrum,
    SpectrumKind,
    WavenumberGrid,
    average_spectra,
    number_density,
    resample,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateInitialGuess,
    NoConvergence,
    ParseError,
    QftirError,
)
from .forward import (
    EnvelopeModel,
    EnvelopeShape,
    InstrumentModel,
    apply_response,
    beer_lambert_transmission,
    default_envelope,
    idler_spectrum,
    synthesize_interferogram,
    synthesize_reference_fringes,
    synthesize_scan_pair,
)
from .interferometry import (
    BatchResult,
    Interferogram,
    TimeSampledAxis,
    UniformPathAxis,
    bandpass,
    process_scan,
    process_scan_batch,
    resample_by_reference,
    spectrum_from_interferogram,
)
from .io import (
    load_cross_section,
    parse_cross_section_file,
    read_interferogram,
    read_retrieval_result,
    read_spectrum_csv,
    write_interferogram,
    write_retrieval_result,
    write_spectrum_csv,
)
from .retrieval import (
    DifferentialBand,
    RetrievalResult,
    TrackStep,
    detrend,
    differential_cross_sections,
    measured_absorbance,
    retrieve,
    track,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig",
    "BOLTZMANN_J_PER_K",
    "BatchResult",
    "CalibrationResult",
    "ConfigError",
    "DEFAULT_CELL_LENGTH_CM",
    "DataError",
    "DegenerateInitialGuess",
    "DifferentialBand",
    "EnvelopeModel",
    "EnvelopeShape",
    "GasMixture",
    "GasSpecies",
    "InstrumentModel",
    "Interferogram",
    "LinearityPoint",
    "NoConvergence",
    "ParseError",
    "QftirError",
    "RetrievalResult",
    "Spectrum",
    "SpectrumKind",
    "TimeSampledAxis",
    "TrackStep",
    "UniformPathAxis",
    "WavenumberGrid",
    "apply_response",
    "average_spectra",
    "bandpass",
    "beer_lambert_transmission",
    "calibrate",
    "default_envelope",
    "detrend",
    "differential_cross_sections",
    "idler_spectrum",
    "linearity_check",
    "load_config",
    "load_cross_section",
    "measured_absorbance",
    "number_density",
    "parse_cross_section_file",
    "process_scan",
    "process_scan_batch",
    "read_interferogram",
    "read_retrieval_result",
    "read_spectrum_csv",
    "resample",
    "resample_by_reference",
    "retrieve",
    "spectrum_from_interferogram",
    "synthesize_interferogram",
    "synthesize_reference_fringes",
    "synthesize_scan_pair",
    "track",
    "write_interferogram",
    "write_retrieval_result",
    "write_spectrum_csv",
]
