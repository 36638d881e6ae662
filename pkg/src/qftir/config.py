"""Declarative analysis configuration: one JSON file drives every command.

A config is a plain JSON object; command-line flags mirror its keys one-to-one
(dotted for nested keys, e.g. ``--band.low``). The effective configuration --
defaults, then file, then overrides -- is hashed so every output file can carry
a provenance digest.
"""
from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass, field

from .core import GasSpecies
from .errors import ConfigError, ParseError
from .forward import EnvelopeModel, InstrumentModel, default_envelope
from .retrieval import DifferentialBand

DEFAULTS: dict = {
    "species_files": [],
    "path_length_cm": 170.0,
    "temperature_k": 293.15,
    "pressure_pa": 1.0e5,
    "band": {"low": 2810.0, "high": 3050.0, "poly_degree": 9},
    "instrument": {
        "scan_length_cm": 0.9,
        "scan_speed_cm_s": 0.9,
        "sampling_rate_hz": 15000.0,
        "pump_wavelength_nm": 6000.0,
        "visibility": 0.5,
        "noise_std": 0.0,
        "bandpass_low_hz": 300.0,
        "bandpass_high_hz": 6000.0,
    },
    "envelope": {"shape": "raised_cosine", "center": 2900.0, "width": 200.0},
    "scan_count": 500,
    "speed_jitter": 0.0,
    "jitter_freq_hz": 0.0,
    "output_dir": "qftir-out",
    "mixture": {},
    "cell_length_cm": 135.0,
    "calibration_species": "",
}


@dataclass(frozen=True)
class AnalysisConfig:
    """Validated, fully resolved configuration plus loaded cross sections."""

    species_files: tuple[str, ...]
    species_db: dict[str, GasSpecies]
    path_length_cm: float
    temperature_k: float
    pressure_pa: float
    band: DifferentialBand
    instrument: InstrumentModel
    envelope: EnvelopeModel
    scan_count: int
    speed_jitter: float
    jitter_freq_hz: float
    output_dir: str
    mixture: dict[str, float]
    cell_length_cm: float
    calibration_species: str
    digest: str
    raw: dict = field(repr=False)

    @property
    def conditions(self) -> tuple[float, float]:
        return (self.temperature_k, self.pressure_pa)


def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and key != "mixture":
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be an object")
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = copy.deepcopy(value)
    return out


def apply_overrides(effective: dict, overrides: dict) -> dict:
    """Apply dotted-key overrides (``band.low`` -> effective["band"]["low"])."""
    out = copy.deepcopy(effective)
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = out
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown config key {dotted!r}")
            node = node[part]
        leaf = parts[-1]
        if leaf not in node and parts[0] != "mixture":
            raise ConfigError(f"unknown config key {dotted!r}")
        node[leaf] = value
    return out


def config_digest(effective: dict) -> str:
    canon = json.dumps(effective, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _as_float(effective: dict, key: str, positive: bool = False) -> float:
    try:
        value = float(effective[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key} must be a number") from exc
    if positive and not value > 0:
        raise ConfigError(f"{key} must be > 0, got {value}")
    return value


def load_config(
    path: str | os.PathLike | None,
    overrides: dict | None = None,
) -> AnalysisConfig:
    """Load, merge, validate. ``path=None`` starts from defaults only.

    Species file paths are resolved relative to the config file's directory
    (relative to the working directory when there is no file). All validation
    failures raise ConfigError.
    """
    if path is not None:
        try:
            with open(path) as fh:
                file_doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(file_doc, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        base_dir = os.path.dirname(os.path.abspath(path))
    else:
        file_doc = {}
        base_dir = os.getcwd()

    effective = _merge(DEFAULTS, file_doc)
    if overrides:
        effective = apply_overrides(effective, overrides)
    env_out = os.environ.get("QFTIR_OUTPUT_DIR")
    if env_out:
        effective["output_dir"] = env_out
    digest = config_digest(effective)

    files = effective["species_files"]
    if not isinstance(files, list) or not files or not all(isinstance(f, str) for f in files):
        raise ConfigError("species_files must be a non-empty list of paths")
    resolved = tuple(
        f if os.path.isabs(f) else os.path.join(base_dir, f) for f in files
    )
    from .io import load_cross_section

    species_db: dict[str, GasSpecies] = {}
    for fpath in resolved:
        if not os.path.exists(fpath):
            raise ConfigError(f"species file not found: {fpath}")
        try:
            sp = load_cross_section(fpath)
        except ParseError as exc:
            raise ConfigError(f"species file {fpath}: {exc}") from exc
        if sp.name in species_db:
            raise ConfigError(f"duplicate species {sp.name!r} (file {fpath})")
        species_db[sp.name] = sp

    band_doc = effective["band"]
    try:
        band = DifferentialBand(
            float(band_doc["low"]), float(band_doc["high"]), int(band_doc["poly_degree"])
        )
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"band: {exc}") from exc

    inst = effective["instrument"]
    try:
        instrument = InstrumentModel(
            scan_length=float(inst["scan_length_cm"]),
            scan_speed=float(inst["scan_speed_cm_s"]),
            sampling_rate=float(inst["sampling_rate_hz"]),
            pump_wavelength=float(inst["pump_wavelength_nm"]),
            visibility=float(inst["visibility"]),
            noise_std=float(inst["noise_std"]),
            bandpass=(float(inst["bandpass_low_hz"]), float(inst["bandpass_high_hz"])),
        )
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"instrument: {exc}") from exc

    # the analysis band and the pump fringe must fall inside the electronic
    # bandpass, else the pipeline silently attenuates what it should measure
    v = instrument.scan_speed
    f_low, f_high = instrument.bandpass
    f_band = (band.low * v, band.high * v)
    f_pump = 2.0 * v / (instrument.pump_wavelength * 1e-7)
    if not (f_low < f_band[0] and f_band[1] < f_high):
        raise ConfigError(
            f"analysis band maps to {f_band[0]:.0f}-{f_band[1]:.0f} Hz, outside "
            f"the electronic bandpass {f_low:.0f}-{f_high:.0f} Hz"
        )
    if not f_low < f_pump < f_high:
        raise ConfigError(
            f"pump fringe at {f_pump:.0f} Hz lies outside the electronic "
            f"bandpass {f_low:.0f}-{f_high:.0f} Hz"
        )

    env_doc = effective["envelope"]
    try:
        if env_doc.get("shape", "raised_cosine") == "tabulated":
            from .io import read_spectrum_csv

            table_path = env_doc.get("file", "")
            if not os.path.isabs(table_path):
                table_path = os.path.join(base_dir, table_path)
            envelope = EnvelopeModel("tabulated", table=read_spectrum_csv(table_path))
        else:
            envelope = EnvelopeModel(
                env_doc["shape"], float(env_doc["center"]), float(env_doc["width"])
            )
    except (ValueError, TypeError, KeyError, OSError, ParseError) as exc:
        raise ConfigError(f"envelope: {exc}") from exc

    try:
        scan_count = int(effective["scan_count"])
    except (TypeError, ValueError) as exc:
        raise ConfigError("scan_count must be an integer") from exc
    if scan_count < 1:
        raise ConfigError(f"scan_count must be >= 1, got {scan_count}")

    mixture_doc = effective["mixture"]
    if not isinstance(mixture_doc, dict):
        raise ConfigError("mixture must be an object of name -> ppm")
    mixture: dict[str, float] = {}
    for name, ppm in mixture_doc.items():
        if name not in species_db:
            raise ConfigError(
                f"mixture species {name!r} not among loaded species "
                f"{sorted(species_db)}"
            )
        try:
            ppm_f = float(ppm)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"mixture[{name!r}] must be a number") from exc
        if ppm_f < 0:
            raise ConfigError(f"mixture[{name!r}] must be >= 0, got {ppm_f}")
        mixture[name] = ppm_f

    calibration_species = str(effective["calibration_species"]) or next(iter(species_db))
    if calibration_species not in species_db:
        raise ConfigError(f"calibration_species {calibration_species!r} not loaded")

    speed_jitter = _as_float(effective, "speed_jitter")
    if speed_jitter < 0:
        raise ConfigError("speed_jitter must be >= 0")
    jitter_freq = _as_float(effective, "jitter_freq_hz")
    if speed_jitter > 0 and jitter_freq <= 0:
        raise ConfigError("jitter_freq_hz must be > 0 when speed_jitter > 0")

    return AnalysisConfig(
        species_files=resolved,
        species_db=species_db,
        path_length_cm=_as_float(effective, "path_length_cm", positive=True),
        temperature_k=_as_float(effective, "temperature_k", positive=True),
        pressure_pa=_as_float(effective, "pressure_pa", positive=True),
        band=band,
        instrument=instrument,
        envelope=envelope,
        scan_count=scan_count,
        speed_jitter=speed_jitter,
        jitter_freq_hz=jitter_freq,
        output_dir=str(effective["output_dir"]),
        mixture=mixture,
        cell_length_cm=_as_float(effective, "cell_length_cm", positive=True),
        calibration_species=calibration_species,
        digest=digest,
        raw=effective,
    )
