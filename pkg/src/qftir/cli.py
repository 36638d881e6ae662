"""Command-line front end: simulate, analyze, calibrate, track.

Every command reads one declarative JSON config (see config.DEFAULTS for the
key set); each config key has a mirroring flag. All outputs are deterministic
given (config, inputs, seed) and carry the config digest for provenance.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 non-convergence.

Environment: QFTIR_OUTPUT_DIR overrides output_dir; QFTIR_THREADS caps worker
threads (processing is currently sequential, so any value >= 1 is equivalent).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import io as qio
from .calibration import calibrate
from .config import AnalysisConfig, load_config
from .core import GasMixture, SpectrumKind
from .errors import ConfigError, DataError, DegenerateInitialGuess, EmptyInput, NoConvergence
from .forward import beer_lambert_transmission, idler_spectrum, synthesize_scan_pair
from .interferometry import process_scan_batch
from .retrieval import differential_cross_sections, measured_absorbance, retrieve, track

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NO_CONVERGENCE = 4

# flag name -> (dotted config key, parser)
_FLOAT_FLAGS = {
    "path-length-cm": "path_length_cm",
    "temperature-k": "temperature_k",
    "pressure-pa": "pressure_pa",
    "band-low": "band.low",
    "band-high": "band.high",
    "scan-length-cm": "instrument.scan_length_cm",
    "scan-speed-cm-s": "instrument.scan_speed_cm_s",
    "sampling-rate-hz": "instrument.sampling_rate_hz",
    "pump-wavelength-nm": "instrument.pump_wavelength_nm",
    "visibility": "instrument.visibility",
    "noise-std": "instrument.noise_std",
    "bandpass-low-hz": "instrument.bandpass_low_hz",
    "bandpass-high-hz": "instrument.bandpass_high_hz",
    "envelope-center": "envelope.center",
    "envelope-width": "envelope.width",
    "speed-jitter": "speed_jitter",
    "jitter-freq-hz": "jitter_freq_hz",
    "cell-length-cm": "cell_length_cm",
}
_INT_FLAGS = {"poly-degree": "band.poly_degree", "scan-count": "scan_count"}
_STR_FLAGS = {
    "output-dir": "output_dir",
    "envelope-shape": "envelope.shape",
    "calibration-species": "calibration_species",
}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to the JSON config file")
    for flag, key in _FLOAT_FLAGS.items():
        parser.add_argument(f"--{flag}", type=float, dest=key, default=None)
    for flag, key in _INT_FLAGS.items():
        parser.add_argument(f"--{flag}", type=int, dest=key, default=None)
    for flag, key in _STR_FLAGS.items():
        parser.add_argument(f"--{flag}", dest=key, default=None)
    parser.add_argument(
        "--species-files",
        dest="species_files",
        default=None,
        help="comma-separated cross-section file paths",
    )
    parser.add_argument(
        "--mixture",
        dest="mixture",
        default=None,
        help="ground-truth mixture as name=ppm[,name=ppm...]",
    )


def _parse_mixture(text: str) -> dict[str, float]:
    mixture: dict[str, float] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--mixture entry {item!r} is not name=ppm")
        try:
            mixture[name.strip()] = float(value)
        except ValueError as exc:
            raise ConfigError(f"--mixture entry {item!r}: {exc}") from exc
    return mixture


def _config_from_args(args: argparse.Namespace) -> AnalysisConfig:
    overrides: dict = {}
    for key in list(_FLOAT_FLAGS.values()) + list(_INT_FLAGS.values()) + list(_STR_FLAGS.values()):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if args.species_files is not None:
        overrides["species_files"] = [
            p.strip() for p in args.species_files.split(",") if p.strip()
        ]
    if getattr(args, "mixture", None) is not None:
        overrides["mixture"] = _parse_mixture(args.mixture)
    threads = os.environ.get("QFTIR_THREADS")
    if threads is not None:
        try:
            if int(threads) < 1:
                raise ValueError
        except ValueError:
            raise ConfigError(f"QFTIR_THREADS must be a positive integer, got {threads!r}")
    return load_config(args.config, overrides)


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _dir_digest(paths: list[str]) -> str:
    """Order-independent combined digest of a set of input files."""
    digest = hashlib.sha256()
    for path in sorted(paths):
        digest.update(os.path.basename(path).encode())
        digest.update(bytes.fromhex(_sha256_file(path)))
    return digest.hexdigest()


# --- simulate -----------------------------------------------------------------

def cmd_simulate(config: AnalysisConfig, seed: int) -> int:
    mixture = GasMixture(
        components=tuple(sorted(config.mixture.items())),
        temperature=config.temperature_k,
        pressure=config.pressure_pa,
    )
    grid = next(iter(config.species_db.values())).cross_section.grid
    transmission = beer_lambert_transmission(
        mixture, config.species_db, config.path_length_cm, grid
    )
    sample_spectrum = idler_spectrum(config.envelope, transmission)
    background_spectrum = config.envelope.evaluate(grid)

    out = config.output_dir
    sample_dir = os.path.join(out, "sample")
    background_dir = os.path.join(out, "background")
    os.makedirs(sample_dir, exist_ok=True)
    os.makedirs(background_dir, exist_ok=True)

    for i in range(config.scan_count):
        for role, spectrum, directory, scan_seed in (
            ("sample", sample_spectrum, sample_dir, seed + 2 * i),
            ("background", background_spectrum, background_dir, seed + 2 * i + 1),
        ):
            signal, fringe = synthesize_scan_pair(
                spectrum,
                config.instrument,
                scan_seed,
                speed_jitter=config.speed_jitter,
                jitter_freq_hz=config.jitter_freq_hz,
            )
            provenance = {
                "config_digest": config.digest,
                "seed": scan_seed,
                "role": role,
                "index": i,
            }
            stem = os.path.join(directory, f"scan_{i:04d}")
            qio.write_interferogram(signal, stem + "_signal.json", provenance)
            qio.write_interferogram(fringe, stem + "_fringe.json", provenance)

    truth = {
        "schema_version": qio.SCHEMA_VERSION,
        "type": "ground_truth",
        "mixture": {name: ppm for name, ppm in sorted(config.mixture.items())},
        "temperature_k": config.temperature_k,
        "pressure_pa": config.pressure_pa,
        "path_length_cm": config.path_length_cm,
        "scan_count": config.scan_count,
        "seed": seed,
        "config_digest": config.digest,
    }
    with open(os.path.join(out, "ground_truth.json"), "w") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
    mixture_text = (
        ", ".join(f"{n}={c}ppm" for n, c in mixture.components) or "background only"
    )
    print(f"wrote {config.scan_count} scan pairs ({mixture_text}) to {out}")
    return EXIT_OK


# --- analyze ------------------------------------------------------------------

def _load_scan_dir(directory: str):
    """Return [(signal, fringe), ...] for every *_signal.json in directory."""
    if not os.path.isdir(directory):
        raise DataError(f"scan directory not found: {directory}")
    names = sorted(n for n in os.listdir(directory) if n.endswith("_signal.json"))
    if not names:
        raise EmptyInput(f"no *_signal.json scans in {directory}")
    pairs = []
    paths = []
    for name in names:
        signal_path = os.path.join(directory, name)
        fringe_path = os.path.join(directory, name[: -len("_signal.json")] + "_fringe.json")
        if not os.path.exists(fringe_path):
            raise DataError(f"missing fringe file for {signal_path}")
        pairs.append((qio.read_interferogram(signal_path), qio.read_interferogram(fringe_path)))
        paths.extend((signal_path, fringe_path))
    return pairs, paths


def _format_table(result) -> str:
    lines = [
        f"{'species':<12} {'c_ppm':>12} {'limit_ppm':>12} {'snr':>10}   status",
    ]
    for name in result.species:
        status = "PRESENT" if result.is_present(name) else "ABSENT"
        lines.append(
            f"{name:<12} {result.concentrations[name]:>12.3f} "
            f"{result.detection_limits[name]:>12.3f} {result.snr[name]:>10.2f}   {status}"
        )
    return "\n".join(lines)


def _analyze_spectra(config: AnalysisConfig, sample, reference):
    absorbance = measured_absorbance(sample, reference, band=config.band)
    diff_xs = differential_cross_sections(
        config.species_db, config.band, config.instrument.resolution, absorbance.grid
    )
    from .retrieval import detrend

    _, differential = detrend(absorbance, config.band)
    return retrieve(differential, diff_xs, config.path_length_cm, config.conditions)


def cmd_analyze(config: AnalysisConfig, scan_dir: str, reference_dir: str) -> int:
    sample_pairs, sample_paths = _load_scan_dir(scan_dir)
    reference_pairs, reference_paths = _load_scan_dir(reference_dir)
    sample_batch = process_scan_batch(sample_pairs, config.instrument)
    reference_batch = process_scan_batch(reference_pairs, config.instrument)
    result = _analyze_spectra(config, sample_batch.spectrum, reference_batch.spectrum)

    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    provenance = {
        "config_digest": config.digest,
        "scan_dir": {"path": scan_dir, "n": len(sample_pairs), "sha256": _dir_digest(sample_paths)},
        "reference_dir": {
            "path": reference_dir,
            "n": len(reference_pairs),
            "sha256": _dir_digest(reference_paths),
        },
        "n_failed": {"sample": sample_batch.n_failed, "reference": reference_batch.n_failed},
    }
    qio.write_retrieval_result(result, os.path.join(out, "result.json"), provenance)
    residual = result.residual
    if np.isnan(residual.values).any():
        residual = residual.with_values(np.nan_to_num(residual.values, nan=0.0))
    qio.write_spectrum_csv(
        residual, os.path.join(out, "residual.csv"), extra={"config": config.digest}
    )
    print(
        f"sample scans: {sample_batch.n_total - sample_batch.n_failed} ok, "
        f"{sample_batch.n_failed} failed; reference scans: "
        f"{reference_batch.n_total - reference_batch.n_failed} ok, "
        f"{reference_batch.n_failed} failed"
    )
    print(f"noise std: {result.noise_std:.3e}")
    print(_format_table(result))
    return EXIT_OK


# --- calibrate ------------------------------------------------------------------

def cmd_calibrate(config: AnalysisConfig, measured_file: str, initial_ppm: float) -> int:
    measured = qio.read_spectrum_csv(measured_file)
    if measured.kind is not SpectrumKind.ABSORBANCE:
        raise DataError(
            f"{measured_file}: expected an absorbance spectrum, got {measured.kind.value}"
        )
    species = config.species_db[config.calibration_species]
    result = calibrate(
        measured,
        species,
        config.cell_length_cm,
        config.conditions,
        initial=(initial_ppm, config.instrument.resolution),
    )
    print(f"species:       {species.name}")
    print(f"concentration: {result.concentration:.4f} ppm")
    print(f"resolution:    {result.resolution:.6f} cm^-1")
    print(f"fit rms:       {result.fit_rms:.3e}")
    print(f"iterations:    {result.iterations}  converged: {result.converged}")
    if result.flat_directions:
        print(f"flat directions: {', '.join(result.flat_directions)}")

    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    doc = {
        "schema_version": qio.SCHEMA_VERSION,
        "type": "calibration_result",
        "species": species.name,
        "concentration_ppm": result.concentration,
        "resolution_cm1": result.resolution,
        "fit_rms": result.fit_rms,
        "iterations": result.iterations,
        "converged": result.converged,
        "flat_directions": list(result.flat_directions),
        "provenance": {
            "config_digest": config.digest,
            "input": {"path": measured_file, "sha256": _sha256_file(measured_file)},
        },
    }
    with open(os.path.join(out, "calibration.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


# --- track ----------------------------------------------------------------------

def cmd_track(config: AnalysisConfig, series_dir: str) -> int:
    if not os.path.isdir(series_dir):
        raise DataError(f"series directory not found: {series_dir}")
    step_names = sorted(
        n for n in os.listdir(series_dir) if os.path.isdir(os.path.join(series_dir, n))
    )
    if not step_names:
        raise EmptyInput(f"no step directories in {series_dir}")
    steps = []
    for name in step_names:
        try:
            timestamp = float(name)
        except ValueError:
            raise DataError(
                f"step directory name {name!r} is not a numeric timestamp"
            ) from None
        steps.append((timestamp, os.path.join(series_dir, name)))
    steps.sort(key=lambda item: item[0])

    series = []
    failures: list[tuple[float, str]] = []
    for timestamp, directory in steps:
        try:
            sample_pairs, _ = _load_scan_dir(os.path.join(directory, "sample"))
            reference_pairs, _ = _load_scan_dir(os.path.join(directory, "background"))
            sample = process_scan_batch(sample_pairs, config.instrument).spectrum
            reference = process_scan_batch(reference_pairs, config.instrument).spectrum
        except DataError as exc:
            failures.append((timestamp, f"{type(exc).__name__}: {exc}"))
            continue
        series.append((timestamp, reference, sample))

    tracked = track(
        series,
        config.species_db,
        config.band,
        config.instrument.resolution,
        config.path_length_cm,
        config.conditions,
    ) if series else []

    rows: list[tuple[float, str, str, str, str, str]] = []
    for step in tracked:
        if step.error is not None:
            rows.append((step.timestamp, "", "", "", "", step.error))
            continue
        result = step.result
        for name in result.species:
            rows.append(
                (
                    step.timestamp,
                    name,
                    repr(result.concentrations[name]),
                    repr(result.detection_limits[name]),
                    repr(result.snr[name]),
                    "",
                )
            )
    for timestamp, message in failures:
        rows.append((timestamp, "", "", "", "", message))
    rows.sort(key=lambda row: (row[0], row[1]))

    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    csv_path = os.path.join(out, "track.csv")
    with open(csv_path, "w") as fh:
        fh.write(f"# qftir-track v{qio.SCHEMA_VERSION} config={config.digest}\n")
        fh.write("timestamp,species,concentration_ppm,detection_limit_ppm,snr,error\n")
        for row in rows:
            error = row[5].replace('"', "'")
            field = f'"{error}"' if error else ""
            fh.write(f"{row[0]!r},{row[1]},{row[2]},{row[3]},{row[4]},{field}\n")
    n_err = len(failures) + sum(1 for s in tracked if s.error is not None)
    print(f"tracked {len(steps)} steps ({n_err} failed) -> {csv_path}")
    return EXIT_OK


# --- entry point -----------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qftir",
        description="Differential-absorption gas analysis for scanned dual-output interferometer data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="synthesize scan pairs for a known mixture")
    _add_config_flags(p_sim)
    p_sim.add_argument("--seed", type=int, default=0)

    p_ana = sub.add_parser("analyze", help="retrieve concentrations from scan directories")
    _add_config_flags(p_ana)
    p_ana.add_argument("--scan-dir", default=None, help="default: <output_dir>/sample")
    p_ana.add_argument(
        "--reference-dir", default=None, help="default: <output_dir>/background"
    )

    p_cal = sub.add_parser("calibrate", help="fit (concentration, resolution) to a gas-cell spectrum")
    _add_config_flags(p_cal)
    p_cal.add_argument("measured_file", help="absorbance spectrum CSV")
    p_cal.add_argument("--initial-ppm", type=float, default=100.0)

    p_trk = sub.add_parser("track", help="time-resolved retrieval over a step directory tree")
    _add_config_flags(p_trk)
    p_trk.add_argument("series_dir", help="directory of <timestamp>/{sample,background} steps")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command == "simulate":
            return cmd_simulate(config, args.seed)
        if args.command == "analyze":
            scan_dir = args.scan_dir or os.path.join(config.output_dir, "sample")
            reference_dir = args.reference_dir or os.path.join(config.output_dir, "background")
            return cmd_analyze(config, scan_dir, reference_dir)
        if args.command == "calibrate":
            return cmd_calibrate(config, args.measured_file, args.initial_ppm)
        if args.command == "track":
            return cmd_track(config, args.series_dir)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoConvergence, DegenerateInitialGuess) as exc:
        print(f"fit did not converge: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
