"""File ingestion and persistence: archive cross-section files, spectrum CSV,
and interferogram / retrieval-result JSON documents.

Parsing is total: any byte input yields either a value or a structured
ParseError subclass carrying the location; there are no partial states.
"""
from __future__ import annotations

import io as _stdio
import json
import os
from dataclasses import dataclass

import numpy as np
import pyarrow as pa
import pyarrow.csv as pacsv

from .core import GasSpecies, Spectrum, SpectrumKind, WavenumberGrid
from .errors import (
    MalformedHeader,
    MissingField,
    MultiRecordUnsupported,
    NegativeValue,
    NonUniformGrid,
    ParseError,
    PointCountMismatch,
    SchemaVersionMismatch,
)
from .interferometry import Interferogram, TimeSampledAxis, UniformPathAxis
from .retrieval import RetrievalResult

SCHEMA_VERSION = 1


# --- cross-section archive files --------------------------------------------

@dataclass(frozen=True)
class CrossSectionFileHeader:
    molecule: str
    nu_min: float
    nu_max: float
    n_points: int
    temperature: float
    pressure: float
    max_value: float
    resolution: str = ""
    source: str = ""

    @property
    def step(self) -> float:
        return (self.nu_max - self.nu_min) / (self.n_points - 1)


def parse_cross_section_file(data: bytes | str) -> GasSpecies:
    """Parse one archive-convention cross-section record.

    Header line: molecule, nu_min, nu_max, n_points, temperature (K),
    pressure (torr), max_value, then optional resolution and source tags kept
    as opaque text. Body: n_points non-negative reals, whitespace-separated
    (conventionally 10 per line); trailing blank lines are tolerated. Only
    single-record files are supported.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedHeader(f"not decodable as UTF-8: {exc}") from exc
    else:
        text = data
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise MalformedHeader("empty input")
    fields = lines[0].split()
    if len(fields) < 7:
        raise MalformedHeader(
            f"header has {len(fields)} fields, need at least 7 "
            "(molecule, nu_min, nu_max, n_points, temperature, pressure, max_value)"
        )
    molecule = fields[0]
    try:
        nu_min = float(fields[1])
        nu_max = float(fields[2])
        n_points = int(fields[3])
        temperature = float(fields[4])
        pressure = float(fields[5])
        max_value = float(fields[6])
    except ValueError as exc:
        raise MalformedHeader(f"bad numeric field in header: {exc}") from exc
    if not (np.isfinite(nu_min) and np.isfinite(nu_max)) or not nu_min < nu_max:
        raise MalformedHeader(f"need nu_min < nu_max, got {nu_min}, {nu_max}")
    if n_points < 2:
        raise MalformedHeader(f"n_points must be >= 2, got {n_points}")
    header = CrossSectionFileHeader(
        molecule=molecule,
        nu_min=nu_min,
        nu_max=nu_max,
        n_points=n_points,
        temperature=temperature,
        pressure=pressure,
        max_value=max_value,
        resolution=fields[7] if len(fields) > 7 else "",
        source=" ".join(fields[8:]) if len(fields) > 8 else "",
    )

    values = np.empty(n_points)
    count = 0
    for line_no, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        for tok in tokens:
            if count >= n_points:
                # more numbers (or a second header) after a complete body
                try:
                    float(tok)
                except ValueError:
                    raise MultiRecordUnsupported(
                        f"line {line_no}: unexpected token {tok!r} after "
                        f"{n_points} body values (multi-record files unsupported)"
                    ) from None
                raise PointCountMismatch(
                    f"line {line_no}: body exceeds header n_points = {n_points}"
                )
            try:
                value = float(tok)
            except ValueError as exc:
                raise ParseError(f"line {line_no}: bad number {tok!r}") from exc
            if not np.isfinite(value):
                raise ParseError(f"line {line_no}: non-finite value {tok!r}")
            if value < 0:
                raise NegativeValue(f"line {line_no}: negative cross-section {value!r}")
            values[count] = value
            count += 1
    if count != n_points:
        raise PointCountMismatch(f"body has {count} values, header says {n_points}")
    grid = WavenumberGrid(start=nu_min, step=header.step, count=n_points)
    spectrum = Spectrum(grid, values, SpectrumKind.CROSS_SECTION)
    return GasSpecies(
        name=molecule.lower(), cross_section=spectrum, metadata={"header": header}
    )


def load_cross_section(path: str | os.PathLike) -> GasSpecies:
    with open(path, "rb") as fh:
        return parse_cross_section_file(fh.read())


# --- spectrum CSV ------------------------------------------------------------

_CSV_MAGIC = "# qftir-spectrum"


def write_spectrum_csv(
    spectrum: Spectrum, path: str | os.PathLike, extra: dict[str, str] | None = None
) -> None:
    """Two-column CSV with an exact-grid header line.

    The header carries kind/start/step/count with full precision (the
    wavenumber column is informational), so read(write(s)) reproduces the
    spectrum exactly. Masked (NaN) points are not representable. ``extra``
    adds provenance key=value tokens to the header line (no whitespace in
    either); readers ignore keys they do not know.
    """
    if np.isnan(spectrum.values).any():
        raise ValueError("masked (NaN) points are not representable in spectrum CSV")
    g = spectrum.grid
    header = (
        f"{_CSV_MAGIC} v{SCHEMA_VERSION} kind={spectrum.kind.value} "
        f"start={g.start!r} step={g.step!r} count={g.count}"
    )
    for key, value in (extra or {}).items():
        token = f"{key}={value}"
        if any(ch.isspace() for ch in token):
            raise ValueError(f"extra header token contains whitespace: {token!r}")
        header += " " + token
    header += "\n"
    table = pa.table(
        {"wavenumber_cm-1": g.points(), "value": spectrum.values}
    )
    buf = _stdio.BytesIO()
    pacsv.write_csv(table, buf)
    with open(path, "wb") as fh:
        fh.write(header.encode())
        fh.write(buf.getvalue())


def read_spectrum_csv(path: str | os.PathLike) -> Spectrum:
    with open(path, "rb") as fh:
        head = fh.readline().decode("utf-8", errors="replace").strip()
        rest = fh.read()
    if not head.startswith(_CSV_MAGIC):
        raise ParseError(f"line 1: expected {_CSV_MAGIC!r} header, got {head[:40]!r}")
    meta = {}
    for tok in head[len(_CSV_MAGIC):].split():
        if "=" in tok:
            key, _, val = tok.partition("=")
            meta[key] = val
    for key in ("kind", "start", "step", "count"):
        if key not in meta:
            raise ParseError(f"line 1: header missing {key}=")
    try:
        kind = SpectrumKind(meta["kind"])
        grid = WavenumberGrid(float(meta["start"]), float(meta["step"]), int(meta["count"]))
    except ValueError as exc:
        raise ParseError(f"line 1: {exc}") from exc
    try:
        table = pacsv.read_csv(pa.BufferReader(rest))
    except pa.ArrowInvalid as exc:
        raise ParseError(str(exc)) from exc
    if table.num_columns < 2:
        raise ParseError("need two columns (wavenumber, value)")
    nu = np.asarray(table.column(0).to_numpy(zero_copy_only=False), dtype=float)
    vals = np.asarray(table.column(1).to_numpy(zero_copy_only=False), dtype=float)
    if nu.size != grid.count:
        raise ParseError(f"{nu.size} rows, header count says {grid.count}")
    bad = np.nonzero(~np.isfinite(vals) | ~np.isfinite(nu))[0]
    if bad.size:
        # +3: one header line, one column-name line, 1-indexing
        raise ParseError(f"line {int(bad[0]) + 3}: non-finite row")
    dev = np.max(np.abs(nu - grid.points()))
    if dev > 1e-6 * grid.step:
        raise NonUniformGrid(
            f"wavenumber column deviates from the header grid by {dev:.3e}"
        )
    return Spectrum(grid, vals, kind)


# --- interferogram JSON -------------------------------------------------------

def _require(doc: dict, key: str):
    if key not in doc:
        raise MissingField(f"missing field {key!r}")
    return doc[key]


def _check_schema(doc: dict, expected_type: str) -> None:
    version = _require(doc, "schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"schema_version {version}, supported {SCHEMA_VERSION}")
    if _require(doc, "type") != expected_type:
        raise ParseError(f"document type {doc.get('type')!r}, expected {expected_type!r}")


def interferogram_to_doc(ig: Interferogram, provenance: dict | None = None) -> dict:
    if isinstance(ig.axis, TimeSampledAxis):
        axis = {
            "kind": "time",
            "sampling_rate": ig.axis.sampling_rate,
            "scan_speed": ig.axis.scan_speed,
        }
    else:
        axis = {"kind": "path", "step": ig.axis.step}
    return {
        "schema_version": SCHEMA_VERSION,
        "type": "interferogram",
        "scan_length": ig.scan_length,
        "axis": axis,
        "samples": ig.samples.tolist(),
        "provenance": provenance or {},
    }


def interferogram_from_doc(doc: dict) -> Interferogram:
    _check_schema(doc, "interferogram")
    axis_doc = _require(doc, "axis")
    kind = _require(axis_doc, "kind")
    if kind == "time":
        axis = TimeSampledAxis(
            float(_require(axis_doc, "sampling_rate")),
            float(_require(axis_doc, "scan_speed")),
        )
    elif kind == "path":
        axis = UniformPathAxis(float(_require(axis_doc, "step")))
    else:
        raise ParseError(f"unknown axis kind {kind!r}")
    samples = np.asarray(_require(doc, "samples"), dtype=float)
    return Interferogram(samples, axis, float(_require(doc, "scan_length")))


def write_interferogram(ig: Interferogram, path: str | os.PathLike, provenance: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(interferogram_to_doc(ig, provenance), fh)


def read_interferogram(path: str | os.PathLike) -> Interferogram:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a JSON object")
    return interferogram_from_doc(doc)


# --- retrieval-result JSON ----------------------------------------------------

def retrieval_result_to_doc(result: RetrievalResult, provenance: dict | None = None) -> dict:
    res = result.residual
    return {
        "schema_version": SCHEMA_VERSION,
        "type": "retrieval_result",
        "species_order": list(result.concentrations),
        "concentrations": result.concentrations,
        "snr": result.snr,
        "detection_limits": result.detection_limits,
        "noise_std": result.noise_std,
        "covariance": np.asarray(result.covariance).tolist(),
        "residual": {
            "kind": res.kind.value,
            "start": res.grid.start,
            "step": res.grid.step,
            "count": res.grid.count,
            "values": res.values.tolist(),
        },
        "provenance": provenance or {},
    }


def retrieval_result_from_doc(doc: dict) -> RetrievalResult:
    _check_schema(doc, "retrieval_result")
    res_doc = _require(doc, "residual")
    grid = WavenumberGrid(
        float(_require(res_doc, "start")),
        float(_require(res_doc, "step")),
        int(_require(res_doc, "count")),
    )
    residual = Spectrum(
        grid,
        np.asarray(_require(res_doc, "values"), dtype=float),
        SpectrumKind(_require(res_doc, "kind")),
    )
    return RetrievalResult(
        concentrations={k: float(v) for k, v in _require(doc, "concentrations").items()},
        covariance=np.asarray(_require(doc, "covariance"), dtype=float),
        residual=residual,
        noise_std=float(_require(doc, "noise_std")),
        snr={k: float(v) for k, v in _require(doc, "snr").items()},
        detection_limits={k: float(v) for k, v in _require(doc, "detection_limits").items()},
    )


def write_retrieval_result(result: RetrievalResult, path: str | os.PathLike, provenance: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(retrieval_result_to_doc(result, provenance), fh, indent=2)


def read_retrieval_result(path: str | os.PathLike) -> RetrievalResult:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a JSON object")
    return retrieval_result_from_doc(doc)
