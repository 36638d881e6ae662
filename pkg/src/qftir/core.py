"""Core spectral data types: uniform wavenumber grids, spectra, species, mixtures.

All types are immutable after construction and safe to share between threads;
the operations here are pure functions.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyInput,
    ExtrapolationRequired,
    GridMismatch,
    NonOverlappingGrids,
    NonUniformGrid,
)

BOLTZMANN_J_PER_K = 1.380649e-23  # exact SI value

#: Species names used throughout the source material. The set is advisory:
#: any non-empty identifier is accepted (archive files carry their own tags).
KNOWN_SPECIES = frozenset({"methane", "acetone", "methanol", "ethanol", "nitrogen"})


class SpectrumKind(str, enum.Enum):
    INTENSITY = "intensity"
    TRANSMISSION = "transmission"
    ABSORBANCE = "absorbance"
    CROSS_SECTION = "cross_section"


@dataclass(frozen=True)
class WavenumberGrid:
    """Uniform wavenumber axis: point(i) = start + i*step, 0 <= i < count."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not (np.isfinite(self.start) and np.isfinite(self.step)):
            raise ValueError("grid start/step must be finite")
        if self.start < 0:
            raise ValueError(f"wavenumbers are non-negative, start = {self.start}")
        if self.step <= 0:
            raise ValueError(f"grid step must be > 0, got {self.step}")
        if self.count < 2:
            raise ValueError(f"grid needs >= 2 points, got {self.count}")

    @property
    def end(self) -> float:
        return self.start + self.step * (self.count - 1)

    def point(self, i: int) -> float:
        return self.start + i * self.step

    def points(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    def index_range(self, low: float, high: float) -> tuple[int, int]:
        """Half-open index range [i0, i1) of points with low <= point <= high."""
        i0 = int(np.ceil((low - self.start) / self.step - 1e-9))
        i1 = int(np.floor((high - self.start) / self.step + 1e-9)) + 1
        return max(i0, 0), min(i1, self.count)

    @classmethod
    def from_points(cls, points: np.ndarray, rel_tol: float = 1e-6) -> "WavenumberGrid":
        """Build from an explicit array, validating uniformity.

        Raises NonUniformGrid if any spacing deviates from the mean step by
        more than rel_tol * step.
        """
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise NonUniformGrid("need a 1-D array of >= 2 points")
        diffs = np.diff(pts)
        step = (pts[-1] - pts[0]) / (pts.size - 1)
        if step <= 0 or not np.all(np.isfinite(diffs)):
            raise NonUniformGrid("points must be finite and strictly increasing")
        dev = np.max(np.abs(diffs - step))
        if dev > rel_tol * step:
            raise NonUniformGrid(
                f"grid spacing deviates by {dev:.3e} (> {rel_tol:g} * step {step:.6g})"
            )
        return cls(start=float(pts[0]), step=float(step), count=int(pts.size))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Values on a uniform wavenumber grid, tagged with a physical kind.

    NaN values act as masked points (excluded from downstream fits); infinities
    are rejected. Range semantics of each kind (transmission in (0, 1], etc.)
    are enforced by the operations that produce spectra, not here, because
    instrument-view operations legitimately produce signed values.
    """

    grid: WavenumberGrid
    values: np.ndarray
    kind: SpectrumKind

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.ndim != 1:
            raise ValueError("spectrum values must be 1-D")
        if vals.size != self.grid.count:
            raise ValueError(
                f"values length {vals.size} != grid count {self.grid.count}"
            )
        if np.isinf(vals).any():
            raise ValueError("spectrum values must not contain infinities")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "kind", SpectrumKind(self.kind))

    def with_values(self, values: np.ndarray, kind: SpectrumKind | None = None) -> "Spectrum":
        return Spectrum(self.grid, values, kind if kind is not None else self.kind)

    def restrict(self, low: float, high: float) -> "Spectrum":
        """Sub-spectrum on grid points with low <= nu <= high."""
        i0, i1 = self.grid.index_range(low, high)
        if i1 - i0 < 2:
            raise NonOverlappingGrids(f"band [{low}, {high}] has < 2 grid points")
        sub = WavenumberGrid(self.grid.point(i0), self.grid.step, i1 - i0)
        return Spectrum(sub, self.values[i0:i1], self.kind)

    @property
    def mask(self) -> np.ndarray:
        """Boolean array, True where the point is masked (NaN)."""
        return np.isnan(self.values)


@dataclass(frozen=True)
class GasSpecies:
    """A gas with its absorption cross-section (cm^2 / molecule)."""

    name: str
    cross_section: Spectrum
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.name or not self.name.strip():
            raise ValueError("species name must be non-empty")
        if self.cross_section.kind is not SpectrumKind.CROSS_SECTION:
            raise ValueError("cross_section must have kind CROSS_SECTION")
        v = self.cross_section.values
        if np.isnan(v).any() or (v < 0).any():
            raise ValueError("cross-section values must be finite and >= 0")


@dataclass(frozen=True)
class GasMixture:
    """Species concentrations (ppm by volume) at given ambient conditions.

    Concentrations are kept signed here (retrievals can legitimately estimate
    negative values); forward simulation rejects negatives at the point of use.
    Defaults: 1 bar, 20 degC.
    """

    components: tuple[tuple[str, float], ...]
    temperature: float = 293.15
    pressure: float = 1e5

    def __post_init__(self):
        comps = tuple((str(n), float(c)) for n, c in self.components)
        names = [n for n, _ in comps]
        if len(set(names)) != len(names):
            raise ValueError("species names must be unique within a mixture")
        if self.temperature <= 0 or self.pressure <= 0:
            raise ValueError("temperature and pressure must be > 0")
        object.__setattr__(self, "components", comps)

    def concentration(self, name: str) -> float:
        for n, c in self.components:
            if n == name:
                return c
        return 0.0


def number_density(temperature: float, pressure: float) -> float:
    """Ideal-gas number density in molecules / cm^3 (n = P / kB T)."""
    if temperature <= 0 or pressure <= 0:
        raise ValueError("temperature and pressure must be > 0")
    return pressure / (BOLTZMANN_J_PER_K * temperature) / 1e6


def resample(spectrum: Spectrum, target: WavenumberGrid) -> Spectrum:
    """Linear interpolation of a spectrum onto a new uniform grid.

    Target points outside the source range are filled with 0 for cross
    sections and absorbances; for intensity/transmission spectra such points
    raise ExtrapolationRequired (zero is not a neutral fill there).
    """
    src = spectrum.grid
    if target.start > src.end or target.end < src.start:
        raise NonOverlappingGrids(
            f"target [{target.start}, {target.end}] does not overlap "
            f"source [{src.start}, {src.end}]"
        )
    x = target.points()
    outside = (x < src.start) | (x > src.end)
    if outside.any() and spectrum.kind in (SpectrumKind.INTENSITY, SpectrumKind.TRANSMISSION):
        raise ExtrapolationRequired(
            f"{int(outside.sum())} target points fall outside the source grid "
            f"for kind {spectrum.kind.value}"
        )
    vals = np.interp(x, src.points(), spectrum.values, left=0.0, right=0.0)
    return Spectrum(target, vals, spectrum.kind)


def average_spectra(spectra: list[Spectrum]) -> Spectrum:
    """Pointwise arithmetic mean of spectra sharing one grid and kind."""
    if not spectra:
        raise EmptyInput("no spectra to average")
    first = spectra[0]
    for s in spectra[1:]:
        if s.grid != first.grid:
            raise GridMismatch("spectra must share one grid")
        if s.kind is not first.kind:
            raise GridMismatch("spectra must share one kind")
    mean = np.mean([s.values for s in spectra], axis=0)
    return Spectrum(first.grid, mean, first.kind)
