#!/usr/bin/env python3
"""Regenerate the bundled synthetic cross-section fixtures (src/qftir/data).

These are analytic stand-ins with realistic magnitudes and band positions for
the 3.3 um C-H stretch region -- NOT spectroscopic reference data. Shapes:

  acetone / methanol / ethanol : sums of smooth Gaussian bands, tapered to
      zero outside ~[2805, 3055] cm^-1 so the analysis band fully contains
      their support.
  methane : a Lorentzian line comb (P/Q/R structure, HWHM 0.3 cm^-1) with the
      Q-branch peak pinned exactly at 3018.0 cm^-1 and peak cross-section
      6e-20 cm^2, tapered outside [2850, 3150].
  nitrogen : identically zero (inert filler; useful for degenerate-design
      tests).

Deterministic: running this script always reproduces the same files.
"""
from __future__ import annotations

import os

import numpy as np

GRID_START = 2600.0
GRID_STOP = 3200.0
GRID_STEP = 0.05

HEADER_TEMP_K = 293.15
HEADER_PRESS_TORR = 760.0


def _grid() -> np.ndarray:
    n = int(round((GRID_STOP - GRID_START) / GRID_STEP)) + 1
    return GRID_START + GRID_STEP * np.arange(n)


def _gauss(nu: np.ndarray, center: float, sigma: float, amp: float) -> np.ndarray:
    return amp * np.exp(-0.5 * ((nu - center) / sigma) ** 2)


def _taper(nu: np.ndarray, low: float, high: float, width: float) -> np.ndarray:
    """Cosine ramp from 0 at low-width/high+width to 1 at low/high."""
    up = 0.5 - 0.5 * np.cos(np.pi * np.clip((nu - (low - width)) / width, 0.0, 1.0))
    down = 0.5 - 0.5 * np.cos(np.pi * np.clip(((high + width) - nu) / width, 0.0, 1.0))
    return up * down


def acetone(nu: np.ndarray) -> np.ndarray:
    bands = (
        _gauss(nu, 2925.0, 14.0, 3.2e-20)
        + _gauss(nu, 2965.0, 9.0, 8.0e-20)
        + _gauss(nu, 3002.0, 7.0, 4.5e-20)
        + _gauss(nu, 2870.0, 12.0, 1.5e-20)
    )
    return bands * _taper(nu, 2820.0, 3040.0, 15.0)


def methanol(nu: np.ndarray) -> np.ndarray:
    bands = (
        _gauss(nu, 2844.0, 4.5, 9.0e-20)
        + _gauss(nu, 2960.0, 11.0, 5.0e-20)
        + _gauss(nu, 2999.0, 8.0, 3.5e-20)
        + _gauss(nu, 2920.0, 9.0, 2.0e-20)
    )
    return bands * _taper(nu, 2820.0, 3040.0, 15.0)


def ethanol(nu: np.ndarray) -> np.ndarray:
    bands = (
        _gauss(nu, 2900.0, 7.0, 3.0e-20)
        + _gauss(nu, 2940.0, 8.0, 3.2e-20)
        + _gauss(nu, 2974.0, 9.0, 3.5e-20)
        + _gauss(nu, 2885.0, 5.0, 2.2e-20)
    )
    return bands * _taper(nu, 2820.0, 3040.0, 15.0)


def methane(nu: np.ndarray) -> np.ndarray:
    gamma = 0.3
    center = 3018.0
    spacing = 9.4

    def lorentz(nu0: float, amp: float) -> np.ndarray:
        return amp * gamma**2 / ((nu - nu0) ** 2 + gamma**2)

    profile = lorentz(center, 1.0)
    for k in range(1, 12):
        amp = 0.38 * np.exp(-((k / 5.5) ** 2))
        profile += lorentz(center + spacing * k, amp)
        profile += lorentz(center - spacing * k, amp)
        # weak satellite structure between the main comb lines
        profile += lorentz(center + spacing * (k - 0.45), 0.12 * amp)
        profile += lorentz(center - spacing * (k - 0.45), 0.12 * amp)
    profile *= _taper(nu, 2850.0, 3150.0, 15.0)
    # pin the Q-branch maximum to exactly 6e-20 cm^2 at 3018.0
    i_center = int(round((center - GRID_START) / GRID_STEP))
    return profile * (6.0e-20 / profile[i_center])


def nitrogen(nu: np.ndarray) -> np.ndarray:
    return np.zeros_like(nu)


SPECIES = {
    "ACETONE": acetone,
    "METHANOL": methanol,
    "ETHANOL": ethanol,
    "METHANE": methane,
    "NITROGEN": nitrogen,
}


def write_xsc(path: str, molecule: str, nu: np.ndarray, sigma: np.ndarray) -> None:
    header = (
        f"{molecule} {GRID_START:.4f} {GRID_STOP:.4f} {nu.size} "
        f"{HEADER_TEMP_K:.2f} {HEADER_PRESS_TORR:.1f} {sigma.max():.6e} "
        f"0.05 synthetic-v1"
    )
    lines = [header]
    for i in range(0, sigma.size, 10):
        lines.append(" ".join(f"{v:.6e}" for v in sigma[i : i + 10]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def main() -> None:
    out_dir = os.path.join(os.path.dirname(__file__), "..", "src", "qftir", "data")
    out_dir = os.path.abspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    nu = _grid()
    for molecule, fn in SPECIES.items():
        sigma = fn(nu)
        path = os.path.join(out_dir, f"{molecule.lower()}.xsc")
        write_xsc(path, molecule, nu, sigma)
        print(f"wrote {path} (max {sigma.max():.3e} cm^2)")


if __name__ == "__main__":
    main()
