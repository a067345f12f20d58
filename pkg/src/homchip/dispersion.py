"""Material dispersion of the birefringent waveguide chip.

Refractive indices come from a Sellmeier expansion of congruent LiNbO3
(default coefficient set: Zelmon et al. 1997, shipped as a data file so
waveguide-measured dispersion can be substituted).  On the z-cut
substrate the horizontal polarization maps to the ordinary axis and the
vertical polarization to the extraordinary axis.

Group indices are n_g = n - lambda * dn/dlambda with the derivative
taken by a 0.1 nm central difference, plus a constant per-polarization
calibration offset.  The offsets are chosen so that the group-index
difference at 1551.7 nm equals the measured 0.0805 exactly; all timing
quantities of the delay line derive from that number.  The uncalibrated
(raw Sellmeier) difference remains available so the calibration residual
can be reported rather than hidden.

Sign conventions, fixed and asserted throughout the package:
  * dng = n_gH - n_gV > 0  (H is the slow axis; V-polarized photons run
    ahead of H-polarized ones).
  * A positive walk-off time means the H photon arrives later.
"""

from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.constants import c as C_VACUUM

from .modes import Polarization

#: Measured group-index difference at the calibration wavelength.
DEFAULT_GROUP_INDEX_DIFFERENCE = 0.0805
CALIBRATION_WAVELENGTH_NM = 1551.7

#: Central-difference step for dn/dlambda, in nm.
FD_STEP_NM = 0.1


class WavelengthRangeError(ValueError):
    """Wavelength outside the validity range of the coefficient set."""


@dataclass(frozen=True)
class DispersionModel:
    """Sellmeier coefficients plus group-index calibration offsets.

    Coefficient tuples are flat (B1, C1, B2, C2, ...) pairs of the
    standard n^2 = 1 + sum B*l^2/(l^2 - C) expansion, lambda in um.
    """

    sellmeier_ordinary: tuple
    sellmeier_extraordinary: tuple
    ng_offset_h: float = 0.0
    ng_offset_v: float = 0.0
    reference_temperature_c: float = 43.6
    valid_range_um: tuple = (0.5, 5.0)

    def __post_init__(self):
        for name in ("sellmeier_ordinary", "sellmeier_extraordinary"):
            coeffs = getattr(self, name)
            if len(coeffs) == 0 or len(coeffs) % 2 != 0:
                raise ValueError(f"{name} must hold (B, C) pairs")
        lo, hi = self.valid_range_um
        if not 0 < lo < hi:
            raise ValueError("valid_range_um must be an increasing positive pair")


def _sellmeier_n(coeffs, wavelength_um):
    lam2 = np.asarray(wavelength_um, dtype=float) ** 2
    n2 = 1.0 + sum(
        coeffs[i] * lam2 / (lam2 - coeffs[i + 1]) for i in range(0, len(coeffs), 2)
    )
    return np.sqrt(n2)


def _check_range(model: DispersionModel, wavelength_nm, margin_nm=0.0):
    lam_um = np.asarray(wavelength_nm, dtype=float) * 1e-3
    lo, hi = model.valid_range_um
    lo += margin_nm * 1e-3
    hi -= margin_nm * 1e-3
    if np.any(lam_um < lo) or np.any(lam_um > hi):
        raise WavelengthRangeError(
            f"wavelength {np.min(wavelength_nm):.6g}-{np.max(wavelength_nm):.6g} nm "
            f"outside coefficient validity {lo * 1e3:.6g}-{hi * 1e3:.6g} nm"
        )


def refractive_index(model: DispersionModel, pol, wavelength_nm):
    """Phase index n(lambda) for one polarization; wavelength in nm."""
    _check_range(model, wavelength_nm)
    coeffs = (
        model.sellmeier_ordinary
        if Polarization(pol) is Polarization.H
        else model.sellmeier_extraordinary
    )
    return _sellmeier_n(coeffs, np.asarray(wavelength_nm, dtype=float) * 1e-3)


def group_index(model: DispersionModel, pol, wavelength_nm):
    """Group index n_g = n - lambda dn/dlambda plus the calibration offset."""
    _check_range(model, wavelength_nm, margin_nm=FD_STEP_NM)
    lam = np.asarray(wavelength_nm, dtype=float)
    n = refractive_index(model, pol, lam)
    dn = (
        refractive_index(model, pol, lam + FD_STEP_NM)
        - refractive_index(model, pol, lam - FD_STEP_NM)
    ) / (2.0 * FD_STEP_NM)
    offset = (
        model.ng_offset_h if Polarization(pol) is Polarization.H else model.ng_offset_v
    )
    return n - lam * dn + offset


def group_index_difference(model: DispersionModel, wavelength_nm):
    """dng = n_gH - n_gV (calibrated); positive in the telecom band."""
    return group_index(model, Polarization.H, wavelength_nm) - group_index(
        model, Polarization.V, wavelength_nm
    )


def raw_group_index_difference(model: DispersionModel, wavelength_nm):
    """Group-index difference of the bare Sellmeier set, offsets ignored."""
    bare = replace(model, ng_offset_h=0.0, ng_offset_v=0.0)
    return group_index_difference(bare, wavelength_nm)


def calibrate(
    model: DispersionModel,
    wavelength_nm: float = CALIBRATION_WAVELENGTH_NM,
    target_difference: float = DEFAULT_GROUP_INDEX_DIFFERENCE,
) -> DispersionModel:
    """Set the offsets so group_index_difference(wavelength) == target.

    The correction is split evenly between the two polarizations and is
    computed from the raw Sellmeier difference, so calibrating twice
    gives identical offsets.  The absorbed residual is
    target - raw_group_index_difference(...); report it, don't hide it.
    """
    residual = target_difference - float(raw_group_index_difference(model, wavelength_nm))
    return replace(model, ng_offset_h=+residual / 2.0, ng_offset_v=-residual / 2.0)


def walk_off_time(model: DispersionModel, length_mm, wavelength_nm=CALIBRATION_WAVELENGTH_NM):
    """Birefringent walk-off dng * L / c in ps; positive = H arrives later."""
    length_mm = np.asarray(length_mm, dtype=float)
    if np.any(length_mm < 0):
        raise ValueError("length_mm must be >= 0")
    dng = group_index_difference(model, wavelength_nm)
    return dng * (length_mm * 1e-3) / C_VACUUM * 1e12


def spectral_phase_taylor(model, pol_pair, length_mm, center_wavelength_nm, order):
    """Taylor coefficients of the inter-polarization spectral phase.

    The phase is Phi(omega) = (beta_a - beta_b) * L / 2 for
    pol_pair = (a, b).  Returns [Phi0, Phi1, Phi2][: order + 1] with
    mixed engineering units: Phi0 in rad, Phi1 in ps, Phi2 in fs^2.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"unsupported Taylor order {order!r}; expected 0, 1 or 2")
    pol_a, pol_b = (Polarization(p) for p in pol_pair)
    length_m = float(length_mm) * 1e-3
    lam_m = center_wavelength_nm * 1e-9

    n_a = float(refractive_index(model, pol_a, center_wavelength_nm))
    n_b = float(refractive_index(model, pol_b, center_wavelength_nm))
    phi0 = np.pi * (n_a - n_b) * length_m / lam_m
    coeffs = [phi0]

    if order >= 1:
        ng_a = float(group_index(model, pol_a, center_wavelength_nm))
        ng_b = float(group_index(model, pol_b, center_wavelength_nm))
        coeffs.append(length_m * (ng_a - ng_b) / (2.0 * C_VACUUM) * 1e12)

    if order >= 2:
        coeffs.append(
            _gdd_fs2(model, pol_a, pol_b, length_mm, center_wavelength_nm)
        )
    return coeffs


def _group_index_slope(model, pol, wavelength_nm):
    """dn_g/dlambda in 1/m, central difference with the documented step."""
    h = FD_STEP_NM
    hi = group_index(model, pol, wavelength_nm + h)
    lo = group_index(model, pol, wavelength_nm - h)
    return (hi - lo) / (2.0 * h * 1e-9)


def _gdd_fs2(model, pol_a, pol_b, length_mm, wavelength_nm):
    lam_m = wavelength_nm * 1e-9
    length_m = float(length_mm) * 1e-3
    slope_diff = _group_index_slope(model, pol_a, wavelength_nm) - _group_index_slope(
        model, pol_b, wavelength_nm
    )
    gdd_s2 = -(lam_m**2) * length_m / (4.0 * np.pi * C_VACUUM**2) * slope_diff
    return gdd_s2 * 1e30


def converter_gdd(model: DispersionModel, length_mm, wavelength_nm=1550.0):
    """Group-delay dispersion of the polarization converter, in fs^2.

    Curvature of the converter's inter-polarization phase, ordered
    vertical minus horizontal; negative (about -45 fs^2 for 7.5 mm at
    1550 nm with the default set) and negligible on the chip scale.
    """
    if float(length_mm) <= 0:
        raise ValueError("length_mm must be > 0")
    return _gdd_fs2(model, Polarization.V, Polarization.H, length_mm, wavelength_nm)


def parse_coefficient_file(text: str) -> DispersionModel:
    """Parse the plain-text coefficient format (see the shipped data file).

    Keys: sellmeier_o, sellmeier_e (comma-separated reals, (B, C) pairs),
    ng_offset_h, ng_offset_v.  '#' starts a comment.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, _, rhs = line.partition("=")
        key = key.strip()
        if key in ("sellmeier_o", "sellmeier_e"):
            try:
                values[key] = tuple(float(tok) for tok in rhs.split(","))
            except ValueError as exc:
                raise ValueError(f"line {lineno}: bad coefficient list") from exc
        elif key in ("ng_offset_h", "ng_offset_v"):
            try:
                values[key] = float(rhs)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: bad number for {key}") from exc
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    for required in ("sellmeier_o", "sellmeier_e"):
        if required not in values:
            raise ValueError(f"missing key {required!r}")
    return DispersionModel(
        sellmeier_ordinary=values["sellmeier_o"],
        sellmeier_extraordinary=values["sellmeier_e"],
        ng_offset_h=values.get("ng_offset_h", 0.0),
        ng_offset_v=values.get("ng_offset_v", 0.0),
    )


def load_coefficient_file(path) -> DispersionModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_coefficient_file(fh.read())


@lru_cache(maxsize=1)
def default_model() -> DispersionModel:
    """Shipped congruent-LiNbO3 set, calibrated to dng(1551.7 nm) = 0.0805."""
    text = (
        resources.files("homchip").joinpath("data/linbo3_sellmeier.txt").read_text()
    )
    return calibrate(parse_coefficient_file(text))
