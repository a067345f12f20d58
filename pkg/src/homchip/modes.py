"""Guided-mode bookkeeping for the two-path, two-polarization circuit.

The chip guides four modes: two waveguide paths (upper carries the
segmented-converter branch, lower the direct branch) times two
polarizations.  On the z-cut substrate the horizontal (in-plane, TE)
field sees the ordinary index and the vertical (TM) field the
extraordinary index; H is therefore the slow axis in the telecom band.
"""

from enum import Enum


class Polarization(str, Enum):
    H = "H"
    V = "V"


class Path(str, Enum):
    UPPER = "upper"
    LOWER = "lower"


# Fixed basis order used by every 4x4 mode matrix and by the two-photon
# amplitude tensors.
MODE_ORDER = (
    (Path.UPPER, Polarization.H),
    (Path.UPPER, Polarization.V),
    (Path.LOWER, Polarization.H),
    (Path.LOWER, Polarization.V),
)

N_MODES = len(MODE_ORDER)


def mode_index(path: Path, pol: Polarization) -> int:
    return MODE_ORDER.index((Path(path), Polarization(pol)))
