"""Simulator for an integrated electro-optic two-photon interference chip.

Compiles a declarative chip layout into a chain of frequency-resolved
mode transforms, evolves a type-II photon-pair state through them, and
computes delay schedules, coincidence probabilities, interference-dip
profiles, visibilities, phase-matching curves, dispersion quantities,
and count-rate budgets for the tunable birefringent delay-line circuit.
"""

from .chip import (
    ChipConfig,
    ChipLayout,
    LayoutError,
    SwitchSetting,
    delay_schedule,
    enumerate_settings,
    parse_layout,
    valid_triples,
)
from .dispersion import (
    DispersionModel,
    WavelengthRangeError,
    calibrate,
    converter_gdd,
    default_model,
    group_index,
    group_index_difference,
    parse_coefficient_file,
    raw_group_index_difference,
    refractive_index,
    spectral_phase_taylor,
    walk_off_time,
)
from .elements import (
    BsSpec,
    FilterSpec,
    PcSpec,
    PmSpec,
    bs_transfer,
    calibrate_bs,
    filter_amplitude,
    ideal_bs,
    pbs_transfer,
    pc_transfer,
    pc_transmission_spectrum,
    pdc_amplitude,
    pm_center_vs_temperature,
    propagation_transfer,
    shg_spectrum,
)
from .grid import SpectralGrid
from .modes import Path, Polarization
from .quantum import (
    ElementTransfer,
    GridCoverageError,
    ScanPoint,
    TwoPhotonAmplitude,
    apply_element,
    build_source_state,
    coincidence_probability,
    dip_profile,
    dip_scenarios,
    hom_scan,
    normalize_scan,
    run_chain,
    visibility,
)
from .rates import (
    LossBudget,
    SourceSpec,
    default_loss_budget,
    expected_rates,
    klyshko_efficiency,
    reconciliation_note,
    total_loss,
)

__version__ = "0.1.0"
