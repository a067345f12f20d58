"""Two-photon state engine for the interference chip.

The pair state is kept as a complex tensor A[m1, m2, k]: photon 1 in
guided mode m1 at omega0 + Omega_k, photon 2 in mode m2 at
omega0 - Omega_k.  The tensor is slot-ordered (the type-II source
populates exactly one ordering); physical exchange symmetry is applied
at detection, where the amplitude A[r, s](Omega) is combined with its
partner A[s, r](-Omega) before squaring.

Elements act sample-by-sample:

    A'[a, b](Omega) = sum_pq U(omega0+Omega)[a,p] U(omega0-Omega)[b,q] A[p,q](Omega)

and every lossless element keeps the midpoint-rule norm
sum |A|^2 dOmega = 1.  Detection uses polarization-insensitive bucket
detectors, one per output path, both behind the same spectral filter;
this minimal projector set stands in for the unspecified general
measurement description.  Wavelength-flat losses are excluded here (they
cancel in normalized quantities) and live in the rate budget instead.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import chip as chip_mod
from . import dispersion
from . import elements as el
from .grid import SpectralGrid
from .modes import N_MODES, Path, Polarization, mode_index

OUT_UPPER = (mode_index(Path.UPPER, Polarization.H), mode_index(Path.UPPER, Polarization.V))
OUT_LOWER = (mode_index(Path.LOWER, Polarization.H), mode_index(Path.LOWER, Polarization.V))


class GridCoverageError(ValueError):
    """Spectral grid too narrow for the requested source state."""


@dataclass(frozen=True)
class TwoPhotonAmplitude:
    grid: SpectralGrid
    values: np.ndarray  # (4, 4, N) complex

    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.d_omega)


@dataclass(frozen=True)
class ElementTransfer:
    """Mode matrix per frequency sample, evaluated at omega0 + Omega_k."""

    label: str
    matrices: np.ndarray  # (N, 4, 4) complex


@dataclass(frozen=True)
class ScanPoint:
    setting: chip_mod.SwitchSetting
    delay_ps: float
    raw: float
    normalized: float | None = None

    @property
    def label(self) -> str:
        return self.setting.label


# ---------------------------------------------------------------------------
# element -> transfer sampling


def identity_transfer(grid: SpectralGrid, label="identity") -> ElementTransfer:
    mats = np.broadcast_to(np.eye(N_MODES, dtype=complex), (grid.samples, N_MODES, N_MODES))
    return ElementTransfer(label, np.array(mats))


def jones_transfer(
    grid: SpectralGrid, jones: np.ndarray, paths=(Path.UPPER,), label="jones"
) -> ElementTransfer:
    """Embed a (possibly per-sample) 2x2 (H, V) matrix on the given paths."""
    jones = np.asarray(jones, dtype=complex)
    if jones.ndim == 2:
        jones = np.broadcast_to(jones, (grid.samples, 2, 2))
    if jones.shape != (grid.samples, 2, 2):
        raise ValueError(f"jones block has shape {jones.shape}")
    mats = np.tile(np.eye(N_MODES, dtype=complex), (grid.samples, 1, 1))
    for path in paths:
        idx = [mode_index(path, Polarization.H), mode_index(path, Polarization.V)]
        for i in range(2):
            for j in range(2):
                mats[:, idx[i], idx[j]] = jones[:, i, j]
    return ElementTransfer(label, mats)


def path_transfer(grid: SpectralGrid, coupler: np.ndarray, label="coupler") -> ElementTransfer:
    """Embed a 2x2 (upper, lower) path matrix, identical for both polarizations."""
    coupler = np.asarray(coupler, dtype=complex)
    mats = np.zeros((grid.samples, N_MODES, N_MODES), dtype=complex)
    for pol in (Polarization.H, Polarization.V):
        idx = [mode_index(Path.UPPER, pol), mode_index(Path.LOWER, pol)]
        for i in range(2):
            for j in range(2):
                mats[:, idx[i], idx[j]] = coupler[i, j]
    return ElementTransfer(label, mats)


def mode_matrix_transfer(grid: SpectralGrid, matrix: np.ndarray, label) -> ElementTransfer:
    mats = np.broadcast_to(np.asarray(matrix, dtype=complex), (grid.samples, N_MODES, N_MODES))
    return ElementTransfer(label, np.array(mats))


def propagation_element(
    grid: SpectralGrid,
    length_mm: float,
    model=None,
    paths=(Path.UPPER, Path.LOWER),
    label=None,
) -> ElementTransfer:
    """Birefringent propagation phases over a waveguide section."""
    label = label or f"propagation {length_mm:g} mm"
    mats = np.zeros((grid.samples, N_MODES, N_MODES), dtype=complex)
    diag = np.ones((grid.samples, N_MODES), dtype=complex)
    for pol in (Polarization.H, Polarization.V):
        phase = el.propagation_transfer(pol, length_mm, grid, model)
        for path in paths:
            diag[:, mode_index(path, pol)] = phase
    k = np.arange(N_MODES)
    mats[:, k, k] = diag
    return ElementTransfer(label, mats)


# ---------------------------------------------------------------------------
# state construction and evolution


def build_source_state(
    pm: el.PmSpec,
    grid: SpectralGrid,
    model=None,
    temperature_c: float | None = None,
    min_lobes: float = 3.0,
) -> TwoPhotonAmplitude:
    """Type-II pair state at the source-section midpoint, unit norm."""
    res = el.pdc_amplitude(pm, grid, temperature_c=temperature_c, model=model)
    if res.lobe_coverage < min_lobes:
        raise GridCoverageError(
            f"grid covers {res.lobe_coverage:.2f} phase-matching lobes; "
            f"need at least {min_lobes:g}"
        )
    values = np.zeros((N_MODES, N_MODES, grid.samples), dtype=complex)
    i_h = mode_index(Path.UPPER, Polarization.H)
    i_v = mode_index(Path.UPPER, Polarization.V)
    values[i_h, i_v, :] = res.values
    return TwoPhotonAmplitude(grid=grid, values=values)


def apply_element(state: TwoPhotonAmplitude, transfer: ElementTransfer) -> TwoPhotonAmplitude:
    """Push the pair state through one element (photon 1 at omega0+Omega,
    photon 2 at omega0-Omega; the flipped sample axis supplies the latter)."""
    mats = transfer.matrices
    if mats.shape != (state.grid.samples, N_MODES, N_MODES):
        raise ValueError(
            f"transfer {transfer.label!r} sampled on {mats.shape[0]} points, "
            f"state grid has {state.grid.samples}"
        )
    u_minus = mats[::-1]
    new = np.einsum("kap,kbq,pqk->abk", mats, u_minus, state.values, optimize=True)
    return TwoPhotonAmplitude(grid=state.grid, values=new)


def chain_transfers(
    layout: chip_mod.ChipLayout,
    setting: chip_mod.SwitchSetting,
    pm: el.PmSpec,
    grid: SpectralGrid,
    model=None,
    temperature_c: float | None = None,
    pbs_extinction_db: float = math.inf,
    pc_conversion_db: float | None = None,
    bs: el.BsSpec | None = None,
    flat_converters: bool = False,
) -> list:
    """Ordered element transfers from the source midpoint to the outputs.

    Each converter region is modeled as half its birefringent
    propagation, the midpoint-lumped coupled-mode matrix, then the other
    half, which reproduces the exact solution and places the effective
    polarization swap at the element midpoint, matching the delay
    schedule.

    flat_converters=True idealizes the converters as frequency
    independent (perfect phase matching at every wavelength), the
    reference case in which the interference dip reaches zero; the
    default keeps their real conversion bandwidth.
    """
    if setting.triple_index is None:
        raise chip_mod.LayoutError(
            "no active triple: no interference configuration", key="triple_index"
        )
    chip_mod.validate_setting(layout, setting)
    model = model or dispersion.default_model()
    t = pm.reference_temperature_c if temperature_c is None else temperature_c

    pc0 = el.PcSpec(length_mm=layout.pc0_length_mm, temperature_c=t)
    pc0 = (
        pc0.with_drive_efficiency(setting.pc0_efficiency)
        if setting.pc0_on
        else replace(pc0, voltage_v=0.0)
    )
    triple = el.PcSpec(length_mm=3.0 * layout.segment_length_mm, temperature_c=t)
    if pc_conversion_db is not None:
        triple = triple.with_conversion_db(pc_conversion_db)

    if bs is None:
        bs = el.ideal_bs()
        bs = replace(bs, u11_v=setting.bs_voltages[0], u12_v=setting.bs_voltages[1])

    lam_plus = grid.wavelength_plus_nm

    def converter_block(pc):
        if flat_converters:
            return el.pc_flat_matrix(pc)
        return el.pc_chain_matrix(pc, lam_plus, model, pm)

    m = setting.triple_index
    seg = layout.segment_length_mm
    half_pc0 = layout.pc0_length_mm / 2.0
    z_mid = (m + 0.5) * seg  # triple midpoint, from the splitter exit
    transfers = [
        propagation_element(grid, layout.pdc_length_mm / 2.0, model, label="source second half"),
        propagation_element(grid, half_pc0, model, label="first converter, front half"),
        jones_transfer(grid, converter_block(pc0), label="first converter"),
        propagation_element(grid, half_pc0, model, label="first converter, back half"),
        propagation_element(grid, layout.pbs_length_mm, model, label="splitter region"),
        mode_matrix_transfer(grid, el.pbs_transfer(pbs_extinction_db), label="polarizing splitter"),
        propagation_element(grid, z_mid, model, label="segments up to triple midpoint"),
        jones_transfer(grid, converter_block(triple), label=f"triple {m}"),
        propagation_element(
            grid, layout.segment_count * seg - z_mid, model, label="remaining segments"
        ),
    ]
    if layout.branch_length_mismatch_mm:
        transfers.append(
            propagation_element(
                grid,
                layout.branch_length_mismatch_mm,
                model,
                paths=(Path.UPPER,),
                label="branch mismatch",
            )
        )
    transfers.append(
        propagation_element(grid, layout.bs_block_length_mm, model, label="output block")
    )
    transfers.append(path_transfer(grid, el.bs_transfer(bs), label="balanced splitter"))
    return transfers


def run_chain(
    layout: chip_mod.ChipLayout,
    setting: chip_mod.SwitchSetting,
    pm: el.PmSpec,
    grid: SpectralGrid,
    **chain_kwargs,
) -> TwoPhotonAmplitude:
    """Evolve the source state through the full circuit in chip order."""
    model = chain_kwargs.get("model") or dispersion.default_model()
    chain_kwargs["model"] = model
    state = build_source_state(
        pm, grid, model=model, temperature_c=chain_kwargs.get("temperature_c")
    )
    for transfer in chain_transfers(layout, setting, pm, grid, **chain_kwargs):
        state = apply_element(state, transfer)
    return state


# ---------------------------------------------------------------------------
# detection


def _filter_tuple(filters) -> tuple:
    if filters is None:
        return ()
    if isinstance(filters, el.FilterSpec):
        return (filters,)
    return tuple(filters)


def _filter_weight(grid: SpectralGrid, filters) -> np.ndarray:
    f_plus = np.ones(grid.samples, dtype=complex)
    for flt in _filter_tuple(filters):
        f_plus = f_plus * el.filter_amplitude(flt, grid.wavelength_plus_nm)
    f_minus = grid.flip(f_plus)
    return np.abs(f_plus * f_minus) ** 2


def coincidence_probability(state: TwoPhotonAmplitude, filters=None) -> float:
    """Probability of one photon in each output path.

    Both detectors are polarization-insensitive and sit behind the same
    filter chain.  The exchange-symmetrized amplitude
    A[r,s](Omega) + A[s,r](-Omega) interferes both assignments of the
    photons to the detectors.
    """
    a = state.values
    c = a + grid_flip_swap(a)
    weight = _filter_weight(state.grid, filters)
    block = c[np.ix_(OUT_UPPER, OUT_LOWER)]
    p = np.sum(np.abs(block) ** 2 * weight) * state.grid.d_omega
    return float(p)


def grid_flip_swap(values: np.ndarray) -> np.ndarray:
    """Exchange partner A[s, r](-Omega) of a slot-ordered amplitude."""
    return values.transpose(1, 0, 2)[:, :, ::-1]


# ---------------------------------------------------------------------------
# scans


def hom_scan(
    layout: chip_mod.ChipLayout,
    settings,
    pm: el.PmSpec,
    grid: SpectralGrid,
    filters=None,
    **chain_kwargs,
) -> list:
    """Raw coincidence versus switch setting, with the schedule delays."""
    model = chain_kwargs.get("model") or dispersion.default_model()
    chain_kwargs["model"] = model
    points = []
    for setting in settings:
        state = run_chain(layout, setting, pm, grid, **chain_kwargs)
        raw = coincidence_probability(state, filters)
        delay = chip_mod.delay_schedule(layout, setting, model)
        points.append(ScanPoint(setting=setting, delay_ps=delay, raw=raw))
    return points


def reference_mask_longest_off_delay(points) -> list:
    """Default normalization reference: the largest-delay setting of the
    undriven-first-converter branch."""
    off_triples = [p.setting.triple_index for p in points if not p.setting.pc0_on]
    if not off_triples:
        return [False] * len(points)
    m_ref = max(off_triples)
    return [
        (not p.setting.pc0_on) and p.setting.triple_index == m_ref for p in points
    ]


def normalize_scan(points, reference_rule=None) -> list:
    """Divide raw coincidences by the mean over the reference settings."""
    rule = reference_rule or reference_mask_longest_off_delay
    mask = rule(points)
    ref = [p.raw for p, keep in zip(points, mask) if keep]
    if not ref:
        raise ValueError("empty reference set; cannot define unit probability")
    mean = sum(ref) / len(ref)
    if mean <= 0:
        raise ValueError("reference coincidence level is zero")
    return [replace(p, normalized=p.raw / mean) for p in points]


def visibility(points) -> float:
    """1 - min(normalized): interference depth against unit probability."""
    values = [p.normalized for p in points]
    if any(v is None for v in values):
        raise ValueError("scan is not normalized")
    return 1.0 - min(values)


# ---------------------------------------------------------------------------
# continuous dip profiles


def dip_profile(
    pm: el.PmSpec,
    grid: SpectralGrid,
    filters,
    taus_ps,
    photon1_envelopes=(),
    photon2_envelopes=(),
    model=None,
    temperature_c: float | None = None,
) -> np.ndarray:
    """Coincidence probability versus a continuous relative delay.

    Bypasses the segmented geometry: the joint spectrum is the source
    amplitude times per-photon spectral envelopes and the detection
    filters, an explicit relative delay phase exp(i Omega tau) is
    applied between the photons, and the pair meets an ideal balanced
    splitter:

        P(tau) = 1/2 * (1 - Re K(tau) / K(0)),
        K(tau) = integral A(Omega) A*(-Omega) exp(i Omega tau) dOmega.

    The delay axis is the interference-kernel delay: a geometric
    arrival-time difference dt from the delay schedule corresponds to
    tau = 2 dt, because the exchanged amplitudes beat at twice the
    detuning.  The unfiltered profile is the triangle
    1/2 * min(1, |tau| / tau_w) with tau_w = dng * L / c.
    """
    model = model or dispersion.default_model()
    res = el.pdc_amplitude(pm, grid, temperature_c=temperature_c, model=model)
    a = res.values.astype(complex)
    lam_plus = grid.wavelength_plus_nm
    lam_minus = grid.wavelength_minus_nm
    for env in photon1_envelopes:
        a = a * np.asarray(env(lam_plus), dtype=complex)
    for env in photon2_envelopes:
        a = a * np.asarray(env(lam_minus), dtype=complex)
    for flt in _filter_tuple(filters):
        a = a * el.filter_amplitude(flt, lam_plus) * el.filter_amplitude(flt, lam_minus)

    g = a * np.conj(grid.flip(a))
    k0 = np.sum(np.abs(a) ** 2) * grid.d_omega
    if k0 <= 0:
        raise ValueError("joint spectrum vanishes; nothing passes the filters")
    taus_s = np.asarray(taus_ps, dtype=float) * 1e-12
    kernel = np.exp(1j * np.outer(taus_s, grid.detunings))
    k_tau = kernel @ g * grid.d_omega
    return 0.5 * (1.0 - np.real(k_tau) / k0)


def dip_scenarios(
    pm: el.PmSpec,
    grid: SpectralGrid,
    taus_ps,
    layout: chip_mod.ChipLayout | None = None,
    model=None,
    temperature_c: float | None = None,
    pc0_efficiency: float = 1.0,
    rect_width_nm: float = 2.3,
    lorentz_width_nm: float = 1.2,
    unfiltered_grid: SpectralGrid | None = None,
) -> dict:
    """The four canonical dip profiles (source only; rectangular filter;
    segmented-converter envelope with the fiber filter, first converter
    off; both converter envelopes with the fiber filter, first converter
    on).

    The unfiltered curve integrates the bare phase-matching spectrum,
    whose slow tails need a much wider grid than the filtered cases;
    pass unfiltered_grid to control that window separately.
    """
    layout = layout or chip_mod.ChipLayout()
    model = model or dispersion.default_model()
    t = pm.reference_temperature_c if temperature_c is None else temperature_c
    center = grid.center_wavelength_nm
    rect = el.FilterSpec("rectangular", center, rect_width_nm)
    lorentz = el.FilterSpec("lorentzian", center, lorentz_width_nm)

    triple = el.PcSpec(length_mm=3.0 * layout.segment_length_mm, temperature_c=t)
    pc0 = el.PcSpec(length_mm=layout.pc0_length_mm, temperature_c=t).with_drive_efficiency(
        pc0_efficiency
    )

    def conv(pc):
        return lambda lam: el.pc_conversion_amplitude(pc, lam, model, pm)

    common = dict(pm=pm, grid=grid, taus_ps=taus_ps, model=model, temperature_c=t)
    wide = dict(common, grid=unfiltered_grid or grid)
    return {
        "unfiltered": dip_profile(filters=None, **wide),
        "rectangular": dip_profile(filters=rect, **common),
        "segmented_lorentz_pc0_off": dip_profile(
            filters=lorentz, photon1_envelopes=(conv(triple),), **common
        ),
        "two_converters_lorentz_pc0_on": dip_profile(
            filters=lorentz,
            photon1_envelopes=(conv(pc0), conv(triple)),
            photon2_envelopes=(conv(pc0),),
            **common,
        ),
    }
