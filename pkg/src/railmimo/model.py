"""Geometry, LoS channels and the closed-form per-TA SINR/SE objective.

All quantities are deterministic functions of a ScenarioConfig and a
placement vector n = [n_1..n_L] (n_l in {1..N}).  The combining chain is:

    d_kl   = sqrt(|x_l - x_k|^2 + d_ve^2)          straight-line distance
    beta_kl = beta0 * (d_kl in km)^(-alpha)         large-scale gain
    h_kl   = sqrt(beta_kl) * exp(j 2pi/lambda d_kl) LoS channel
    w      = f*v*T/c                                Doppler offset (wavelengths)

w counts carrier cycles of Doppler rotation accumulated over one sample;
the equivalent LoS path-length change is w * lambda = v*T metres.  After
conjugate combining and CPU summation, the desired-signal and interference
terms for TA k under placement n are

    DS_k = sum_l sqrt(p_k) beta_kl exp(j 2pi/lambda cos(th_kl) (w lambda + n_l d_s))
    UI_i = sum_l sqrt(p_i) h*_kl h_il exp(j 2pi/lambda cos(th_il) (w lambda + n_l d_s))

and SINR_k = |DS_k|^2 / (sum_{i!=k} |UI_i|^2 + sigma^2 sum_l beta_kl),
SE_k = log2(1 + SINR_k).  The AoA cosine is held fixed while the antenna
slides (step size is negligible against d_kl).
"""

from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig


@dataclass
class Geometry:
    """AP/TA x-coordinates plus derived K x L distance and AoA-cosine grids."""

    ap_x: np.ndarray    # (L,) m
    ta_x: np.ndarray    # (K,) m
    dist: np.ndarray    # (K, L) m
    cos_aoa: np.ndarray  # (K, L) in [0, 1]


@dataclass
class ChannelSet:
    beta: np.ndarray    # (K, L) large-scale gain
    h: np.ndarray       # (K, L) complex LoS channel, |h|^2 == beta
    w_dfo: float        # normalized Doppler offset f*v*T/c, in wavelengths


@dataclass
class SEReport:
    """Per-TA powers and spectral efficiencies for one placement."""

    ds_power: np.ndarray    # (K,) |DS_k|^2, W
    ui_power: np.ndarray    # (K, K) |UI_i at combiner k|^2, zero diagonal, W
    noise_term: np.ndarray  # (K,) sigma^2 * sum_l beta_kl, W
    sinr: np.ndarray        # (K,)
    se: np.ndarray          # (K,) bit/s/Hz
    sum_se: float           # bit/s/Hz


def build_geometry(config: ScenarioConfig) -> Geometry:
    """Place APs along the railway and TAs along the train, then derive
    distances and AoA cosines.

    The default layout is deterministic equispaced midpoints:
    ap_x[l] = (l - 0.5) * railway_length / L and
    ta_x[k] = train_offset + (k - 0.5) * train_length / K.
    layout="uniform" draws seeded sorted uniform positions instead.
    """
    config.validate()
    L, K = config.num_aps, config.num_tas
    if config.layout == "midpoint":
        ap_x = (np.arange(1, L + 1) - 0.5) * config.railway_length / L
        ta_x = config.train_offset + (np.arange(1, K + 1) - 0.5) * config.train_length / K
    else:
        rng = np.random.default_rng(config.layout_seed)
        ap_x = np.sort(rng.uniform(0.0, config.railway_length, size=L))
        ta_x = np.sort(rng.uniform(config.train_offset,
                                   config.train_offset + config.train_length, size=K))
    d_ho = np.abs(ap_x[None, :] - ta_x[:, None])
    dist = np.sqrt(d_ho ** 2 + config.vertical_distance ** 2)
    cos_aoa = d_ho / dist
    return Geometry(ap_x=ap_x, ta_x=ta_x, dist=dist, cos_aoa=cos_aoa)


def build_channels(config: ScenarioConfig, geom: Geometry) -> ChannelSet:
    """LoS channel set for a fixed geometry.

    Path loss is evaluated with distances in kilometres (pathloss_ref is the
    gain at 1 km); phases use metres.
    """
    d_km = geom.dist / 1000.0
    beta = config.pathloss_ref * d_km ** (-config.pathloss_exp)
    phase = 2.0 * np.pi / config.wavelength * geom.dist
    h = np.sqrt(beta) * np.exp(1j * phase)
    return ChannelSet(beta=beta, h=h, w_dfo=config.doppler_displacement)


def validate_placement(config: ScenarioConfig, placement) -> np.ndarray:
    """Coerce to an int vector of length L with entries in {1..N}."""
    n = np.asarray(placement, dtype=np.int64)
    if n.shape != (config.num_aps,):
        raise ValueError(f"placement must have length {config.num_aps}, got shape {n.shape}")
    if np.any(n < 1) or np.any(n > config.num_positions):
        raise ValueError(f"placement entries must lie in [1, {config.num_positions}]")
    return n


def _combining_matrix(config: ScenarioConfig, geom: Geometry, ch: ChannelSet,
                      offsets: np.ndarray) -> np.ndarray:
    """M[k, i] = sum_l h*_kl h_il exp(j 2pi/lambda cos(th_il) (w lambda + offset_l)).

    ``offsets`` are the antenna displacements in metres (n_l * d_s for the
    discrete grid); the Doppler offset contributes w * lambda = v*T metres of
    path-length change.  Row k of M carries TA k's combiner: the diagonal is
    the desired-signal sum (without sqrt(p)), off-diagonals the interference
    sums.
    """
    doppler_m = ch.w_dfo * config.wavelength
    phase = (2.0 * np.pi / config.wavelength) * geom.cos_aoa * (doppler_m + offsets)[None, :]
    shifted = ch.h * np.exp(1j * phase)
    return np.conj(ch.h) @ shifted.T


def combined_signal_terms(config: ScenarioConfig, geom: Geometry, ch: ChannelSet,
                          placement, k: int):
    """Desired-signal and interference sums at TA k's combiner.

    Returns (DS_k, ui) where ui is a length-K complex vector holding UI_i for
    each interferer i != k and 0 at index k.
    """
    if not 0 <= k < config.num_tas:
        raise IndexError(f"TA index {k} out of range [0, {config.num_tas})")
    n = validate_placement(config, placement)
    offsets = n * config.position_step
    m = _combining_matrix(config, geom, ch, offsets)
    p = np.asarray(config.uplink_powers, dtype=float)
    ds = np.sqrt(p[k]) * m[k, k]
    ui = np.sqrt(p) * m[k, :]
    ui[k] = 0.0
    return ds, ui


def report_for_offsets(config: ScenarioConfig, geom: Geometry, ch: ChannelSet,
                       offsets: np.ndarray) -> SEReport:
    m = _combining_matrix(config, geom, ch, offsets)
    p = np.asarray(config.uplink_powers, dtype=float)
    ds_power = p * np.abs(np.diagonal(m)) ** 2
    ui_power = p[None, :] * np.abs(m) ** 2
    np.fill_diagonal(ui_power, 0.0)
    noise_term = config.noise_power * ch.beta.sum(axis=1)
    sinr = ds_power / (ui_power.sum(axis=1) + noise_term)
    se = np.log2(1.0 + sinr)
    return SEReport(ds_power=ds_power, ui_power=ui_power, noise_term=noise_term,
                    sinr=sinr, se=se, sum_se=float(se.sum()))


def sinr_and_se(config: ScenarioConfig, geom: Geometry, ch: ChannelSet,
                placement) -> SEReport:
    """Closed-form per-TA SINR/SE and the sum-SE objective for one placement."""
    n = validate_placement(config, placement)
    return report_for_offsets(config, geom, ch, n * config.position_step)


def sum_se_for_offsets(config: ScenarioConfig, geom: Geometry, ch: ChannelSet,
                       offsets) -> float:
    """Sum SE for arbitrary (continuous) antenna displacements in metres."""
    off = np.asarray(offsets, dtype=float)
    if off.shape != (config.num_aps,):
        raise ValueError(f"offsets must have length {config.num_aps}")
    return report_for_offsets(config, geom, ch, off).sum_se
