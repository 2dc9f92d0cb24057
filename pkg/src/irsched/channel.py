"""User drops and a clustered geometric mmWave channel for the cascade gNB -> IRS -> UE.

The gNB -> IRS hop is a single LOS path. Each IRS -> UE link carries an optional
LOS path (UMi LOS probability) plus ``n_nlos_clusters`` single-ray NLOS clusters.
There is no direct gNB -> UE term.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SPEED_OF_LIGHT, ScenarioConfig


class InvalidGeometryError(ValueError):
    """Two nodes of a link are co-located."""


def ula_steering(angle: float, n: int, spacing: float = 0.5) -> np.ndarray:
    """Unit-norm response of an ``n``-element ULA.

    Element ``m`` is ``exp(j 2 pi spacing m sin(angle)) / sqrt(n)``, with
    ``spacing`` in wavelengths and ``angle`` measured from broadside.
    """
    if n < 1:
        raise ValueError(f"array size must be >= 1, got {n}")
    m = np.arange(n)
    return np.exp(2j * np.pi * spacing * m * np.sin(angle)) / np.sqrt(n)


def los_probability(d) -> np.ndarray:
    """3GPP TR 38.901 UMi street-canyon LOS probability at 2-D distance ``d`` (m)."""
    d = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore"):
        far = 18.0 / d + np.exp(-d / 36.0) * (1.0 - 18.0 / d)
    return np.where(d <= 18.0, 1.0, far)


def pathloss_amplitude(d, exponent: float, wavelength: float) -> np.ndarray:
    """Linear amplitude gain of a log-distance model anchored at free space at 1 m."""
    d = np.maximum(np.asarray(d, dtype=float), 1.0)
    fspl_1m = (4 * np.pi / wavelength) ** 2
    return 1.0 / np.sqrt(fspl_1m * d**exponent)


@dataclass(frozen=True)
class UeDrop:
    positions: np.ndarray  # (K, 2)
    los: np.ndarray  # (K,) bool

    def __len__(self):
        return len(self.positions)


@dataclass(frozen=True)
class ChannelSet:
    """Channel matrices for one drop.

    h_gi : (F, N_I, N_g) gNB -> IRS, one matrix per carrier
    g_ue : (K, F, N_U, N_I) IRS -> UE
    w_gnb : (N_g,) unit-norm gNB beamformer
    """

    h_gi: np.ndarray
    g_ue: np.ndarray
    w_gnb: np.ndarray

    @property
    def n_ue(self) -> int:
        return self.g_ue.shape[0]

    @property
    def n_carriers(self) -> int:
        return self.h_gi.shape[0]

    @property
    def n_irs(self) -> int:
        return self.h_gi.shape[1]

    def irs_illumination(self) -> np.ndarray:
        """``H(f_i) w`` for every carrier, shape (F, N_I)."""
        return self.h_gi @ self.w_gnb

    def cascade_columns(self, ue=slice(None)) -> np.ndarray:
        """``G_k(f_i) diag(H(f_i) w)``: effective vector is this times the IRS coefficients."""
        return self.g_ue[ue] * self.irs_illumination()[..., None, :]


def drop_ues(cfg: ScenarioConfig, rng: np.random.Generator, count: int | None = None) -> UeDrop:
    """Uniform positions on the x >= 0 half-disc around the gNB, with LOS flags to the IRS."""
    n = cfg.K if count is None else count
    r = cfg.cell_radius_m * np.sqrt(rng.random(n))
    phi = rng.uniform(-np.pi / 2, np.pi / 2, n)
    pos = np.column_stack([r * np.cos(phi), r * np.sin(phi)]) + np.asarray(cfg.gnb_pos_m)
    d = np.linalg.norm(pos - np.asarray(cfg.irs_pos_m), axis=1)
    los = rng.random(n) < los_probability(d)
    return UeDrop(positions=pos, los=los)


def _angle(src, dst) -> float:
    dx, dy = np.subtract(dst, src)
    return float(np.arctan2(dy, dx))


def synthesize_channels(cfg: ScenarioConfig, drop: UeDrop, rng: np.random.Generator) -> ChannelSet:
    """Frequency-dependent channel matrices for every UE in ``drop`` at every carrier.

    Array responses use half-wavelength spacing at every carrier, so frequency
    enters only through per-path delays.
    """
    gnb = np.asarray(cfg.gnb_pos_m)
    irs = np.asarray(cfg.irs_pos_m)
    lam = cfg.wavelength_m
    freqs = np.asarray(cfg.carriers_hz)
    n_g, n_i, n_u = cfg.n_gnb, cfg.n_irs, cfg.n_ue

    d_gi = float(np.linalg.norm(irs - gnb))
    if d_gi < 1e-9:
        raise InvalidGeometryError("gNB and IRS are co-located")
    theta_dep = _angle(gnb, irs)
    theta_arr = _angle(irs, gnb)
    a_g = ula_steering(theta_dep, n_g)
    a_i = ula_steering(theta_arr, n_i)
    beta_h = pathloss_amplitude(d_gi, cfg.pl_exp_los, lam) * np.sqrt(n_i * n_g)
    h_phase = np.exp(-2j * np.pi * freqs * d_gi / SPEED_OF_LIGHT)
    h_gi = beta_h * h_phase[:, None, None] * np.outer(a_i, a_g.conj())[None]

    k_count = len(drop)
    g_ue = np.zeros((k_count, len(freqs), n_u, n_i), dtype=complex)
    scale = np.sqrt(n_u * n_i)
    n_cl = cfg.n_nlos_clusters
    for k in range(k_count):
        pos = drop.positions[k]
        d = float(np.linalg.norm(pos - irs))
        if d < 1e-9:
            raise InvalidGeometryError(f"UE {k} is co-located with the IRS")
        tau0 = d / SPEED_OF_LIGHT
        # UE array orientation is random; LOS arrival angle is relative to it
        ue_orient = rng.uniform(-np.pi, np.pi)
        if drop.los[k]:
            dep = _angle(irs, pos)
            arr = _angle(pos, irs) - ue_orient
            beta = pathloss_amplitude(d, cfg.pl_exp_los, lam)
            resp = np.outer(ula_steering(arr, n_u), ula_steering(dep, n_i).conj())
            g_ue[k] += (scale * beta * np.exp(-2j * np.pi * freqs * tau0))[:, None, None] * resp
        if n_cl:
            power = pathloss_amplitude(d, cfg.pl_exp_nlos, lam) ** 2 / n_cl
            gains = np.sqrt(power / 2) * (rng.standard_normal(n_cl) + 1j * rng.standard_normal(n_cl))
            deps = rng.uniform(-np.pi / 2, np.pi / 2, n_cl)
            arrs = rng.uniform(-np.pi / 2, np.pi / 2, n_cl)
            taus = tau0 + rng.uniform(0.0, cfg.max_excess_delay_s, n_cl)
            for p in range(n_cl):
                resp = np.outer(ula_steering(arrs[p], n_u), ula_steering(deps[p], n_i).conj())
                g_ue[k] += (scale * gains[p] * np.exp(-2j * np.pi * freqs * taus[p]))[:, None, None] * resp

    return ChannelSet(h_gi=h_gi, g_ue=g_ue, w_gnb=a_g)
