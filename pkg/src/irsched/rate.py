"""Achievable rate of the cascade link and the per-(UE, codeword, carrier) rate table."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .channel import ChannelSet
from .config import ScenarioConfig
from .irs import Codebook, IrsConfiguration, map_to_codebook, optimal_continuous_configs


def effective_vector(channels: ChannelSet, coeffs, ue: int, carrier: int) -> np.ndarray:
    """``A = G_k(f_i) diag(phi) H(f_i) w``, a length-N_U vector."""
    hw = channels.h_gi[carrier] @ channels.w_gnb
    return channels.g_ue[ue, carrier] @ (np.asarray(coeffs) * hw)


def rate_from_gain(gain2, sigma_s2: float, sigma_n2: float):
    return np.log2(1.0 + np.asarray(gain2) * sigma_s2 / sigma_n2)


def achievable_rate(channels: ChannelSet, config: IrsConfiguration, ue: int, carrier: int,
                    sigma_s2: float, sigma_n2: float) -> float:
    """Rate in bit/s/Hz with the UE combiner matched to the effective vector.

    The matched combiner ``conj(A)/||A||`` is the dominant singular vector of the
    rank-one effective channel, so ``|v^T A| = ||A||`` and the noise term is
    ``sigma_n2``. A zero effective channel yields 0.
    """
    if sigma_s2 <= 0 or sigma_n2 <= 0:
        raise ValueError("signal and noise powers must be positive")
    coeffs = config.coefficients if isinstance(config, IrsConfiguration) else np.asarray(config)
    a = effective_vector(channels, coeffs, ue, carrier)
    return float(rate_from_gain(np.vdot(a, a).real, sigma_s2, sigma_n2))


@dataclass(frozen=True)
class RateTable:
    """Rates ``r[k, c, i]`` for UE k, codeword c and carrier i.

    ``filled`` marks computed cells; unfilled cells hold 0. Projected tables also
    carry the continuous-optimum rate and the codeword it maps to per (k, i).
    """

    r: np.ndarray
    filled: np.ndarray
    continuous_rate: np.ndarray | None = None
    projected_idx: np.ndarray | None = None

    @property
    def shape(self):
        return self.r.shape

    @property
    def n_ue(self) -> int:
        return self.r.shape[0]

    @property
    def n_codewords(self) -> int:
        return self.r.shape[1]

    @property
    def n_carriers(self) -> int:
        return self.r.shape[2]

    @classmethod
    def from_array(cls, r) -> "RateTable":
        r = np.asarray(r, dtype=float)
        if r.ndim != 3:
            raise ValueError("rate table must be indexed [ue, codeword, carrier]")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise ValueError("rates must be finite and non-negative")
        return cls(r=r, filled=np.ones(r.shape, dtype=bool))

    def projected_rates(self) -> np.ndarray:
        """``r[k, projected_idx[k, i], i]`` per (k, i)."""
        if self.projected_idx is None:
            raise ValueError("table carries no projection")
        k, f = self.projected_idx.shape
        return self.r[np.arange(k)[:, None], self.projected_idx, np.arange(f)[None, :]]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ue", "codeword", "carrier", "rate"])
            for k, c, i in zip(*np.nonzero(self.filled)):
                w.writerow([int(k), int(c), int(i), repr(float(self.r[k, c, i]))])


def _gains_for(b: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    # b: (F, N_U, N_I) for one UE, coeffs: (C, N_I) -> squared gains (C, F)
    a = np.einsum("iun,cn->ciu", b, coeffs)
    return np.sum(np.abs(a) ** 2, axis=2)


def _check_dims(channels: ChannelSet, cb: Codebook, cfg: ScenarioConfig):
    if cb.n_irs != channels.n_irs:
        raise ValueError(f"codebook N_I={cb.n_irs} does not match channel N_I={channels.n_irs}")
    if channels.n_carriers != cfg.F:
        raise ValueError(f"channels have {channels.n_carriers} carriers, config has F={cfg.F}")


def build_rate_table(channels: ChannelSet, cb: Codebook, cfg: ScenarioConfig,
                     mode: str = "exhaustive", workers: int = 1) -> RateTable:
    """Rate table for every UE of ``channels``.

    ``exhaustive`` evaluates every codeword. ``projected`` computes the continuous
    optimum per (k, i), maps it onto the nearest codeword and fills only that cell.
    """
    _check_dims(channels, cb, cfg)
    k_count, n_c, f = channels.n_ue, len(cb), cfg.F
    s2, n2 = cfg.sigma_s2, cfg.sigma_n2
    b_all = channels.cascade_columns()

    if mode == "exhaustive":
        coeffs = cb.coefficients
        r = np.empty((k_count, n_c, f))

        def work(k):
            r[k] = rate_from_gain(_gains_for(b_all[k], coeffs), s2, n2)

        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                list(pool.map(work, range(k_count)))
        else:
            for k in range(k_count):
                work(k)
        return RateTable(r=r, filled=np.ones(r.shape, dtype=bool))

    if mode == "projected":
        theta, gain, deg = optimal_continuous_configs(channels)
        cont = rate_from_gain(gain**2, s2, n2)
        proj = np.zeros((k_count, f), dtype=np.int64)
        r = np.zeros((k_count, n_c, f))
        filled = np.zeros(r.shape, dtype=bool)
        coeffs = cb.coefficients
        for k in range(k_count):
            for i in range(f):
                c = 0 if deg[k, i] else map_to_codebook(theta[k, i], cb)
                proj[k, i] = c
                a = b_all[k, i] @ coeffs[c]
                r[k, c, i] = rate_from_gain(np.vdot(a, a).real, s2, n2)
                filled[k, c, i] = True
        return RateTable(r=r, filled=filled, continuous_rate=cont, projected_idx=proj)

    raise ValueError(f"unknown rate-table mode {mode!r}")


def fill_codewords(table: RateTable, channels: ChannelSet, cb: Codebook, cfg: ScenarioConfig,
                   codewords) -> RateTable:
    """Return a copy of ``table`` with every (k, i) cell of ``codewords`` computed."""
    _check_dims(channels, cb, cfg)
    cw = np.unique(np.asarray(codewords, dtype=np.int64))
    r = table.r.copy()
    filled = table.filled.copy()
    b_all = channels.cascade_columns()
    coeffs = cb.coefficients[cw]
    for k in range(channels.n_ue):
        r[k][cw] = rate_from_gain(_gains_for(b_all[k], coeffs), cfg.sigma_s2, cfg.sigma_n2)
    filled[:, cw, :] = True
    return replace(table, r=r, filled=filled)
