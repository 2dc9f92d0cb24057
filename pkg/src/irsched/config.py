"""Scenario parameters for one simulation run.

All physical defaults follow the 28 GHz UMi deployment (gNB at the origin,
IRS at (75, 100) m, 167 m cell radius). Combinatorial defaults follow the
full-scale setting; :meth:`ScenarioConfig.desk` gives the small profile used
by the test-suite and demos.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

SCHEMA_VERSION = 1
SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class GaParams:
    population: int = 30
    generations: int = 100
    mutation_rate: float = 0.3
    elitism: int = 2

    def __post_init__(self):
        if self.population < 1:
            raise ValueError("GA population must be >= 1")
        if self.generations < 0:
            raise ValueError("GA generations must be >= 0")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("GA mutation_rate must lie in [0, 1]")
        if not 1 <= self.elitism <= self.population:
            raise ValueError("GA elitism must lie in [1, population]")


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical and combinatorial parameters of a run.

    ``m_training`` defaults to ``10 * K`` when left as ``None``.
    """

    K: int = 90
    F: int = 5
    Z: int = 9
    n_gnb: int = 32
    n_ue: int = 4
    irs_rows: int = 20
    irs_cols: int = 40
    b_irs: int = 1
    b_codebook: int = 14
    carrier_hz: float = 28e9
    band_hz: float = 20e6
    tx_power_dbm: float = 33.0
    noise_psd_dbm_hz: float = -174.0
    cell_radius_m: float = 167.0
    gnb_pos_m: tuple[float, float] = (0.0, 0.0)
    irs_pos_m: tuple[float, float] = (75.0, 100.0)
    m_training: int | None = None
    n_drops: int = 50
    seed: int = 0
    n_nlos_clusters: int = 4
    pl_exp_los: float = 2.0
    pl_exp_nlos: float = 3.2
    max_excess_delay_s: float = 200e-9
    ga: GaParams = field(default_factory=GaParams)

    def __post_init__(self):
        # normalise JSON-decoded containers
        object.__setattr__(self, "gnb_pos_m", tuple(float(v) for v in self.gnb_pos_m))
        object.__setattr__(self, "irs_pos_m", tuple(float(v) for v in self.irs_pos_m))
        if isinstance(self.ga, dict):
            object.__setattr__(self, "ga", GaParams(**self.ga))
        if self.m_training is None:
            object.__setattr__(self, "m_training", 10 * self.K)

        for name in ("K", "F", "Z", "n_gnb", "n_ue", "irs_rows", "irs_cols", "b_irs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.K % self.F:
            raise ValueError(f"K={self.K} must be an integer multiple of F={self.F}")
        if not 1 <= self.Z <= self.K // self.F:
            raise ValueError(f"Z={self.Z} must lie in [1, K/F={self.K // self.F}]")
        if not 0 <= self.b_codebook <= self.b_irs * self.n_irs:
            raise ValueError(
                f"b_codebook={self.b_codebook} must lie in [0, b_irs*N_I={self.b_irs * self.n_irs}]"
            )
        if self.m_training < 10 * self.K:
            raise ValueError(f"m_training={self.m_training} must be >= 10*K={10 * self.K}")
        if self.n_drops < 1:
            raise ValueError("n_drops must be >= 1")
        if self.n_nlos_clusters < 0:
            raise ValueError("n_nlos_clusters must be >= 0")
        if self.band_hz <= 0 or self.carrier_hz <= 0 or self.cell_radius_m <= 0:
            raise ValueError("carrier_hz, band_hz and cell_radius_m must be positive")

    @property
    def n_irs(self) -> int:
        return self.irs_rows * self.irs_cols

    @property
    def slots(self) -> int:
        """Time slots per frame, K/F."""
        return self.K // self.F

    @property
    def codebook_size(self) -> int:
        return 2**self.b_codebook

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def carriers_hz(self) -> list[float]:
        """Centres of F equal sub-bands spanning ``carrier_hz +- band_hz/2``."""
        sub = self.band_hz / self.F
        lo = self.carrier_hz - self.band_hz / 2
        return [lo + (i + 0.5) * sub for i in range(self.F)]

    @property
    def sigma_s2(self) -> float:
        """Per-RB transmit power in watts (total power split evenly over F)."""
        return 10 ** ((self.tx_power_dbm - 30) / 10) / self.F

    @property
    def sigma_n2(self) -> float:
        """Per-RB noise power in watts."""
        return 10 ** ((self.noise_psd_dbm_hz - 30) / 10) * self.band_hz / self.F

    @property
    def control_reduction(self) -> float:
        """Fraction ZF/K of control bits kept when only Z reconfigurations are allowed."""
        return self.Z * self.F / self.K

    def replace(self, **changes) -> "ScenarioConfig":
        if "irs_shape" in changes:
            rows, cols = parse_irs_shape(changes.pop("irs_shape"))
            changes.update(irs_rows=rows, irs_cols=cols)
        if "K" in changes and "m_training" not in changes and self.m_training == 10 * self.K:
            changes["m_training"] = None
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["gnb_pos_m"] = list(self.gnb_pos_m)
        d["irs_pos_m"] = list(self.irs_pos_m)
        d["schema_version"] = SCHEMA_VERSION
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        data = dict(data)
        version = data.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported config schema_version {version}")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def from_json(cls, path: str | Path) -> "ScenarioConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @classmethod
    def desk(cls, **overrides) -> "ScenarioConfig":
        """Small profile: K=30, F=3, 8x8 IRS, N_g=8, N_U=2, b_q=6, 50 drops."""
        base = dict(K=30, F=3, Z=5, n_gnb=8, n_ue=2, irs_rows=8, irs_cols=8,
                    b_irs=1, b_codebook=6, n_drops=50)
        base.update(overrides)
        return cls(**base)


def parse_irs_shape(value) -> tuple[int, int]:
    """Accept ``"8x8"`` or a ``(rows, cols)`` pair."""
    if isinstance(value, str):
        rows, cols = value.lower().split("x")
        return int(rows), int(cols)
    rows, cols = value
    return int(rows), int(cols)


def log2_exact(n: int) -> int:
    b = int(round(math.log2(n))) if n > 0 else -1
    if b < 0 or 2**b != n:
        raise ValueError(f"{n} is not a power of two")
    return b
