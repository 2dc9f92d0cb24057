"""IRS configurations, phase quantization and cell-specific codebook design."""
from __future__ import annotations

import heapq
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .channel import ChannelSet, drop_ues, synthesize_channels
from .config import ScenarioConfig, log2_exact

log = logging.getLogger(__name__)

TWO_PI = 2 * np.pi


class InsufficientTrainingDataError(ValueError):
    pass


@dataclass(frozen=True)
class IrsConfiguration:
    """Quantized per-element phase indices; element n reflects with ``exp(j 2 pi idx_n / 2**bits)``."""

    phase_idx: np.ndarray
    bits: int

    def __post_init__(self):
        idx = np.asarray(self.phase_idx, dtype=np.int64)
        if idx.ndim != 1:
            raise ValueError("phase_idx must be one-dimensional")
        if np.any(idx < 0) or np.any(idx >= 2**self.bits):
            raise ValueError(f"phase indices must lie in [0, {2**self.bits})")
        object.__setattr__(self, "phase_idx", idx)

    @property
    def phases(self) -> np.ndarray:
        return TWO_PI * self.phase_idx / 2**self.bits

    @property
    def coefficients(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    def __len__(self):
        return len(self.phase_idx)

    def __eq__(self, other):
        if not isinstance(other, IrsConfiguration):
            return NotImplemented
        return self.bits == other.bits and np.array_equal(self.phase_idx, other.phase_idx)

    def __hash__(self):
        return hash((self.bits, self.phase_idx.tobytes()))


@dataclass(frozen=True)
class Codebook:
    """``2**b_q`` distinct configurations, stored as an (n, N_I) index array."""

    indices: np.ndarray
    b_irs: int

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64)
        if idx.ndim != 2 or len(idx) == 0:
            raise ValueError("codebook must hold at least one entry")
        log2_exact(len(idx))
        if np.any(idx < 0) or np.any(idx >= 2**self.b_irs):
            raise ValueError("codebook phase index out of range")
        if len(np.unique(idx, axis=0)) != len(idx):
            raise ValueError("codebook entries must be pairwise distinct")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def __getitem__(self, c) -> IrsConfiguration:
        return IrsConfiguration(self.indices[c], self.b_irs)

    @property
    def b_q(self) -> int:
        return log2_exact(len(self.indices))

    @property
    def n_irs(self) -> int:
        return self.indices.shape[1]

    @property
    def entries(self) -> list[IrsConfiguration]:
        return [self[c] for c in range(len(self))]

    @property
    def phases(self) -> np.ndarray:
        return TWO_PI * self.indices / 2**self.b_irs

    @property
    def coefficients(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    def to_dict(self) -> dict:
        return {"b_q": self.b_q, "b_irs": self.b_irs, "n_irs": self.n_irs,
                "entries": self.indices.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Codebook":
        cb = cls(np.asarray(data["entries"], dtype=np.int64).reshape(-1, data["n_irs"]), data["b_irs"])
        if cb.b_q != data["b_q"]:
            raise ValueError(f"codebook declares b_q={data['b_q']} but holds {len(cb)} entries")
        return cb

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Codebook":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @classmethod
    def full_grid(cls, n_irs: int, b_irs: int) -> "Codebook":
        """Every one of the ``2**(b_irs*n_irs)`` phase vectors (tiny panels only)."""
        grids = np.meshgrid(*[np.arange(2**b_irs)] * n_irs, indexing="ij")
        return cls(np.stack([g.ravel() for g in grids], axis=1), b_irs)


def _as_phases(x) -> np.ndarray:
    if isinstance(x, IrsConfiguration):
        return x.phases
    return np.asarray(x, dtype=float)


def phase_deviation(a, b) -> np.ndarray:
    """Element-wise circular deviation in [0, pi]; broadcasts."""
    diff = np.abs(np.asarray(a) - np.asarray(b)) % TWO_PI
    return np.minimum(diff, TWO_PI - diff)


def circular_distance(a, b) -> float:
    """Sum of squared per-element circular deviations between two phase vectors.

    Accepts :class:`IrsConfiguration` objects or raw phase arrays.
    """
    pa, pb = _as_phases(a), _as_phases(b)
    if pa.shape != pb.shape:
        raise ValueError(f"length mismatch: {pa.shape} vs {pb.shape}")
    return float(np.sum(phase_deviation(pa, pb) ** 2))


def quantize_config(theta, b_irs: int) -> IrsConfiguration:
    """Nearest ``b_irs``-bit grid point per element (circular); ties go to the lower index."""
    return IrsConfiguration(quantize_indices(theta, b_irs), b_irs)


def quantize_indices(theta, b_irs: int) -> np.ndarray:
    """Array form of :func:`quantize_config`; works on any shape."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("phases must be finite")
    levels = 2**b_irs
    x = np.mod(theta, TWO_PI) / (TWO_PI / levels)
    lo = np.floor(x).astype(np.int64)
    frac = x - lo
    lo %= levels
    hi = (lo + 1) % levels
    return np.where(frac < 0.5, lo, np.where(frac > 0.5, hi, np.minimum(lo, hi)))


class ContinuousOptimum(NamedTuple):
    phases: np.ndarray
    gain: float
    degenerate: bool


def _alternating_phases(b: np.ndarray, tol=1e-6, max_iter=50):
    """Maximise ``||b @ exp(j theta)||`` for a batch of (P, N_U, N_I) column matrices.

    Alternates the per-element phase alignment against a unit combiner ``u`` and the
    matched combiner update ``u = A/||A||``. Returns phases (P, N_I), gains (P,), and a
    degenerate mask (P,) for all-zero inputs.
    """
    p_count = b.shape[0]
    col_norm = np.linalg.norm(b, axis=1)  # (P, N_I)
    degenerate = ~np.any(col_norm > 0, axis=1)

    a0 = b.sum(axis=2)
    u = a0.copy()
    weak = np.linalg.norm(u, axis=1) <= 1e-12 * np.maximum(col_norm.max(axis=1), 1e-300)
    if np.any(weak & ~degenerate):
        # zero-phase start cancels out; start from the strongest column instead
        best = col_norm.argmax(axis=1)
        u[weak] = b[weak, :, best[weak]]
    u = _unit_canonical(u)

    theta = np.zeros((p_count, b.shape[2]))
    gain = np.zeros(p_count)
    active = ~degenerate
    for _ in range(max_iter):
        if not active.any():
            break
        proj = np.einsum("pu,pun->pn", u[active].conj(), b[active])
        theta[active] = -np.angle(proj)
        a = np.einsum("pun,pn->pu", b[active], np.exp(1j * theta[active]))
        new_gain = np.linalg.norm(a, axis=1)
        old_gain = gain[active]
        u[active] = _unit_canonical(a)
        gain[active] = new_gain
        done = (new_gain - old_gain) <= tol * new_gain
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    theta[degenerate] = 0.0
    return theta, gain, degenerate


def _unit_canonical(u: np.ndarray) -> np.ndarray:
    """Normalise rows to unit norm with the first non-negligible entry real positive."""
    norm = np.linalg.norm(u, axis=1, keepdims=True)
    out = np.divide(u, norm, out=np.zeros_like(u), where=norm > 0)
    lead = np.argmax(np.abs(out) > 1e-12, axis=1)
    ref = out[np.arange(len(out)), lead]
    rot = np.exp(-1j * np.angle(ref))
    return out * rot[:, None]


def optimal_continuous_config(channels: ChannelSet, ue: int, carrier: int) -> ContinuousOptimum:
    """Continuous IRS phases maximising ``||G_k(f_i) diag(e^{j theta}) H(f_i) w||``."""
    b = channels.cascade_columns(ue)[carrier][None]
    theta, gain, deg = _alternating_phases(b)
    return ContinuousOptimum(theta[0], float(gain[0]), bool(deg[0]))


def optimal_continuous_configs(channels: ChannelSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched version over every (UE, carrier): phases (K, F, N_I), gains (K, F), degenerate (K, F)."""
    b = channels.cascade_columns()
    k, f, n_u, n_i = b.shape
    theta, gain, deg = _alternating_phases(b.reshape(k * f, n_u, n_i))
    return theta.reshape(k, f, n_i), gain.reshape(k, f), deg.reshape(k, f)


def map_to_codebook(theta, cb: Codebook) -> int:
    """Index of the entry closest to ``theta`` in circular distance; ties to the lowest index."""
    if cb is None or len(cb) == 0:
        raise ValueError("empty codebook")
    theta = _as_phases(theta)
    if theta.shape != (cb.n_irs,):
        raise ValueError(f"phase vector length {theta.shape} does not match codebook N_I={cb.n_irs}")
    d = np.sum(phase_deviation(cb.phases, theta) ** 2, axis=1)
    return int(np.argmin(d))


# ---------------------------------------------------------------- k-means


def _pairwise_sqdev(points: np.ndarray, centroids: np.ndarray, chunk: int = 512) -> np.ndarray:
    out = np.empty((len(points), len(centroids)))
    for s in range(0, len(points), chunk):
        out[s:s + chunk] = np.sum(phase_deviation(points[s:s + chunk, None, :], centroids[None]) ** 2, axis=2)
    return out


def _kmeanspp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centroids = [points[rng.integers(len(points))]]
    d2 = _pairwise_sqdev(points, centroids[0][None])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            i = rng.integers(len(points))
        else:
            i = rng.choice(len(points), p=d2 / total)
        centroids.append(points[i])
        d2 = np.minimum(d2, _pairwise_sqdev(points, points[i][None])[:, 0])
    return np.array(centroids)


@dataclass
class KMeansResult:
    centroids: np.ndarray  # (k, N_I) continuous phases
    labels: np.ndarray
    objective: list[float]  # one value per completed iteration, starting with the seeding


def kmeans_circular(points, k: int, rng: np.random.Generator, max_iter=100, tol=1e-6) -> KMeansResult:
    """k-means on phase vectors under :func:`circular_distance`.

    Centroids are per-element circular means (argument of the summed unit phasors).
    An element's circular mean is only accepted when it does not raise that element's
    squared-deviation sum, which keeps the objective non-increasing.
    """
    points = np.mod(np.asarray(points, dtype=float), TWO_PI)
    if len(points) < k:
        raise InsufficientTrainingDataError(f"{len(points)} training points for k={k}")
    centroids = _kmeanspp(points, k, rng)
    d = _pairwise_sqdev(points, centroids)
    labels = d.argmin(axis=1)
    history = [float(d[np.arange(len(points)), labels].sum())]
    phasors = np.exp(1j * points)
    for _ in range(max_iter):
        for c in range(k):
            members = labels == c
            if not members.any():
                continue
            s = phasors[members].sum(axis=0)
            cand = np.where(np.abs(s) > 1e-9, np.mod(np.angle(s), TWO_PI), 0.0)
            pm = points[members]
            old_cost = np.sum(phase_deviation(pm, centroids[c]) ** 2, axis=0)
            new_cost = np.sum(phase_deviation(pm, cand) ** 2, axis=0)
            centroids[c] = np.where(new_cost <= old_cost, cand, centroids[c])
        d = _pairwise_sqdev(points, centroids)
        new_labels = d.argmin(axis=1)
        # keep the current label on exact ties so reassignment never oscillates
        keep = d[np.arange(len(points)), labels] <= d[np.arange(len(points)), new_labels]
        labels = np.where(keep, labels, new_labels)
        obj = float(d[np.arange(len(points)), labels].sum())
        prev = history[-1]
        history.append(obj)
        if prev - obj <= tol * max(prev, 1e-300):
            break
    return KMeansResult(centroids, labels, history)


def _nearest_unused(centroid: np.ndarray, start: np.ndarray, b_irs: int, used: set) -> np.ndarray:
    """Best-first search over grid vectors around ``start`` ordered by distance to ``centroid``."""
    levels = 2**b_irs
    step = TWO_PI / levels

    def cost(v):
        return float(np.sum(phase_deviation(v * step, centroid) ** 2))

    heap = [(cost(start), start.tobytes(), start)]
    seen = {start.tobytes()}
    while heap:
        _, key, v = heapq.heappop(heap)
        if key not in used:
            return v
        for n in range(len(v)):
            for delta in ((1,) if levels == 2 else (1, -1)):
                w = v.copy()
                w[n] = (w[n] + delta) % levels
                wk = w.tobytes()
                if wk not in seen:
                    seen.add(wk)
                    heapq.heappush(heap, (cost(w), wk, w))
    raise InsufficientTrainingDataError("phase grid exhausted")


def codebook_from_points(points, b_q: int, b_irs: int, rng: np.random.Generator,
                         max_iter=100, tol=1e-6) -> tuple[Codebook, KMeansResult]:
    """Cluster training phase vectors into ``2**b_q`` distinct quantized codewords."""
    k = 2**b_q
    points = np.asarray(points, dtype=float)
    if b_q > b_irs * points.shape[1]:
        raise ValueError("codebook larger than the phase grid")
    res = kmeans_circular(points, k, rng, max_iter=max_iter, tol=tol)
    used: set = set()
    entries = []
    for c in range(k):
        q = quantize_config(res.centroids[c], b_irs).phase_idx
        if q.tobytes() in used:
            q = _nearest_unused(res.centroids[c], q, b_irs, used)
        used.add(q.tobytes())
        entries.append(q)
    entries = np.array(entries)
    order = np.lexsort(entries.T[::-1])
    return Codebook(entries[order], b_irs), res


def training_configs(cfg: ScenarioConfig, rng: np.random.Generator, chunk: int = 256) -> np.ndarray:
    """Quantized rate-optimal phase vectors for ``m_training`` fresh UEs at every carrier."""
    drop = drop_ues(cfg, rng, count=cfg.m_training)
    out = []
    for s in range(0, len(drop), chunk):
        sub = type(drop)(drop.positions[s:s + chunk], drop.los[s:s + chunk])
        ch = synthesize_channels(cfg, sub, rng)
        theta, _, _ = optimal_continuous_configs(ch)
        out.append(quantize_indices(theta.reshape(-1, cfg.n_irs), cfg.b_irs))
    return np.concatenate(out)


def build_codebook(cfg: ScenarioConfig, rng: np.random.Generator) -> Codebook:
    """Cell-specific codebook learned from ``m_training`` training UEs."""
    if cfg.m_training * cfg.F < cfg.codebook_size:
        raise InsufficientTrainingDataError(
            f"M*F={cfg.m_training * cfg.F} training points for {cfg.codebook_size} codewords"
        )
    idx = training_configs(cfg, rng)
    points = TWO_PI * idx / 2**cfg.b_irs
    cb, res = codebook_from_points(points, cfg.b_codebook, cfg.b_irs, rng)
    log.info("codebook: %d entries from %d points, %d k-means iterations", len(cb), len(points),
             len(res.objective) - 1)
    return cb
