from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from ..neighbors import STRATEGIES


@dataclass(frozen=True)
class SamplerConfig:
    """Every sampler hyperparameter plus the seed.

    ``cluster_k=None`` means the per-sampler default (5, or 10 for MWMOTE);
    ``density_exponent_de=None`` means the feature count.
    """

    k: int = 5
    k1: int = 5
    k2: int = 5
    k3: int = 5
    cluster_k: int | None = None
    sigma: float = 0.5
    energy: float = 1.0
    c_max_ratio: float = 0.25
    radius_neighbor_cap: int = 100
    imbalance_threshold_irt: float = 10.0
    density_exponent_de: float | None = None
    mwmote_cmax: float = 3.0
    mwmote_cf_th: float = 50.0
    nras_threshold: int = 3
    nras_propensity_floor: float | None = None
    rbo_gamma: float = 1.0
    rbo_iterations: int = 1
    rbo_step_size: float = 0.01
    rbo_stop_probability: float = 1.0
    safe_level_correction_rate: float = 0.05
    beta: float = 1.0
    kmeans_max_iterations: int = 20
    neighbor_strategy: str = "auto"
    seed: int = 0

    def __post_init__(self):
        for name in ("k", "k1", "k2", "k3", "radius_neighbor_cap", "nras_threshold",
                     "kmeans_max_iterations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.cluster_k is not None and self.cluster_k < 1:
            raise ValueError("cluster_k must be >= 1")
        if self.rbo_iterations < 0:
            raise ValueError("rbo_iterations must be >= 0")
        for name in ("c_max_ratio", "safe_level_correction_rate", "rbo_stop_probability"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        for name in ("energy", "rbo_gamma", "rbo_step_size", "mwmote_cmax",
                     "mwmote_cf_th", "imbalance_threshold_irt", "beta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.density_exponent_de is not None and self.density_exponent_de < 0:
            raise ValueError("density_exponent_de must be >= 0")
        if self.neighbor_strategy not in STRATEGIES:
            raise ValueError(f"neighbor_strategy must be one of {STRATEGIES}")

    def clusters_for(self, sampler_id: str) -> int:
        if self.cluster_k is not None:
            return self.cluster_k
        return 10 if sampler_id == "mwmote" else 5

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SamplerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown sampler options: {sorted(unknown)}")
        return cls(**data)

    def with_overrides(self, **changes) -> "SamplerConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})
