from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class NMConfig:
    """Simplex search settings; defaults are the ones the memetic loop uses."""

    tolerance: float = 1e-3
    max_iterations: int = 250
    stagnation_limit: int = 10
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.stagnation_limit < 1:
            raise ValueError("stagnation_limit must be at least 1")
        if not 0 < self.contraction < 1 < self.expansion:
            raise ValueError("need 0 < contraction < 1 < expansion")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if not self.reflection > 0:
            raise ValueError("reflection must be positive")


@dataclass(frozen=True)
class MAConfig:
    delta: float = 0.10
    depth: int = 4
    root_reset_stagnation: int = 5
    generations: int = 200
    mutation_rate: float = 0.10
    nm_instances: int = 4
    nm_iterations: int = 250
    nm_stagnation: int = 10
    nm_tolerance: float = 1e-3
    subsample_fraction: float = 0.20
    subsample_threshold: int = 200
    coeff_lo: float = -3.0
    coeff_hi: float = 3.0
    whitelist_p: float = 1 / 3
    seed: int | None = None

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.nm_instances < 1:
            raise ValueError("nm_instances must be at least 1")
        if self.root_reset_stagnation < 1:
            raise ValueError("root_reset_stagnation must be at least 1")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise ValueError("subsample_fraction must lie in (0, 1]")
        if not self.coeff_lo < self.coeff_hi:
            raise ValueError("coeff_lo must be below coeff_hi")
        if not 0.0 <= self.whitelist_p <= 1.0:
            raise ValueError("whitelist_p must lie in [0, 1]")
        NMConfig(tolerance=self.nm_tolerance, max_iterations=self.nm_iterations,
                 stagnation_limit=self.nm_stagnation)

    @property
    def nm(self) -> NMConfig:
        return NMConfig(tolerance=self.nm_tolerance, max_iterations=self.nm_iterations,
                        stagnation_limit=self.nm_stagnation)

    def fingerprint(self) -> str:
        """Short hash of every setting except the seed."""
        fields = asdict(self)
        fields.pop("seed")
        blob = json.dumps(fields, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]
