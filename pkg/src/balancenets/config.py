"""Run configuration: size bounds, tolerances and the root seed.

All numeric comparisons in the toolkit funnel through the three tolerances
below.  tau_alg guards exact algebraic identities evaluated in floating
point, tau_dyn guards probability bookkeeping, and tau_num is the accuracy
target for quadrature-based results at the reference resolution (2**10 steps).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import ValidationError

TAU_ALG = 1e-9
TAU_DYN = 1e-12
TAU_NUM = 1e-6
# Tolerance for the pointwise field invariant b*c = 1 - a**2; the check is
# algebraic, so it shares the magnitude of TAU_ALG.
TAU_FLD = 1e-9

BOUND_STATES = 4096
BOUND_SEMIGROUP = 7
BOUND_GRP = 720

REFERENCE_STEPS = 2 ** 10

ENV_THREADS = "BALANCE_NETS_THREADS"


@dataclass(frozen=True)
class RunConfig:
    """Bounds, tolerances and seed for one analysis run."""

    bound_states: int = BOUND_STATES
    bound_semigroup: int = BOUND_SEMIGROUP
    bound_grp: int = BOUND_GRP
    tau_alg: float = TAU_ALG
    tau_dyn: float = TAU_DYN
    tau_num: float = TAU_NUM
    seed: int = 0
    out_path: str | None = None

    def __post_init__(self) -> None:
        for name in ("tau_alg", "tau_dyn", "tau_num"):
            value = getattr(self, name)
            if not (value > 0.0):
                raise ValidationError(f"{name} must be positive, got {value!r}")
        # Bounds below the smallest worked fixtures would make the tool useless.
        if self.bound_states < 8:
            raise ValidationError("bound_states must be at least 8")
        if self.bound_semigroup < 3:
            raise ValidationError("bound_semigroup must be at least 3")
        if self.bound_grp < 2:
            raise ValidationError("bound_grp must be at least 2")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ValidationError("seed must be an integer")
        if not (0 <= self.seed < 2 ** 64):
            raise ValidationError("seed must fit in 64 bits")
        if self.out_path is not None and not isinstance(self.out_path, str):
            raise ValidationError("out_path must be a string or null")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ValidationError("config payload must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        try:
            payload = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path}: line {exc.lineno}: {exc.msg}") from exc
        return cls.from_dict(payload)


def trajectory_seed(root_seed: int, index: int) -> int:
    """Derived stream for the index-th stochastic trajectory.

    The splitting rule is plain arithmetic on the 64-bit root seed so runs
    are reproducible from the single configured value: seed_i = root + i,
    wrapped to 64 bits.
    """
    if index < 0:
        raise ValidationError("trajectory index must be non-negative")
    return (root_seed + index) % (2 ** 64)
