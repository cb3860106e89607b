"""Genotype representation and the gene <-> physical parameter mapping.

A genotype is ten normalized genes in [0, 1]. Each gene maps linearly onto
one gait or morphology parameter range (lengths in metres, frequency in Hz).
"""
from __future__ import annotations

import json
from dataclasses import astuple, dataclass, fields

import numpy as np

N_GENES = 10
MAX_SPEED_M_PER_MIN = 10.0

# (name, lower, upper), in gene order
PARAM_BOUNDS: tuple[tuple[str, float, float], ...] = (
    ("step_length", 0.005, 0.300),
    ("step_height", 0.025, 0.075),
    ("step_smoothing", 0.0, 0.050),
    ("gait_frequency", 0.2, 2.0),
    ("lift_duration", 0.05, 0.20),
    ("wag_phase", -0.2, 0.2),
    ("wag_x_amp", 0.0, 0.050),
    ("wag_y_amp", 0.0, 0.050),
    ("femur_ext", 0.0, 0.025),
    ("tibia_ext", 0.0, 0.095),
)
PARAM_NAMES = tuple(name for name, _, _ in PARAM_BOUNDS)
LOWER = np.array([lo for _, lo, _ in PARAM_BOUNDS])
UPPER = np.array([hi for _, _, hi in PARAM_BOUNDS])

CONTROL_GENES = slice(0, 8)
MORPHOLOGY_GENES = slice(8, 10)
STEP_LENGTH, GAIT_FREQUENCY = 0, 3


class DomainError(ValueError):
    """Raised when a value lies outside the domain an operation accepts."""


@dataclass(frozen=True)
class GaitParams:
    step_length: float
    step_height: float
    step_smoothing: float
    gait_frequency: float
    lift_duration: float
    wag_phase: float
    wag_x_amp: float
    wag_y_amp: float
    femur_ext: float
    tibia_ext: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    def to_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "GaitParams":
        return cls(**{name: float(d[name]) for name in PARAM_NAMES})

    def replace(self, **changes) -> "GaitParams":
        d = self.to_dict()
        d.update(changes)
        return GaitParams(**d)


def check_genotype(genes) -> np.ndarray:
    g = np.asarray(genes, dtype=float)
    if g.shape != (N_GENES,):
        raise DomainError(f"genotype must have {N_GENES} genes, got shape {g.shape}")
    if not np.all(np.isfinite(g)) or np.any(g < 0.0) or np.any(g > 1.0):
        raise DomainError(f"genes must lie in [0, 1]: {g}")
    return g


def decode(genes) -> GaitParams:
    """Map a genotype onto physical parameters. No feasibility check."""
    g = check_genotype(genes)
    return GaitParams(*(float(v) for v in LOWER + g * (UPPER - LOWER)))


def encode(params: GaitParams) -> np.ndarray:
    """Inverse of :func:`decode`."""
    p = params.as_array()
    bad = (p < LOWER) | (p > UPPER) | ~np.isfinite(p)
    if np.any(bad):
        names = [PARAM_NAMES[i] for i in np.flatnonzero(bad)]
        raise DomainError(f"parameters out of range: {names}")
    return (p - LOWER) / (UPPER - LOWER)


def speed_product(params: GaitParams) -> float:
    """Theoretical speed cap term step_length * gait_frequency, in m/min."""
    return params.step_length * params.gait_frequency * 60.0


def is_feasible(params: GaitParams) -> bool:
    return speed_product(params) <= MAX_SPEED_M_PER_MIN


def max_feasible_step_gene(genes) -> float:
    """Largest step_length gene that keeps the genotype feasible."""
    g = check_genotype(genes)
    freq = LOWER[GAIT_FREQUENCY] + g[GAIT_FREQUENCY] * (UPPER[GAIT_FREQUENCY] - LOWER[GAIT_FREQUENCY])
    span = UPPER[STEP_LENGTH] - LOWER[STEP_LENGTH]
    gene = (MAX_SPEED_M_PER_MIN / (60.0 * freq) - LOWER[STEP_LENGTH]) / span
    gene = float(np.clip(gene, 0.0, 1.0))
    # guard against roundoff pushing the decoded product just over the cap
    trial = g.copy()
    trial[STEP_LENGTH] = gene
    while gene > 0.0 and not is_feasible(decode(trial)):
        gene = float(np.nextafter(gene, 0.0))
        trial[STEP_LENGTH] = gene
    return gene


def genotype_to_json(genes) -> str:
    return json.dumps([float(v) for v in check_genotype(genes)])


def genotype_from_json(text: str) -> np.ndarray:
    return check_genotype(json.loads(text))
