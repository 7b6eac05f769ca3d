"""Noise parameters and named presets."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .circuit import DEFAULT_DURATIONS, DurationTable, GateKind


@dataclass(frozen=True)
class NoiseProfile:
    """Stochastic error parameters for every instruction.

    Attributes:
        readout_flip_prob: Probability a recorded measurement bit is flipped.
        t1: Relaxation time in timesteps (``math.inf`` disables thermal noise).
        t2: Dephasing time; must equal ``t1``.
        excited_population: Probability a relaxation event lands in |1> (T_pop).
        pauli_prob_per_axis_1q: Probability of each of X, Y, Z after a 1-qubit gate.
        depolarizing_lambda_1q: Depolarizing strength after a 1-qubit gate.
        cnot_error_multiplier: Scale applied to both gate-noise parameters for CNOT.
        durations: Duration of each operation class.
    """

    readout_flip_prob: float = 0.0
    t1: float = math.inf
    t2: float = math.inf
    excited_population: float = 0.0
    pauli_prob_per_axis_1q: float = 0.0
    depolarizing_lambda_1q: float = 0.0
    cnot_error_multiplier: float = 1.0
    durations: DurationTable = field(default=DEFAULT_DURATIONS)

    def __post_init__(self):
        if self.t1 != self.t2:
            raise ValueError("only T1 == T2 is supported")
        if not self.t1 > 0:
            raise ValueError("T1 must be positive")
        for name in ("readout_flip_prob", "excited_population", "pauli_prob_per_axis_1q",
                     "depolarizing_lambda_1q"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.cnot_error_multiplier < 0:
            raise ValueError("cnot_error_multiplier must be non-negative")
        for kind in (GateKind.H, GateKind.CNOT):
            if 3 * self.pauli_prob(kind) > 1 or self.depolarizing_lambda(kind) > 1:
                raise ValueError(f"gate error probabilities for {kind.value} exceed 1")

    def _scale(self, kind: GateKind) -> float:
        return self.cnot_error_multiplier if kind is GateKind.CNOT else 1.0

    def pauli_prob(self, kind: GateKind) -> float:
        """Per-axis Pauli probability on each qubit acted on by ``kind``."""
        return self.pauli_prob_per_axis_1q * self._scale(kind)

    def depolarizing_lambda(self, kind: GateKind) -> float:
        return self.depolarizing_lambda_1q * self._scale(kind)

    def relaxation_prob(self, duration: float) -> float:
        if math.isinf(self.t1) or duration <= 0:
            return 0.0
        return -math.expm1(-duration / self.t1)

    @property
    def has_gate_noise(self) -> bool:
        return self.pauli_prob_per_axis_1q > 0 or self.depolarizing_lambda_1q > 0

    @property
    def has_thermal_noise(self) -> bool:
        return not math.isinf(self.t1)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("t1", "t2"):
            if math.isinf(d[key]):
                d[key] = None
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseProfile":
        data = dict(data)
        if "preset" in data:
            base = preset(data.pop("preset"))
        else:
            base = cls()
        durations = data.pop("durations", None)
        for key in ("t1", "t2"):
            if key in data and data[key] is None:
                data[key] = math.inf
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown noise fields: {sorted(unknown)}")
        out = replace(base, **data)
        if durations is not None:
            out = replace(out, durations=DurationTable(**durations))
        return out


PRESETS = {
    "noiseless": NoiseProfile(),
    "paper-main": NoiseProfile(
        readout_flip_prob=0.02,
        t1=2000.0,
        t2=2000.0,
        excited_population=1e-7,
        pauli_prob_per_axis_1q=0.001,
        depolarizing_lambda_1q=0.001,
        cnot_error_multiplier=5.0,
    ),
}
PRESETS["paper-reduced"] = replace(
    PRESETS["paper-main"], pauli_prob_per_axis_1q=0.0001, depolarizing_lambda_1q=0.0001
)


def preset(name: str) -> NoiseProfile:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown noise preset {name!r}; choose from {sorted(PRESETS)}") from None


def load_noise(spec: str | Path | NoiseProfile) -> NoiseProfile:
    """Resolve a preset name, a JSON file path, or an existing profile.

    A JSON file may name a ``"preset"`` and override individual fields.
    """
    if isinstance(spec, NoiseProfile):
        return spec
    spec = str(spec)
    if spec in PRESETS:
        return PRESETS[spec]
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        return NoiseProfile.from_dict(json.loads(path.read_text()))
    return preset(spec)
