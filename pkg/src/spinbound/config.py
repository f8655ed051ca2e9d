"""Relaxation settings and their validation."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

COMMUTATOR_PRESETS = ("none", "deg2", "deg3", "basis")
OPTIMALITY_PRESETS = ("id", "singles", "nn", "deg2")
SOLVERS = ("auto", "clarabel", "sdpa")


class ConfigError(ValueError):
    """An invalid or inconsistent relaxation setting; the message names the field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class RelaxationConfig:
    """Every knob of the relaxation.

    ``d`` is the basis degree (1D window length, 2D set index) and ``r`` the 1D
    pair range.  The symmetry toggles switch the individual reductions;
    ``commutator_basis`` picks the words ``u`` for ``l([H, u]) = 0`` and
    ``optimality_basis`` the index set of the optimality block (``deg2`` takes
    the moment-basis words of degree at most 2).
    """

    d: int = 2
    r: int = 1
    sign_model: bool = True
    sign_hamiltonian: bool = True
    conjugate: bool = True
    translation_dft: bool = True
    axis_permutation: bool = True
    point_group: bool = True
    rdm_k: list[int] = field(default_factory=list)
    commutator_basis: str = "deg2"
    optimality_psd: bool = False
    optimality_basis: str = "nn"
    realify: bool = True
    solver: str = "auto"
    feas_tol: float = 1e-7
    gap_tol: float = 1e-8

    def validate(self) -> "RelaxationConfig":
        if self.d < 1:
            raise ConfigError("d", f"basis degree must be >= 1 (got {self.d}); d = 0 leaves only the identity")
        if self.r < 1:
            raise ConfigError("r", f"pair range must be >= 1, got {self.r}")
        if self.translation_dft and not self.sign_model:
            raise ConfigError("translation_dft", "requires sign_model (blocks are laid out per signature)")
        if self.conjugate and not self.sign_hamiltonian:
            raise ConfigError("conjugate", "requires sign_hamiltonian (real entries need the parity rule)")
        for k in self.rdm_k:
            if not 1 <= k <= 5:
                raise ConfigError("rdm_k", f"RDM size must be in 1..5, got {k}")
        if self.commutator_basis not in COMMUTATOR_PRESETS:
            raise ConfigError("commutator_basis", f"expected one of {COMMUTATOR_PRESETS}, got {self.commutator_basis!r}")
        if self.optimality_basis not in OPTIMALITY_PRESETS:
            raise ConfigError("optimality_basis", f"expected one of {OPTIMALITY_PRESETS}, got {self.optimality_basis!r}")
        if self.solver not in SOLVERS:
            raise ConfigError("solver", f"expected one of {SOLVERS}, got {self.solver!r}")
        if not self.feas_tol > 0:
            raise ConfigError("feas_tol", "must be positive")
        if not self.gap_tol > 0:
            raise ConfigError("gap_tol", "must be positive")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "RelaxationConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            bad = sorted(unknown)[0]
            raise ConfigError(bad, "unknown setting")
        return cls(**data).validate()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "RelaxationConfig":
        return dataclasses.replace(self, **changes).validate()


def load_file(path: str | Path) -> dict:
    """Read a JSON or YAML settings file into a plain dict."""
    text = Path(path).read_text()
    if str(path).endswith((".yaml", ".yml")):
        import yaml

        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path} must hold a mapping")
    return data
