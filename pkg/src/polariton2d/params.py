"""Physical parameter records and unit conventions.

Energies are in eV and times in fs throughout. Rates are carried as
energies (hbar * rate), so a lifetime ``tau`` in fs corresponds to the
energy ``HBAR / tau`` in eV.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import ParameterError

HBAR = 0.6582119569  # eV fs
KB = 8.617333262e-5  # eV / K

BATH_KINDS = ("flat", "debye")
DEPHASING_MODELS = ("brw", "lindblad")


@dataclass(frozen=True)
class BathSpec:
    """Bath seen by each emitter through its sigma^dag sigma operator.

    ``gamma`` is the relaxation rate as an energy (eV). ``delta`` (eV) and
    ``temperature`` (K) are only used by the Debye form; the flat bath is
    always at zero temperature.
    """

    kind: str = "flat"
    gamma: float = 0.0
    delta: float = 0.2
    temperature: float = 0.0

    def __post_init__(self):
        if self.kind not in BATH_KINDS:
            raise ParameterError(f"unknown bath kind {self.kind!r}; expected one of {BATH_KINDS}")
        if self.gamma < 0:
            raise ParameterError("bath gamma must be non-negative")
        if self.kind == "debye":
            if self.delta <= 0:
                raise ParameterError("Debye cutoff delta must be positive")
            if self.temperature < 0:
                raise ParameterError("temperature must be non-negative")

    @property
    def kT(self) -> float:
        return KB * self.temperature if self.kind == "debye" else 0.0


@dataclass(frozen=True)
class ModelParams:
    """Tavis-Cummings model with cavity loss and per-emitter dephasing bath.

    The coupling is derived from the target splitting,
    ``g = sqrt(rabi_splitting**2 - detuning**2) / (2 sqrt(N))``, so runs with
    different ``n_emitters`` share the same splitting.
    """

    n_emitters: int = 1
    omega_c: float = 2.0
    omega_0: float = 2.0
    rabi_splitting: float = 0.1
    kappa_lifetime: float = 15.0
    gamma_lifetime: float = 50.0
    bath_kind: str = "flat"
    bath_delta: float = 0.2
    bath_temperature: float = 0.0
    n_max: int = 2
    dephasing: str = "brw"
    hbar: float = field(default=HBAR, init=False, repr=False)

    def __post_init__(self):
        if int(self.n_emitters) != self.n_emitters or self.n_emitters < 1:
            raise ParameterError("n_emitters must be a positive integer")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ParameterError("n_max must be a non-negative integer")
        for name in ("omega_c", "omega_0", "rabi_splitting"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ParameterError(f"{name} must be positive and finite (got {value})")
        # an infinite lifetime switches the channel off (closed-system limit)
        for name in ("kappa_lifetime", "gamma_lifetime"):
            value = getattr(self, name)
            if not value > 0:
                raise ParameterError(f"{name} must be positive (got {value})")
        if abs(self.detuning) >= self.rabi_splitting:
            raise ParameterError(
                f"|detuning| = {abs(self.detuning):.6g} eV must be below the Rabi splitting "
                f"{self.rabi_splitting:.6g} eV for a real coupling"
            )
        if self.dephasing not in DEPHASING_MODELS:
            raise ParameterError(f"unknown dephasing model {self.dephasing!r}; expected one of {DEPHASING_MODELS}")
        # validates bath fields
        self.bath

    @property
    def detuning(self) -> float:
        return self.omega_c - self.omega_0

    @property
    def coupling(self) -> float:
        """Single-emitter coupling g in eV."""
        return math.sqrt(self.rabi_splitting**2 - self.detuning**2) / (2.0 * math.sqrt(self.n_emitters))

    @property
    def kappa(self) -> float:
        """Cavity loss rate as an energy, hbar/kappa_lifetime (eV)."""
        return HBAR / self.kappa_lifetime

    @property
    def gamma(self) -> float:
        """Molecular relaxation rate as an energy (eV)."""
        return HBAR / self.gamma_lifetime

    @property
    def bath(self) -> BathSpec:
        return BathSpec(
            kind=self.bath_kind,
            gamma=self.gamma,
            delta=self.bath_delta,
            temperature=self.bath_temperature if self.bath_kind == "debye" else 0.0,
        )

    @property
    def rabi_period(self) -> float:
        """T_R = 2 pi hbar / Omega_R in fs (41.36 fs for 0.1 eV)."""
        return 2.0 * math.pi * HBAR / self.rabi_splitting

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def preset_jc() -> ModelParams:
    """Resonant single-emitter configuration: 2 eV, 0.1 eV splitting, 15/50 fs."""
    return ModelParams(n_emitters=1)


def preset_tc(n_emitters: int = 2) -> ModelParams:
    return ModelParams(n_emitters=n_emitters)


def preset_debye_n5() -> ModelParams:
    """Detuned five-emitter run with a room-temperature Debye bath."""
    return ModelParams(
        n_emitters=5,
        omega_c=2.1,
        omega_0=2.09,
        rabi_splitting=0.3,
        kappa_lifetime=120.0,
        gamma_lifetime=60.0,
        bath_kind="debye",
        bath_delta=0.2,
        bath_temperature=300.0,
    )
