"""Data models for the laboratory.

This module defines the validated value types shared by the numerical modules
(sequences, functionals, norm estimates, verdicts, function handles) and the
SQLModel schemas of the experiment run ledger.
"""
from __future__ import annotations

import json
from datetime import datetime
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from sqlmodel import Field as SQLField
from sqlmodel import SQLModel

from app.utils import (
    encode_scalar,
    is_finite_array,
    is_strictly_increasing,
    is_valid_tolerance,
    parse_scalar,
    parse_scalar_array,
)
from config import (
    EXACT_TOL,
    QUAD_ABS_TOL,
    QUAD_MAX_PANELS,
    QUAD_NODES,
    QUAD_REL_TOL,
    QUAD_TAIL_MASS_TOL,
)

ArrayFunction = Callable[[np.ndarray], np.ndarray]


def _frozen_array(values) -> np.ndarray:
    array = np.array(parse_scalar_array(values), dtype=np.complex128)
    array.setflags(write=False)
    return array


# ============================================================================
# Quadrature configuration
# ============================================================================


class QuadratureConfig(BaseModel):
    """Tolerances and budget for adaptive Gauss–Legendre integration."""

    model_config = ConfigDict(frozen=True)

    rel_tol: float = Field(default=QUAD_REL_TOL, description="Relative tolerance")
    abs_tol: float = Field(default=QUAD_ABS_TOL, description="Absolute tolerance")
    max_panels: int = Field(default=QUAD_MAX_PANELS, ge=1, description="Panel budget")
    tail_mass_tol: float = Field(
        default=QUAD_TAIL_MASS_TOL, description="Neglected Gamma-tail mass"
    )
    nodes: int = Field(default=QUAD_NODES, ge=2, le=64, description="Nodes per panel")

    @field_validator("rel_tol", "abs_tol", "tail_mass_tol")
    @classmethod
    def validate_tolerance(cls, v):
        """Validate tolerances lie in (0, 1)."""
        if not is_valid_tolerance(v):
            raise ValueError("Tolerances must lie in the open interval (0, 1).")
        return v


# ============================================================================
# Sequence space c and its dual
# ============================================================================


class ConvergentSeq(BaseModel):
    """Finite prefix of a convergent sequence together with its limit.

    Coordinates at or beyond the prefix length are not stored. An optional
    ``tail_profile`` gives ``x_k - limit`` as a function of ``log k`` for
    indices past the prefix; only the far-field orbit model reads it.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    prefix: np.ndarray = Field(description="Entries x_0 .. x_{N-1}")
    limit: complex = Field(description="Value of lim x_k")
    tail_profile: Optional[ArrayFunction] = Field(
        default=None, exclude=True, description="x_k - limit as a function of log k"
    )

    @field_validator("prefix", mode="before")
    @classmethod
    def validate_prefix(cls, v):
        """Validate the prefix is a non-empty, finite, one-dimensional array."""
        array = _frozen_array(v)
        if array.ndim != 1 or array.size < 1:
            raise ValueError("Prefix must be a non-empty list of scalars.")
        if not is_finite_array(array):
            raise ValueError("Prefix entries must be finite.")
        return array

    @field_validator("limit", mode="before")
    @classmethod
    def validate_limit(cls, v):
        """Parse the limit scalar."""
        return parse_scalar(v)

    @property
    def size(self) -> int:
        """Prefix length N."""
        return int(self.prefix.size)

    @classmethod
    def constant(cls, value: complex, size: int) -> ConvergentSeq:
        """Constant sequence (``value * e_inf``)."""
        return cls(prefix=np.full(size, complex(value)), limit=value)

    @classmethod
    def unit(cls, index: int, size: int) -> ConvergentSeq:
        """Unit coordinate vector ``e_index`` with limit 0."""
        prefix = np.zeros(size, dtype=np.complex128)
        prefix[index] = 1.0
        return cls(prefix=prefix, limit=0.0)

    def with_prefix(self, prefix: np.ndarray, limit: Optional[complex] = None) -> ConvergentSeq:
        """Copy with a new prefix (the tail profile is kept)."""
        return ConvergentSeq(
            prefix=prefix,
            limit=self.limit if limit is None else limit,
            tail_profile=self.tail_profile,
        )

    def to_json(self) -> Dict[str, Any]:
        """Sequence JSON: ``{"prefix": [...], "limit": ...}``."""
        return {
            "prefix": [encode_scalar(v) for v in self.prefix],
            "limit": encode_scalar(self.limit),
        }


class DualFunctional(BaseModel):
    """Finitely supported functional ``a_inf * pi_inf + sum_k a_k * pi_k``."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    a_inf: complex = Field(default=0.0, description="Weight on the limit functional")
    coeffs: np.ndarray = Field(
        default_factory=lambda: _frozen_array([]), description="Weights on pi_k"
    )

    @field_validator("coeffs", mode="before")
    @classmethod
    def validate_coeffs(cls, v):
        """Validate the coefficients are finite."""
        array = _frozen_array(v)
        if array.ndim != 1:
            raise ValueError("Coefficients must be a flat list of scalars.")
        if not is_finite_array(array):
            raise ValueError("Coefficients must be finite.")
        return array

    @field_validator("a_inf", mode="before")
    @classmethod
    def validate_a_inf(cls, v):
        """Parse the limit weight."""
        return parse_scalar(v)

    @classmethod
    def coordinate(cls, index: int) -> DualFunctional:
        """Coordinate functional ``pi_index``."""
        coeffs = np.zeros(index + 1, dtype=np.complex128)
        coeffs[index] = 1.0
        return cls(coeffs=coeffs)

    @classmethod
    def limit_functional(cls) -> DualFunctional:
        """Limit functional ``pi_inf``."""
        return cls(a_inf=1.0)

    @property
    def representation_norm(self) -> float:
        """``|a_inf| + sum |a_k|``."""
        return float(abs(self.a_inf) + np.sum(np.abs(self.coeffs)))

    def to_json(self) -> Dict[str, Any]:
        """Dual JSON: ``{"a_inf": ..., "coeffs": [...]}``."""
        return {
            "a_inf": encode_scalar(self.a_inf),
            "coeffs": [encode_scalar(v) for v in self.coeffs],
        }


# ============================================================================
# Norm estimates and histories
# ============================================================================


class NormEstimate(BaseModel):
    """Truncated supremum norm with attainment metadata."""

    value: float = Field(ge=0, description="Estimated norm")
    argmax_index: int = Field(ge=0, description="Index attaining the maximum")
    boundary_saturated: bool = Field(description="Argmax within the last 5% of the prefix")
    truncation: int = Field(ge=1, description="Prefix length N")
    limit_dominated: bool = Field(default=False, description="The limit term realised the max")

    @model_validator(mode="after")
    def validate_argmax(self):
        """Validate the argmax lies inside the prefix."""
        if self.argmax_index >= self.truncation:
            raise ValueError("argmax_index must be smaller than the truncation.")
        return self


class NormSample(BaseModel):
    """One entry of an orbit history."""

    n: int = Field(ge=0, description="Power")
    value: float = Field(ge=0, description="Distance to the projection")
    boundary_saturated: bool = Field(default=False, description="Maximum at the grid edge")
    peak_log_index: Optional[float] = Field(
        default=None, description="log of the index (or point) where the maximum sits"
    )

    @field_validator("value")
    @classmethod
    def validate_value(cls, v):
        """Validate the value is finite."""
        if not np.isfinite(v):
            raise ValueError("Norm values must be finite.")
        return v


class NormHistory(BaseModel):
    """Sampled orbit distances ``||T^n x - Px||`` over a schedule."""

    samples: List[NormSample] = Field(default_factory=list)
    truncation: int = Field(ge=1, description="Prefix length or grid size")

    @field_validator("samples")
    @classmethod
    def validate_schedule(cls, v):
        """Validate n is strictly increasing."""
        if not is_strictly_increasing([s.n for s in v]):
            raise ValueError("Sample powers must be strictly increasing.")
        return v

    @property
    def powers(self) -> np.ndarray:
        return np.array([s.n for s in self.samples], dtype=np.int64)

    @property
    def values(self) -> np.ndarray:
        return np.array([s.value for s in self.samples], dtype=np.float64)


class RateFit(BaseModel):
    """Least-squares line through ``(log n, log value)``."""

    slope: float
    intercept: float
    window: Tuple[int, int]
    residual: float = Field(ge=0, description="RMS residual of the fit")
    samples_used: int = Field(ge=0)
    excluded: List[int] = Field(default_factory=list, description="Powers dropped for zero values")

    @field_validator("window")
    @classmethod
    def validate_window(cls, v):
        """Validate n_lo < n_hi."""
        if v[0] >= v[1]:
            raise ValueError("Window must satisfy n_lo < n_hi.")
        return v


# ============================================================================
# Verdicts
# ============================================================================


class VerdictStatus(str, Enum):
    """Outcome of a numerical membership probe."""

    MEMBER = "member"
    NON_MEMBER = "non_member"
    INCONCLUSIVE = "inconclusive"


class Diagnostic(BaseModel):
    """A decided condition with the quantity it was decided on."""

    condition: str
    value: float
    threshold: float


class Verdict(BaseModel):
    """Probe result carrying every measured condition."""

    status: VerdictStatus
    diagnostics: List[Diagnostic] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)

    def to_json(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


class PreimageResult(BaseModel):
    """Preimage of a sequence under ``I - T`` with limit uncertainty."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    sequence: ConvergentSeq
    limit_uncertainty: float = Field(ge=0, description="Tail estimate of the limit")
    membership: Verdict


# ============================================================================
# Spectral geometry
# ============================================================================


class SpectrumLocation(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


class SpectrumVerdict(BaseModel):
    """Position of a point relative to the spectrum of T."""

    location: SpectrumLocation
    distance_to_boundary: float = Field(ge=0)

    @model_validator(mode="after")
    def validate_distance(self):
        """Validate the distance vanishes exactly on the boundary."""
        on_boundary = self.location is SpectrumLocation.BOUNDARY
        if on_boundary != (self.distance_to_boundary == 0.0):
            raise ValueError("Distance must be 0 exactly for boundary points.")
        return self


class KTRow(BaseModel):
    """One row of the ``||T^n (I - T)||`` decay table."""

    n: int = Field(ge=0)
    N: int = Field(ge=2)
    value: float = Field(ge=0)
    sqrt_scaled: float = Field(ge=0)
    argmax_row: int = Field(ge=0)
    boundary_flag: bool
    log_comparison: float = Field(ge=0, description="(log n)^(1/2) / n^(1/2)")
    continuum_limit: float = Field(ge=0, description="Norm realised by rows k -> inf")


# ============================================================================
# Borel / Abel summation
# ============================================================================


class TailKind(str, Enum):
    """Closed-form generators for coefficients past the stored ones."""

    ZERO = "zero"
    CONSTANT = "constant"
    ALTERNATING_SIGN = "alternating_sign"
    RECIPROCAL_POWER = "reciprocal_power"
    ALTERNATING_RECIPROCAL = "alternating_reciprocal"
    RECIPROCAL_LOG = "reciprocal_log"


class TailRule(BaseModel):
    """``a_k`` for ``k >= K`` as a closed form in k with scale c and exponent p."""

    model_config = ConfigDict(frozen=True)

    kind: TailKind = TailKind.ZERO
    c: complex = Field(default=1.0, description="Scale")
    p: float = Field(default=1.0, description="Exponent for reciprocal_power")

    @field_validator("c", mode="before")
    @classmethod
    def validate_scale(cls, v):
        """Parse the scale scalar."""
        return parse_scalar(v)

    @field_validator("p")
    @classmethod
    def validate_exponent(cls, v):
        """Validate the exponent is positive and finite."""
        if not (np.isfinite(v) and v > 0):
            raise ValueError("Exponent must be positive.")
        return v


class CoeffSeq(BaseModel):
    """Stored coefficients ``a_0 .. a_{K-1}`` plus a tail rule."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coeffs: np.ndarray = Field(description="a_0 .. a_{K-1}")
    tail_rule: TailRule = Field(default_factory=TailRule)
    name: str = Field(default="custom")

    @field_validator("coeffs", mode="before")
    @classmethod
    def validate_coeffs(cls, v):
        """Validate the stored coefficients are finite."""
        array = _frozen_array(v)
        if array.ndim != 1:
            raise ValueError("Coefficients must be a flat list of scalars.")
        if not is_finite_array(array):
            raise ValueError("Coefficients must be finite.")
        return array

    @property
    def stored(self) -> int:
        return int(self.coeffs.size)


class BorelIntegral(BaseModel):
    """Borel integral of a coefficient sequence next to its series sum."""

    value: complex
    abs_value: float = Field(ge=0)
    horizon: float = Field(gt=0)
    error: float = Field(ge=0)
    hypothesis_ok: bool = Field(description="sup (k+1)|a_k| is bounded")
    series_value: Optional[complex] = Field(default=None, description="None when divergent")


# ============================================================================
# Functions on [0, 1] and [0, inf)
# ============================================================================


class FunctionSpace(str, Enum):
    INTERVAL = "interval"
    HALFLINE = "halfline"


class FunctionKind(str, Enum):
    POLY = "poly"
    SINLOG = "sinlog"
    LOGINV = "loginv"
    LOGINV2 = "loginv2"
    RATIONAL = "rational"
    EXPDECAY = "expdecay"
    SAMPLES = "samples"


class FunctionSpec(BaseModel):
    """Function description JSON accepted by the command line."""

    space: FunctionSpace
    kind: FunctionKind
    coeffs: List[Any] = Field(default_factory=list, description="Polynomial coefficients c_m of t^m")
    points: List[Tuple[float, Any]] = Field(default_factory=list, description="(t, value) samples")
    scale: Any = Field(default=1.0, description="Scale factor for catalog expressions")

    @model_validator(mode="after")
    def validate_payload(self):
        """Validate the payload matches the kind."""
        if self.kind is FunctionKind.POLY and not self.coeffs:
            raise ValueError("Polynomial specs need at least one coefficient.")
        if self.kind is FunctionKind.SAMPLES and len(self.points) < 2:
            raise ValueError("Sample specs need at least two points.")
        return self


class FunctionHandle(BaseModel):
    """Point-evaluable function on [0, 1] or [0, inf) with boundary data.

    ``zero_profile(s)`` returns ``f(e^-s)`` and ``inf_profile(s)`` returns
    ``f(e^s)``; both default to composition with the evaluator and are
    overridden where the composition would underflow. Oscillatory half-line
    functions of the form ``amplitude(t) * sin(t)`` declare the amplitude.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    evaluator: ArrayFunction
    space: FunctionSpace
    value_at_0: complex
    limit_at_inf: Optional[complex] = None
    label: str = "custom"
    zero_profile: Optional[ArrayFunction] = None
    inf_profile: Optional[ArrayFunction] = None
    oscillation_amplitude: Optional[ArrayFunction] = None
    breakpoints: Tuple[float, ...] = ()

    @model_validator(mode="after")
    def validate_boundary_data(self):
        """Validate value_at_0 and the limit against the evaluator."""
        f0 = complex(np.asarray(self.evaluator(np.array([0.0])))[0])
        if abs(f0 - self.value_at_0) > EXACT_TOL * (1.0 + abs(f0)):
            raise ValueError("value_at_0 must equal the evaluator at 0.")
        if self.space is FunctionSpace.HALFLINE and self.limit_at_inf is None:
            raise ValueError("Half-line functions must declare limit_at_inf.")
        probes = np.linspace(0.0, 1.0, 17)
        if self.space is FunctionSpace.HALFLINE:
            probes = np.concatenate((probes, np.geomspace(1.0, 1e6, 25)))
        if not is_finite_array(np.asarray(self.evaluator(probes))):
            raise ValueError("Evaluator must be finite on the whole domain.")
        return self

    def __call__(self, t) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(t, dtype=np.float64)))

    def near_zero(self, s: np.ndarray) -> np.ndarray:
        """``f(e^-s)``."""
        if self.zero_profile is not None:
            return np.asarray(self.zero_profile(s))
        return self(np.exp(-np.asarray(s, dtype=np.float64)))

    def near_infinity(self, s: np.ndarray) -> np.ndarray:
        """``f(e^s)``."""
        if self.inf_profile is not None:
            return np.asarray(self.inf_profile(s))
        with np.errstate(over="ignore"):
            t = np.exp(np.asarray(s, dtype=np.float64))
        return self(t)


# ============================================================================
# Experiment specs and the run ledger
# ============================================================================


class ExperimentSpec(BaseModel):
    """Resolved command-line experiment."""

    command: str = Field(min_length=1, description="Subcommand path, e.g. 'laguerre ratio'")
    parameters: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = Field(default=None, ge=0)
    output: Optional[str] = None

    def header(self) -> Dict[str, Any]:
        """Parameter block embedded in every output file."""
        return {"command": self.command, "seed": self.seed, "parameters": self.parameters}


class ExperimentRunBase(SQLModel):
    """Base run-ledger model with common fields."""

    command: str = SQLField(index=True, description="Subcommand path")
    parameters: str = SQLField(default="{}", description="Resolved parameters as JSON")
    seed: Optional[int] = SQLField(default=None, description="Random seed")
    exit_code: int = SQLField(default=0, description="Process exit code")
    output_path: Optional[str] = SQLField(default=None, description="Report location")
    created_at: datetime = SQLField(default_factory=datetime.now, description="Run time")


class ExperimentRun(ExperimentRunBase, table=True):
    """Run-ledger database model."""

    id: Optional[int] = SQLField(default=None, primary_key=True)


class ExperimentRunCreate(ExperimentRunBase):
    """Schema for recording a run."""

    @field_validator("parameters")
    @classmethod
    def validate_parameters(cls, v):
        """Validate the parameters are a JSON object."""
        try:
            decoded = json.loads(v)
        except json.JSONDecodeError as exc:
            raise ValueError("Parameters must be valid JSON.") from exc
        if not isinstance(decoded, dict):
            raise ValueError("Parameters must be a JSON object.")
        return v

    @field_validator("exit_code")
    @classmethod
    def validate_exit_code(cls, v):
        """Validate the exit code is one the command line produces."""
        if v not in (0, 1, 2):
            raise ValueError("Exit code must be 0, 1 or 2.")
        return v


class ExperimentRunRead(ExperimentRunBase):
    """Schema for reading a run."""

    id: int = SQLField(description="Unique run identifier")
