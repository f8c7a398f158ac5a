"""
Configuration-space models: knob definitions, spaces and encoding layouts
"""
import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..errors import SpaceError

KnobValue = Union[float, int, str]
Configuration = Dict[str, KnobValue]

_MAGNITUDE_BITS = 0x7FFFFFFFFFFFFFFF
_SIGN_BIT = 0x8000000000000000


def _float_ordinal(x: float) -> int:
    """Integer with the same order as the float; adjacent floats differ by one"""
    bits = struct.unpack("<q", struct.pack("<d", x))[0]
    return bits if bits >= 0 else -(bits & _MAGNITUDE_BITS)


def _ordinal_float(k: int) -> float:
    bits = k if k >= 0 else (-k) | _SIGN_BIT
    return struct.unpack("<d", struct.pack("<Q", bits))[0]


class KnobKind(str, Enum):
    """Kinds of tunable knobs"""
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    CATEGORICAL = "categorical"


class EncodingScheme(str, Enum):
    """Vector encodings of a configuration"""
    UNIT = "unit"
    UNIT_ONEHOT = "unit_onehot"
    RAW = "raw"


# Space file documents
class KnobDocument(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    name: str = Field(..., min_length=1, description="Knob identifier")
    kind: KnobKind = Field(..., alias="type")
    lower: Optional[float] = Field(None, alias="min")
    upper: Optional[float] = Field(None, alias="max")
    categories: Optional[List[Union[str, int, float, bool]]] = None
    default: Union[str, int, float, bool]


class SpaceDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1)
    knobs: List[KnobDocument] = Field(..., min_length=1)


@dataclass(frozen=True)
class KnobSpec:
    """A single knob θ_i with its domain Θ_i and default value."""

    name: str
    kind: KnobKind
    default: KnobValue
    lower: Optional[float] = None
    upper: Optional[float] = None
    categories: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(str(c) for c in self.categories))
        if self.lower is not None:
            object.__setattr__(self, "lower", float(self.lower))
        if self.upper is not None:
            object.__setattr__(self, "upper", float(self.upper))
        if self.kind == KnobKind.CATEGORICAL:
            if not self.categories:
                raise SpaceError("categorical knob needs at least one category", self.name)
            if len(set(self.categories)) != len(self.categories):
                raise SpaceError("categories must be pairwise distinct", self.name)
        else:
            if self.lower is None or self.upper is None:
                raise SpaceError("numeric knob needs min and max", self.name)
            if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
                raise SpaceError("bounds must be finite", self.name)
            if not self.lower < self.upper:
                raise SpaceError(f"min {self.lower} must be < max {self.upper}", self.name)
            if self.kind == KnobKind.INTEGER and (
                float(self.lower) != int(self.lower) or float(self.upper) != int(self.upper)
            ):
                raise SpaceError("integer knob bounds must be integral", self.name)
        # raises SpaceError when the default is out of domain
        object.__setattr__(self, "default", self.check_value(self.default))

    @property
    def is_numeric(self) -> bool:
        return self.kind != KnobKind.CATEGORICAL

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    def check_value(self, value: Any) -> KnobValue:
        """Return the normalized value or raise SpaceError when outside the domain."""
        if self.kind == KnobKind.CATEGORICAL:
            label = str(value)
            if label not in self.categories:
                raise SpaceError(f"value {value!r} not in categories {list(self.categories)}", self.name)
            return label
        if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
            raise SpaceError(f"value {value!r} is not numeric", self.name)
        number = float(value)
        if not math.isfinite(number) or number < self.lower or number > self.upper:
            raise SpaceError(f"value {value} outside [{self.lower}, {self.upper}]", self.name)
        if self.kind == KnobKind.INTEGER:
            if number != round(number):
                raise SpaceError(f"value {value} is not an integer", self.name)
            return int(round(number))
        return number

    def category_index(self, label: KnobValue) -> int:
        return self.categories.index(str(label))

    def to_unit(self, value: KnobValue) -> float:
        """Affine map of a numeric value to [0, 1]; categoricals map to index/(k-1)."""
        if self.kind == KnobKind.CATEGORICAL:
            k = self.n_categories
            return self.category_index(value) / (k - 1) if k > 1 else 0.0
        return (float(value) - self.lower) / (self.upper - self.lower)

    def from_unit(self, u: float) -> KnobValue:
        """
        Inverse of to_unit with clamping; integers round to nearest then clamp.

        A continuous knob decodes to the smallest value whose unit coordinate
        is at least u. Several floats can share one coordinate, so values from
        this method are the canonical ones: from_unit(to_unit(x)) == x holds
        exactly for every x it returns.
        """
        u = min(max(float(u), 0.0), 1.0)
        if self.kind == KnobKind.CATEGORICAL:
            k = self.n_categories
            return self.categories[int(math.floor(u * (k - 1) + 0.5))] if k > 1 else self.categories[0]
        number = min(max(self.lower + u * (self.upper - self.lower), self.lower), self.upper)
        if self.kind == KnobKind.INTEGER:
            return int(min(max(math.floor(number + 0.5), self.lower), self.upper))
        if self.to_unit(number) >= u and (number == self.lower or self.to_unit(math.nextafter(number, -math.inf)) < u):
            return float(number)
        return self._unit_floor(u, _float_ordinal(number))

    def canonical(self, value: float) -> KnobValue:
        """The value from_unit returns for this value's unit coordinate"""
        return self.from_unit(self.to_unit(value))

    def _unit_floor(self, u: float, guess: int) -> float:
        # bisect over float ordinals; to_unit is monotone and to_unit(upper) == 1
        lo, hi = _float_ordinal(self.lower), _float_ordinal(self.upper)
        a, b = max(lo, guess - 16), min(hi, guess + 16)
        if self.to_unit(_ordinal_float(a)) >= u:
            a = lo
        if self.to_unit(_ordinal_float(b)) < u:
            b = hi
        if self.to_unit(_ordinal_float(a)) >= u:
            return _ordinal_float(a)
        while b - a > 1:
            mid = (a + b) // 2
            if self.to_unit(_ordinal_float(mid)) >= u:
                b = mid
            else:
                a = mid
        return _ordinal_float(b)

    def to_document(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"name": self.name, "type": self.kind.value}
        if self.kind == KnobKind.CATEGORICAL:
            doc["categories"] = list(self.categories)
        else:
            lower, upper = self.lower, self.upper
            if self.kind == KnobKind.INTEGER:
                lower, upper = int(lower), int(upper)
            doc["min"], doc["max"] = lower, upper
        doc["default"] = self.default
        return doc


@dataclass(frozen=True)
class ConfigSpace:
    """Ordered, immutable collection of knobs; the order defines vector layouts."""

    name: str
    knobs: Tuple[KnobSpec, ...]
    _index: Dict[str, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        index: Dict[str, int] = {}
        for i, knob in enumerate(self.knobs):
            if knob.name in index:
                raise SpaceError("duplicate knob name", knob.name)
            index[knob.name] = i
        object.__setattr__(self, "knobs", tuple(self.knobs))
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.knobs)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    @property
    def names(self) -> List[str]:
        return [k.name for k in self.knobs]

    @property
    def has_categorical(self) -> bool:
        return any(not k.is_numeric for k in self.knobs)

    def knob(self, name: str) -> KnobSpec:
        if name not in self._index:
            raise SpaceError("unknown knob", name)
        return self.knobs[self._index[name]]

    def index_of(self, name: str) -> int:
        return self.knobs.index(self.knob(name))

    def default_configuration(self) -> Configuration:
        return {k.name: k.default for k in self.knobs}

    def validate(self, config: Configuration) -> Configuration:
        """Return a normalized copy of config; raises SpaceError on any violation."""
        extra = set(config) - set(self._index)
        if extra:
            raise SpaceError(f"unknown knobs in configuration: {sorted(extra)}")
        out: Configuration = {}
        for knob in self.knobs:
            if knob.name not in config:
                raise SpaceError("missing from configuration", knob.name)
            out[knob.name] = knob.check_value(config[knob.name])
        return out

    def is_valid(self, config: Configuration) -> bool:
        try:
            self.validate(config)
            return True
        except SpaceError:
            return False

    def config_key(self, config: Configuration) -> Tuple[KnobValue, ...]:
        """Hashable identity of a configuration, used for de-duplication."""
        return tuple(config[k.name] for k in self.knobs)

    def to_document(self) -> Dict[str, Any]:
        return {"name": self.name, "knobs": [k.to_document() for k in self.knobs]}


@dataclass(frozen=True)
class EncodingLayout:
    """Column layout of an encoding: per-knob [start, stop) spans."""

    scheme: EncodingScheme
    spans: Tuple[Tuple[str, int, int], ...]
    categorical: Tuple[bool, ...]

    @property
    def width(self) -> int:
        return self.spans[-1][2] if self.spans else 0

    @property
    def categorical_mask(self) -> np.ndarray:
        return np.asarray(self.categorical, dtype=bool)


@dataclass(frozen=True)
class EncodedVector:
    coords: np.ndarray
    layout: EncodingLayout

    def __post_init__(self):
        if self.coords.shape != (self.layout.width,):
            raise SpaceError(
                f"encoded vector has shape {self.coords.shape}, layout expects ({self.layout.width},)"
            )
