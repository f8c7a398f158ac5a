"""
Heterogeneous configuration spaces: parsing, validation, encodings, subspaces
and space-filling sampling
"""
import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError
from scipy.stats import qmc

from ..errors import SpaceError
from ..models.space_models import (
    ConfigSpace,
    Configuration,
    EncodedVector,
    EncodingLayout,
    EncodingScheme,
    KnobKind,
    KnobSpec,
    SpaceDocument,
)

# Setup logging
logger = logging.getLogger(__name__)


def _knob_name_at(raw: Any, loc: Tuple[Any, ...]) -> Union[str, None]:
    """Best-effort knob name for a pydantic error location ('knobs', i, ...)."""
    if len(loc) >= 2 and loc[0] == "knobs" and isinstance(loc[1], int):
        try:
            return str(raw["knobs"][loc[1]]["name"])
        except (KeyError, IndexError, TypeError):
            return f"#{loc[1]}"
    return None


def parse_space(document: Union[Dict[str, Any], str, Path]) -> ConfigSpace:
    """Build a validated ConfigSpace from a space document (dict or JSON file path)"""
    if isinstance(document, (str, Path)):
        return load_space(document)

    try:
        parsed = SpaceDocument.model_validate(document)
    except ValidationError as e:
        first = e.errors()[0]
        raise SpaceError(
            f"malformed space document at {'.'.join(str(p) for p in first['loc'])}: {first['msg']}",
            _knob_name_at(document, tuple(first["loc"])),
        ) from e

    knobs: List[KnobSpec] = []
    for knob_doc in parsed.knobs:
        if knob_doc.kind == KnobKind.CATEGORICAL:
            if knob_doc.lower is not None or knob_doc.upper is not None:
                raise SpaceError("categorical knob must not declare min/max", knob_doc.name)
            knobs.append(KnobSpec(
                name=knob_doc.name,
                kind=knob_doc.kind,
                default=knob_doc.default,
                categories=tuple(knob_doc.categories or ()),
            ))
        else:
            if knob_doc.categories is not None:
                raise SpaceError("numeric knob must not declare categories", knob_doc.name)
            knobs.append(KnobSpec(
                name=knob_doc.name,
                kind=knob_doc.kind,
                default=knob_doc.default,
                lower=knob_doc.lower,
                upper=knob_doc.upper,
            ))

    space = ConfigSpace(name=parsed.name, knobs=tuple(knobs))
    logger.debug(f"Parsed space '{space.name}' with {len(space)} knobs")
    return space


def load_space(path: Union[str, Path]) -> ConfigSpace:
    """Load a space from its JSON file"""
    try:
        with open(path, "r") as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise SpaceError(f"space file {path} is not valid JSON: {e}") from e
    return parse_space(document)


def save_space(space: ConfigSpace, path: Union[str, Path]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(space.to_document(), f, indent=2)


@lru_cache(maxsize=256)
def get_layout(space: ConfigSpace, scheme: EncodingScheme) -> EncodingLayout:
    """Column spans of every knob under the given scheme"""
    scheme = EncodingScheme(scheme)
    spans = []
    categorical: List[bool] = []
    start = 0
    for knob in space.knobs:
        width = knob.n_categories if (scheme == EncodingScheme.UNIT_ONEHOT and not knob.is_numeric) else 1
        spans.append((knob.name, start, start + width))
        categorical.extend([not knob.is_numeric] * width)
        start += width
    return EncodingLayout(scheme=scheme, spans=tuple(spans), categorical=tuple(categorical))


def _encode_into(row: np.ndarray, config: Configuration, space: ConfigSpace, layout: EncodingLayout) -> None:
    for knob, (_, start, stop) in zip(space.knobs, layout.spans):
        value = config[knob.name]
        if layout.scheme == EncodingScheme.RAW:
            row[start] = knob.category_index(value) if not knob.is_numeric else float(value)
        elif layout.scheme == EncodingScheme.UNIT_ONEHOT and not knob.is_numeric:
            row[start:stop] = 0.0
            row[start + knob.category_index(value)] = 1.0
        else:
            row[start] = knob.to_unit(value)


def encode(config: Configuration, space: ConfigSpace, scheme: EncodingScheme) -> EncodedVector:
    """Encode one configuration into a fixed-length vector"""
    config = space.validate(config)
    layout = get_layout(space, scheme)
    row = np.zeros(layout.width)
    _encode_into(row, config, space, layout)
    return EncodedVector(coords=row, layout=layout)


def encode_matrix(configs: Sequence[Configuration], space: ConfigSpace, scheme: EncodingScheme) -> np.ndarray:
    """Encode many (already valid) configurations into an (n, width) matrix"""
    layout = get_layout(space, scheme)
    X = np.zeros((len(configs), layout.width))
    for i, config in enumerate(configs):
        _encode_into(X[i], config, space, layout)
    return X


def _decode_row(row: np.ndarray, space: ConfigSpace, layout: EncodingLayout) -> Configuration:
    config: Configuration = {}
    for knob, (_, start, stop) in zip(space.knobs, layout.spans):
        if layout.scheme == EncodingScheme.RAW:
            if knob.is_numeric:
                number = min(max(float(row[start]), knob.lower), knob.upper)
                if knob.kind == KnobKind.INTEGER:
                    number = int(min(max(np.floor(number + 0.5), knob.lower), knob.upper))
                config[knob.name] = number
            else:
                index = int(np.clip(np.floor(row[start] + 0.5), 0, knob.n_categories - 1))
                config[knob.name] = knob.categories[index]
        elif layout.scheme == EncodingScheme.UNIT_ONEHOT and not knob.is_numeric:
            # argmax picks the lowest index on ties
            config[knob.name] = knob.categories[int(np.argmax(row[start:stop]))]
        else:
            config[knob.name] = knob.from_unit(row[start])
    return config


def decode(vec: EncodedVector, space: ConfigSpace) -> Configuration:
    """Inverse of encode; integers round to nearest then clamp, one-hot uses argmax"""
    expected = get_layout(space, vec.layout.scheme)
    if vec.layout != expected:
        raise SpaceError(f"encoding layout does not match space '{space.name}'")
    return _decode_row(vec.coords, space, expected)


def decode_matrix(X: np.ndarray, space: ConfigSpace, scheme: EncodingScheme) -> List[Configuration]:
    layout = get_layout(space, scheme)
    X = np.atleast_2d(X)
    if X.shape[1] != layout.width:
        raise SpaceError(f"matrix has {X.shape[1]} columns, layout expects {layout.width}")
    return [_decode_row(row, space, layout) for row in X]


def lhs_sample(space: ConfigSpace, n: int, seed: int) -> List[Configuration]:
    """Latin hypercube design: numeric knobs get one sample per equal-width stratum"""
    if n < 1:
        raise SpaceError(f"LHS needs n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    numeric = [k for k in space.knobs if k.is_numeric]
    unit = qmc.LatinHypercube(d=max(len(numeric), 1), seed=rng).random(n)

    columns: Dict[str, List[Any]] = {}
    for j, knob in enumerate(numeric):
        columns[knob.name] = [knob.from_unit(u) for u in unit[:, j]]
    for knob in space.knobs:
        if knob.is_numeric:
            continue
        # cycle a random permutation of category indices, then shuffle rows
        order = rng.permutation(knob.n_categories)
        indices = order[np.arange(n) % knob.n_categories]
        indices = indices[rng.permutation(n)]
        columns[knob.name] = [knob.categories[int(i)] for i in indices]

    return [{k.name: columns[k.name][i] for k in space.knobs} for i in range(n)]


def random_sample(space: ConfigSpace, n: int, seed: Union[int, np.random.Generator]) -> List[Configuration]:
    """Uniform samples over every knob domain"""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    samples: List[Configuration] = []
    for _ in range(max(n, 0)):
        config: Configuration = {}
        for knob in space.knobs:
            if knob.kind == KnobKind.CONTINUOUS:
                config[knob.name] = knob.canonical(float(rng.uniform(knob.lower, knob.upper)))
            elif knob.kind == KnobKind.INTEGER:
                config[knob.name] = int(rng.integers(int(knob.lower), int(knob.upper) + 1))
            else:
                config[knob.name] = knob.categories[int(rng.integers(knob.n_categories))]
        samples.append(config)
    return samples


@dataclass(frozen=True)
class SubspaceCompletion:
    """Fills knobs outside a reduced space with their defaults."""

    full_space: ConfigSpace
    selected: Tuple[str, ...]

    def __call__(self, config: Configuration) -> Configuration:
        return self.complete(config)

    def complete(self, config: Configuration) -> Configuration:
        full = self.full_space.default_configuration()
        for name in self.selected:
            full[name] = config[name]
        return self.full_space.validate(full)

    def restrict(self, config: Configuration) -> Configuration:
        return {name: config[name] for name in self.selected}


def subspace(space: ConfigSpace, selected: Sequence[str]) -> Tuple[ConfigSpace, SubspaceCompletion]:
    """Reduced space over the selected knobs plus a default-filling completion rule"""
    if not selected:
        raise SpaceError("subspace selection is empty")
    wanted = set()
    for name in selected:
        space.knob(name)
        wanted.add(name)
    knobs = tuple(k for k in space.knobs if k.name in wanted)
    reduced = ConfigSpace(name=f"{space.name}[{len(knobs)}]", knobs=knobs)
    if len(knobs) == len(space):
        reduced = space
    logger.info(f"Selected {len(knobs)} of {len(space)} knobs from space '{space.name}'")
    return reduced, SubspaceCompletion(full_space=space, selected=tuple(k.name for k in knobs))
