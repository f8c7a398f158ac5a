"""
Configuration-space module exports
"""
from .space_service import (
    SubspaceCompletion,
    decode,
    decode_matrix,
    encode,
    encode_matrix,
    get_layout,
    lhs_sample,
    load_space,
    parse_space,
    random_sample,
    save_space,
    subspace,
)

__all__ = [
    "SubspaceCompletion",
    "decode",
    "decode_matrix",
    "encode",
    "encode_matrix",
    "get_layout",
    "lhs_sample",
    "load_space",
    "parse_space",
    "random_sample",
    "save_space",
    "subspace",
]
