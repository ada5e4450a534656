"""Dictionary-indexed SURF descriptors with exact SAD matching."""

from ._core import (
    DEFAULT_SAD_THRESHOLD,
    DEFAULT_TOLERANCE,
    DESCRIPTOR_SIZE,
    Dictionary,
    KeypointRecord,
    SurfdictError,
    brute_force_match,
    build_dictionary,
    combinations,
    extract_features,
    index_directory,
    index_image,
    load_pgm,
    match,
    query,
    sad,
    stats,
    verify,
)

__all__ = [
    "DEFAULT_SAD_THRESHOLD",
    "DEFAULT_TOLERANCE",
    "DESCRIPTOR_SIZE",
    "Dictionary",
    "KeypointRecord",
    "SurfdictError",
    "brute_force_match",
    "build_dictionary",
    "combinations",
    "extract_features",
    "index_directory",
    "index_image",
    "load_pgm",
    "match",
    "query",
    "sad",
    "stats",
    "verify",
]
