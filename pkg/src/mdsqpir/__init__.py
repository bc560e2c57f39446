"""Quantum private information retrieval from MDS-coded, colluding servers."""

from .gf import FieldElement, FieldSpec, gf, field_for_length
from .codes import GrsCode, CartesianSquareCode
from .stabilizer import CosetLabel, StabilizerSpace
from .protocol import SchemeParams, derive_params, pad_collusion, encode_storage, run_retrieval, scheme_rate

__all__ = [
    "FieldElement",
    "FieldSpec",
    "gf",
    "field_for_length",
    "GrsCode",
    "CartesianSquareCode",
    "CosetLabel",
    "StabilizerSpace",
    "SchemeParams",
    "derive_params",
    "pad_collusion",
    "encode_storage",
    "run_retrieval",
    "scheme_rate",
]
