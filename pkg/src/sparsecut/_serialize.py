"""Deterministic JSON encoding with exact rationals as ``"p/q"`` strings."""

from __future__ import annotations

import json
import math
from fractions import Fraction


def encode(value):
    if value is None:
        return None
    if isinstance(value, bool):
        return value
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return {"float": repr(value)}
    if isinstance(value, int):
        return value
    if isinstance(value, (frozenset, set)):
        return sorted(encode(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if hasattr(value, "to_dict"):
        return encode(value.to_dict())
    return value


def decode_rational(text):
    if text == "inf":
        return math.inf
    return Fraction(text)


def dumps(obj) -> str:
    return json.dumps(encode(obj), sort_keys=True, indent=2) + "\n"
