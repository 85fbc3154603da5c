"""Bit-stable text formatting shared by the CSV and JSON writers."""

import json


def fmt_float(x: float) -> str:
    # 17 significant digits round-trips a double; +0.0 folds -0.0 into 0.0
    return format(float(x) + 0.0, ".16e")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def complex_pair(z: complex) -> dict:
    return {"re": float(z.real) + 0.0, "im": float(z.imag) + 0.0}
