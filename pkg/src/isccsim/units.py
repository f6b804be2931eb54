"""dB/dBm/frequency conversions. All internal math is SI (W, Hz, s, bits, cycles)."""

import re

_FREQ_SUFFIX = {
    "hz": 1.0,
    "khz": 1e3,
    "mhz": 1e6,
    "ghz": 1e9,
    "thz": 1e12,
}


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise ValueError("linear value must be positive for dB conversion")
    import math

    return 10.0 * math.log10(x)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watts_to_dbm(w: float) -> float:
    return linear_to_db(w) + 30.0


def parse_hz(value) -> float:
    """Accept a plain number (Hz) or a string like '42 GHz' / '35MHz'."""
    if isinstance(value, (int, float)):
        return float(value)
    m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*([a-zA-Z]*)\s*", str(value))
    if not m:
        raise ValueError(f"cannot parse frequency: {value!r}")
    num, suffix = m.groups()
    scale = _FREQ_SUFFIX.get(suffix.lower() or "hz")
    if scale is None:
        raise ValueError(f"unknown frequency unit {suffix!r} in {value!r}")
    return float(num) * scale
