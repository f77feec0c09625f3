"""dB / linear conversions used throughout the simulator.

Convention: powers are stored as dBm in files and configs, converted to
linear milliwatts at module boundaries.  All summations of powers happen
in linear scale.
"""

import math


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    if mw <= 0.0:
        return -math.inf
    return 10.0 * math.log10(mw)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0.0:
        return -math.inf
    return 10.0 * math.log10(x)
