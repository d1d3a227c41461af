"""Unit conversions used at the configuration and CSV boundaries."""

from __future__ import annotations

import numpy as np

# Zero power is written as this level so CSV cells stay finite.
DBM_FLOOR = -300.0


def db_to_linear(db):
    """Convert decibels to a linear power ratio."""
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    """Convert a linear power ratio to decibels."""
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def dbm_to_watts(dbm):
    """Convert dBm to watts (20 dBm -> 0.1 W)."""
    return db_to_linear(np.asarray(dbm, dtype=float) - 30.0)


def watts_to_dbm(watts):
    """Convert watts to dBm, flooring non-positive powers at ``DBM_FLOOR``."""
    w = np.asarray(watts, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(w > 0, 10.0 * np.log10(np.where(w > 0, w, 1.0)) + 30.0, DBM_FLOOR)
    return np.maximum(out, DBM_FLOOR)
