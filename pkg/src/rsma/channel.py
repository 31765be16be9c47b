"""Channel generation: unit conversions, path loss, user drops.

Seed protocol
-------------
A drop with ``ChannelParams.seed = s`` uses ``numpy.random.default_rng(s)``
(PCG64) and draws, in this order,

1. ``K x 2`` user coordinates, uniform over ``[0, cell_side_m]^2``;
2. ``K`` shadowing samples, ``Normal(0, shadow_sigma_db)`` in dB.

The base station sits at the square's center unless told otherwise, and
distances are floored at 1 m.  Monte-Carlo trial ``t`` of an experiment with
base seed ``b`` uses the seed returned by :func:`trial_seed`, which spawns a
child of ``SeedSequence(b)`` with spawn key ``(t,)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import NetworkInstance

__all__ = [
    "ChannelParams",
    "dbm_to_watt",
    "watt_to_dbm",
    "db_to_linear",
    "linear_to_db",
    "pathloss_gain",
    "drop_positions",
    "drop_users",
    "trial_seed",
    "random_instance",
    "STANDARD_SETUP",
]

MIN_DISTANCE_M = 1.0

# Default system parameters (bandwidth in Hz, powers in dBm, rate in bits/s).
STANDARD_SETUP = {
    "bandwidth": 1e6,
    "sigma2_dbm": -104.0,
    "p_max_dbm": 30.0,
    "r_min": 1e6,
    "theta_dbm": -94.0,
}


@dataclass(frozen=True)
class ChannelParams:
    cell_side_m: float = 300.0
    pathloss_a: float = 128.1
    pathloss_b: float = 37.6
    shadow_sigma_db: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if not self.cell_side_m > 0:
            raise ValueError("cell_side_m must be positive")
        if self.shadow_sigma_db < 0:
            raise ValueError("shadow_sigma_db must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


def dbm_to_watt(x_dbm):
    return 10.0 ** ((np.asarray(x_dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(x_w):
    return 10.0 * np.log10(np.asarray(x_w, dtype=float)) + 30.0


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def pathloss_gain(d_km, shadow_db=0.0, a: float = 128.1, b: float = 37.6):
    """Linear gain for path loss ``a + b log10(d_km)`` plus shadowing in dB."""
    d_km = np.asarray(d_km, dtype=float)
    if np.any(d_km <= 0):
        raise ValueError("distance must be positive")
    loss_db = a + b * np.log10(d_km) + np.asarray(shadow_db, dtype=float)
    return 10.0 ** (-loss_db / 10.0)


def drop_positions(params: ChannelParams, num_users: int):
    """User coordinates (m) and shadowing (dB) following the seed protocol."""
    if num_users < 1:
        raise ValueError("need at least one user")
    rng = np.random.default_rng(params.seed)
    xy = rng.uniform(0.0, params.cell_side_m, size=(num_users, 2))
    shadow = rng.normal(0.0, params.shadow_sigma_db, size=num_users)
    return xy, shadow


def drop_users(
    params: ChannelParams,
    num_users: int,
    bs_position: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """Drop users uniformly in the square cell; return gains sorted ascending."""
    xy, shadow = drop_positions(params, num_users)
    if bs_position is None:
        bs = np.full(2, params.cell_side_m / 2.0)
    else:
        bs = np.asarray(bs_position, dtype=float)
    dist_m = np.maximum(np.hypot(*(xy - bs).T), MIN_DISTANCE_M)
    gains = pathloss_gain(dist_m / 1000.0, shadow, params.pathloss_a, params.pathloss_b)
    return np.sort(gains)


def trial_seed(base_seed: int, trial: int) -> int:
    """64-bit seed of Monte-Carlo trial ``trial`` under base seed ``base_seed``."""
    seq = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(trial),))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def random_instance(
    num_users: int,
    seed: int,
    channel: Optional[ChannelParams] = None,
    *,
    bandwidth: float = STANDARD_SETUP["bandwidth"],
    sigma2_dbm: float = STANDARD_SETUP["sigma2_dbm"],
    p_max_dbm: float = STANDARD_SETUP["p_max_dbm"],
    theta_dbm: float = STANDARD_SETUP["theta_dbm"],
    r_min=STANDARD_SETUP["r_min"],
) -> NetworkInstance:
    """A NetworkInstance with dropped users and the default system parameters."""
    params = channel if channel is not None else ChannelParams()
    params = ChannelParams(
        params.cell_side_m, params.pathloss_a, params.pathloss_b,
        params.shadow_sigma_db, int(seed),
    )
    return NetworkInstance(
        h=drop_users(params, num_users),
        sigma2=float(dbm_to_watt(sigma2_dbm)),
        bandwidth=bandwidth,
        p_max=float(dbm_to_watt(p_max_dbm)),
        theta=float(dbm_to_watt(theta_dbm)),
        r_min=r_min,
    )
