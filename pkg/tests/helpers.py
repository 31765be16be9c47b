"""Shared instance factories for the test-suite."""

import numpy as np

from rsma import NetworkInstance, dbm_to_watt

SIGMA2 = float(dbm_to_watt(-104.0))
THETA = float(dbm_to_watt(-94.0))


def table_instance(h, r=1e6, p_max=1.0, theta=THETA, bandwidth=1e6):
    return NetworkInstance(
        h=np.sort(np.asarray(h, dtype=float)), sigma2=SIGMA2, bandwidth=bandwidth,
        p_max=p_max, theta=theta, r_min=r,
    )


def unit_instance(h, r, p_max=1.0, theta=0.0, sigma2=1.0, bandwidth=1.0):
    """Dimensionless instance (B = 1, sigma^2 = 1) for hand-checkable values."""
    return NetworkInstance(
        h=np.asarray(h, dtype=float), sigma2=sigma2, bandwidth=bandwidth,
        p_max=p_max, theta=theta, r_min=r,
    )


def gains_strategy(st, k):
    """Ascending gains spanning cell-edge to near-BS users."""
    return st.lists(
        st.floats(min_value=-12.0, max_value=-8.0), min_size=k, max_size=k
    ).map(lambda e: np.sort(10.0 ** np.asarray(e)))
