"""Problem and solution types shared by every solver.

Users are indexed from 0 and always sorted by ascending channel gain, so
user 0 is the weakest receiver and user ``K - 1`` the strongest.  All
quantities are linear: watts for powers, bits/s for rates, Hz for bandwidth.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "RsmaError",
    "Infeasible",
    "RateCapViolation",
    "PowerBudgetInfeasible",
    "EmptyP0Range",
    "NetworkInstance",
    "PowerAllocation",
    "SolverParams",
    "RsmaSolution",
    "common_rate",
    "per_user_common_rates",
    "private_rate",
    "private_rates",
    "sic_feasible",
]


class RsmaError(Exception):
    """Base class for solver errors."""


class Infeasible(RsmaError):
    """No allocation satisfies the constraints.

    ``constraint`` names the binding (or most violated) constraint and
    ``details`` carries whatever numbers the raiser had at hand.
    """

    def __init__(self, message: str, constraint: str = "unknown", **details):
        super().__init__(message)
        self.constraint = constraint
        self.details = details


class RateCapViolation(Infeasible):
    """A common-rate share exceeds the user's demand (a_k > R_k)."""


class PowerBudgetInfeasible(Infeasible):
    """Minimum private powers do not fit in the remaining budget."""


class EmptyP0Range(Infeasible):
    """The SIC lower bound on the common power exceeds the power budget."""


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.size == 0:
        raise ValueError(f"{name} must contain at least one user")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NetworkInstance:
    """Immutable statement of one downlink sum-rate problem.

    Parameters
    ----------
    h : array_like
        Linear channel gains, one per user, nondecreasing.
    sigma2 : float
        Noise power in watts.
    bandwidth : float
        Bandwidth in Hz.
    p_max : float
        Total transmit power budget in watts.
    theta : float
        SIC detection threshold in watts.
    r_min : array_like or float
        Minimum rate demand per user in bits/s.  A scalar is broadcast.
    """

    h: np.ndarray
    sigma2: float
    bandwidth: float
    p_max: float
    theta: float
    r_min: np.ndarray = field(default=None)

    def __post_init__(self):
        h = _frozen_array(self.h, "h")
        r = self.r_min if self.r_min is not None else 0.0
        r = np.broadcast_to(np.asarray(r, dtype=float), h.shape)
        r = _frozen_array(r, "r_min")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "r_min", r)
        for name in ("sigma2", "bandwidth", "p_max", "theta"):
            object.__setattr__(self, name, float(getattr(self, name)))

        if np.any(h <= 0):
            raise ValueError("channel gains must be positive")
        if np.any(np.diff(h) < 0):
            raise ValueError("channel gains must be sorted in ascending order")
        if self.sigma2 <= 0 or self.bandwidth <= 0 or self.p_max <= 0:
            raise ValueError("sigma2, bandwidth and p_max must be positive")
        if self.theta < 0:
            raise ValueError("theta must be nonnegative")
        if np.any(r < 0):
            raise ValueError("rate demands must be nonnegative")

    @property
    def num_users(self) -> int:
        return int(self.h.size)

    @property
    def noise_over_gain(self) -> np.ndarray:
        """sigma^2 / h_k for every user, in watts."""
        return self.sigma2 / self.h

    def equal_demand(self, tol: float = 1e-6) -> bool:
        return bool(np.ptp(self.r_min) <= tol)

    def replace(self, **changes) -> "NetworkInstance":
        """Return a copy with some fields changed (validated again)."""
        return replace(self, **changes)

    def __repr__(self) -> str:
        return (
            f"NetworkInstance(h={self.h.tolist()}, sigma2={self.sigma2!r}, "
            f"bandwidth={self.bandwidth!r}, p_max={self.p_max!r}, "
            f"theta={self.theta!r}, r_min={self.r_min.tolist()})"
        )


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Common-message power ``p0`` plus one private power per user."""

    p0: float
    p_priv: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p0", float(self.p0))
        p = np.array(self.p_priv, dtype=float).reshape(-1)
        p.setflags(write=False)
        object.__setattr__(self, "p_priv", p)

    @property
    def total(self) -> float:
        return self.p0 + float(np.sum(self.p_priv))


@dataclass(frozen=True)
class SolverParams:
    """Numerical knobs of the RSMA solver.

    ``xi`` is the common-power search step in watts; ``None`` means one
    two-thousandth of the admissible p0 range.
    """

    xi: Optional[float] = None
    eps_rate: float = 1e-6
    eps_power: float = 1e-12
    root_tol: float = 1e-10

    def __post_init__(self):
        if self.xi is not None and not self.xi > 0:
            raise ValueError("xi must be positive")
        for name in ("eps_rate", "eps_power", "root_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True, eq=False)
class RsmaSolution:
    """Optimal RSMA operating point.

    ``rates`` holds the common-rate shares after the residual common rate
    has been credited to ``k_star``, so ``rates.sum() == common_rate_c1``.
    """

    rates: np.ndarray
    powers: PowerAllocation
    k_star: int
    common_rate_c1: float
    user_total_rates: np.ndarray
    sum_rate: float
    fast_path: str = "general"

    def as_record(self) -> dict:
        return {
            "rates_bps": [float(x) for x in self.rates],
            "p0_w": self.powers.p0,
            "p_priv_w": [float(x) for x in self.powers.p_priv],
            "k_star": int(self.k_star),
            "common_rate_bps": self.common_rate_c1,
            "user_total_rates_bps": [float(x) for x in self.user_total_rates],
            "sum_rate_bps": self.sum_rate,
            "path": self.fast_path,
        }


def _rate(bandwidth: float, snr) -> np.ndarray:
    return bandwidth * np.log2(1.0 + snr)


def per_user_common_rates(inst: NetworkInstance, p: PowerAllocation) -> np.ndarray:
    """Rate at which each user can decode the common message."""
    s = float(np.sum(p.p_priv))
    return _rate(inst.bandwidth, inst.h * p.p0 / (inst.h * s + inst.sigma2))


def common_rate(inst: NetworkInstance, p: PowerAllocation) -> float:
    """Common-message rate, limited by the weakest user (index 0)."""
    h1 = inst.h[0]
    s = float(np.sum(p.p_priv))
    return float(_rate(inst.bandwidth, h1 * p.p0 / (h1 * s + inst.sigma2)))


def private_rates(inst: NetworkInstance, p: PowerAllocation) -> np.ndarray:
    """Private rate of every user, other private messages treated as noise."""
    pk = p.p_priv
    interference = np.sum(pk) - pk
    return _rate(inst.bandwidth, inst.h * pk / (inst.h * interference + inst.sigma2))


def private_rate(inst: NetworkInstance, p: PowerAllocation, k: int) -> float:
    return float(private_rates(inst, p)[k])


def sic_feasible(inst: NetworkInstance, p: PowerAllocation, eps_power: float = 1e-12) -> bool:
    """Whether the common message can be cancelled before private decoding."""
    gap = p.p0 - float(np.sum(p.p_priv))
    return gap >= (inst.theta + inst.sigma2) / inst.h[0] - eps_power


def as_vector(values: Sequence[float] | np.ndarray, k: int, name: str = "a") -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size != k:
        raise ValueError(f"{name} must have {k} entries, got {arr.size}")
    return arr
