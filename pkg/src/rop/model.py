"""Domain types and instantaneous link formulas for the ROP spectrum-sharing model.

A primary transmitter (PT) serves a primary receiver (PR). A passive tag
(ST) harvests part of the PT signal, modulates the rest and reflects it to a
reader (SR). Everything here works on channel *power* gains of one fading
block; the array-backed :class:`ChannelSample` and :class:`Profile` let the
same formulas run over a whole Monte Carlo population through numpy
broadcasting.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence, Union

import numpy as np

__all__ = [
    "ChannelState",
    "ChannelSample",
    "SystemParams",
    "BlockDecision",
    "Profile",
    "EnergyModel",
    "as_sample",
    "rate_factor",
    "sinr_pr",
    "snr_sr",
    "secondary_rate",
    "primary_rate",
    "harvest_satisfied",
    "rate_margin",
    "rate_floor",
    "circuit_floor",
]


def _scalar(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


@dataclass(frozen=True)
class ChannelState:
    """Channel power gains of a single fading block."""

    h1: float  # PT -> PR
    g1: float  # ST -> SR
    f: float  # PT -> ST
    h2: float  # PT -> SR, unused by every formula (ideal SIC at the SR)
    g2: float  # ST -> PR

    def __post_init__(self):
        for name in ("h1", "g1", "f", "h2", "g2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"channel gain {name}={v!r} must be finite and >= 0")


@dataclass(frozen=True)
class ChannelSample:
    """A population of fading blocks stored column-wise.

    Attribute names match :class:`ChannelState`, so every formula in this
    module accepts either.
    """

    h1: np.ndarray
    g1: np.ndarray
    f: np.ndarray
    h2: np.ndarray
    g2: np.ndarray

    def __post_init__(self):
        n = None
        for name in ("h1", "g1", "f", "h2", "g2"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise ValueError("all gain arrays must have the same length")
            if not np.all(np.isfinite(arr) & (arr >= 0.0)):
                raise ValueError(f"channel gains {name} must be finite and >= 0")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_states(cls, states: Sequence[ChannelState]) -> "ChannelSample":
        cols = {k: np.array([getattr(s, k) for s in states], dtype=float)
                for k in ("h1", "g1", "f", "h2", "g2")}
        return cls(**cols)

    def __len__(self) -> int:
        return self.h1.size

    def __getitem__(self, i) -> Union[ChannelState, "ChannelSample"]:
        if isinstance(i, (int, np.integer)):
            return ChannelState(float(self.h1[i]), float(self.g1[i]), float(self.f[i]),
                                float(self.h2[i]), float(self.g2[i]))
        return ChannelSample(self.h1[i], self.g1[i], self.f[i], self.h2[i], self.g2[i])

    def __iter__(self) -> Iterator[ChannelState]:
        for i in range(len(self)):
            yield self[i]


def as_sample(blocks) -> ChannelSample:
    """Coerce a list of :class:`ChannelState` (or a single one) to a sample."""
    if isinstance(blocks, ChannelSample):
        return blocks
    if isinstance(blocks, ChannelState):
        return ChannelSample.from_states([blocks])
    return ChannelSample.from_states(list(blocks))


@dataclass(frozen=True)
class SystemParams:
    """Noise powers, energy-model constants, QoS targets and power budgets.

    Defaults follow the numerical setup used throughout: unit noise powers,
    unit harvesting efficiency and unit rate-to-energy constant. The circuit
    powers and budgets have no published values; the ones here are ours.
    """

    sigma_pr_sq: float = 1.0
    sigma_sr_sq: float = 1.0
    eta_st: float = 1.0
    eps_st: float = 0.1
    eps_b: float = 0.1
    u: float = 1.0
    gamma: float = 1.0
    p_pk: float = 10.0
    p_av: float = 10.0
    eps_out: float = 0.1

    def __post_init__(self):
        def check(name, ok, what):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and not isinstance(v, bool)):
                raise ValueError(f"{name} must be a number, got {v!r}")
            if math.isnan(v) or not ok(v):
                raise ValueError(f"{name}={v!r} must be {what}")

        for name in ("sigma_pr_sq", "sigma_sr_sq"):
            check(name, lambda v: 0 < v < math.inf, "finite and > 0")
        check("eta_st", lambda v: 0 < v <= 1, "in (0, 1]")
        for name in ("eps_st", "eps_b", "u", "gamma"):
            check(name, lambda v: 0 <= v < math.inf, "finite and >= 0")
        # p_av may be +inf: a budget that never binds.
        check("p_pk", lambda v: 0 < v < math.inf, "finite and > 0")
        check("p_av", lambda v: v > 0, "> 0")
        check("eps_out", lambda v: 0 <= v <= 1, "in [0, 1]")

    def with_(self, **overrides) -> "SystemParams":
        return replace(self, **overrides)


class EnergyModel(enum.Enum):
    IDEAL = "ideal"
    PRACTICAL = "practical"


@dataclass(frozen=True)
class BlockDecision:
    p: float
    alpha: float
    secondary_active: bool = True

    def __post_init__(self):
        if not (self.p >= 0 and math.isfinite(self.p)):
            raise ValueError(f"power p={self.p!r} must be finite and >= 0")
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"reflection coefficient alpha={self.alpha!r} outside [0, 1]")


@dataclass(frozen=True)
class Profile:
    """Per-block decisions for a whole sample, stored column-wise.

    ``outage`` is the primary outage flag as booked by the solver that
    produced the profile (see the solver modules for the exact rule).
    """

    p: np.ndarray
    alpha: np.ndarray
    secondary_active: np.ndarray
    outage: np.ndarray = field(default=None)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        n = p.size
        alpha = np.broadcast_to(np.asarray(self.alpha, dtype=float), (n,)).copy()
        active = np.broadcast_to(np.asarray(self.secondary_active, dtype=bool), (n,)).copy()
        out = (np.zeros(n, dtype=bool) if self.outage is None
               else np.broadcast_to(np.asarray(self.outage, dtype=bool), (n,)).copy())
        for name, arr in (("p", p), ("alpha", alpha), ("secondary_active", active),
                          ("outage", out)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.p.size

    def __getitem__(self, i: int) -> BlockDecision:
        return BlockDecision(float(self.p[i]), float(self.alpha[i]), bool(self.secondary_active[i]))

    def __iter__(self) -> Iterator[BlockDecision]:
        for i in range(len(self)):
            yield self[i]

    @property
    def mean_power(self) -> float:
        return float(np.mean(self.p)) if len(self) else 0.0

    @property
    def outage_probability(self) -> float:
        return float(np.mean(self.outage)) if len(self) else 0.0

    def capacity(self, ch, sp: SystemParams) -> float:
        """Empirical ergodic capacity in bits per channel use."""
        if not len(self):
            return 0.0
        return float(np.mean(secondary_rate(as_sample(ch), self, sp)))


def rate_factor(gamma: float) -> float:
    """SINR needed for a primary rate of ``gamma`` bits: 2**gamma - 1."""
    return math.expm1(gamma * math.log(2.0))


def _alpha_eff(d):
    return np.where(np.asarray(d.secondary_active, dtype=bool), d.alpha, 0.0)


def sinr_pr(ch, d, sp: SystemParams):
    """Instantaneous SINR at the primary receiver.

    The reflected tag signal is interference for the PR; an inactive tag
    reflects nothing.
    """
    a = _alpha_eff(d)
    return _scalar(ch.h1 * d.p / (ch.g2 * a * ch.f * d.p + sp.sigma_pr_sq))


def snr_sr(ch, d, sp: SystemParams):
    """Instantaneous SNR at the reader after cancelling the primary signal."""
    val = ch.g1 * np.asarray(d.alpha, dtype=float) * ch.f * d.p / sp.sigma_sr_sq
    return _scalar(np.where(np.asarray(d.secondary_active, dtype=bool), val, 0.0))


def secondary_rate(ch, d, sp: SystemParams):
    return _scalar(np.log2(1.0 + np.asarray(snr_sr(ch, d, sp))))


def primary_rate(ch, d, sp: SystemParams):
    return _scalar(np.log2(1.0 + np.asarray(sinr_pr(ch, d, sp))))


def harvest_satisfied(ch, d, sp: SystemParams, em: EnergyModel = EnergyModel.IDEAL):
    """Whether the tag harvests enough power to run its circuit.

    Ideal model: a fixed circuit power ``eps_st``. Practical model: a static
    part ``eps_b`` plus ``u`` times the backscatter rate in bits.
    """
    alpha = np.asarray(d.alpha, dtype=float)
    harvested = sp.eta_st * (1.0 - alpha) * ch.f * d.p
    if em is EnergyModel.IDEAL:
        need = sp.eps_st
    else:
        need = sp.eps_b + sp.u * np.log2(1.0 + ch.g1 * alpha * ch.f * d.p / sp.sigma_sr_sq)
    return _scalar(harvested >= need)


def rate_margin(ch, alpha, sp: SystemParams):
    """h1 - (2**gamma - 1) g2 alpha f; the rate target is reachable iff > 0."""
    return _scalar(ch.h1 - rate_factor(sp.gamma) * ch.g2 * alpha * ch.f)


def rate_floor(ch, alpha, sp: SystemParams):
    """Least power meeting the primary rate target at a fixed alpha.

    ``inf`` where the target is unreachable at any power (margin <= 0),
    except for gamma = 0 where the floor is 0.
    """
    c = rate_factor(sp.gamma)
    margin = np.asarray(rate_margin(ch, alpha, sp), dtype=float)
    if c == 0.0:
        return _scalar(np.zeros_like(margin))
    with np.errstate(divide="ignore"):
        out = np.where(margin > 0, c * sp.sigma_pr_sq / np.where(margin > 0, margin, 1.0), np.inf)
    return _scalar(out)


def circuit_floor(ch, alpha, sp: SystemParams, eps=None):
    """Least power powering the tag circuit (ideal model) at a fixed alpha."""
    eps = sp.eps_st if eps is None else eps
    denom = sp.eta_st * (1.0 - np.asarray(alpha, dtype=float)) * ch.f
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(denom > 0, eps / np.where(denom > 0, denom, 1.0), np.inf if eps > 0 else 0.0)
    return _scalar(out)
