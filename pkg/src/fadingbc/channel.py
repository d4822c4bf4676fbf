"""Problem instances for the two-user Gaussian fading broadcast channel.

A channel is a pair of discrete fade distributions (receiver 1 sees ``H``,
receiver 2 sees ``G``) and a transmit power ``Q``.  Noise at both receivers
is unit variance, so it carries no parameters.

All types are frozen; operations return new objects.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

PROB_INPUT_TOL = 1e-9
PROB_TOL = 1e-12

CHANNEL_KEYS = ("h_values", "h_probs", "g_values", "g_probs", "power")


class ChannelError(ValueError):
    """Invalid channel description."""


@dataclass(frozen=True)
class FadePmf:
    """Discrete fade distribution of one receiver.

    ``values`` are strictly increasing positive fade coefficients and
    ``probs`` the matching probabilities.  Zero-probability entries are
    allowed; they act as virtual fades.
    """

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        prs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "probs", prs)
        if len(vals) == 0 or len(vals) != len(prs):
            raise ChannelError("values and probs must have equal nonzero length")
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise ChannelError(f"fade values must be positive and finite: {vals}")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ChannelError(f"fade values must be strictly increasing: {vals}")
        if any(p < 0 or not math.isfinite(p) for p in prs):
            raise ChannelError(f"negative probability in {prs}")
        if abs(math.fsum(prs) - 1.0) > PROB_TOL:
            raise ChannelError(f"probabilities sum to {math.fsum(prs):.12g}")

    def __len__(self):
        return len(self.values)

    @cached_property
    def v(self) -> np.ndarray:
        arr = np.array(self.values)
        arr.flags.writeable = False
        return arr

    @cached_property
    def p(self) -> np.ndarray:
        arr = np.array(self.probs)
        arr.flags.writeable = False
        return arr

    @cached_property
    def inv_sq(self) -> np.ndarray:
        """Noise-equivalent powers ``1 / value**2``."""
        arr = 1.0 / self.v**2
        arr.flags.writeable = False
        return arr

    def expect(self, fn) -> float:
        """``sum_i p_i * fn(v_i)`` for a vectorised ``fn``."""
        return float(np.dot(self.p, fn(self.v)))


@dataclass(frozen=True)
class Channel:
    fade1: FadePmf
    fade2: FadePmf
    power: float

    def __post_init__(self):
        power = float(self.power)
        if not (math.isfinite(power) and power > 0):
            raise ChannelError(f"power must be positive and finite, got {self.power}")
        object.__setattr__(self, "power", power)

    @property
    def n(self) -> int:
        return len(self.fade1)

    @property
    def m(self) -> int:
        return len(self.fade2)

    def to_dict(self) -> dict:
        return {
            "h_values": list(self.fade1.values),
            "h_probs": list(self.fade1.probs),
            "g_values": list(self.fade2.values),
            "g_probs": list(self.fade2.probs),
            "power": self.power,
        }


@dataclass(frozen=True)
class BoundQuery:
    channel: Channel
    weight: float = field(default=1.0)

    def __post_init__(self):
        w = float(self.weight)
        if not w >= 1.0:
            raise ChannelError(f"weight must be >= 1, got {self.weight}")
        object.__setattr__(self, "weight", w)


def _normalise_pmf(values: Sequence[float], probs: Sequence[float], label: str) -> FadePmf:
    values = [float(v) for v in values]
    probs = [float(p) for p in probs]
    if len(values) == 0 or len(values) != len(probs):
        raise ChannelError(f"{label}: values and probs must have equal nonzero length")
    for v in values:
        if not (math.isfinite(v) and v > 0):
            raise ChannelError(f"{label}: nonpositive fade value {v}")
    for p in probs:
        if not math.isfinite(p) or p < 0:
            raise ChannelError(f"{label}: negative probability {p}")
    total = math.fsum(probs)
    if abs(total - 1.0) > PROB_INPUT_TOL:
        raise ChannelError(f"{label}: probabilities sum to {total:.12g}")

    merged: dict[float, list[float]] = {}
    for v, p in zip(values, probs):
        merged.setdefault(v, []).append(p)
    vals = sorted(merged)
    prs = [math.fsum(merged[v]) / total for v in vals]
    return FadePmf(tuple(vals), tuple(prs))


def validate_channel(h_values, h_probs, g_values, g_probs, power) -> Channel:
    """Build a :class:`Channel` from raw lists.

    Fade lists are sorted ascending with their probabilities, duplicate fade
    values are merged by summing probabilities, and probabilities are
    renormalised after a ``1e-9`` input tolerance check.
    """
    try:
        power = float(power)
    except (TypeError, ValueError) as exc:
        raise ChannelError(f"invalid power {power!r}") from exc
    if not (math.isfinite(power) and power > 0):
        raise ChannelError(f"nonpositive power {power}")
    fade1 = _normalise_pmf(h_values, h_probs, "H")
    fade2 = _normalise_pmf(g_values, g_probs, "G")
    return Channel(fade1, fade2, power)


def channel_from_dict(spec: dict) -> Channel:
    """Parse the JSON channel-file object (exact key set required)."""
    if not isinstance(spec, dict):
        raise ChannelError("channel spec must be a JSON object")
    unknown = sorted(set(spec) - set(CHANNEL_KEYS))
    if unknown:
        raise ChannelError(f"unknown keys in channel spec: {unknown}")
    missing = [k for k in CHANNEL_KEYS if k not in spec]
    if missing:
        raise ChannelError(f"missing keys in channel spec: {missing}")
    for key in CHANNEL_KEYS[:4]:
        if not isinstance(spec[key], list):
            raise ChannelError(f"{key} must be an array of numbers")
    return validate_channel(spec["h_values"], spec["h_probs"],
                            spec["g_values"], spec["g_probs"], spec["power"])


def load_channel(path) -> Channel:
    with open(path, encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ChannelError(f"malformed JSON in {path}: {exc}") from exc
    return channel_from_dict(spec)


def add_virtual_fades(pmf: FadePmf, extra_values: Iterable[float]) -> FadePmf:
    """Insert zero-probability fades into ``pmf``.

    Every expectation over the distribution is unchanged.
    """
    extra = [float(v) for v in extra_values]
    if not extra:
        return pmf
    for v in extra:
        if not (math.isfinite(v) and v > 0):
            raise ChannelError(f"nonpositive virtual fade {v}")
    existing = set(pmf.values)
    seen: set[float] = set()
    for v in extra:
        if v in existing or v in seen:
            raise ChannelError(f"virtual fade {v} duplicates an existing value")
        seen.add(v)
    pairs = sorted(list(zip(pmf.values, pmf.probs)) + [(v, 0.0) for v in extra])
    return FadePmf(tuple(v for v, _ in pairs), tuple(p for _, p in pairs))


def augment_channel(channel: Channel, augment_h=(), augment_g=()) -> Channel:
    return Channel(add_virtual_fades(channel.fade1, augment_h),
                   add_virtual_fades(channel.fade2, augment_g),
                   channel.power)


def swap_users(query: BoundQuery) -> BoundQuery:
    """Exchange the receivers; used for the permuted bound ``w R1 + R2``."""
    ch = query.channel
    return BoundQuery(Channel(ch.fade2, ch.fade1, ch.power), query.weight)


def swap_channel(channel: Channel) -> Channel:
    return Channel(channel.fade2, channel.fade1, channel.power)
