"""Shared domain types, configuration validation and seeded random streams."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

PHY_MODES = ("sinr", "bernoulli")
PROTOCOLS = ("random_push", "mobile_push")
MOBILITY = ("edge_stay", "torus_wrap", "static")


class ConfigError(ValueError):
    """Raised when a configuration field is out of range. ``field`` names it."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class Injection:
    """Message injection schedule.

    ``simultaneous`` injects every message at t=0. ``late`` injects the first
    k-1 messages at t=0 and the last one (the probe, M*) at the first slot
    boundary where every node holds at least ``w`` messages.
    """

    kind: str = "simultaneous"
    w: int = 0

    @classmethod
    def parse(cls, text):
        if isinstance(text, Injection):
            return text
        if isinstance(text, dict):
            return cls(kind=text.get("kind", "simultaneous"), w=int(text.get("w", 0)))
        text = str(text).strip()
        if text == "simultaneous":
            return cls()
        if text.startswith("late:") or text.startswith("late_star:"):
            try:
                w = int(text.split(":", 1)[1])
            except ValueError:
                raise ConfigError("injection", f"bad threshold in {text!r}") from None
            return cls(kind="late", w=w)
        raise ConfigError("injection", f"unknown schedule {text!r}")

    def __str__(self):
        return "simultaneous" if self.kind == "simultaneous" else f"late:{self.w}"


@dataclass(frozen=True)
class SimConfig:
    """Full experiment description.

    ``P=None`` means the transmit power is calibrated at validation time so a
    lone pair at the typical nearest-receiver distance sqrt(1/(theta*n)) sees
    SINR = 10*beta.
    """

    n: int = 256
    k: int = 1
    v: float = 1 / 3
    theta: float = 0.3
    phy_mode: str = "bernoulli"
    P: Optional[float] = None
    eta: float = 1.0
    alpha: float = 4.0
    beta: float = 2.0
    c_success: float = 0.5
    protocol: str = "mobile_push"
    mobility: str = "edge_stay"
    injection: Injection = field(default_factory=Injection)
    seed: int = 0
    max_slots: int = 100_000
    sample_stride: Optional[int] = None
    record_subsquares: bool = False

    @property
    def s(self):
        return int(round(1.0 / self.v))

    @property
    def m(self):
        return self.s * self.s

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["injection"] = str(self.injection)
        return d

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown field")
        data = dict(data)
        if "injection" in data:
            data["injection"] = Injection.parse(data["injection"])
        return cls(**data)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"malformed JSON ({exc.msg})") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "expected a JSON object")
        return cls.from_dict(data)


def _require(cond, name, message):
    if not cond:
        raise ConfigError(name, message)


def _is_int(x):
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


def default_power(n, theta, alpha, beta, eta):
    """Power such that a lone pair at distance sqrt(1/(theta*n)) has SINR = 10*beta."""
    r0 = math.sqrt(1.0 / (theta * n))
    return 10.0 * beta * eta * r0 ** alpha


def validate(config: SimConfig) -> SimConfig:
    """Check every field and return the normalized config.

    The velocity is snapped to 1/round(1/v) so the subsquare grid is exact.
    Validating a normalized config returns it unchanged.
    """
    c = config
    _require(_is_int(c.n) and c.n >= 1, "n", f"must be a positive integer, got {c.n!r}")
    _require(_is_int(c.k) and 1 <= c.k <= c.n, "k", f"must satisfy 1 <= k <= n={c.n}, got {c.k!r}")
    _require(isinstance(c.v, (int, float)) and 0 < c.v <= 1 / 3 + 1e-12,
             "v", f"must lie in (0, 1/3], got {c.v!r}")
    s = int(round(1.0 / c.v))
    _require(0 < c.theta < 0.5, "theta", f"must lie in (0, 0.5), got {c.theta!r}")
    _require(c.phy_mode in PHY_MODES, "phy_mode", f"must be one of {PHY_MODES}, got {c.phy_mode!r}")
    _require(c.protocol in PROTOCOLS, "protocol", f"must be one of {PROTOCOLS}, got {c.protocol!r}")
    _require(c.mobility in MOBILITY, "mobility", f"must be one of {MOBILITY}, got {c.mobility!r}")
    _require(c.alpha > 2, "alpha", f"path-loss exponent must exceed 2, got {c.alpha!r}")
    _require(c.beta > 0, "beta", f"must be positive, got {c.beta!r}")
    _require(c.eta >= 0, "eta", f"must be non-negative, got {c.eta!r}")
    _require(c.P is None or c.P > 0, "P", f"must be positive, got {c.P!r}")
    _require(0 < c.c_success <= 1, "c_success", f"must lie in (0, 1], got {c.c_success!r}")
    _require(_is_int(c.seed) and 0 <= c.seed < 2 ** 64, "seed", f"must be a 64-bit unsigned integer, got {c.seed!r}")
    _require(_is_int(c.max_slots) and c.max_slots >= 0, "max_slots", f"must be a non-negative integer, got {c.max_slots!r}")
    _require(c.sample_stride is None or (_is_int(c.sample_stride) and c.sample_stride >= 1),
             "sample_stride", f"must be a positive integer, got {c.sample_stride!r}")
    inj = Injection.parse(c.injection)
    _require(inj.kind in ("simultaneous", "late"), "injection", f"unknown schedule {inj.kind!r}")
    if inj.kind == "late":
        _require(c.k >= 2, "injection", "late injection needs k >= 2")
        _require(1 <= inj.w <= c.k - 1, "injection", f"threshold w must lie in [1, k-1], got {inj.w}")

    P = c.P if c.P is not None else default_power(c.n, c.theta, c.alpha, c.beta, max(c.eta, 1e-300))
    return dataclasses.replace(c, v=1.0 / s, P=float(P), injection=inj)


def derive_stream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for ``(seed, label)``.

    The label is hashed with BLAKE2b (16-byte digest) into four 32-bit words
    which are appended to the root seed's two 32-bit words as SeedSequence
    entropy. Equal inputs give equal streams on every platform.
    """
    seed = int(seed) % 2 ** 64
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=16).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    entropy = [seed & 0xFFFFFFFF, seed >> 32] + words
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, label: str) -> int:
    """64-bit child seed, used for sweep fan-out."""
    return int(derive_stream(seed, label).integers(0, 2 ** 63, dtype=np.int64))


@dataclass(frozen=True)
class MessageId:
    index: int
    source: int


@dataclass
class NodeState:
    """One node's view: grid cell, position, own message and possessed set."""

    id: int
    cell: tuple
    pos: tuple
    own_msg: Optional[int] = None
    msgs: set = field(default_factory=set)
