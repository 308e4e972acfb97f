"""Simulation configuration: protocol parameters plus simulator knobs.

Config files are plain "KEY = value" text. Keys are case insensitive and
match the protocol parameter names (IPI, MINIMUM_LWB_ROUND, ...). Durations
accept the suffixes s, ms and us; a bare number means seconds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .units import US_PER_MS, US_PER_S, format_duration, parse_duration

log = logging.getLogger(__name__)

POLICY_CAPTURE = "capture"
POLICY_COLLISION = "collision"

TRIGGER_SLOTS = "slots"
TRIGGER_ROUNDS = "rounds"

# One stabilization or cool-off round always spans one second.
SHORT_ROUND_US = US_PER_S


@dataclass
class SimConfig:
    """All tunables for one run. Durations are integer microseconds."""

    ipi: int = 10 * US_PER_S
    minimum_lwb_round: int = 5 * US_PER_S
    cooloff_period: int = 10 * US_PER_S
    stabilization_period: int = 10 * US_PER_S
    max_payload_len: int = 40
    sink_node_id: int = 1
    max_node_number: int = 150
    forwarder_selection: bool = False
    glossy_guard_time: int = 2 * US_PER_MS
    slot_length: int = 15 * US_PER_MS
    sync_slot_length: int | None = None
    loss_probability: float = 0.0
    drift_ppm_range: tuple[float, float] = (0.0, 0.0)
    contention_policy: str = POLICY_CAPTURE
    rr_reduction_trigger: str = TRIGGER_SLOTS
    queue_capacity: int = 8
    seed: int = 1
    duration: int = 60 * US_PER_S

    def __post_init__(self) -> None:
        if self.sync_slot_length is None:
            self.sync_slot_length = self.slot_length

    @property
    def mode(self) -> str:
        return "fs-lwb" if self.forwarder_selection else "lwb"

    @property
    def rr_group_size(self) -> int:
        """Slots per request group: request/reply pairs, plus an announce
        slot when forwarder selection is on."""
        return 3 if self.forwarder_selection else 2

    def initial_rr_slots(self) -> int:
        """Request/reply slots announced at the start of stabilization.

        As many slots as fit into a one second round after the sync slot,
        rounded down to a whole group, but never below one group.
        """
        avail = (SHORT_ROUND_US - self.sync_slot_length) // self.slot_length
        group = self.rr_group_size
        return max(group, avail - avail % group)

    def data_slot_capacity(self) -> int:
        """Data slots that fit into one operational round after the sync
        slot and the minimum request group."""
        used = self.sync_slot_length + self.rr_group_size * self.slot_length
        return max(0, (self.minimum_lwb_round - used) // self.slot_length)

    def validate(self) -> None:
        problems: list[str] = []
        if self.ipi < self.minimum_lwb_round:
            problems.append(
                f"IPI ({format_duration(self.ipi)}) must be at least "
                f"MINIMUM_LWB_ROUND ({format_duration(self.minimum_lwb_round)})"
            )
        if self.minimum_lwb_round <= 0:
            problems.append("MINIMUM_LWB_ROUND must be positive")
        if self.slot_length <= 0:
            problems.append("SLOT_LENGTH must be positive")
        if self.sync_slot_length is not None and self.sync_slot_length <= 0:
            problems.append("SYNC_SLOT_LENGTH must be positive")
        if self.cooloff_period < 0 or self.stabilization_period < 0:
            problems.append("phase periods must not be negative")
        if self.max_payload_len < 0:
            problems.append("MAX_PAYLOAD_LEN must not be negative")
        if not 1 <= self.sink_node_id <= self.max_node_number:
            problems.append(
                f"SINK_NODE_ID {self.sink_node_id} outside [1, {self.max_node_number}]"
            )
        if self.glossy_guard_time < 0:
            problems.append("GLOSSY_GUARD_TIME must not be negative")
        if not 0.0 <= self.loss_probability < 1.0:
            problems.append("LOSS_PROBABILITY must lie in [0, 1)")
        lo, hi = self.drift_ppm_range
        if lo > hi:
            problems.append("DRIFT_PPM_RANGE low bound exceeds high bound")
        if self.contention_policy not in (POLICY_CAPTURE, POLICY_COLLISION):
            problems.append(
                f"CONTENTION_POLICY must be '{POLICY_CAPTURE}' or '{POLICY_COLLISION}'"
            )
        if self.rr_reduction_trigger not in (TRIGGER_SLOTS, TRIGGER_ROUNDS):
            problems.append(
                f"RR_REDUCTION_TRIGGER must be '{TRIGGER_SLOTS}' or '{TRIGGER_ROUNDS}'"
            )
        if self.queue_capacity < 1:
            problems.append("QUEUE_CAPACITY must be at least 1")
        if self.duration <= 0:
            problems.append("DURATION must be positive")
        if self.sync_slot_length is not None and self.slot_length > 0:
            needed = self.sync_slot_length + self.rr_group_size * self.slot_length
            if needed > SHORT_ROUND_US:
                problems.append(
                    "SLOT_LENGTH too large: one sync slot plus one request group "
                    "must fit into a one second round"
                )
            if needed > self.minimum_lwb_round:
                problems.append(
                    "MINIMUM_LWB_ROUND too small for a sync slot plus one "
                    "request group"
                )
        if problems:
            raise ConfigError("; ".join(problems))
        if self.ipi % self.minimum_lwb_round != 0:
            effective = (self.ipi // self.minimum_lwb_round) * self.minimum_lwb_round
            log.warning(
                "IPI %s is not a multiple of MINIMUM_LWB_ROUND %s; "
                "effective IPI for data rounds is %s",
                format_duration(self.ipi),
                format_duration(self.minimum_lwb_round),
                format_duration(effective),
            )

    def to_text(self) -> str:
        """Serialize so that parse_config() reproduces this config."""
        lo, hi = self.drift_ppm_range
        lines = [
            f"IPI = {format_duration(self.ipi)}",
            f"MINIMUM_LWB_ROUND = {format_duration(self.minimum_lwb_round)}",
            f"COOLOFF_PERIOD = {format_duration(self.cooloff_period)}",
            f"STABILIZATION_PERIOD = {format_duration(self.stabilization_period)}",
            f"MAX_PAYLOAD_LEN = {self.max_payload_len}",
            f"SINK_NODE_ID = {self.sink_node_id}",
            f"MAX_NODE_NUMBER = {self.max_node_number}",
            f"FORWARDER_SELECTION = {1 if self.forwarder_selection else 0}",
            f"GLOSSY_GUARD_TIME = {format_duration(self.glossy_guard_time)}",
            f"SLOT_LENGTH = {format_duration(self.slot_length)}",
            f"SYNC_SLOT_LENGTH = {format_duration(self.sync_slot_length)}",
            f"LOSS_PROBABILITY = {self.loss_probability!r}",
            f"DRIFT_PPM_RANGE = {lo!r}:{hi!r}",
            f"CONTENTION_POLICY = {self.contention_policy}",
            f"RR_REDUCTION_TRIGGER = {self.rr_reduction_trigger}",
            f"QUEUE_CAPACITY = {self.queue_capacity}",
            f"SEED = {self.seed}",
            f"DURATION = {format_duration(self.duration)}",
        ]
        return "\n".join(lines) + "\n"


def _parse_bool(value: str) -> bool:
    low = value.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _parse_drift(value: str) -> tuple[float, float]:
    if ":" in value:
        lo_s, hi_s = value.split(":", 1)
        return (float(lo_s), float(hi_s))
    r = abs(float(value))
    return (-r, r)


_DURATION_KEYS = {
    "IPI": "ipi",
    "MINIMUM_LWB_ROUND": "minimum_lwb_round",
    "COOLOFF_PERIOD": "cooloff_period",
    "STABILIZATION_PERIOD": "stabilization_period",
    "GLOSSY_GUARD_TIME": "glossy_guard_time",
    "SLOT_LENGTH": "slot_length",
    "SYNC_SLOT_LENGTH": "sync_slot_length",
    "DURATION": "duration",
}

_INT_KEYS = {
    "MAX_PAYLOAD_LEN": "max_payload_len",
    "SINK_NODE_ID": "sink_node_id",
    "MAX_NODE_NUMBER": "max_node_number",
    "QUEUE_CAPACITY": "queue_capacity",
    "SEED": "seed",
}

_STR_KEYS = {
    "CONTENTION_POLICY": ("contention_policy", str.lower),
    "RR_REDUCTION_TRIGGER": ("rr_reduction_trigger", str.lower),
}

VALID_KEYS = sorted(
    list(_DURATION_KEYS)
    + list(_INT_KEYS)
    + list(_STR_KEYS)
    + ["FORWARDER_SELECTION", "LOSS_PROBABILITY", "DRIFT_PPM_RANGE"]
)


def parse_config(text: str) -> SimConfig:
    """Parse and validate a config document. Missing keys take defaults."""
    values: dict[str, object] = {}
    explicit_sync = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected KEY = value, got {line!r}")
        key_raw, _, val_raw = line.partition("=")
        key = key_raw.strip().upper()
        value = val_raw.strip()
        try:
            if key in _DURATION_KEYS:
                values[_DURATION_KEYS[key]] = parse_duration(value)
                if key == "SYNC_SLOT_LENGTH":
                    explicit_sync = True
            elif key in _INT_KEYS:
                values[_INT_KEYS[key]] = int(value)
            elif key in _STR_KEYS:
                attr, conv = _STR_KEYS[key]
                values[attr] = conv(value)
            elif key == "FORWARDER_SELECTION":
                values["forwarder_selection"] = _parse_bool(value)
            elif key == "LOSS_PROBABILITY":
                values["loss_probability"] = float(value)
            elif key == "DRIFT_PPM_RANGE":
                values["drift_ppm_range"] = _parse_drift(value)
            else:
                raise ConfigError(
                    f"line {lineno}: unknown key {key!r}; valid keys: "
                    + ", ".join(VALID_KEYS)
                )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc

    if not explicit_sync:
        values.pop("sync_slot_length", None)
    config = SimConfig(**values)  # type: ignore[arg-type]
    config.validate()
    return config


def config_field_names() -> list[str]:
    return [f.name for f in fields(SimConfig)]
