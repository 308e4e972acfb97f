"""Glossy-style network floods and per-node clock bookkeeping.

A flood is modeled as a synchronous wave process instead of a per-bit radio
simulation. The initiator transmits with relay counter 1 in wave 0. In wave
k every node that has not received yet and is adjacent to a wave k-1
transmitter receives, subject to one independent loss draw per node per
wave, and records the counter value as its hop distance. A receiver
retransmits in the next wave only if it is in the participant set. With a
loss probability of zero this reproduces breadth-first hop distances
through the participant set exactly, which is what the test oracles check.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .topology import Topology
from .units import US_PER_MS

DEFAULT_GUARD_US = 2 * US_PER_MS
DEFAULT_MAX_PAYLOAD = 40

# Roles a node can play during one slot.
ROLE_INITIATOR = "initiator"
ROLE_RELAY = "relay"
ROLE_LISTENER = "listener"
ROLE_BOOTSTRAP = "bootstrap"
ROLE_ASLEEP = "asleep"

_AWAKE_ROLES = {ROLE_INITIATOR, ROLE_RELAY, ROLE_LISTENER, ROLE_BOOTSTRAP}


def slot_radio_cost(role: str, slot_length: int) -> int:
    """Radio-on time a node pays for one slot.

    Any node that is awake for the slot pays the full slot length whether it
    transmits, relays or only listens. A node that skips the slot pays
    nothing.
    """
    if role in _AWAKE_ROLES:
        return slot_length
    if role == ROLE_ASLEEP:
        return 0
    raise ValueError(f"unknown radio role {role!r}")


@dataclass
class FloodOutcome:
    """Result of one flood: who received, and at which hop count.

    hops maps node id to hop distance; the initiator is present with hop 0.
    Nodes absent from hops did not receive.
    """

    initiator: int
    hops: dict[int, int] = field(default_factory=dict)

    def received(self, node: int) -> bool:
        return node in self.hops

    def received_nodes(self) -> list[int]:
        return sorted(self.hops)


def flood(
    topology: Topology,
    initiator: int,
    payload: bytes,
    participants: set[int],
    loss_probability: float = 0.0,
    rng: random.Random | None = None,
    max_payload_len: int = DEFAULT_MAX_PAYLOAD,
) -> FloodOutcome:
    """Run one flood and report reception per node.

    Args:
        topology: the connectivity graph.
        initiator: node that starts the flood, transmits regardless of the
            participant set.
        payload: application bytes carried by the flood.
        participants: nodes allowed to retransmit after receiving.
        loss_probability: per node, per wave reception failure probability.
        rng: required when loss_probability > 0; draws happen in node id
            order within each wave.
        max_payload_len: upper bound on payload size.

    Returns:
        FloodOutcome with hop counts for every node that received.
    """
    if initiator not in topology:
        raise ValueError(f"flood initiator {initiator} not in topology")
    if len(payload) > max_payload_len:
        raise ValueError(
            f"payload of {len(payload)} bytes exceeds limit {max_payload_len}"
        )
    if not 0.0 <= loss_probability < 1.0:
        raise ValueError(f"loss probability {loss_probability} outside [0, 1)")
    if loss_probability > 0.0 and rng is None:
        raise ValueError("an rng is required when loss_probability > 0")

    hops: dict[int, int] = {initiator: 0}
    transmitters: list[int] = [initiator]
    counter = 1
    while transmitters:
        candidates: set[int] = set()
        for tx in transmitters:
            for nb in topology.neighbors(tx):
                if nb not in hops:
                    candidates.add(nb)
        receivers: list[int] = []
        for nb in sorted(candidates):
            if loss_probability > 0.0 and rng.random() < loss_probability:
                continue
            hops[nb] = counter
            receivers.append(nb)
        transmitters = [r for r in receivers if r in participants]
        counter += 1
    return FloodOutcome(initiator=initiator, hops=hops)


@dataclass
class ClockState:
    """Synchronization state of one node's local clock.

    A node stays usable as long as the worst-case clock offset accumulated
    since its last resynchronization stays within the guard window around
    slot boundaries. Once the offset exceeds the guard the node can no
    longer hit its slots and must fall back to bootstrap listening.
    """

    drift_ppm: float = 0.0
    guard: int = DEFAULT_GUARD_US
    synced: bool = False
    last_sync_time: int = 0

    def offset_at(self, now: int) -> float:
        """Worst-case accumulated offset in microseconds at time now."""
        return (now - self.last_sync_time) * abs(self.drift_ppm) * 1e-6

    def apply_sync(self, now: int) -> None:
        """Record a successful sync reception at time now."""
        self.synced = True
        self.last_sync_time = now

    def check_guard(self, now: int) -> bool:
        """Return True while the clock is still trustworthy at time now.

        Exceeding the guard strictly flips the node to desynced; an offset
        exactly equal to the guard still counts as synced.
        """
        if not self.synced:
            return False
        if self.offset_at(now) > self.guard:
            self.synced = False
            return False
        return True
