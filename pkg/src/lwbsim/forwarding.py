"""Forwarder selection: deciding who stays awake for which data slot.

With forwarder selection enabled every request group carries a third slot.
The sink's reply flood tells each node its hop distance from the sink. The
fresh slot owner then floods an announcement carrying that distance and the
slot index; every listener measures its own hop distance from the source in
the same flood and keeps the slot only if the two distances add up exactly,
which means the node sits on a shortest path between sink and source.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import NodeState
from .glossy import FloodOutcome


@dataclass(frozen=True)
class AnnouncePacket:
    source: int
    distance: int  # announced hop distance of the source from the sink
    slot: int


def refresh_sink_distances(
    nodes: dict[int, NodeState], listeners: set[int], outcome: FloodOutcome
) -> None:
    """Record hop distances from a reply flood initiated by the sink.

    Every listener that received the flood remembers its hop count as its
    current distance from the sink. Nodes that missed the flood keep their
    previous value.
    """
    for node_id in sorted(outcome.hops):
        if node_id in listeners:
            nodes[node_id].sink_distance = outcome.hops[node_id]


def build_announce(state: NodeState, assigned_slot: int) -> AnnouncePacket | None:
    """Build the owner's announcement, or None when it cannot announce.

    A source that never learned its distance from the sink (it missed the
    reply flood) stays silent; the slot then falls back to everyone
    participating.
    """
    if state.sink_distance is None:
        return None
    return AnnouncePacket(state.node_id, state.sink_distance, assigned_slot)


def apply_announce(
    state: NodeState, announce: AnnouncePacket, hop: int | None
) -> None:
    """Update one node's forwarder table from an announcement it heard.

    hop is the node's hop count in the announce flood (0 for the source
    itself) or None when the node missed the flood. The node keeps the slot
    exactly when its distance from the sink plus its distance from the
    source equals the announced sink-source distance. Missing either
    distance leaves the node out of the forwarder set; a missed flood
    leaves the previous decision untouched.
    """
    if hop is None:
        return
    if state.sink_distance is not None and state.sink_distance + hop == announce.distance:
        state.forwarder_slots.add(announce.slot)
    else:
        state.forwarder_slots.discard(announce.slot)


def data_participants(
    active: set[int],
    nodes: dict[int, NodeState],
    slot_id: int,
    owner: int | None,
    sink: int,
    fs_mode: bool,
    announced: bool,
) -> list[int]:
    """Nodes awake for one data slot, sorted.

    Without forwarder selection every active node takes part. With it, the
    slot's forwarders plus the owner and the sink stay awake; a slot whose
    owner never announced falls back to everyone so packets are not lost to
    missing metadata.
    """
    if not fs_mode or not announced:
        return sorted(active)
    members = {n for n in active if slot_id in nodes[n].forwarder_slots}
    if owner is not None and owner in active:
        members.add(owner)
    members.add(sink)
    return sorted(members)
