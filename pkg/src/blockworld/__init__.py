"""Collaborative persistent voxel-world toolkit: world state machine,
placement geometry, marker anchoring, sync protocol, event-sourced server,
collaboration analytics, and a deterministic multi-client simulator."""

__version__ = "0.1.0"
