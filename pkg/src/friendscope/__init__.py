"""Shared-camera sessions between a glasses wearer and one remote friend.

The package splits into a pure protocol core (protocol, codec, wearer,
friend), a relay that moves frames and schedules media transmission,
and a deterministic simulation harness (friendscope.sim).
"""

__version__ = "0.1.0"

from .protocol import (
    FriendCommand,
    FriendscopeError,
    Gesture,
    IntegrityError,
    MediaKind,
    ProtocolParams,
    RoutingError,
    SessionError,
    SharingMode,
)

__all__ = [
    "__version__",
    "FriendCommand",
    "FriendscopeError",
    "Gesture",
    "IntegrityError",
    "MediaKind",
    "ProtocolParams",
    "RoutingError",
    "SessionError",
    "SharingMode",
]
