"""Drone archery engine: virtual-bow ballistics, a dodging swarm trained with
advantage actor-critic, a potential-field baseline, haptic tension encoding,
and a live game server for the browser frontend."""

__version__ = "0.1.0"

from .accel import BACKEND

__all__ = ["BACKEND", "__version__"]
