"""Center-of-pressure sway analysis and intermittent balance-control
simulation."""

__version__ = "0.1.0"
