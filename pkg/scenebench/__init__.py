"""Scene-graph reasoning workbench for embodied manipulation agents."""

__version__ = "0.1.0"
