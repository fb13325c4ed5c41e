"""Desk-scale intersection simulator with heterogeneous-graph RL decision making."""

__version__ = "0.1.0"
