"""Desk-scale lab for action-aware self-supervised learning on rotating-object clips."""

__version__ = "0.1.0"
