"""Analytical engine and Monte Carlo simulator for multi-tier full-duplex
cellular networks with decoupled uplink/downlink user association."""

__version__ = "0.1.0"
