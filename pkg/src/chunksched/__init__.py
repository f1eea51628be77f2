"""Packet-level simulator and scheduling policies for chunked network codes."""

__version__ = "0.1.0"
