"""Asynchronous cell-free mmWave massive MIMO-OFDM link simulator."""

__version__ = "0.1.0"
