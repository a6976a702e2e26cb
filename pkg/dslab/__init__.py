"""dslab - Periodic solitons and transverse instability of the Davey-Stewartson line soliton."""

__version__ = "1.0.0"
