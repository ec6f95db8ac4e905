"""Time-continuous valence inference with mood and emotion-change context."""

__version__ = "0.1.0"
