"""Weather sensing from OFDM ISAC channel estimates."""

__version__ = "0.1.0"
