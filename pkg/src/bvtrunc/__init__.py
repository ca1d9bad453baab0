"""Classical simulation of BV-based truncated-differential and boomerang search on toy ciphers."""

__version__ = "0.1.0"
