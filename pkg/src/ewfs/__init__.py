"""Extended Wigner's-friend scenarios, contextuality and no-go reasoning."""

__version__ = "0.1.0"
