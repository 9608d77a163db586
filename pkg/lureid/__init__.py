from .identifier import LureIdentifier

__all__ = ["LureIdentifier"]
__version__ = "0.1.0"
