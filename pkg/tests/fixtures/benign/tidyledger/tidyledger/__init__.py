"""Plain-text double-entry bookkeeping."""

from tidyledger.ledger import Entry, Ledger

__version__ = "0.4.1"
__all__ = ["Entry", "Ledger"]
