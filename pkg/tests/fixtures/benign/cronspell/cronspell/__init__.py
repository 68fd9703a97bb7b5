from cronspell.describe import describe

__all__ = ["describe"]
