from . import education, healthcare, loan

__all__ = ["education", "healthcare", "loan"]
