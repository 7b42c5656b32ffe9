class HarnessError(ValueError):
    """User-facing problem: bad job, unknown model, unreadable data."""
