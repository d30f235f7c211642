"""Collects one pass/fail line per acceptance criterion for the terminal summary."""
RESULTS = {}


def record(number, title, ok, detail=""):
    RESULTS[number] = (title, ok, detail)
