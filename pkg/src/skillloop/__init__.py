"""Closed-loop skill discovery: explore, relabel, train, evaluate, feed back."""

__version__ = "0.1.0"
