"""Liability-side pricing of bilateral derivatives."""
