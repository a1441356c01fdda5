"""Unit tests for src.bonet."""
