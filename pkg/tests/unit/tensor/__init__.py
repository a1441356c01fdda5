"""Unit tests for src.tensor."""
