"""Unit tests for src.faset."""
