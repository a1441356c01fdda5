"""Unit tests for src.box_assoc."""
