"""Test fixtures and data generators."""
