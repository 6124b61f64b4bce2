"""Tests for the export system."""
