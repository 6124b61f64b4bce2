"""Tests for the pgm-regularization workbench."""
