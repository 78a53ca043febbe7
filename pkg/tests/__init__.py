"""Tests for the one-class fraud detector."""
