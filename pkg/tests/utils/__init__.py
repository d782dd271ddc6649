"""Tests for the utils module."""
