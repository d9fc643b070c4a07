"""Tests for xormmap."""
