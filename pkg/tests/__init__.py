"""
Tests for the quasiroots toolkit.
"""
