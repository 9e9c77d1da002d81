"""
Tests for the sparsevi package.
"""
