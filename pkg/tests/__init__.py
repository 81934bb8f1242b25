"""
Tests Package

This package contains the unit and acceptance tests of the augmap library.
"""
