"""
Unit tests for D&D Monster Pipeline components.
"""
