"""Scenario execution."""
