"""Config and report models."""
