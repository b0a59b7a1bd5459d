"""Orchestration: protocol checks, scenario execution and output persistence."""
