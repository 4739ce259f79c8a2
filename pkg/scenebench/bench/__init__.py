"""Benchmark tasks, perception noise and episode metrics."""
