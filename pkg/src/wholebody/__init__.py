"""Whole-body articulated model, part-estimate integration, and evaluation."""
