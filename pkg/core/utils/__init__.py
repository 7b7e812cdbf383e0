"""
Flagforge — Utility modules.
"""
