"""Legendrian knots as trigonometric curves."""
