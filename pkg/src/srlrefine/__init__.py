"""Dependency-based semantic role labeling with iterative structured refinement.

A factorized biaffine baseline scores roles and senses independently; small
refinement networks then revise those distributions while looking at the
roles assigned to other tokens.
"""

__version__ = "0.1.0"
