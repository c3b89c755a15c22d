"""Test fixtures for evtrack.

This module provides builders for SAE neighbourhoods and plane-fit support
sets with known motion.
"""

from .sae_factory import edge_support, fill_moving_edge, plane_support

__all__ = ["edge_support", "fill_moving_edge", "plane_support"]
