"""
ShapeMoE - shape-aware sparse mixture of experts for amodal segmentation.

This package provides a self-contained, CPU-scale implementation of Gaussian
shape-distribution encoding, top-k expert routing and hypernetwork mask experts,
together with a procedural occlusion dataset, training and evaluation tools.
"""

__version__ = "0.1.0"
