"""
Test suite for ShapeMoE, laid out to mirror the shapemoe and cli packages.
"""
