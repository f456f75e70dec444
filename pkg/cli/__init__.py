"""ShapeMoE command-line interface."""
