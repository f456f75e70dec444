"""
Core module for ShapeMoE.

Contains configuration management, logging, the error hierarchy and the
service container shared by the CLI and the library.
"""
