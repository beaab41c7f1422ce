"""Radiomic feature extraction and MLP classification of 1p/19q codeletion status in MRI."""

__version__ = "0.1.0"
