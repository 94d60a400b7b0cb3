"""Content-based file-fragment type identification: fragment extraction,
feature extraction, dataset tooling, classifiers and feature selection."""

__version__ = "0.1.0"
