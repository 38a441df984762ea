"""Sentence-encoder adapter: corpus units in, EMB1 embedding file out."""

__version__ = "0.1.0"
