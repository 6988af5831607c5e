"""Lexicon-driven Lemma-POS-Gloss lemmatization toolkit."""

__version__ = "0.1.0"
