"""Embedding initialization strategies for low-resource MT, plus a small
GRU seq2seq harness and BLEU evaluation."""

__version__ = "0.1.0"
