"""Candlestick-chart CNN pipeline for stock trend classification."""
__version__ = "0.1.0"
