"""Uplift: a news-positivity filtering service.

Headlines are ingested daily, pushed through a four-stage sentiment
cascade (feed-forward net, LSTM, linear SVM, strict ordinal gate), and
the survivors are served over HTTP together with a human curation loop.
Every stage is tuned to prefer false negatives over false positives:
when in doubt, an article is dropped.
"""

__version__ = "0.1.0"
