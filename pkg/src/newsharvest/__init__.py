"""Staged news-aggregator harvesting pipeline.

Plans aggregator queries across portal editions, harvests listings under a
politeness contract, deduplicates, extracts article text, annotates with a
local language model, filters noise and enriches outlets against a
media-rankings snapshot.
"""

__version__ = "0.1.0"
