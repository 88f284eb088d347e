"""Deterministic fixture aggregator, publisher and model server."""

from newsharvest.simnews.corpus import FixtureCorpus, NoiseKind, load_corpus
from newsharvest.simnews.server import SimNewsServer, serve

__all__ = ["FixtureCorpus", "NoiseKind", "SimNewsServer", "load_corpus", "serve"]
