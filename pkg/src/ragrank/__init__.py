"""Local retrieval-augmented question answering with two-stage retrieval:
MMR candidate selection re-ranked by personalized PageRank."""

__version__ = "0.1.0"
