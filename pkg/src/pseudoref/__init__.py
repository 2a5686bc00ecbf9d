"""Reference-free MT quality estimation toolkit.

Scores machine translation output by generating a pseudo-reference with a
text-generation backend, measuring sentence-embedding cosine similarity
against the MT output, and meta-evaluating the resulting scores against
human judgments with segment-level correlation statistics.
"""

__version__ = "0.1.0"
