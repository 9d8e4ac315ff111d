"""Policy-document mining engine.

Ingests environmental policy documents, filters and segments them, assists
analysts with similarity-ranked labeling, classifies incentive instruments
and topics, links incentives to their nearest topic sentences, extracts
entities and definitions, and assembles everything into an
ontology-validated knowledge graph.
"""

from ._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"

__all__ = ["kernel_backend", "__version__"]
