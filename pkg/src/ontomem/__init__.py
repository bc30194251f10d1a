"""ontomem: an ontology-backed external memory and verification engine.

Submodules: rdf_core (graph store), turtle_io (TTL subset), sparql (query
subset), shacl (shapes subset), reasoner (materialization + consistency),
builder (ontology construction pipeline), fusion (dual-memory retrieval),
factcheck (claim verdicts), hanoi (planning benchmark), toolbus (JSON-RPC
surface), store (disk layout), cli (entry point).
"""

__version__ = "0.1.0"

from .rdf_core import Blank, Graph, Iri, Literal, Origin, Provenance, Triple  # noqa: F401
