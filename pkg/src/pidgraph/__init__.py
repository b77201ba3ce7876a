"""pidgraph: GraphRAG engine and chat service for smart P&ID flowsheet graphs."""

__version__ = "0.1.0"
