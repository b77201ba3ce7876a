#!/usr/bin/env python3
"""Regenerate the shipped demo flowsheet GraphML from the builder."""

from pidgraph.demo import DEMO_GRAPH_RESOURCE, build_demo_flowsheet
from pidgraph.graphml import export_graphml

DEMO_GRAPH_RESOURCE.write_bytes(export_graphml(build_demo_flowsheet(), include_embeddings=True))
print(f"wrote {DEMO_GRAPH_RESOURCE}")
