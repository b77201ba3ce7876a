from .ast import (
    BoolOp,
    Comparison,
    CountCall,
    LabelTest,
    Literal,
    NodePattern,
    NotOp,
    PathPattern,
    PropertyAccess,
    QueryAst,
    RelPattern,
    ReturnItem,
    VariableRef,
)
from .executor import (
    DEFAULT_HOP_CEILING,
    EdgeRef,
    NodeRef,
    ResultTable,
    execute_query,
    render_cell,
    render_schema_context,
)
from .parser import parse_query, tokenize

__all__ = [
    "BoolOp",
    "Comparison",
    "CountCall",
    "DEFAULT_HOP_CEILING",
    "EdgeRef",
    "LabelTest",
    "Literal",
    "NodePattern",
    "NodeRef",
    "NotOp",
    "PathPattern",
    "PropertyAccess",
    "QueryAst",
    "RelPattern",
    "ResultTable",
    "ReturnItem",
    "VariableRef",
    "execute_query",
    "parse_query",
    "render_cell",
    "render_schema_context",
    "tokenize",
]
