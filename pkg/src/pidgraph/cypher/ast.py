"""AST node types for the Cypher-style query subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from ..graph import PropertyValue


@dataclass
class NodePattern:
    variable: str | None = None
    labels: list[str] = field(default_factory=list)
    properties: dict[str, PropertyValue] = field(default_factory=dict)


@dataclass
class RelPattern:
    variable: str | None = None
    edge_type: str | None = None
    direction: str = "any"  # out | in | any
    var_length: bool = False
    min_hops: int | None = None
    max_hops: int | None = None


@dataclass
class PathPattern:
    """Alternating node / relationship patterns; starts and ends with a node."""

    elements: list[Union[NodePattern, RelPattern]]

    @property
    def node_patterns(self) -> list[NodePattern]:
        return [e for e in self.elements if isinstance(e, NodePattern)]

    @property
    def rel_patterns(self) -> list[RelPattern]:
        return [e for e in self.elements if isinstance(e, RelPattern)]


@dataclass
class Literal:
    value: PropertyValue | None


@dataclass
class VariableRef:
    name: str


@dataclass
class PropertyAccess:
    variable: str
    name: str


@dataclass
class LabelTest:
    variable: str
    label: str


@dataclass
class Comparison:
    op: str  # = <> < > <= >=
    left: "Expression"
    right: "Expression"


@dataclass
class BoolOp:
    op: str  # AND | OR
    left: "Expression"
    right: "Expression"


@dataclass
class NotOp:
    operand: "Expression"


@dataclass
class CountCall:
    argument: Union[VariableRef, PropertyAccess, None]  # None = COUNT(*)


Expression = Union[Literal, VariableRef, PropertyAccess, LabelTest, Comparison, BoolOp, NotOp]


@dataclass
class ReturnItem:
    expression: Union[Expression, CountCall]
    alias: str | None = None


@dataclass
class QueryAst:
    match_patterns: list[PathPattern]
    where_clause: Expression | None
    return_items: list[ReturnItem]
    limit: int | None = None
