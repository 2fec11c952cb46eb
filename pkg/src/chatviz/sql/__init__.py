"""Single-table SQL subset: parsing, execution and canonical forms."""
from .ast import And, Comparison, OrderBy, Or, SelectItem, Operand, SqlAst
from .canonical import canonical_sql, sql_to_string
from .executor import ResultTable, execute
from .parser import parse_sql

__all__ = [
    "And", "Comparison", "Operand", "Or", "OrderBy", "SelectItem", "SqlAst",
    "ResultTable", "canonical_sql", "execute", "parse_sql", "sql_to_string",
]
