"""Grammar-based intermediate representation for the SQL decoder."""
from .convert import attach_literals, column_pointer_index, semql_to_sql, sql_to_semql
from .grammar import (
    APPLY_RULE,
    SELECT_COLUMN,
    SKETCH_PLACEHOLDER,
    STAR_INDEX,
    Action,
    ActionSequence,
    ColumnRef,
    Derivation,
    Grammar,
    SemQlAst,
    SemQlNode,
    Sketch,
    actions_of,
    apply_rule,
    define_grammar,
    legal_next,
    parse_action_text,
    parse_actions,
    select_column,
    serialize_actions,
    sketch_of,
)

__all__ = [
    "APPLY_RULE", "SELECT_COLUMN", "SKETCH_PLACEHOLDER", "STAR_INDEX",
    "Action", "ActionSequence", "ColumnRef", "Derivation", "Grammar",
    "SemQlAst", "SemQlNode", "Sketch",
    "actions_of", "apply_rule", "attach_literals", "column_pointer_index",
    "define_grammar", "legal_next", "parse_action_text", "parse_actions",
    "select_column", "semql_to_sql", "serialize_actions", "sketch_of",
    "sql_to_semql",
]
