"""Method-level extraction: labels a method by its declared name, removes
the name terminal (the prediction target must not leak into the inputs),
and emits the dataset example."""

from __future__ import annotations

from .ast_tree import Ast, AstBuilder
from .corpus import RawExample
from .errors import CodevecError
from .paths import ExtractionLimits, extract_path_contexts


def method_label(ast: Ast) -> str:
    """The declared name of a MethodDecl tree (case preserved)."""
    root = ast.node(ast.root)
    if root.kind != "MethodDecl":
        raise CodevecError(f"expected a MethodDecl root, found {root.kind!r}")
    for child_id in root.children:
        child = ast.node(child_id)
        if child.kind == "Name" and child.is_terminal:
            return child.value
    raise CodevecError("MethodDecl has no Name terminal")


def strip_method_name(ast: Ast) -> Ast:
    """Copy of the tree without the MethodDecl's Name child."""
    root = ast.node(ast.root)
    name_id = next(c for c in root.children
                   if ast.node(c).kind == "Name" and ast.node(c).is_terminal)
    builder = AstBuilder()

    def copy(node_id: int) -> int:
        node = ast.node(node_id)
        if node.is_terminal:
            return builder.terminal(node.kind, node.value)
        kept = [copy(c) for c in node.children
                if not (node_id == ast.root and c == name_id)]
        return builder.nonterminal(node.kind, kept)

    return builder.build(copy(ast.root))


def method_to_example(ast: Ast, limits: ExtractionLimits) -> RawExample:
    """Dataset example for one method: label from the declaration, contexts
    extracted from the body with the name terminal removed."""
    label = method_label(ast)
    stripped = strip_method_name(ast)
    return RawExample(label, extract_path_contexts(stripped, limits))
