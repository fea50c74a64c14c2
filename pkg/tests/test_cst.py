import pytest

from structmerge.cst import (
    IdentifierCollisionError,
    Node,
    Origin,
    Span,
    Tree,
    check_unique_identifiers,
    deep_equal,
    dump,
    make_nonterminal,
    make_terminal,
    renumber,
    span_from_offsets,
    structural_hash,
    subtree_size,
)

S = Span(0, 0)


def t(kind, value, **kw):
    return make_terminal(kind, value, S, **kw)


def nt(kind, *children, **kw):
    return make_nonterminal(kind, children, S, **kw)


def test_span_lines_and_columns():
    text = "ab\ncd\nef"
    sp = span_from_offsets(text, 4, 7)
    assert (sp.start_line, sp.start_col, sp.end_line, sp.end_col) == (2, 2, 3, 2)
    assert sp.width == 3


def test_span_rejects_inverted_range():
    with pytest.raises(ValueError):
        Span(5, 2)


def test_terminal_cannot_have_children_or_be_unordered():
    with pytest.raises(ValueError):
        Node(kind="x", span=S, value="1", children=(t("y", "2"),))
    with pytest.raises(ValueError):
        Node(kind="x", span=S, value="1", unordered=True)


def test_size_and_hash():
    tree = nt("a", t("x", "1"), nt("b", t("y", "2")))
    assert subtree_size(tree) == tree.size == 4
    same = nt("a", t("x", "1"), nt("b", t("y", "2")))
    assert structural_hash(tree) == structural_hash(same)
    assert deep_equal(tree, same)


@pytest.mark.parametrize(
    "other",
    [
        nt("a", t("x", "1"), nt("b", t("y", "3"))),
        nt("a", nt("b", t("y", "2")), t("x", "1")),
        nt("a", t("x", "1"), nt("b", t("y", "2")), identifier="id"),
        nt("a", t("x", "1"), nt("b", t("y", "2")), unordered=True),
        nt("a", t("x", "1")),
    ],
)
def test_deep_equal_detects_differences(other):
    tree = nt("a", t("x", "1"), nt("b", t("y", "2")))
    assert not deep_equal(tree, other)


def test_deep_equal_ignores_spans_and_origin():
    a = Node(kind="x", span=Span(0, 1), value="v", origin=Origin.LEFT)
    b = Node(kind="x", span=Span(7, 8), value="v", origin=Origin.RIGHT)
    assert deep_equal(a, b)


def test_renumber_is_preorder():
    root = renumber(nt("a", nt("b", t("x", "1"), t("x", "2")), t("y", "3")))
    assert [n.node_id for n in root.walk()] == [0, 1, 2, 3, 4]
    assert [n.kind for n in root.walk()] == ["a", "b", "x", "x", "y"]


def test_renumber_sets_origin():
    root = renumber(nt("a", t("x", "1")), Origin.RIGHT)
    assert {n.origin for n in root.walk()} == {Origin.RIGHT}


def test_tree_parents():
    root = renumber(nt("a", nt("b", t("x", "1")), t("y", "2")))
    tree = Tree(root=root, source="")
    b = root.children[0]
    assert tree.parents[b.node_id] == (root, 0)
    assert tree.parents[b.children[0].node_id] == (b, 0)
    assert root.node_id not in tree.parents


def test_unique_identifier_check():
    ok = nt("body", nt("f", identifier="x"), nt("f", identifier="y"), nt("g"))
    check_unique_identifiers(ok)
    bad = nt("body", nt("f", identifier="x"), nt("m", identifier="x"))
    with pytest.raises(IdentifierCollisionError) as info:
        check_unique_identifiers(bad)
    assert info.value.identifier == "x"


def test_dump_shape():
    root = nt("a", t("x", "1"), t("{", "{"), identifier="A")
    assert dump(root) == '(a:A "1" "{")'
