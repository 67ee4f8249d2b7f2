import pytest
from hypothesis import given, settings

from helpers import canonical_asts
from pipeforge.expr import (Name, ParseError, Pipe, TokenKind, Union, leaves, make_pipe,
                            noop_count, parse, render, tokenize)

def N(*ids):
    return [Name(i) for i in ids]


def test_single_identifier():
    assert parse("rf") == Name("rf")


def test_listing_expression():
    ast = parse("((catf |> ohe) + (numf |> mx |> pca)) |> rf")
    assert ast == Pipe((Union((Pipe(tuple(N("catf", "ohe"))), Pipe(tuple(N("numf", "mx", "pca"))))),
                        Name("rf")))


def test_union_binds_tighter():
    ast = parse("(numf |> pca) + (catf |> ohe) |> rf")
    assert ast == Pipe((Union((Pipe(tuple(N("numf", "pca"))), Pipe(tuple(N("catf", "ohe"))))),
                        Name("rf")))
    ast = parse("a + b |> c")
    assert isinstance(ast, Pipe) and ast.children[0] == Union(tuple(N("a", "b")))


def test_flattening():
    flat = Pipe(tuple(N("a", "b", "c")))
    assert parse("a |> b |> c") == parse("(a |> b) |> c") == parse("a |> (b |> c)") == flat
    assert parse("a + (b + c)") == Union(tuple(N("a", "b", "c")))


def test_render_surrogate_pipeline():
    ast = Pipe((Union((Pipe(tuple(N("catf", "ohe"))), Name("numf"))), Name("robustsc")))
    assert render(ast) == "(catf |> ohe) + numf |> robustsc"
    assert parse("(((catf |> ohe) + numf)) |> robustsc") == ast
    assert render(Name("rf")) == "rf"


def test_render_pipe_in_union_parenthesised():
    assert render(parse("(a |> b) + c")) == "(a |> b) + c"
    # a union inside a pipe needs no parentheses because + binds tighter
    assert render(parse("(a + b) |> c")) == "a + b |> c"


@settings(max_examples=1000, deadline=None)
@given(canonical_asts())
def test_round_trip(ast):
    assert parse(render(ast)) == ast


@settings(max_examples=200, deadline=None)
@given(canonical_asts())
def test_render_fixpoint(ast):
    text = render(ast)
    assert render(parse(text)) == text


def test_noop_count():
    assert noop_count(parse("(catf|>ohe) + (numf |> robustsc |> noop) + (numf |> norm |> pca) |> rf")) == 1
    assert noop_count(parse("noop |> noop")) == 2
    assert noop_count(parse("rf")) == 0
    assert leaves(parse("a + b |> c")) == ["a", "b", "c"]


def test_tokenize_positions():
    toks = tokenize("a |> (b+c)")
    assert [t.kind for t in toks] == [TokenKind.IDENT, TokenKind.PIPE_OP, TokenKind.LPAREN,
                                      TokenKind.IDENT, TokenKind.PLUS_OP, TokenKind.IDENT,
                                      TokenKind.RPAREN, TokenKind.END]
    assert [t.position for t in toks] == [0, 2, 5, 6, 7, 8, 9, 10]


@pytest.mark.parametrize("source, position", [
    ("a |> $b", 5),
    ("a |>", 4),
    ("a + + b", 4),
    ("(a |> b", 7),
    ("a |> b)", 6),
    ("()", 1),
    ("a |> ()", 6),
    ("", 0),
    ("a b", 2),
    ("|> a", 0),
])
def test_errors_report_position(source, position):
    with pytest.raises(ParseError) as err:
        parse(source)
    assert err.value.position == position


def test_node_invariants():
    with pytest.raises(ValueError):
        Pipe((Name("a"),))
    with pytest.raises(ValueError):
        Pipe((Pipe(tuple(N("a", "b"))), Name("c")))
    with pytest.raises(ValueError):
        Union((Union(tuple(N("a", "b"))), Name("c")))
    assert make_pipe([Name("a")]) == Name("a")
