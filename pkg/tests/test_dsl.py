import itertools
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from telepathy import games, linalg as la
from telepathy.dsl import (
    DslError,
    ast,
    compile_game_source,
    load_game,
    load_strategy,
    parse_expr,
    parse_game,
    parse_strategy,
    parse_strategy_source,
    print_expr,
    print_game,
    print_strategy,
    tokenize,
)
from telepathy.games import strategy_distribution, truth_tables, verify_winning

from conftest import DATA, MALFORMED

BUILTINS = {
    "bell": games.bell_example,
    "mermin": games.mermin_game,
    "dj_1": lambda: games.dj_game(1),
    "dj_2": lambda: games.dj_game(2),
    "dj_3": lambda: games.dj_game(3),
    **{f"parity_{n}_{l}": (lambda n=n, l=l: games.parity_game(n, l)) for n in (3, 4, 5) for l in (1, 2)},
}
SHIPPED = sorted(DATA.glob("*.game")) + sorted(DATA.glob("*.strategy"))

MERMIN = (DATA / "mermin.game").read_text(encoding="utf-8")


def game_of(src: str):
    return compile_game_source(src)


def expr_value(text, x=(0, 0, 0), y=(0, 0, 0), players=3):
    from telepathy.dsl.compiler import _Context, compile_expr

    _, fn = compile_expr(parse_expr(text), _Context(players, allow_outputs=True))
    return fn({"x": x, "y": y})


# -- lexer and parser -----------------------------------------------------------------


def test_range_lexes_as_integers():
    kinds = [(t.kind, t.text) for t in tokenize("0..3")]
    assert kinds == [("INT", "0"), ("SYM", ".."), ("INT", "3"), ("EOF", "")]


def test_unicode_and_ascii_spellings_agree():
    assert parse_expr("x0 ⊕ x1 = 0 ∧ ¬(x2 ≠ 1) ∨ x0 ≤ x1") == parse_expr(
        "x0 xor x1 = 0 and not (x2 != 1) or x0 <= x1"
    )


def test_comments_are_ignored():
    assert parse_expr("x0 # trailing\n + 1") == parse_expr("x0 + 1")


@pytest.mark.parametrize(
    "text,value",
    [
        ("1 + 2 * 3", 7),
        ("7 - 2 - 1", 4),
        ("1 + 1 xor 1", 3),
        ("7 div 2 mod 2", 1),
        ("-2 + 5", 3),
        ("popcount(13)", 3),
        ("bit(6, 0)", 0),
        ("bit(6, 1)", 1),
        ("sum i in 0..4 : i", 6),
        ("sum i in 0..3 : (i * i)", 5),
        ("sum i in 0..3 : x[i]", 2),
        ("sum i in 0..3 : (x[i] = 1)", 2),
    ],
)
def test_integer_semantics(text, value):
    assert expr_value(text, x=(1, 0, 1)) == value


@pytest.mark.parametrize(
    "text,value",
    [
        ("not true or true", True),
        ("true or false and false", True),
        ("1 < 2 and 2 >= 2", True),
        ("x0 = 1 and y0' = 0", True),
        ("(1 = 1) = true", True),
    ],
)
def test_boolean_semantics(text, value):
    assert expr_value(text, x=(1, 0, 0)) is value


def test_spans_point_at_source():
    e = parse_expr("x0 +\n  y1'")
    assert (e.span.line, e.span.col) == (1, 1)
    assert (e.right.span.line, e.right.span.col, e.right.span.end_col) == (2, 3, 6)


# -- printer fixpoint ------------------------------------------------------------------


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.name)
def test_parse_print_parse_fixpoint(path):
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".game":
        tree = parse_game(text)
        printed = print_game(tree)
        assert parse_game(printed) == tree
        assert print_game(parse_game(printed)) == printed
    else:
        tree = parse_strategy_source(text)
        printed = print_strategy(tree)
        assert parse_strategy_source(printed) == tree
        assert print_strategy(parse_strategy_source(printed)) == printed


leaves = st.one_of(
    st.integers(0, 50).map(ast.IntLit),
    st.booleans().map(ast.BoolLit),
    st.sampled_from(["x0", "x1", "x2"]).map(ast.Var),
    st.sampled_from(["y0", "y1"]).map(lambda n: ast.Var(n, primed=True)),
    st.integers(0, 2).map(lambda i: ast.Var("x", ast.IntLit(i))),
)


def _extend(children):
    ops = ["+", "-", "*", "div", "mod", "xor", "=", "!=", "<", "<=", ">", ">=", "and", "or"]
    return st.one_of(
        st.tuples(st.sampled_from(ops), children, children).map(lambda t: ast.Binary(*t)),
        st.tuples(st.sampled_from(["not", "-"]), children).map(lambda t: ast.Unary(*t)),
        children.map(lambda c: ast.Call("popcount", (c,))),
        st.tuples(children, children).map(lambda t: ast.Call("bit", t)),
        st.tuples(children, children, children).map(lambda t: ast.Sum("i", *t)),
    )


@settings(max_examples=200)
@given(st.recursive(leaves, _extend, max_leaves=12))
def test_printer_roundtrip_random_trees(tree):
    assert parse_expr(print_expr(tree)) == tree


# -- shipped games and strategies --------------------------------------------------------


def test_mermin_file_matches_builtin():
    game = load_game(DATA / "mermin.game")
    ref, _ = games.mermin_game()
    assert (game.name, game.n_players, game.input_bits, game.output_bits) == (
        ref.name, ref.n_players, ref.input_bits, ref.output_bits,
    )
    assert truth_tables(game) == truth_tables(ref)


@pytest.mark.parametrize("stem", [s for s in BUILTINS if s != "dj_3"])
def test_shipped_truth_tables(stem):
    game = load_game(DATA / f"{stem}.game")
    ref, _ = BUILTINS[stem]()
    assert (game.name, game.n_players, game.input_bits, game.output_bits) == (
        ref.name, ref.n_players, ref.input_bits, ref.output_bits,
    )
    assert truth_tables(game) == truth_tables(ref)


def test_dj3_file_tables():
    game = load_game(DATA / "dj_3.game")
    ref, _ = games.dj_game(3)
    assert [game.promise(x) for x in game.inputs()] == [ref.promise(x) for x in ref.inputs()]
    outputs = list(ref.outputs())
    for x in list(ref.promised_inputs())[::97]:
        assert [game.win(x, y) for y in outputs] == [ref.win(x, y) for y in outputs]


@pytest.mark.parametrize("stem", sorted(BUILTINS))
def test_shipped_strategies_reproduce_builtins(stem):
    game = load_game(DATA / f"{stem}.game")
    strat = load_strategy(DATA / f"{stem}.strategy", game)
    ref_game, ref_strat = BUILTINS[stem]()
    assert strat.shared_state.allclose(ref_strat.shared_state)
    prog, ref_prog = games.build_program(game, strat), games.build_program(ref_game, ref_strat)
    inputs = list(game.promised_inputs())
    if len(inputs) > 300:
        inputs = inputs[::61]
    for x in inputs:
        assert strategy_distribution(game, prog, x).allclose(strategy_distribution(ref_game, ref_prog, x))


def test_parity_4_2_file_verifies():
    game = load_game(DATA / "parity_4_2.game")
    report = verify_winning(game, load_strategy(DATA / "parity_4_2.strategy", game))
    assert report.winning and report.refinement_holds
    assert report.min_win_probability == pytest.approx(1, abs=1e-9)


def test_pairsum_matches_construction():
    game = load_game(DATA / "dj_2.game")
    strat = load_strategy(DATA / "dj_2.strategy", game)
    built = la.apply(la.fanout(2), la.apply(la.tensor_op(la.hadamard_n(2), la.identity(2)), la.zero_state(4)))
    assert strat.shared_state.allclose(built)
    assert strat.shared_state.allclose(la.pairsum_state(2))


# -- diagnostics ---------------------------------------------------------------------------


MALFORMED_FILES = sorted(MALFORMED.iterdir())


def _compile_any(path: Path):
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".game":
        return compile_game_source(text)
    tree = parse_strategy_source(text)
    game = load_game(DATA / f"{tree.game}.game")
    return parse_strategy(text, game)


def test_ten_malformed_files():
    assert len(MALFORMED_FILES) == 10


@pytest.mark.parametrize("path", MALFORMED_FILES, ids=lambda p: p.name)
def test_malformed_file_diagnostic(path):
    text = path.read_text(encoding="utf-8")
    with pytest.raises(DslError) as info:
        _compile_any(path)
    d = info.value.diagnostic
    assert d.kind == path.stem.split("_")[0]
    lines = text.split("\n")
    assert 1 <= d.span.line <= len(lines)
    assert 1 <= d.span.col <= len(lines[d.span.line - 1]) + 1
    assert (d.span.end_line, d.span.end_col) >= (d.span.line, d.span.col)
    assert d.format("f.game").startswith(f"f.game:{d.span.line}:{d.span.col}: {d.kind} error:")


def test_division_by_zero_is_reported_when_evaluated():
    game = compile_game_source(MERMIN.replace("(x0 + x1 + x2) div 2", "x0 div (x1 - x1)"))
    with pytest.raises(DslError) as info:
        game.win((0, 0, 0), (0, 0, 0))
    assert info.value.diagnostic.kind == "semantic"


def mermin_with(promise=None, win=None):
    text = MERMIN
    if promise is not None:
        text = text.replace("promise: x0 ⊕ x1 ⊕ x2 = 0;", f"promise: {promise};")
    if win is not None:
        text = text.replace("win: y0' ⊕ y1' ⊕ y2' = (x0 + x1 + x2) div 2;", f"win: {win};")
    return text


@pytest.mark.parametrize(
    "promise,win,kind",
    [
        ("0 = 1", None, "semantic"),
        ("z0 = 1", None, "semantic"),
        ("x3 = 1", None, "semantic"),
        ("x[5] = 1", None, "semantic"),
        ("x0 = true", None, "type"),
        ("x0 and x1", None, "type"),
        (None, "y0 = 1", "type"),
        ("sum x0 in 0..3 : 1 = 3", None, "semantic"),
        ("x0 = 1.5", None, "syntax"),
    ],
)
def test_compile_errors(promise, win, kind):
    with pytest.raises(DslError) as info:
        compile_game_source(mermin_with(promise, win))
    assert info.value.diagnostic.kind == kind


STRATEGY_HEAD = "strategy s for mermin {\n  shared: ghz(3);\n"


def players(*bodies, ranges=((0, 1), (1, 2), (2, 3))):
    return "".join(f"  player {i} qubits {a}..{b} {{ {body} }}\n" for i, ((a, b), body) in enumerate(zip(ranges, bodies)))


def mermin_strategy(text):
    return parse_strategy(text, compile_game_source(MERMIN))


@pytest.mark.parametrize(
    "text,kind",
    [
        ("strategy s for dj1 {\n  shared: ghz(3);\n" + players("measure -> y0;", "measure -> y1;", "measure -> y2;") + "}", "semantic"),
        (STRATEGY_HEAD + players("measure -> y0;", "measure -> y1;") + "}", "semantic"),
        (STRATEGY_HEAD + players("measure -> y0;", "measure -> y1;", "measure -> y2;", ranges=((0, 1), (0, 1), (2, 3))) + "}", "locality"),
        (STRATEGY_HEAD + players("measure -> y1;", "measure -> y1;", "measure -> y2;") + "}", "locality"),
        (STRATEGY_HEAD + players("measure -> y0; H;", "measure -> y1;", "measure -> y2;") + "}", "semantic"),
        (STRATEGY_HEAD + players("oracle_dj(x0); measure -> y0;", "measure -> y1;", "measure -> y2;") + "}", "type"),
        (STRATEGY_HEAD + players("phase(pi*y0/2); measure -> y0;", "measure -> y1;", "measure -> y2;") + "}", "locality"),
        (STRATEGY_HEAD + players("phase(pi/2) if x0; measure -> y0;", "measure -> y1;", "measure -> y2;") + "}", "type"),
        ("strategy s for mermin {\n  shared: ghz(4);\n" + players("measure -> y0;", "measure -> y1;", "measure -> y2;") + "}", "semantic"),
        ("strategy s for mermin {\n  shared: amplitudes [1, 0];\n" + players("measure -> y0;", "measure -> y1;", "measure -> y2;") + "}", "semantic"),
        ("strategy s for mermin {\n  shared: amplitudes [1, 0, 0, 0, 0, 0, 0, 1];\n" + players("measure -> y0;", "measure -> y1;", "measure -> y2;") + "}", "semantic"),
    ],
)
def test_strategy_errors(text, kind):
    with pytest.raises(DslError) as info:
        mermin_strategy(text)
    assert info.value.diagnostic.kind == kind


def test_explicit_amplitudes():
    text = (
        "strategy s for mermin {\n  shared: amplitudes [sqrt(2)/2, 0, 0, 0, 0, 0, 0, i*sqrt(1/2)];\n"
        + players("measure -> y0;", "measure -> y1;", "measure -> y2;")
        + "}"
    )
    strat = mermin_strategy(text)
    assert abs(strat.shared_state[7] - 1j * 2**-0.5) < 1e-12


def test_zero_angle_and_guarded_phase():
    body = "phase(0); phase(pi*x{i}/2) if x{i} = 1; H; measure -> y{i};"
    strat = mermin_strategy(STRATEGY_HEAD + players(*(body.format(i=i) for i in range(3))) + "}")
    ref_game, ref = games.mermin_game()
    for x in ref_game.promised_inputs():
        assert strategy_distribution(ref_game, strat, x).allclose(strategy_distribution(ref_game, ref, x))


@given(st.text(max_size=40))
def test_parser_never_crashes_unexpectedly(text):
    try:
        compile_game_source(text)
    except DslError as exc:
        assert exc.span.line >= 1
