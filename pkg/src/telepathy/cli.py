"""Command-line interface.

Exit codes: 0 verified winning (or, for ``dist``/``classical``/``check``,
the command completed), 1 not winning, 2 the refinement check failed even
though every promised input is won with probability 1, 3 usage or source
error, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import math
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from . import report as rep
from .classical import CLASSICAL_MODEL, dj_coloring_search, exhaustive_search, strategy_count
from .dsl import DslError, compile_game_source, parse_game, parse_strategy, parse_strategy_source
from .errors import ContractViolation, DomainError, SearchRefused, TelepathyError
from .games import (
    EPS_PROB,
    GameSpec,
    QuantumStrategy,
    bell_example,
    dj_game,
    mermin_game,
    parity_game,
    strategy_distribution,
    verify_winning,
)

EXIT_WINNING, EXIT_LOSING, EXIT_REFINEMENT, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would collide with EXIT_REFINEMENT
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _tolerance(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value) or value < 0:
        raise argparse.ArgumentTypeError("tolerance must be a finite non-negative number")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--json", action="store_true", help="print a JSON report")
    p.add_argument("--tolerance", type=_tolerance, default=EPS_PROB, help="probability tolerance (default 1e-9)")
    p.add_argument("--quiet", action="store_true", help="print only the summary")
    return p


def _add_game_choices(sub, common, *, strategy_option: bool):
    games = sub.add_subparsers(dest="game", metavar="GAME", parser_class=_Parser)
    games.required = True
    games.add_parser("mermin", parents=[common], help="Mermin's three-player game")
    games.add_parser("bell", parents=[common], help="two parties on a Bell pair, no inputs")
    dj = games.add_parser("dj", parents=[common], help="Deutsch-Jozsa game")
    dj.add_argument("--k", type=int, required=True)
    par = games.add_parser("parity", parents=[common], help="parity game")
    par.add_argument("--n", type=int, required=True)
    par.add_argument("--l", type=int, required=True)
    f = games.add_parser("file", parents=[common], help="a game described in a .game file")
    f.add_argument("path", metavar="GAME")
    if strategy_option:
        f.add_argument("--strategy", metavar="FILE", help="strategy file (default: GAME with a .strategy suffix)")
    return games


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="telepathy", description="Verify quantum pseudo-telepathy strategies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    verify = sub.add_parser("verify", help="check S!P <= W!1 and per-input win probabilities")
    _add_game_choices(verify, common, strategy_option=True)

    dist = sub.add_parser("dist", help="output distribution for one input")
    games = _add_game_choices(dist, common, strategy_option=True)
    for choice in games.choices.values():
        choice.add_argument("--input", default="", metavar="CSV", help="one value per player, e.g. 1,1,0")

    classical = sub.add_parser("classical", help="best deterministic classical strategy")
    games = _add_game_choices(classical, common, strategy_option=False)
    for choice in games.choices.values():
        choice.add_argument(
            "--budget", type=_positive, default=None, help="cap on strategies enumerated or colourings tried"
        )

    check = sub.add_parser("check", parents=[common], help="parse and compile a .game or .strategy file")
    check.add_argument("path", metavar="FILE")
    check.add_argument("--game", metavar="GAME", help="game file a strategy refers to")
    return parser


# -- game resolution --------------------------------------------------------


def _read(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _compile_game_file(path: str | Path) -> GameSpec:
    return _with_file(path, compile_game_source)


def _with_file(path, fn):
    text = _read(path)
    try:
        return fn(text)
    except DslError as exc:
        raise UsageError(exc.diagnostic.format(str(path))) from None


def resolve(args) -> tuple[GameSpec, QuantumStrategy | None]:
    if args.game == "mermin":
        return mermin_game()
    if args.game == "bell":
        return bell_example()
    if args.game == "dj":
        return dj_game(args.k)
    if args.game == "parity":
        return parity_game(args.n, args.l)
    game = _compile_game_file(args.path)
    strategy_path = getattr(args, "strategy", None)
    if not hasattr(args, "strategy"):
        return game, None
    if strategy_path is None:
        strategy_path = Path(args.path).with_suffix(".strategy")
    strategy = _with_file(strategy_path, lambda text: parse_strategy(text, game))
    return game, strategy


def parse_input(game: GameSpec, text: str) -> tuple[int, ...]:
    """Comma-separated values, one per player.

    A token of exactly ``input_bits`` binary digits, or one prefixed with
    ``0b``, is read as a bit string; anything else as a decimal integer.
    """
    if game.input_bits == 0 and not text.strip():
        return (0,) * game.n_players
    values = []
    for token in (t.strip() for t in text.split(",")):
        try:
            if token.startswith("0b"):
                values.append(int(token[2:], 2))
            elif len(token) == game.input_bits and set(token) <= {"0", "1"}:
                values.append(int(token, 2))
            else:
                values.append(int(token, 10))
        except ValueError:
            raise UsageError(f"cannot read input value {token!r}") from None
    return game.check_inputs(values)


# -- commands ---------------------------------------------------------------


def _fmt_dist(game: GameSpec, dist) -> str:
    return "  ".join(f"{','.join(game.format_outputs(y))}:{rep.fmt(p):.6g}" for y, p in sorted(dist.items()))


def _describe(game: GameSpec) -> str:
    return (
        f"game {game.name}: {game.n_players} players, {game.input_bits}-bit inputs, "
        f"{game.output_bits}-bit outputs"
    )


def cmd_verify(args, out) -> int:
    game, strategy = resolve(args)
    report = verify_winning(game, strategy, tolerance=args.tolerance)
    verdict = rep.verdict(report)
    code = {"winning": EXIT_WINNING, "not-winning": EXIT_LOSING, "refinement-failed": EXIT_REFINEMENT}[verdict]
    if args.json:
        out.write(rep.dumps(rep.verification_dict(game, report, args.argv)))
        return code
    out.write(f"{_describe(game)}; strategy {report.strategy}\n")
    out.write(f"promised inputs: {len(report.results)}{' (exhaustive)' if report.exhaustive else ''}\n")
    if not args.quiet:
        for r in report.results:
            x = ",".join(game.format_inputs(r.inputs))
            out.write(f"  x={x}  win={rep.fmt(r.win_probability):.12g}  {_fmt_dist(game, r.distribution)}\n")
    ref = report.refinement
    out.write(f"refinement S!P <= W!1: {'holds' if ref.holds else 'FAILS'} ({ref.checked} prestates)\n")
    if ref.counterexample is not None:
        c = rep.verification_dict(game, report)["refinement"]["counterexample"]
        out.write(f"  counterexample: x={','.join(c['x'])} y={','.join(c['y'])} S!P={c['p']} W!1={c['q']}\n")
    out.write(f"minimum win probability: {rep.fmt(report.min_win_probability):.12g}\n")
    out.write(f"verdict: {verdict}\n")
    return code


def cmd_dist(args, out) -> int:
    game, strategy = resolve(args)
    x = parse_input(game, args.input)
    dist = strategy_distribution(game, strategy, x)
    data = rep.dist_dict(game, strategy.name, x, dist, args.argv)
    if args.json:
        out.write(rep.dumps(data))
        return EXIT_WINNING
    out.write(f"{_describe(game)}; strategy {strategy.name}\n")
    shown = ",".join(data["x"]) if game.input_bits else "(none)"
    out.write(f"input {shown}{'' if data['promised'] else ' (outside the promise)'}\n")
    for row in data["distribution"]:
        out.write(f"  {','.join(row['y'])}  {row['p']:.12g}\n")
    out.write(f"win probability: {data['win_probability']:.12g}\n")
    return EXIT_WINNING


def cmd_classical(args, out) -> int:
    game, _ = resolve(args)
    cap = args.budget or 1 << 20
    if strategy_count(game) <= cap:
        result = exhaustive_search(game, cap=cap)
    elif args.game == "dj":
        result = dj_coloring_search(args.k, budget=args.budget or 1_000_000)
    else:
        raise SearchRefused(
            f"{strategy_count(game)} strategy tuples exceed the budget of {cap}; raise --budget"
        )
    data = rep.classical_dict(game, result, CLASSICAL_MODEL, args.argv)
    if args.json:
        out.write(rep.dumps(data))
        return EXIT_WINNING
    out.write(f"{_describe(game)}\n")
    out.write(f"model: {CLASSICAL_MODEL}\n")
    out.write(
        f"method: {result.method}; best fraction {data['best_fraction_exact']} = {data['best_fraction']:.12g}; "
        f"exhausted={str(result.exhausted).lower()}; budget consumed {result.budget_consumed}\n"
    )
    if not args.quiet and data["strategy"] is not None:
        for i, table in enumerate(data["strategy"]):
            out.write(f"  player {i}: {' '.join(table)}\n")
        out.write(f"  losing promised inputs: {data['losing_inputs']}\n")
    if not args.quiet:
        for note in result.notes[1:]:
            out.write(f"note: {note}\n")
    return EXIT_WINNING


def _find_game_for(strategy_path: Path, game_name: str) -> Path | None:
    candidates = sorted(strategy_path.parent.glob("*.game"))
    shipped = resources.files("telepathy").joinpath("data")
    candidates += sorted(Path(str(p)) for p in shipped.iterdir() if p.name.endswith(".game"))
    for path in candidates:
        try:
            if parse_game(path.read_text(encoding="utf-8")).name == game_name:
                return path
        except (DslError, OSError):
            continue
    return None


def cmd_check(args, out) -> int:
    path = Path(args.path)
    text = _read(path)
    diagnostics = []
    summary = ""
    try:
        if path.suffix == ".strategy":
            tree = parse_strategy_source(text)
            game_path = Path(args.game) if args.game else _find_game_for(path, tree.game)
            if game_path is None:
                raise UsageError(f"{path}: cannot find a .game file for game {tree.game!r}; pass --game")
            game = _compile_game_file(game_path)
            strategy = parse_strategy(text, game)
            summary = f"strategy {strategy.name} for {game.name}: {strategy.n_qubits} qubits"
        else:
            game = compile_game_source(text)
            summary = _describe(game)
    except DslError as exc:
        d = exc.diagnostic
        diagnostics.append(
            {
                "kind": d.kind,
                "message": d.message,
                "line": d.span.line,
                "column": d.span.col,
                "end_line": d.span.end_line,
                "end_column": d.span.end_col,
            }
        )
        if args.json:
            out.write(rep.dumps(rep.check_dict(str(path), False, "", diagnostics, args.argv)))
        else:
            sys.stderr.write(d.format(str(path)) + "\n")
        return EXIT_USAGE
    if args.json:
        out.write(rep.dumps(rep.check_dict(str(path), True, summary, diagnostics, args.argv)))
    elif not args.quiet:
        out.write(f"ok: {summary}\n")
    return EXIT_WINNING


COMMANDS = {"verify": cmd_verify, "dist": cmd_dist, "classical": cmd_classical, "check": cmd_check}


def run(argv=None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        args.argv = argv
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (DomainError, SearchRefused, DslError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (ContractViolation, TelepathyError) as exc:
        sys.stderr.write(f"internal error: {exc}\n")
        return EXIT_INTERNAL
    except Exception as exc:  # anything else is a bug, reported as an invariant violation
        sys.stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
