"""Deterministic JSON reports.

Every report is a JSON object with these common keys:

``schema``
    ``"telepathy-report/1"``; bumped on any incompatible change.
``engine_version``
    Package version that produced the report.
``command``
    The argument vector, echoed verbatim.
``kind``
    ``"verify"``, ``"dist"``, ``"classical"`` or ``"check"``.

``verify`` reports add ``game`` (name, players, input_bits, output_bits,
promised_inputs), ``strategy``, ``tolerance``, ``exhaustive``,
``promise_mass``, ``inputs`` (a list of ``{x, distribution, win_probability}``
where ``x`` holds one bit string per player and ``distribution`` is a list
of ``{y, p}``), ``refinement`` (``holds``, ``checked``, ``max_excess`` and
``counterexample``: ``null`` or ``{x, y, p, q}``), ``min_win_probability``,
``winning`` and ``verdict`` (``winning``, ``not-winning`` or
``refinement-failed``).

``dist`` reports add ``game``, ``strategy``, ``x``, ``promised``,
``distribution`` and ``win_probability``.

``classical`` reports add ``game``, ``model``, ``method``,
``best_fraction`` (float) and ``best_fraction_exact`` (``"p/q"``),
``exhausted``, ``budget_consumed``, ``strategy`` (per-player tables of
output bit strings indexed by input, or ``null``), ``losing_inputs`` and
``notes``.

Floats are rounded to 12 significant digits and keys are sorted, so equal
inputs give byte-identical output.
"""

from __future__ import annotations

import json
import math

from . import __version__
from .classical import SearchResult, verify_strategy
from .games import GameSpec, VerificationReport, input_name, output_name
from .semantics import Distribution

SCHEMA = "telepathy-report/1"


def fmt(x: float) -> float:
    v = float(format(float(x), ".12g"))
    return 0.0 if v == 0 else v


def _header(kind: str, command) -> dict:
    return {"schema": SCHEMA, "engine_version": __version__, "command": list(command), "kind": kind}


def game_info(game: GameSpec) -> dict:
    return {
        "name": game.name,
        "players": game.n_players,
        "input_bits": game.input_bits,
        "output_bits": game.output_bits,
        "promised_inputs": sum(1 for _ in game.promised_inputs()),
    }


def distribution_rows(game: GameSpec, dist: Distribution) -> list[dict]:
    return [{"y": list(game.format_outputs(y)), "p": fmt(p)} for y, p in sorted(dist.items())]


def verdict(report: VerificationReport) -> str:
    if not report.winning:
        return "not-winning"
    return "winning" if report.refinement_holds else "refinement-failed"


def verification_dict(game: GameSpec, report: VerificationReport, command=()) -> dict:
    ref = report.refinement
    cex = None
    if ref.counterexample is not None:
        c = ref.counterexample
        cex = {
            "x": list(game.format_inputs(tuple(c.prestate[input_name(i)] for i in range(game.n_players)))),
            "y": list(game.format_outputs(tuple(c.poststate[output_name(i)] for i in range(game.n_players)))),
            "p": fmt(c.p_value),
            "q": fmt(c.q_value),
        }
    out = _header("verify", command)
    out.update(
        game=game_info(game),
        strategy=report.strategy,
        tolerance=fmt(report.tolerance),
        exhaustive=report.exhaustive,
        promise_mass=fmt(report.promise_mass),
        inputs=[
            {
                "x": list(game.format_inputs(r.inputs)),
                "distribution": distribution_rows(game, r.distribution),
                "win_probability": fmt(r.win_probability),
            }
            for r in report.results
        ],
        refinement={
            "holds": ref.holds,
            "checked": ref.checked,
            "max_excess": fmt(ref.max_excess),
            "counterexample": cex,
        },
        min_win_probability=fmt(report.min_win_probability),
        winning=report.winning,
        verdict=verdict(report),
    )
    return out


def dist_dict(game: GameSpec, strategy_name: str, x, dist: Distribution, command=()) -> dict:
    out = _header("dist", command)
    out.update(
        game=game_info(game),
        strategy=strategy_name,
        x=list(game.format_inputs(tuple(x))),
        promised=bool(game.promise(tuple(x))),
        distribution=distribution_rows(game, dist),
        win_probability=fmt(game.win_probability(tuple(x), dist)),
    )
    return out


def classical_dict(game: GameSpec, result: SearchResult, model: str, command=()) -> dict:
    strategy = None
    losing = None
    if result.strategy is not None:
        width = game.output_bits
        strategy = [[format(v, f"0{width}b") for v in table] for table in result.strategy.tables]
        losing = len(verify_strategy(game, result.strategy))
    out = _header("classical", command)
    out.update(
        game=game_info(game),
        model=model,
        method=result.method,
        best_fraction=fmt(result.best_fraction),
        best_fraction_exact=f"{result.best_fraction.numerator}/{result.best_fraction.denominator}",
        exhausted=result.exhausted,
        budget_consumed=result.budget_consumed,
        strategy=strategy,
        losing_inputs=losing,
        notes=list(result.notes),
    )
    return out


def check_dict(path: str, ok: bool, summary: str, diagnostics: list[dict], command=()) -> dict:
    out = _header("check", command)
    out.update(file=path, ok=ok, summary=summary, diagnostics=diagnostics)
    return out


def dumps(report: dict) -> str:
    def guard(o):
        if isinstance(o, float) and not math.isfinite(o):
            raise ValueError("non-finite number in report")
        return o

    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False, default=guard) + "\n"
