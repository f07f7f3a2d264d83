"""Acceptance criteria, one PASS/FAIL line each.

Each check collects failure messages instead of stopping at the first one,
so the printed line states everything that went wrong.  Wall-clock budgets
are part of the check.
"""

import io
import itertools
import json
import math
import time

import numpy as np
import pytest

from telepathy import classical as cl
from telepathy import games
from telepathy import linalg as la
from telepathy import semantics as sem
from telepathy.cli import run
from telepathy.dsl import (
    DslError,
    compile_game_source,
    load_game,
    load_strategy,
    parse_game,
    parse_strategy,
    parse_strategy_source,
    print_game,
    print_strategy,
)
from telepathy.games import strategy_distribution, truth_tables, verify_winning
from telepathy.semantics import LocalMeasure, LocalUnitary, Party, QuantumVar, State, StateSpace

from conftest import DATA, MALFORMED, random_state, random_unitary
from test_games import dj_oracle_distribution, popcount
from test_semantics import SMALL, check_substitution, countdown, random_program

TOL = 1e-9


class Check:
    def __init__(self):
        self.failures = []

    def __call__(self, ok, message):
        if not ok:
            self.failures.append(message)
        return ok


@pytest.fixture
def criterion(capsys):
    started = {}

    def report(number, title, check, budget):
        elapsed = time.perf_counter() - started["t"]
        check(elapsed < budget, f"took {elapsed:.2f}s, budget {budget}s")
        status = "PASS" if not check.failures else "FAIL"
        line = f"{status} criterion {number}: {title} ({elapsed:.2f}s)"
        if check.failures:
            line += " :: " + "; ".join(check.failures[:5])
        with capsys.disabled():
            print("\n" + line)
        assert not check.failures, line

    started["t"] = time.perf_counter()
    return report


def uniform_over(dist, support, p):
    got = set(dist.support(TOL))
    return got == set(support) and all(abs(dist[y] - p) <= TOL for y in support)


def parity_outputs(n, parity):
    return [y for y in itertools.product((0, 1), repeat=n) if sum(y) % 2 == parity]


def test_criterion_1_bell(criterion):
    check = Check()
    game, strat = games.bell_example()
    dist = strategy_distribution(game, strat, (0, 0))
    check(uniform_over(dist, list(itertools.product((0, 1), repeat=2)), 0.25), f"bell distribution {dict(dist.items())}")
    out = io.StringIO()
    check(run(["dist", "bell", "--json"], out) == 0, "dist bell exit code")
    rows = json.loads(out.getvalue())["distribution"]
    check([abs(r["p"] - 0.25) <= TOL for r in rows] == [True] * 4, f"cli rows {rows}")
    # each outcome leaves the register in |pq>
    space = StateSpace({"p": range(2), "q": range(2)}, {"psi": QuantumVar(2, {"A": (0, 1), "B": (1, 2)})})
    alice = Party("A", (0, 1), ("p",), (LocalUnitary(la.hadamard()), LocalMeasure("p")))
    bob = Party("B", (1, 2), ("q",), (LocalMeasure("q"),))
    prog = sem.seq(sem.assign(space, "psi", la.ghz_state(2)), sem.parallel(space, "psi", [alice, bob]))
    for post, p in prog.table(next(space.prestates())).items():
        check(post["psi"] == la.basis_state(2 * post["p"] + post["q"], 2), f"poststate for {post['p']}{post['q']}")
        check(abs(p - 0.25) <= TOL, f"probability {p}")
    criterion(1, "Bell pair outcomes uniform 1/4", check, 1)


def test_criterion_2_mermin(criterion):
    check = Check()
    game, strat = games.mermin_game()
    report = verify_winning(game, strat, TOL)
    check(report.exhaustive and len(report.results) == 4, "not all 4 promised inputs checked")
    for r in report.results:
        support = parity_outputs(3, sum(r.inputs) // 2)
        check(uniform_over(r.distribution, support, 0.25), f"x={r.inputs} distribution")
        check(abs(r.win_probability - 1) <= TOL, f"x={r.inputs} win {r.win_probability}")
    check(report.refinement_holds, "refinement S!P <= W!1 fails")
    criterion(2, "Mermin wins with certainty and refines W!1", check, 1)


def test_criterion_3_parity(criterion):
    check = Check()
    for n, l in itertools.product((3, 4, 5), (1, 2)):
        game, strat = games.parity_game(n, l)
        report = verify_winning(game, strat, TOL)
        check(report.exhaustive, f"parity({n},{l}) not exhaustive")
        check(report.refinement_holds, f"parity({n},{l}) refinement")
        for r in report.results:
            support = parity_outputs(n, (sum(r.inputs) >> l) % 2)
            check(uniform_over(r.distribution, support, 1 / 2 ** (n - 1)), f"parity({n},{l}) x={r.inputs}")
            check(abs(r.win_probability - 1) <= TOL, f"parity({n},{l}) x={r.inputs} win")
    a = verify_winning(*games.parity_game(3, 1))
    b = verify_winning(*games.mermin_game())
    check(truth_tables(games.parity_game(3, 1)[0]) == truth_tables(games.mermin_game()[0]), "parity(3,1) tables")
    check([r.inputs for r in a.results] == [r.inputs for r in b.results], "parity(3,1) inputs differ")
    for ra, rb in zip(a.results, b.results):
        check(ra.distribution.allclose(rb.distribution, 1e-12), f"parity(3,1) x={ra.inputs} table differs")
        check(ra.win_probability == pytest.approx(rb.win_probability, abs=1e-12), "win differs")
    check(a.refinement_holds == b.refinement_holds and a.refinement.checked == b.refinement.checked, "refinement differs")
    criterion(3, "parity games n in 3..5, l in 1..2; parity(3,1) equals Mermin", check, 30)


def test_criterion_4_deutsch_jozsa(criterion):
    check = Check()
    for k in (1, 2, 3):
        game, strat = games.dj_game(k)
        report = verify_winning(game, strat, TOL)
        d = 1 << k
        check(report.exhaustive, f"k={k} not exhaustive")
        check(report.winning, f"k={k} not winning")
        for r in report.results:
            xa, xb = r.inputs
            if xa == xb:
                check(uniform_over(r.distribution, [(a, a) for a in range(d)], 1 / d), f"k={k} x={r.inputs} equal")
            else:
                mass = math.fsum(r.distribution.get((a, a)) for a in range(d))
                check(mass <= TOL, f"k={k} x={r.inputs} equal-output mass {mass}")
            check(abs(r.win_probability - 1) <= TOL, f"k={k} x={r.inputs} win")
        if k == 1:
            check(report.refinement_holds, "k=1 refinement should hold")
        if k == 2:
            # DERIVED regression fixtures, cross-checked against a direct numpy oracle
            check(not report.refinement_holds, "k=2 refinement verdict changed")
            cex = report.refinement.counterexample
            check(
                (cex.prestate["x0"], cex.prestate["x1"], cex.poststate["y0"], cex.poststate["y1"]) == (0, 3, 0, 2)
                and abs(cex.p_value - 0.25) <= TOL
                and abs(cex.q_value - 1 / 12) <= TOL,
                "k=2 counterexample changed",
            )
            pinned = {(0, 2): 0.25, (1, 3): 0.25, (2, 0): 0.25, (3, 1): 0.25}
            dist = report.result_for((0b0000, 0b1100)).distribution
            check(uniform_over(dist, list(pinned), 0.25), f"k=2 0000/1100 distribution {dict(dist.items())}")
            check(dj_oracle_distribution(0b0000, 0b1100, 2) == pytest.approx(pinned), "oracle disagrees")
        if k == 3:
            check(len(report.results) == 256 + sum(popcount(a ^ b) == 4 for a in range(256) for b in range(256)),
                  "k=3 input count")
    criterion(4, "Deutsch-Jozsa k=1..3 exhaustive; k=2 fixtures", check, 120)


def test_criterion_5_classical(criterion):
    check = Check()
    game, _ = games.mermin_game()
    result = cl.exhaustive_search(game)
    check(result.best_fraction == 0.75 and result.exhausted, f"Mermin optimum {result.best_fraction}")
    check(result.budget_consumed == 64, f"searched {result.budget_consumed} triples")
    promised = list(game.promised_inputs())
    wins = sum(game.win(x, result.strategy.respond(x)) for x in promised)
    check(wins == 3, f"re-verified wins {wins}")
    dj, _ = games.dj_game(1)
    found = cl.dj_coloring_search(1)
    check(found.wins_all, "DJ k=1 search did not win")
    check(all(dj.win(x, found.strategy.respond(x)) for x in dj.promised_inputs()), "DJ k=1 strategy loses")
    criterion(5, "classical optimum 3/4 for Mermin; DJ k=1 classically winnable", check, 5)


def _measurement_matches(seed):
    space = StateSpace({"r": range(4)}, {"psi": 2})
    psi = la.StateVector(random_state(np.random.default_rng(seed), 2))
    prestates = list(space.prestates({"psi": [psi]}))
    general = sem.measure_general(space, la.computational_family(2), "psi", "r")
    comp = sem.measure_computational(space, "psi", "r")
    for pre in prestates:
        g = {k["r"]: (v, k["psi"]) for k, v in general.table(pre).items()}
        c = {k["r"]: (v, k["psi"]) for k, v in comp.table(pre).items()}
        if g.keys() != c.keys():
            return False
        if any(abs(g[r][0] - c[r][0]) > TOL or not la.same_ray(g[r][1], c[r][1]) for r in g):
            return False
    return sem.equivalent(sem.sum_out(["psi"], general), sem.sum_out(["psi"], comp), TOL, prestates)


def test_criterion_6_semantics(criterion):
    check = Check()
    rng = np.random.default_rng(20240501)
    subs = [check_substitution(int(s)) for s in rng.integers(0, 2**32, size=100)]
    check(all(subs), f"substitution law failed on {subs.count(False)} programs")

    bell = StateSpace({"p": range(2), "q": range(2)}, {"psi": QuantumVar(2, {"A": (0, 1), "B": (1, 2)})})
    q1 = StateSpace({"r": range(2)}, {"psi": 1})
    constructs = {
        "ok": (sem.ok(SMALL), SMALL),
        "assign": (sem.assign(SMALL, "x", lambda s: (s["y"] + 1) % 4), SMALL),
        "seq": (random_program(rng), SMALL),
        "if": (sem.if_then_else(lambda s: 0.3, sem.ok(SMALL), sem.assign(SMALL, "y", 0)), SMALL),
        "unitary": (sem.seq(sem.assign(q1, "psi", la.basis_state(0, 1)), sem.unitary(q1, "psi", la.hadamard())), q1),
        "measure": (sem.seq(sem.assign(q1, "psi", la.apply(la.hadamard(), la.basis_state(0, 1))),
                            sem.measure_computational(q1, "psi", "r")), q1),
        "parallel": (sem.seq(sem.assign(bell, "psi", la.ghz_state(2)), sem.parallel(bell, "psi", [
            Party("A", (0, 1), ("p",), (LocalUnitary(la.hadamard()), LocalMeasure("p"))),
            Party("B", (1, 2), ("q",), (LocalMeasure("q"),)),
        ])), bell),
    }
    for name, (prog, space) in constructs.items():
        pres = list(space.prestates({"psi": [la.basis_state(0, space.quantum["psi"].n_qubits)]})
                    if space.quantum else space.prestates())
        for pre in pres:
            total = math.fsum(prog.table(pre).values())
            check(abs(total - 1) <= TOL, f"{name} total {total}")

    for seed in range(20):
        weights = np.random.default_rng(seed).uniform(0.01, 5, size=4)
        space = StateSpace({"x": range(4)})
        p = sem.expression(space, lambda a, b, w=weights: float(w[b["x"]]), post_vars=["x"])
        s = State({"x": seed % 4})
        learned, normed = sem.learn(p, True).table(s), sem.normalize(p).table(s)
        check(learned.keys() == normed.keys() and all(abs(learned[k] - normed[k]) <= TOL for k in learned),
              f"learn(P,1) != normalize(P) for seed {seed}")

    meas = [_measurement_matches(s) for s in range(25)]
    check(all(meas), f"general measurement differs on {meas.count(False)} states")

    _, spec, body = countdown(17)
    result = sem.refines(body, spec, eps=0)
    check(result.holds and result.checked == 17, "countdown body does not refine x>=0 => x'=0 on 0..16")
    criterion(6, "semantics properties", check, 10)


def test_criterion_7_linalg(criterion):
    check = Check()
    rng = np.random.default_rng(7)
    ops = {
        "hadamard": la.hadamard(),
        "hadamard_n(5)": la.hadamard_n(5),
        "phase": la.phase_gate(0.913),
        "fanout(1)": la.fanout(1),
        "fanout(3)": la.fanout(3),
        "dj_oracle": la.dj_oracle("10010110", 3),
        "identity": la.identity(4),
        "tensor_ops": la.tensor_ops([la.hadamard(), la.phase_gate(1.1)]),
    }
    for name, op in ops.items():
        check(la.is_unitary(op, TOL), f"{name} not unitary")
    for state in (la.ghz_state(4), la.pairsum_state(3), la.basis_state(3, 2)):
        check(abs(la.inner_product(state, state) - 1) <= TOL, "state not normalized")
    for n in range(1, 7):
        h = la.hadamard_n(n).matrix
        dim = 1 << n
        expected = np.array([[(-1) ** popcount(x & z) for x in range(dim)] for z in range(dim)]) / math.sqrt(dim)
        check(np.max(np.abs(h - expected)) <= TOL, f"H^{n} basis action")
    for _ in range(30):
        m, n = (int(v) for v in rng.integers(1, 4, size=2))
        psi, phi = la.StateVector(random_state(rng, m)), la.StateVector(random_state(rng, n))
        t = la.tensor_state(psi, phi).amps
        law = all(abs(t[i] - psi.amps[i >> n] * phi.amps[i & ((1 << n) - 1)]) <= TOL for i in range(1 << (m + n)))
        check(law, "tensor index law")
        dim = 1 << m
        u = la.Operator(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
        a, b = random_state(rng, m), random_state(rng, m)
        check(abs(np.vdot(a, u.matrix @ b) - np.vdot(la.adjoint(u).matrix @ a, b)) <= TOL, "adjoint identity")
        w = la.Operator(random_unitary(rng, m))
        check(la.is_unitary(w, TOL), "random unitary")
    criterion(7, "linear algebra", check, 10)


def _compile_any(path):
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".game":
        return compile_game_source(text)
    return parse_strategy(text, load_game(DATA / f"{parse_strategy_source(text).game}.game"))


def test_criterion_8_dsl(criterion):
    check = Check()
    builtins = {
        "mermin": games.mermin_game,
        **{f"dj_{k}": (lambda k=k: games.dj_game(k)) for k in (1, 2, 3)},
        **{f"parity_{n}_{l}": (lambda n=n, l=l: games.parity_game(n, l)) for n in (3, 4, 5) for l in (1, 2)},
    }
    for stem, factory in builtins.items():
        ref_game, ref_strat = factory()
        game = load_game(DATA / f"{stem}.game")
        strat = load_strategy(DATA / f"{stem}.strategy", game)
        if stem == "dj_3":
            # the full k=3 table comparison lives in the DSL tests; here a strided slice
            inputs = list(ref_game.promised_inputs())[::257]
        else:
            check(truth_tables(game) == truth_tables(ref_game), f"{stem} truth tables")
            inputs = None
        ours = verify_winning(game, strat, TOL, inputs)
        ref = verify_winning(ref_game, ref_strat, TOL, inputs)
        check(ours.winning == ref.winning and ours.refinement_holds == ref.refinement_holds, f"{stem} verdict")
        for a, b in zip(ours.results, ref.results):
            check(a.inputs == b.inputs and a.distribution.allclose(b.distribution, TOL), f"{stem} x={a.inputs}")
    for path in sorted(DATA.iterdir()):
        text = path.read_text(encoding="utf-8")
        if path.suffix == ".game":
            tree = parse_game(text)
            check(parse_game(print_game(tree)) == tree, f"{path.name} fixpoint")
        else:
            tree = parse_strategy_source(text)
            check(parse_strategy_source(print_strategy(tree)) == tree, f"{path.name} fixpoint")
    malformed = sorted(MALFORMED.iterdir())
    check(len(malformed) == 10, f"{len(malformed)} malformed files")
    for path in malformed:
        try:
            _compile_any(path)
            check(False, f"{path.name} compiled")
        except DslError as exc:
            check(exc.span.line >= 1 and exc.span.col >= 1, f"{path.name} span")
    criterion(8, "DSL files reproduce built-ins; fixpoint; malformed diagnostics", check, 5)
