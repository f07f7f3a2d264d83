"""Probabilistic predicative specifications over finite state spaces.

A specification is a non-negative real function of a prestate and a
poststate.  Because quantum variables range over a continuum, specifications
are evaluated forward: from a given prestate a :class:`Spec` produces the
finite table of poststates at which it is non-zero.  Every table is keyed by
an assignment to the poststate variables the specification *mentions*
(``Spec.post_vars``); the specification is constant in every other primed
variable.  Summing out a variable therefore just drops it from the keys, and
normalization sums only over the mentioned variables.

Booleans are the 0/1-valued special case, so ``ok``, assignment and
predicates are ordinary specifications with the ``boolean`` flag set.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import linalg
from .errors import (
    ContractViolation,
    DomainError,
    EvaluationError,
    LocalityViolation,
    UndefinedConditional,
)
from .linalg import MeasurementFamily, Operator, StateVector

EPS_PROB = 1e-9
# Total mass that may be silently discarded when pruning tiny measurement branches.
PRUNE_BUDGET = 1e-12


# -- state spaces -----------------------------------------------------------


@dataclass(frozen=True)
class QuantumVar:
    """A register of ``n_qubits`` qubits split into per-party intervals."""

    n_qubits: int
    partition: Mapping[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= linalg.MAX_QUBITS:
            raise DomainError(f"quantum register of {self.n_qubits} qubits not supported")
        if self.partition:
            spans = sorted(self.partition.values())
            pos = 0
            for start, stop in spans:
                if start != pos or stop <= start:
                    raise DomainError(f"partition intervals must be disjoint and cover 0..{self.n_qubits}")
                pos = stop
            if pos != self.n_qubits:
                raise DomainError(f"partition intervals must be disjoint and cover 0..{self.n_qubits}")


class StateSpace:
    """Declared variables: classical ones with finite integer domains, quantum registers."""

    def __init__(
        self,
        classical: Mapping[str, Iterable[int]] | None = None,
        quantum: Mapping[str, QuantumVar | int] | None = None,
    ):
        classical = dict(classical or {})
        quantum = dict(quantum or {})
        overlap = set(classical) & set(quantum)
        if overlap:
            raise DomainError(f"variable names must be unique: {sorted(overlap)}")
        self.classical = {name: tuple(dom) for name, dom in classical.items()}
        for name, dom in self.classical.items():
            if not dom:
                raise DomainError(f"variable {name!r} has an empty domain")
        self.quantum = {
            name: q if isinstance(q, QuantumVar) else QuantumVar(q) for name, q in quantum.items()
        }
        self.names = tuple(sorted(self.classical) + sorted(self.quantum))
        self._domain_sets = {name: frozenset(dom) for name, dom in self.classical.items()}

    @classmethod
    def bits(cls, widths: Mapping[str, int], quantum=None) -> "StateSpace":
        return cls({name: range(1 << w) for name, w in widths.items()}, quantum)

    def __contains__(self, name: str) -> bool:
        return name in self.classical or name in self.quantum

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateSpace):
            return NotImplemented
        return self.classical == other.classical and self.quantum == other.quantum

    def __hash__(self):
        return hash(self.names)

    def __repr__(self) -> str:
        return f"StateSpace({list(self.names)})"

    def is_quantum(self, name: str) -> bool:
        return name in self.quantum

    def domain(self, name: str) -> tuple[int, ...]:
        if name in self.quantum:
            raise DomainError(f"quantum variable {name!r} has no enumerable domain")
        return self.classical[name]

    def check_value(self, name: str, value: Any) -> None:
        if name in self.quantum:
            if not isinstance(value, StateVector) or value.n_qubits != self.quantum[name].n_qubits:
                raise EvaluationError(
                    f"value for {name!r} must be a {self.quantum[name].n_qubits}-qubit state"
                )
        elif name in self.classical:
            if value not in self._domain_sets[name]:
                raise EvaluationError(f"value {value!r} is outside the domain of {name!r}")
        else:
            raise EvaluationError(f"undeclared variable {name!r}")

    def union(self, other: "StateSpace") -> "StateSpace":
        classical = dict(self.classical)
        quantum = dict(self.quantum)
        for name, dom in other.classical.items():
            if classical.get(name, dom) != dom:
                raise DomainError(f"conflicting domains for {name!r}")
            classical[name] = dom
        for name, q in other.quantum.items():
            if quantum.get(name, q) != q:
                raise DomainError(f"conflicting declarations for {name!r}")
            quantum[name] = q
        return StateSpace(classical, quantum)

    def assignments(self, names: Iterable[str]) -> Iterator["State"]:
        """Every assignment to the given classical variables, lexicographically."""
        names = sorted(names)
        domains = [self.domain(n) for n in names]
        for values in itertools.product(*domains):
            yield State(zip(names, values))

    def prestates(self, quantum: Mapping[str, Sequence[StateVector]] | None = None) -> Iterator["State"]:
        """Enumerate prestates.

        Classical variables range over their full domains.  Quantum variables
        range over ``quantum[name]`` when supplied and are otherwise fixed at
        the all-zero state.
        """
        quantum = quantum or {}
        qnames = sorted(self.quantum)
        qchoices = [
            list(quantum.get(n, [linalg.zero_state(self.quantum[n].n_qubits)])) for n in qnames
        ]
        for classical in self.assignments(self.classical):
            for qvals in itertools.product(*qchoices):
                yield classical.merge(State(zip(qnames, qvals)))


class State(Mapping):
    """Immutable, hashable assignment of values to variable names."""

    __slots__ = ("_items", "_dict", "_hash")

    def __init__(self, items: Iterable[tuple[str, Any]] | Mapping[str, Any] = ()):
        d = dict(items.items() if isinstance(items, Mapping) else items)
        self._items = tuple(sorted(d.items(), key=lambda kv: kv[0]))
        self._dict = d
        self._hash = None

    def __getitem__(self, name: str):
        return self._dict[name]

    def __iter__(self):
        return (k for k, _ in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._items)
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, State):
            return self._items == other._items
        return NotImplemented

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self._items)
        return f"State({inner})"

    def set(self, **changes) -> "State":
        d = dict(self._dict)
        d.update(changes)
        return State(d)

    def project(self, names: Iterable[str]) -> "State":
        try:
            return State((n, self._dict[n]) for n in names)
        except KeyError as exc:
            raise EvaluationError(f"state has no variable {exc.args[0]!r}") from None

    def drop(self, names: Iterable[str]) -> "State":
        names = set(names)
        return State((k, v) for k, v in self._items if k not in names)

    def merge(self, other: Mapping[str, Any]) -> "State":
        d = dict(self._dict)
        d.update(other)
        return State(d)

    def sort_key(self) -> tuple:
        return tuple((k, v.key() if isinstance(v, StateVector) else (v,)) for k, v in self._items)


class Distribution(Mapping):
    """Finite table of outcomes to probabilities (or non-negative weights)."""

    __slots__ = ("_table",)

    def __init__(self, table: Mapping[Any, float]):
        self._table = dict(table)

    def __getitem__(self, key):
        return self._table[key]

    def get(self, key, default=0.0):
        return self._table.get(key, default)

    def __iter__(self):
        return iter(self._table)

    def __len__(self) -> int:
        return len(self._table)

    def __repr__(self) -> str:
        return f"Distribution({self._table!r})"

    def total(self) -> float:
        return math.fsum(self._table.values())

    def is_normalized(self, eps: float = EPS_PROB) -> bool:
        return abs(self.total() - 1.0) <= eps

    def support(self, eps: float = EPS_PROB) -> set:
        return {k for k, p in self._table.items() if p > eps}

    def sorted_items(self) -> list:
        def key(item):
            k = item[0]
            return k.sort_key() if isinstance(k, State) else k

        return sorted(self._table.items(), key=key)

    def map_keys(self, fn: Callable[[Any], Any]) -> "Distribution":
        out: dict = {}
        for k, p in self._table.items():
            nk = fn(k)
            out[nk] = out.get(nk, 0.0) + p
        return Distribution(out)

    def allclose(self, other: Mapping, eps: float = EPS_PROB) -> bool:
        keys = set(self._table) | set(other)
        return all(abs(self.get(k) - other.get(k, 0.0)) <= eps for k in keys)


# -- specifications ---------------------------------------------------------

Table = dict  # State -> float


class Spec:
    """A specification evaluated forward from a prestate.

    ``table_fn(pre)`` returns the non-zero part of the specification at
    ``pre`` as a mapping from assignments of ``post_vars`` to values.
    """

    def __init__(
        self,
        space: StateSpace,
        post_vars: Iterable[str],
        table_fn: Callable[[State], Mapping[State, float]],
        *,
        boolean: bool = False,
        distribution: bool = False,
        label: str = "",
    ):
        self.space = space
        self.post_vars = frozenset(post_vars)
        self._table_fn = table_fn
        self.boolean = boolean
        self.distribution = distribution
        self.label = label

    def __repr__(self) -> str:
        return f"Spec({self.label or '?'})"

    def table(self, pre: State) -> Table:
        raw = self._table_fn(pre)
        out: Table = {}
        for post, value in raw.items():
            value = float(value)
            if not math.isfinite(value) or value < -EPS_PROB:
                raise EvaluationError(f"{self.label or 'specification'} produced invalid value {value!r}")
            if value <= 0.0:
                continue
            if self.boolean and abs(value - 1.0) > EPS_PROB:
                raise EvaluationError(f"boolean specification {self.label!r} produced value {value!r}")
            out[post] = out.get(post, 0.0) + value
        if self.distribution:
            total = math.fsum(out.values())
            if abs(total - 1.0) > EPS_PROB:
                raise EvaluationError(
                    f"distribution {self.label or 'specification'} totals {total!r} at {pre!r}"
                )
        return out

    def __call__(self, pre: State, post: State) -> float:
        return self.table(pre).get(post.project(sorted(self.post_vars)), 0.0)

    def outcomes(self, pre: State) -> Distribution:
        return Distribution(self.table(pre))


def _full_post(space: StateSpace) -> frozenset:
    return frozenset(space.names)


def ok(space: StateSpace) -> Spec:
    """All variables unchanged."""
    names = space.names
    return Spec(space, names, lambda pre: {pre.project(names): 1.0}, boolean=True, distribution=True, label="ok")


def assign(space: StateSpace, var: str, expr: Callable[[State], Any] | Any) -> Spec:
    """``var := expr``: ``var' = expr`` and every other variable unchanged."""
    if var not in space:
        raise DomainError(f"cannot assign undeclared variable {var!r}")
    names = space.names
    fn = expr if callable(expr) else (lambda pre, _v=expr: _v)

    def table(pre: State) -> Table:
        value = fn(pre)
        try:
            space.check_value(var, value)
        except EvaluationError as exc:
            raise EvaluationError(f"assignment to {var!r}: {exc}") from None
        return {pre.project(names).set(**{var: value}): 1.0}

    return Spec(space, names, table, boolean=True, distribution=True, label=f"{var}:=...")


def unitary(space: StateSpace, var: str, op: Operator | Callable[[State], Operator]) -> Spec:
    """``var := U var`` for a unitary ``U`` (possibly depending on the prestate)."""
    if not space.is_quantum(var):
        raise DomainError(f"{var!r} is not a quantum variable")
    get_op = op if callable(op) else (lambda pre, _op=op: _op)
    return assign(space, var, lambda pre: linalg.apply(get_op(pre), pre[var]))


def predicate(
    space: StateSpace,
    fn: Callable[[State, State], bool],
    post_vars: Iterable[str] | None = None,
    label: str = "",
) -> Spec:
    """Boolean specification ``fn(pre, post)`` over classical primed variables."""
    return expression(space, lambda pre, post: 1.0 if fn(pre, post) else 0.0, post_vars, label=label, boolean=True)


def expression(
    space: StateSpace,
    fn: Callable[[State, State], float],
    post_vars: Iterable[str] | None = None,
    *,
    label: str = "",
    boolean: bool = False,
) -> Spec:
    """Real-valued specification given pointwise; its primed variables must be classical."""
    post_vars = tuple(sorted(space.classical if post_vars is None else post_vars))
    for name in post_vars:
        if space.is_quantum(name):
            raise DomainError(f"pointwise specifications cannot range over quantum variable {name!r}")
        space.domain(name)

    def table(pre: State) -> Table:
        return {post: fn(pre, post) for post in space.assignments(post_vars)}

    return Spec(space, post_vars, table, boolean=boolean, label=label)


def _completions(space: StateSpace, names: Iterable[str]) -> Iterator[State]:
    names = sorted(names)
    for name in names:
        if space.is_quantum(name):
            raise EvaluationError(f"cannot enumerate values of quantum variable {name!r}")
    return space.assignments(names)


def seq(r: Spec, s: Spec) -> Spec:
    """Sequential composition: sum over intermediate states of ``R'' * S''``.

    For two boolean specifications the sum is replaced by existential
    quantification.
    """
    if r.space != s.space:
        raise DomainError("sequential composition needs a common state space")
    space = r.space
    missing = _full_post(space) - r.post_vars
    existential = r.boolean and s.boolean

    def table(pre: State) -> Table:
        out: Table = {}
        for mid_part, rv in r.table(pre).items():
            mids = [mid_part] if not missing else [mid_part.merge(c) for c in _completions(space, missing)]
            for mid in mids:
                for post, sv in s.table(mid).items():
                    out[post] = out.get(post, 0.0) + rv * sv
        if existential:
            out = {k: 1.0 for k, v in out.items() if v > 0}
        return out

    return Spec(
        space,
        s.post_vars,
        table,
        boolean=existential,
        distribution=r.distribution and s.distribution,
        label=f"({r.label}; {s.label})",
    )


def seq_all(*specs: Spec) -> Spec:
    out = specs[0]
    for s in specs[1:]:
        out = seq(out, s)
    return out


def if_then_else(
    p: Callable[[State], float | bool],
    r: Spec,
    s: Spec,
    *,
    boolean_guard: bool = False,
) -> Spec:
    """``p * R + (1 - p) * S`` where ``p`` is a probability of the prestate."""
    if r.space != s.space:
        raise DomainError("conditional branches need a common state space")
    post_vars = r.post_vars | s.post_vars
    fill_r = post_vars - r.post_vars
    fill_s = post_vars - s.post_vars

    def widen(tab: Table, fill: frozenset) -> Table:
        if not fill:
            return tab
        return {k.merge(c): v for k, v in tab.items() for c in _completions(r.space, fill)}

    def table(pre: State) -> Table:
        prob = float(p(pre))
        if not 0.0 <= prob <= 1.0:
            raise EvaluationError(f"conditional probability {prob!r} outside [0, 1]")
        if boolean_guard and prob not in (0.0, 1.0):
            raise EvaluationError(f"boolean guard evaluated to {prob!r}")
        out: Table = {}
        if prob > 0.0:
            for k, v in widen(r.table(pre), fill_r).items():
                out[k] = out.get(k, 0.0) + prob * v
        if prob < 1.0:
            for k, v in widen(s.table(pre), fill_s).items():
                out[k] = out.get(k, 0.0) + (1.0 - prob) * v
        return out

    return Spec(
        r.space,
        post_vars,
        table,
        boolean=boolean_guard and r.boolean and s.boolean,
        distribution=r.distribution and s.distribution,
        label=f"if ? then {r.label} else {s.label}",
    )


def conjoin(p: Spec, q: Spec) -> Spec:
    """Parallel composition of specifications on disjoint variables (pointwise product)."""
    shared = p.post_vars & q.post_vars
    if shared:
        raise LocalityViolation(f"parallel parts share variables {sorted(shared)}")
    space = p.space.union(q.space)

    def table(pre: State) -> Table:
        return {
            kp.merge(kq): vp * vq for kp, vp in p.table(pre).items() for kq, vq in q.table(pre).items()
        }

    return Spec(
        space,
        p.post_vars | q.post_vars,
        table,
        boolean=p.boolean and q.boolean,
        distribution=p.distribution and q.distribution,
        label=f"({p.label} || {q.label})",
    )


# -- measurement ------------------------------------------------------------


def _prune(branches: list[tuple[float, Any]]) -> list[tuple[float, Any]]:
    kept = [(p, b) for p, b in branches if p >= EPS_PROB]
    dropped = math.fsum(p for p, _ in branches if p < EPS_PROB)
    if dropped > PRUNE_BUDGET:
        raise EvaluationError(
            f"measurement branches below {EPS_PROB} carry total mass {dropped!r}; refusing to drop them"
        )
    if dropped > 0.0:
        scale = 1.0 / math.fsum(p for p, _ in kept)
        kept = [(p * scale, b) for p, b in kept]
    return kept


def _general_branches(family: MeasurementFamily, psi: StateVector) -> list[tuple[float, int, StateVector]]:
    branches = []
    for r, m in enumerate(family.members):
        v = m.matrix @ psi.amps
        prob = float(np.vdot(v, v).real)
        branches.append((prob, (r, v)))
    out = []
    for prob, (r, v) in _prune(branches):
        out.append((prob, r, StateVector(v / np.linalg.norm(v))))
    return out


def _computational_branches(psi: StateVector) -> list[tuple[float, int, StateVector]]:
    probs = psi.probabilities()
    branches = [(float(p), r) for r, p in enumerate(probs)]
    n = psi.n_qubits
    return [(p, r, linalg.basis_state(r, n)) for p, r in _prune(branches)]


def _check_result_var(space: StateSpace, rvar: str, n_outcomes: int) -> None:
    if rvar not in space.classical:
        raise DomainError(f"measurement result {rvar!r} must be a classical variable")
    dom = set(space.domain(rvar))
    if not set(range(n_outcomes)) <= dom:
        raise DomainError(f"domain of {rvar!r} does not cover outcomes 0..{n_outcomes}")


def measure_general(space: StateSpace, family: MeasurementFamily, var: str, rvar: str) -> Spec:
    """Measure ``var`` with the operators of ``family``, recording the outcome in ``rvar``."""
    if not space.is_quantum(var):
        raise DomainError(f"{var!r} is not a quantum variable")
    if family.n_qubits != space.quantum[var].n_qubits:
        raise DomainError("measurement family does not match the register size")
    if not linalg.completeness_check(family):
        raise ContractViolation("measurement operators do not satisfy the completeness equation")
    _check_result_var(space, rvar, len(family))
    names = space.names

    def table(pre: State) -> Table:
        base = pre.project(names)
        return {base.set(**{var: post, rvar: r}): p for p, r, post in _general_branches(family, pre[var])}

    return Spec(space, names, table, distribution=True, label=f"measure_M {var} {rvar}")


def measure_computational(space: StateSpace, var: str, rvar: str) -> Spec:
    """Computational-basis measurement: outcome ``r`` with probability ``|psi r|**2``."""
    if not space.is_quantum(var):
        raise DomainError(f"{var!r} is not a quantum variable")
    _check_result_var(space, rvar, 1 << space.quantum[var].n_qubits)
    names = space.names

    def table(pre: State) -> Table:
        base = pre.project(names)
        return {base.set(**{var: post, rvar: r}): p for p, r, post in _computational_branches(pre[var])}

    return Spec(space, names, table, distribution=True, label=f"measure {var} {rvar}")


# -- parallel composition on a shared register ------------------------------


@dataclass(frozen=True)
class LocalUnitary:
    """``if guard then q := U q else ok`` on a party's own qubits.

    ``gate`` is an :class:`Operator` or a function of the party's local view
    of the prestate returning one; ``guard`` likewise maps that view to a
    boolean.  Without a guard the gate is applied unconditionally.
    """

    gate: Operator | Callable[[Mapping], Operator]
    guard: Callable[[Mapping], bool] | None = None
    label: str = ""

    def resolve(self, view: Mapping) -> Operator | None:
        if self.guard is not None and not self.guard(view):
            return None
        return self.gate(view) if callable(self.gate) else self.gate


@dataclass(frozen=True)
class LocalMeasure:
    """Measure the party's qubits into ``result``; computational basis when ``family`` is None."""

    result: str
    family: MeasurementFamily | None = None


@dataclass(frozen=True)
class Party:
    name: str
    qubits: tuple[int, int]
    owns: tuple[str, ...]
    program: tuple[LocalUnitary | LocalMeasure, ...] = ()

    @property
    def width(self) -> int:
        return self.qubits[1] - self.qubits[0]

    @property
    def measurement(self) -> LocalMeasure | None:
        if self.program and isinstance(self.program[-1], LocalMeasure):
            return self.program[-1]
        return None


class _LocalView(Mapping):
    """The part of a prestate a party may read."""

    def __init__(self, state: State, party: Party):
        self._state = state
        self._party = party

    def __getitem__(self, name):
        if name not in self._party.owns:
            raise LocalityViolation(f"party {self._party.name!r} read variable {name!r} it does not own")
        return self._state[name]

    def __iter__(self):
        return iter(self._party.owns)

    def __len__(self):
        return len(self._party.owns)


def _check_parties(space: StateSpace, var: str, parties: Sequence[Party]) -> list[Party]:
    qv = space.quantum[var]
    seen: set[str] = set()
    for party in parties:
        if qv.partition:
            declared = qv.partition.get(party.name)
            if declared is None:
                raise LocalityViolation(f"party {party.name!r} owns no qubits of {var!r}")
            if tuple(declared) != tuple(party.qubits):
                raise LocalityViolation(
                    f"party {party.name!r} uses qubits {party.qubits} but owns {tuple(declared)}"
                )
        for name in party.owns:
            if name not in space.classical:
                raise DomainError(f"party {party.name!r} owns undeclared variable {name!r}")
            if name in seen:
                raise LocalityViolation(f"variable {name!r} owned by more than one party")
            seen.add(name)
        for i, step in enumerate(party.program):
            if isinstance(step, LocalMeasure):
                if i != len(party.program) - 1:
                    raise DomainError(f"party {party.name!r}: measurement must be the last step")
                if step.result not in party.owns:
                    raise LocalityViolation(
                        f"party {party.name!r} records a measurement in {step.result!r} it does not own"
                    )
                width = step.family.n_qubits if step.family else party.width
                if width != party.width:
                    raise LocalityViolation(f"party {party.name!r} measures qubits outside {party.qubits}")
                n_out = len(step.family) if step.family else 1 << party.width
                _check_result_var(space, step.result, n_out)
            elif isinstance(step, Operator) or not isinstance(step, LocalUnitary):
                raise DomainError(f"party {party.name!r}: unsupported step {step!r}")
            elif isinstance(step.gate, Operator) and step.gate.n_qubits != party.width:
                raise LocalityViolation(f"party {party.name!r} applies a gate outside {party.qubits}")
    ordered = sorted(parties, key=lambda p: p.qubits)
    pos = 0
    for party in ordered:
        if party.qubits[0] != pos or party.width <= 0:
            raise LocalityViolation("party qubit intervals must be disjoint and cover the register")
        pos = party.qubits[1]
    if pos != qv.n_qubits:
        raise LocalityViolation("party qubit intervals must be disjoint and cover the register")
    return ordered


def local_operator(party: Party, pre: State) -> Operator:
    """Product of the party's unitaries (later steps on the left)."""
    view = _LocalView(pre, party)
    acc = linalg.identity(party.width)
    for step in party.program:
        if isinstance(step, LocalMeasure):
            continue
        op = step.resolve(view)
        if op is None:
            continue
        if op.n_qubits != party.width:
            raise LocalityViolation(f"party {party.name!r} applies a gate outside {party.qubits}")
        acc = op @ acc
    return acc


def parallel(space: StateSpace, var: str, parties: Sequence[Party]) -> Spec:
    """Parallel composition of local programs sharing the register ``var``.

    The parties' accumulated unitaries are tensored in qubit order (``ok`` is
    the identity) and applied to the register.  If any party measures, the
    measurement families are tensored too, a non-measuring party
    contributing the single-outcome family ``{I}``; each measuring party's
    slice of the composite outcome lands in its own result variable.
    """
    if not space.is_quantum(var):
        raise DomainError(f"{var!r} is not a quantum variable")
    ordered = _check_parties(space, var, parties)
    names = space.names
    measuring = [p for p in ordered if p.measurement is not None]
    all_computational = len(measuring) == len(ordered) and all(p.measurement.family is None for p in ordered)

    def families() -> list[MeasurementFamily]:
        out = []
        for p in ordered:
            m = p.measurement
            if m is None:
                out.append(MeasurementFamily([linalg.identity(p.width)], check=False))
            elif m.family is None:
                out.append(linalg.computational_family(p.width))
            else:
                out.append(m.family)
        return out

    fams = None if all_computational or not measuring else families()

    def table(pre: State) -> Table:
        op = linalg.tensor_ops(local_operator(p, pre) for p in ordered)
        psi = linalg.apply(op, pre[var])
        base = pre.project(names)
        if not measuring:
            return {base.set(**{var: psi}): 1.0}
        out: Table = {}
        if all_computational:
            for prob, r, post in _computational_branches(psi):
                results = {}
                for p in ordered:
                    shift = space.quantum[var].n_qubits - p.qubits[1]
                    results[p.measurement.result] = (r >> shift) & ((1 << p.width) - 1)
                out[base.set(**{var: post}, **results)] = prob
            return out
        sizes = [len(f) for f in fams]
        branches = []
        for combo in itertools.product(*(range(s) for s in sizes)):
            m = linalg.tensor_ops(f.members[c] for f, c in zip(fams, combo)).matrix
            v = m @ psi.amps
            branches.append((float(np.vdot(v, v).real), (combo, v)))
        for prob, (combo, v) in _prune(branches):
            results = {
                p.measurement.result: c for p, c in zip(ordered, combo) if p.measurement is not None
            }
            post = StateVector(v / np.linalg.norm(v))
            key = base.set(**{var: post}, **results)
            out[key] = out.get(key, 0.0) + prob
        return out

    return Spec(
        space,
        names,
        table,
        distribution=True,
        label=" ||_" + var + " ".join(p.name for p in ordered),
    )


# -- learning, normalization, marginals -------------------------------------


def _as_condition(b) -> Callable[[State], float]:
    if b is True or b == 1:
        return lambda state: 1.0
    if isinstance(b, Spec):
        raise DomainError("pass the evidence as a function of the poststate, not as a Spec")
    return lambda state: float(b(state))


def learn(p: Spec, b: Callable[[State], bool] | bool = True) -> Spec:
    """``P ! b``: condition ``P`` on the evidence ``b`` about the poststate.

    ``b`` is a function of a state (read at the poststate, i.e. ``b'``) or
    ``True`` for plain normalization.  Raises :class:`UndefinedConditional`
    at prestates where the evidence has probability zero.
    """
    cond = _as_condition(b)

    def table(pre: State) -> Table:
        weighted = {}
        for post, v in p.table(pre).items():
            try:
                w = cond(post)
            except (KeyError, EvaluationError) as exc:
                raise EvaluationError(f"evidence reads a variable the specification does not mention: {exc}")
            if w < 0 or w > 1:
                raise EvaluationError(f"evidence value {w!r} is not a truth value")
            if w:
                weighted[post] = v * w
        total = math.fsum(weighted.values())
        if total <= 0.0:
            raise UndefinedConditional(f"evidence has probability zero at {pre!r}")
        return {k: v / total for k, v in weighted.items()}

    return Spec(p.space, p.post_vars, table, distribution=True, label=f"{p.label}!b")


def normalize(p: Spec) -> Spec:
    """``P ! 1``."""
    return learn(p, True)


def sum_out(names: Iterable[str], p: Spec) -> Spec:
    """Marginalize the given primed variables out of ``P``."""
    names = frozenset(names)
    unknown = names - p.post_vars
    if unknown:
        raise DomainError(f"cannot sum out variables the specification does not mention: {sorted(unknown)}")
    keep = sorted(p.post_vars - names)

    def table(pre: State) -> Table:
        out: Table = {}
        for post, v in p.table(pre).items():
            k = post.project(keep)
            out[k] = out.get(k, 0.0) + v
        return out

    return Spec(p.space, keep, table, distribution=p.distribution, label=f"sum {sorted(names)}. {p.label}")


# -- refinement -------------------------------------------------------------


@dataclass(frozen=True)
class Counterexample:
    prestate: State
    poststate: State
    p_value: float
    q_value: float


@dataclass(frozen=True)
class Refinement:
    holds: bool
    counterexample: Counterexample | None
    checked: int
    max_excess: float

    def __bool__(self) -> bool:
        return self.holds


def refines(
    p: Spec,
    q: Spec,
    eps: float = EPS_PROB,
    prestates: Iterable[State] | None = None,
) -> Refinement:
    """Check ``P <= Q`` pointwise (``Q`` is refined by ``P``).

    Only points where ``P`` is non-zero can violate the inequality because
    ``Q`` is non-negative, so the check walks ``P``'s support at each
    prestate, extending it over any primed variables only ``Q`` mentions.
    For boolean specifications with ``eps=0`` this is ``Q <== P``.
    """
    if p.space != q.space:
        raise DomainError("refinement needs a common state space")
    space = p.space
    extra = q.post_vars - p.post_vars
    q_keys = sorted(q.post_vars)
    if prestates is None:
        prestates = space.prestates()
    checked = 0
    worst = -math.inf
    first: Counterexample | None = None
    for pre in prestates:
        qtab = q.table(pre)
        for post, pv in p.table(pre).items():
            posts = [post] if not extra else [post.merge(c) for c in _completions(space, extra)]
            for full in posts:
                qv = qtab.get(full.project(q_keys), 0.0)
                checked += 1
                excess = pv - qv
                worst = max(worst, excess)
                if excess > eps and first is None:
                    first = Counterexample(pre, full, pv, qv)
    return Refinement(first is None, first, checked, worst if checked else 0.0)


def equivalent(p: Spec, q: Spec, eps: float = EPS_PROB, prestates: Iterable[State] | None = None) -> bool:
    prestates = list(prestates if prestates is not None else p.space.prestates())
    return bool(refines(p, q, eps, prestates)) and bool(refines(q, p, eps, prestates))
