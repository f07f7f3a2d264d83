"""Dense complex linear algebra for small qubit registers.

Basis index convention: index ``x`` of an ``n``-qubit register corresponds to
the ``n``-bit binary string of ``x`` written most significant bit first, and
qubit 0 is that most significant bit.  With this convention the tensor
product of an ``m``-qubit state ``psi`` and an ``n``-qubit state ``phi``
satisfies ``(psi ⊗ phi)[i] == psi[i // 2**n] * phi[i % 2**n]``, which is
exactly what :func:`numpy.kron` computes.

All objects are immutable once constructed.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation, DomainError

EPS_NORM = 1e-9
MAX_QUBITS = 12

# Decimal places used when a state has to act as a dictionary key.
_KEY_DECIMALS = 10


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.flags.writeable = False
    return arr


def _qubits_for(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise DomainError(f"dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise DomainError(f"{n} qubits exceeds the supported maximum of {MAX_QUBITS}")
    return n


class StateVector:
    """A unit vector of ``2**n_qubits`` complex amplitudes."""

    __slots__ = ("amps", "n_qubits", "_key")

    def __init__(self, amps: Iterable[complex], *, check: bool = True):
        arr = _frozen(np.asarray(list(amps) if not isinstance(amps, np.ndarray) else amps))
        if arr.ndim != 1:
            raise DomainError("state amplitudes must be one-dimensional")
        self.n_qubits = _qubits_for(arr.shape[0])
        if not np.all(np.isfinite(arr)):
            raise DomainError("state amplitudes must be finite")
        if check:
            norm = float(np.vdot(arr, arr).real)
            if abs(norm - 1.0) > EPS_NORM:
                raise ContractViolation(f"state is not normalized (squared norm {norm!r})")
        self.amps = arr
        self._key = None

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    def __len__(self) -> int:
        return self.dim

    def __getitem__(self, index: int) -> complex:
        return complex(self.amps[index])

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def key(self) -> tuple:
        """Hashable fingerprint: amplitudes rounded to 1e-10."""
        if self._key is None:
            rounded = np.round(self.amps, _KEY_DECIMALS) + (0.0 + 0.0j)
            self._key = (self.n_qubits, rounded.tobytes())
        return self._key

    def __hash__(self) -> int:
        return hash(self.key())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateVector):
            return NotImplemented
        return self.key() == other.key()

    def allclose(self, other: "StateVector", atol: float = EPS_NORM) -> bool:
        return self.n_qubits == other.n_qubits and bool(np.allclose(self.amps, other.amps, atol=atol, rtol=0))

    def __repr__(self) -> str:
        terms = []
        for i, a in enumerate(self.amps):
            if abs(a) > EPS_NORM:
                terms.append(f"({a.real:.6g}{a.imag:+.6g}j)|{i:0{self.n_qubits}b}>")
        return "StateVector(" + " + ".join(terms) + ")"


class Operator:
    """A ``2**n × 2**n`` complex matrix; rows index outputs, columns inputs."""

    __slots__ = ("matrix", "n_qubits", "_unitary")

    def __init__(self, matrix):
        arr = _frozen(np.asarray(matrix))
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DomainError(f"operator must be a square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("operator entries must be finite")
        self.n_qubits = _qubits_for(arr.shape[0])
        self.matrix = arr
        self._unitary = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        _same_size(self.n_qubits, other.n_qubits)
        return Operator(self.matrix @ other.matrix)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Operator):
            return NotImplemented
        return self.n_qubits == other.n_qubits and bool(np.allclose(self.matrix, other.matrix, atol=EPS_NORM, rtol=0))

    __hash__ = None  # equality is approximate

    def __repr__(self) -> str:
        return f"Operator(n_qubits={self.n_qubits})"


class MeasurementFamily:
    """Indexed measurement operators ``M_r`` for ``r`` in ``0..len(members)``."""

    __slots__ = ("members", "n_qubits")

    def __init__(self, members: Sequence[Operator], *, check: bool = True):
        members = tuple(members)
        if not members:
            raise DomainError("a measurement family needs at least one operator")
        n = members[0].n_qubits
        for m in members:
            _same_size(n, m.n_qubits)
        self.members = members
        self.n_qubits = n
        if check and not completeness_check(self):
            raise ContractViolation("measurement operators do not satisfy the completeness equation")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, r: int) -> Operator:
        return self.members[r]


def _same_size(a: int, b: int) -> None:
    if a != b:
        raise DomainError(f"dimension mismatch: {a} qubits vs {b} qubits")


# -- states -----------------------------------------------------------------


def basis_state(x: int, n: int) -> StateVector:
    if n < 0 or n > MAX_QUBITS:
        raise DomainError(f"qubit count {n} out of range")
    if not 0 <= x < 1 << n:
        raise DomainError(f"basis index {x} out of range for {n} qubits")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[x] = 1.0
    return StateVector(amps)


def zero_state(n: int) -> StateVector:
    return basis_state(0, n)


def inner_product(psi: StateVector, phi: StateVector) -> complex:
    """``<psi|phi>``, conjugate-linear in the first argument."""
    _same_size(psi.n_qubits, phi.n_qubits)
    return complex(np.vdot(psi.amps, phi.amps))


def same_ray(psi: StateVector, phi: StateVector, tol: float = EPS_NORM) -> bool:
    """Equal up to a global phase, i.e. the same physical state."""
    return abs(abs(inner_product(psi, phi)) - 1.0) <= tol


def tensor_state(psi: StateVector, phi: StateVector) -> StateVector:
    if psi.n_qubits + phi.n_qubits > MAX_QUBITS:
        raise DomainError("tensor product exceeds the supported register size")
    return StateVector(np.kron(psi.amps, phi.amps), check=False)


def tensor_states(states: Iterable[StateVector]) -> StateVector:
    states = list(states)
    out = states[0]
    for s in states[1:]:
        out = tensor_state(out, s)
    return out


def ghz_state(n: int) -> StateVector:
    """``(|0...0> + |1...1>)/sqrt(2)`` on ``n`` qubits."""
    if n < 1:
        raise DomainError("GHZ state needs at least one qubit")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = amps[-1] = 1 / math.sqrt(2)
    return StateVector(amps)


def pairsum_state(k: int) -> StateVector:
    """``sum_z |z z> / sqrt(2**k)`` on ``2k`` qubits, written down directly."""
    if k < 1:
        raise DomainError("k must be positive")
    dim = 1 << k
    amps = np.zeros(dim * dim, dtype=np.complex128)
    for z in range(dim):
        amps[z * dim + z] = 1 / math.sqrt(dim)
    return StateVector(amps)


# -- operators --------------------------------------------------------------


def identity(n: int) -> Operator:
    if n < 0 or n > MAX_QUBITS:
        raise DomainError(f"qubit count {n} out of range")
    return Operator(np.eye(1 << n))


def adjoint(op: Operator) -> Operator:
    return Operator(op.matrix.conj().T)


def is_unitary(op: Operator, tol: float = EPS_NORM) -> bool:
    if tol == EPS_NORM and op._unitary is not None:
        return op._unitary
    prod = op.matrix.conj().T @ op.matrix
    result = bool(np.max(np.abs(prod - np.eye(op.dim)), initial=0.0) <= tol)
    if tol == EPS_NORM:
        op._unitary = result
    return result


def completeness_check(family: MeasurementFamily, tol: float = EPS_NORM) -> bool:
    total = sum(m.matrix.conj().T @ m.matrix for m in family.members)
    return bool(np.max(np.abs(total - np.eye(1 << family.n_qubits)), initial=0.0) <= tol)


def apply(op: Operator, psi: StateVector) -> StateVector:
    """Evolve ``psi`` by the unitary ``op``."""
    _same_size(op.n_qubits, psi.n_qubits)
    if not is_unitary(op):
        raise ContractViolation("only unitary operators may be applied as evolution")
    out = op.matrix @ psi.amps
    return StateVector(out)


def tensor_op(u: Operator, v: Operator) -> Operator:
    if u.n_qubits + v.n_qubits > MAX_QUBITS:
        raise DomainError("tensor product exceeds the supported register size")
    return Operator(np.kron(u.matrix, v.matrix))


def tensor_ops(ops: Iterable[Operator]) -> Operator:
    ops = list(ops)
    if not ops:
        return identity(0)
    out = ops[0].matrix
    for op in ops[1:]:
        out = np.kron(out, op.matrix)
    return Operator(out)


def tensor_power(op: Operator, n: int) -> Operator:
    return tensor_ops([op] * n) if n else identity(0)


_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)


def hadamard() -> Operator:
    return Operator(_H)


def hadamard_n(n: int) -> Operator:
    if n < 1:
        raise DomainError("hadamard_n needs n >= 1")
    return tensor_power(hadamard(), n)


def phase_gate(theta: float) -> Operator:
    """``diag(1, exp(i*theta))``."""
    if not math.isfinite(theta):
        raise DomainError("phase angle must be finite")
    return Operator(np.diag([1.0, np.exp(1j * theta)]))


def bit_at(value: int, position: int, width: int) -> int:
    """Bit of a ``width``-bit string at ``position``, position 0 leftmost."""
    return (value >> (width - 1 - position)) & 1


def parse_bits(bits: str) -> int:
    if not bits or any(c not in "01" for c in bits):
        raise DomainError(f"not a bit string: {bits!r}")
    return int(bits, 2)


def dj_oracle(x: str | int, k: int) -> Operator:
    """Diagonal ``(-1)**x_z`` on ``k`` qubits for a ``2**k``-bit input ``x``.

    ``x`` is either a bit string (position 0 leftmost) or the integer whose
    ``2**k``-bit MSB-first encoding is that string.
    """
    width = 1 << k
    if isinstance(x, str):
        if len(x) != width:
            raise DomainError(f"oracle input must have {width} bits, got {len(x)}")
        x = parse_bits(x)
    elif not 0 <= x < 1 << width:
        raise DomainError(f"oracle input {x} does not fit in {width} bits")
    signs = [(-1.0) ** bit_at(x, z, width) for z in range(width)]
    return Operator(np.diag(signs))


def fanout(k: int) -> Operator:
    """Permutation ``|z>|w> -> |z>|w xor z>`` on two ``k``-qubit registers."""
    if k < 1:
        raise DomainError("fanout needs k >= 1")
    dim = 1 << k
    mat = np.zeros((dim * dim, dim * dim))
    for z in range(dim):
        for w in range(dim):
            mat[z * dim + (w ^ z), z * dim + w] = 1.0
    return Operator(mat)


def projector(x: int, n: int) -> Operator:
    mat = np.zeros((1 << n, 1 << n))
    mat[x, x] = 1.0
    return Operator(mat)


def computational_family(n: int) -> MeasurementFamily:
    return MeasurementFamily([projector(x, n) for x in range(1 << n)])


def tensor_family(a: MeasurementFamily, b: MeasurementFamily) -> MeasurementFamily:
    """Product family; outcome ``ra * len(b) + rb`` is the concatenation."""
    members = [tensor_op(ma, mb) for ma in a.members for mb in b.members]
    return MeasurementFamily(members, check=False)
