"""n-qubit Pauli operators in symplectic (x-bits, z-bits) form.

Qubit j carries I/X/Z/Y according to (x, z) = (0,0)/(1,0)/(0,1)/(1,1).
Phases are irrelevant for error correction and are not tracked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError

_LETTERS = np.array(["I", "X", "Z", "Y"])


@dataclass(frozen=True)
class PauliOperator:
    n: int
    x_bits: np.ndarray
    z_bits: np.ndarray

    @staticmethod
    def identity(n: int) -> "PauliOperator":
        return PauliOperator(n, np.zeros(n, dtype=np.uint8),
                             np.zeros(n, dtype=np.uint8))

    @staticmethod
    def from_bits(x_bits, z_bits) -> "PauliOperator":
        x = np.asarray(x_bits, dtype=np.uint8)
        z = np.asarray(z_bits, dtype=np.uint8)
        if x.shape != z.shape or x.ndim != 1:
            raise UsageError("x_bits and z_bits must be equal-length vectors")
        return PauliOperator(x.size, x, z)

    @staticmethod
    def from_string(s: str) -> "PauliOperator":
        s = s.upper()
        x = np.array([c in "XY" for c in s], dtype=np.uint8)
        z = np.array([c in "ZY" for c in s], dtype=np.uint8)
        if any(c not in "IXYZ" for c in s):
            raise UsageError(f"invalid Pauli string {s!r}")
        return PauliOperator(len(s), x, z)

    @staticmethod
    def single(n: int, qubit: int, letter: str) -> "PauliOperator":
        op = PauliOperator.identity(n)
        if letter in ("X", "Y"):
            op.x_bits[qubit] = 1
        if letter in ("Z", "Y"):
            op.z_bits[qubit] = 1
        return op

    def __post_init__(self):
        if self.x_bits.size != self.n or self.z_bits.size != self.n:
            raise UsageError("bit vector length does not match qubit count")

    def compose(self, other: "PauliOperator") -> "PauliOperator":
        """Symplectic addition (product up to phase)."""
        self._check(other)
        return PauliOperator(self.n, self.x_bits ^ other.x_bits,
                             self.z_bits ^ other.z_bits)

    def symplectic_product(self, other: "PauliOperator") -> int:
        """0 if the operators commute, 1 if they anticommute."""
        self._check(other)
        return int((self.x_bits @ other.z_bits
                    + self.z_bits @ other.x_bits) % 2)

    def commutes_with(self, other: "PauliOperator") -> bool:
        return self.symplectic_product(other) == 0

    def weight(self) -> int:
        return int(np.count_nonzero(self.x_bits | self.z_bits))

    def is_identity(self) -> bool:
        return self.weight() == 0

    def to_string(self) -> str:
        idx = self.x_bits + 2 * self.z_bits
        return "".join(_LETTERS[idx])

    def _check(self, other: "PauliOperator"):
        if self.n != other.n:
            raise UsageError(f"size mismatch: {self.n} vs {other.n}")

    def __eq__(self, other):
        return (isinstance(other, PauliOperator) and self.n == other.n
                and np.array_equal(self.x_bits, other.x_bits)
                and np.array_equal(self.z_bits, other.z_bits))
