"""Bit sequences, empirical entropy and piecewise-stationary baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np


def binary_entropy(q: float) -> float:
    """H(q) in bits, with 0 log 0 = 0."""
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def count_entropy(ones, length):
    """Vectorised ``length * H(ones / length)``; zero wherever length or the count is degenerate.

    Accepts scalars or broadcastable arrays of integer counts.
    """
    ones = np.asarray(ones, dtype=np.float64)
    length = np.asarray(length, dtype=np.float64)
    zeros = length - ones
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(ones > 0, ones * np.log2(np.where(ones > 0, length / ones, 1.0)), 0.0)
        b = np.where(zeros > 0, zeros * np.log2(np.where(zeros > 0, length / zeros, 1.0)), 0.0)
    return a + b


class BitSequence:
    """Immutable packed sequence of binary letters.

    Letters are stored MSB-first in a byte buffer; padding bits in the last
    byte are always zero and never take part in any computation.
    """

    __slots__ = ("_packed", "_len")

    def __init__(self, packed: bytes = b"", length: int | None = None):
        packed = bytes(packed)
        if length is None:
            length = 8 * len(packed)
        if length < 0 or length > 8 * len(packed) or len(packed) != (length + 7) // 8:
            raise ValueError(f"length {length} inconsistent with {len(packed)} packed bytes")
        if length % 8:
            # zero the padding so equality and hashing only see real letters
            mask = (0xFF << (8 - length % 8)) & 0xFF
            packed = packed[:-1] + bytes([packed[-1] & mask])
        self._packed = packed
        self._len = length

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitSequence":
        arr = np.fromiter((int(b) for b in bits), dtype=np.uint8)
        return cls.from_array(arr)

    @classmethod
    def from_array(cls, arr) -> "BitSequence":
        arr = np.asarray(arr)
        if arr.ndim != 1:
            raise ValueError("expected a one-dimensional array of letters")
        if arr.size and not np.all((arr == 0) | (arr == 1)):
            raise ValueError("letters must be 0 or 1")
        return cls(np.packbits(arr.astype(np.uint8)).tobytes(), int(arr.size))

    @classmethod
    def from_string(cls, text: str) -> "BitSequence":
        """Parse a string such as ``"0101"``; whitespace and underscores are ignored."""
        cleaned = [c for c in text if c not in " _\t\n"]
        if any(c not in "01" for c in cleaned):
            raise ValueError(f"not a bit string: {text!r}")
        return cls.from_bits(int(c) for c in cleaned)

    @classmethod
    def from_bytes(cls, data: bytes) -> "BitSequence":
        """Each byte contributes 8 letters, most significant bit first."""
        return cls(data, 8 * len(data))

    def to_bytes(self) -> bytes:
        return self._packed

    def to_array(self) -> np.ndarray:
        return np.unpackbits(np.frombuffer(self._packed, dtype=np.uint8), count=self._len)

    def count_ones(self) -> int:
        return int(self.to_array().sum())

    def __len__(self) -> int:
        return self._len

    def __iter__(self) -> Iterator[int]:
        return iter(self.to_array().tolist())

    def __getitem__(self, index):
        if isinstance(index, slice):
            return BitSequence.from_array(self.to_array()[index])
        if index < 0:
            index += self._len
        if not 0 <= index < self._len:
            raise IndexError("bit index out of range")
        return (self._packed[index >> 3] >> (7 - (index & 7))) & 1

    def __add__(self, other: "BitSequence") -> "BitSequence":
        return BitSequence.from_array(np.concatenate([self.to_array(), other.to_array()]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitSequence):
            return NotImplemented
        return self._len == other._len and self._packed == other._packed

    def __hash__(self) -> int:
        return hash((self._len, self._packed))

    def __repr__(self) -> str:
        if self._len <= 64:
            return f"BitSequence('{''.join(map(str, self))}')"
        return f"BitSequence(<{self._len} bits>)"


@dataclass(frozen=True)
class Partition:
    """Segments (i_0, i_1], ..., (i_{s-1}, i_s] with i_0 = 0 and i_s = n."""

    boundaries: tuple[int, ...]

    def __post_init__(self):
        b = tuple(int(v) for v in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        if len(b) < 2:
            raise ValueError("a partition needs at least one segment")
        if b[0] != 0:
            raise ValueError("partition must start at 0")
        if any(hi <= lo for lo, hi in zip(b, b[1:])):
            raise ValueError(f"boundaries must be strictly increasing: {b}")

    @classmethod
    def single(cls, n: int) -> "Partition":
        return cls((0, n))

    @classmethod
    def from_lengths(cls, lengths: Sequence[int]) -> "Partition":
        return cls(tuple(np.concatenate([[0], np.cumsum(lengths)]).tolist()))

    @property
    def n(self) -> int:
        return self.boundaries[-1]

    @property
    def s(self) -> int:
        return len(self.boundaries) - 1

    @property
    def segments(self) -> list[tuple[int, int]]:
        return list(zip(self.boundaries, self.boundaries[1:]))

    def __len__(self) -> int:
        return self.s


def is_deterministic(x: BitSequence) -> bool:
    if len(x) == 0:
        raise ValueError("undefined for empty sequence")
    ones = x.count_ones()
    return ones == 0 or ones == len(x)


def empirical_entropy(x: BitSequence) -> float:
    """n * H(q) bits where q is the fraction of 1-bits; 0 for the empty sequence."""
    n = len(x)
    if n == 0:
        return 0.0
    return float(count_entropy(x.count_ones(), n))


def pws_baseline(x: BitSequence, partition: Partition) -> float:
    """Sum of the empirical entropies of the partition's segments."""
    if partition.n != len(x):
        raise ValueError(f"partition covers {partition.n} bits but the sequence has {len(x)}")
    arr = x.to_array()
    csum = np.concatenate([[0], np.cumsum(arr, dtype=np.int64)])
    b = np.asarray(partition.boundaries)
    ones = csum[b[1:]] - csum[b[:-1]]
    return float(count_entropy(ones, np.diff(b)).sum())


def entropy_difference_check(x: BitSequence) -> float:
    """h(x_{1:n}) - h(x_{2:n}) for a non-deterministic x of length at least 2."""
    if len(x) < 2:
        raise ValueError("need at least two letters")
    if is_deterministic(x):
        raise ValueError("sequence is deterministic")
    return empirical_entropy(x) - empirical_entropy(x[1:])
