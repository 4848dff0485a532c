"""Binary range coder driven by the smoothing estimator, and its file container.

Container layout (big-endian)::

    magic      4 bytes  b"ESP1"
    version    1 byte   1
    schedule   1 byte   0 fixed, 1 decaying, 2 count
    param1     8 bytes  binary64, alpha or lambda (0.0 when unused)
    param2     4 bytes  unsigned, m (0 when unused)
    prior_p1   8 bytes  binary64
    bit_length 8 bytes  unsigned
    payload    raw range-coder bytes up to the end of the file

The coder core is integer-only (32-bit range, carry through a cached byte).
Each bit is coded with p(1) quantised to 16 bits; the estimator itself keeps
evolving at full precision, so quantisation affects the code, not the model.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .bitseq import BitSequence
from .estimator import EspEstimator
from .schedule import SmoothingSchedule

MAGIC = b"ESP1"
VERSION = 1
HEADER = struct.Struct(">4sBBdIdQ")
HEADER_SIZE = HEADER.size
PROB_BITS = 16
PROB_ONE = 1 << PROB_BITS
MAX_BIT_LENGTH = 1 << 48

_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF


class ContainerError(ValueError):
    """Base class for malformed containers."""


class BadMagic(ContainerError):
    pass


class UnsupportedVersion(ContainerError):
    pass


class UnknownSchedule(ContainerError):
    pass


class InvalidParameters(ContainerError):
    pass


class TruncatedPayload(ContainerError):
    pass


class TrailingData(ContainerError):
    pass


class BitLengthOverflow(ContainerError):
    pass


def quantize(p1: float) -> int:
    """round(p1 * 2^16), clamped to [1, 2^16 - 1] so both letters stay codable."""
    q = int(p1 * PROB_ONE + 0.5)
    if q < 1:
        return 1
    if q > PROB_ONE - 1:
        return PROB_ONE - 1
    return q


@dataclass(frozen=True)
class ContainerHeader:
    schedule_id: int
    param1: float
    param2: int
    prior_p1: float
    bit_length: int
    magic: bytes = MAGIC
    version: int = VERSION

    @classmethod
    def for_estimator(cls, est: EspEstimator, bit_length: int) -> "ContainerHeader":
        param1, param2 = est.schedule.params()
        return cls(est.schedule.schedule_id, param1, param2, est.prior, bit_length)

    def pack(self) -> bytes:
        return HEADER.pack(self.magic, self.version, self.schedule_id, self.param1, self.param2, self.prior_p1, self.bit_length)

    @classmethod
    def unpack(cls, data: bytes) -> "ContainerHeader":
        if len(data) < 4 or data[:4] != MAGIC:
            raise BadMagic("not an ESP container")
        if len(data) < HEADER_SIZE:
            raise TruncatedPayload(f"header needs {HEADER_SIZE} bytes, got {len(data)}")
        magic, version, sid, p1, p2, prior, nbits = HEADER.unpack_from(data)
        if version != VERSION:
            raise UnsupportedVersion(f"unsupported container version {version}")
        if sid not in (0, 1, 2):
            raise UnknownSchedule(f"unknown schedule id {sid}")
        if nbits > MAX_BIT_LENGTH:
            raise BitLengthOverflow(f"bit length {nbits} exceeds {MAX_BIT_LENGTH}")
        return cls(sid, p1, p2, prior, nbits, magic, version)

    def schedule(self) -> SmoothingSchedule:
        try:
            return SmoothingSchedule.from_params(self.schedule_id, self.param1, self.param2)
        except ValueError as exc:
            raise InvalidParameters(str(exc)) from exc

    def estimator(self) -> EspEstimator:
        sched = self.schedule()
        if not 0.0 < self.prior_p1 < 1.0:
            raise InvalidParameters(f"prior p(1) {self.prior_p1} outside (0, 1)")
        return EspEstimator(sched, self.prior_p1)


class RangeEncoder:
    def __init__(self):
        self.low = 0
        self.range = _MASK32
        self._cache = 0
        self._pending = 1
        self._first = True
        self.out = bytearray()

    def _shift_low(self):
        low = self.low
        if low < 0xFF000000 or low > _MASK32:
            carry = low >> 32
            byte = self._cache
            while self._pending:
                if self._first:
                    # the leading byte is always zero; never stored
                    self._first = False
                else:
                    self.out.append((byte + carry) & 0xFF)
                byte = 0xFF
                self._pending -= 1
            self._cache = (low >> 24) & 0xFF
        self._pending += 1
        self.low = (low << 8) & _MASK32

    def encode(self, bit: int, p1q: int):
        bound = (self.range * p1q) >> PROB_BITS
        if bit:
            self.range = bound
        else:
            self.low += bound
            self.range -= bound
        while self.range < _TOP:
            self.range <<= 8
            self._shift_low()

    def finish(self) -> bytes:
        for _ in range(5):
            self._shift_low()
        return bytes(self.out)


class RangeDecoder:
    def __init__(self, payload: bytes):
        self.data = payload
        self.pos = 0
        self.range = _MASK32
        self.code = 0
        for _ in range(4):
            self.code = (self.code << 8) | self._next()

    def _next(self) -> int:
        if self.pos >= len(self.data):
            raise TruncatedPayload("payload ended before all bits were decoded")
        b = self.data[self.pos]
        self.pos += 1
        return b

    def decode(self, p1q: int) -> int:
        bound = (self.range * p1q) >> PROB_BITS
        if self.code < bound:
            self.range = bound
            bit = 1
        else:
            self.code -= bound
            self.range -= bound
            bit = 0
        while self.range < _TOP:
            self.range <<= 8
            self.code = ((self.code << 8) | self._next()) & _MASK32
        return bit


def encode(x: BitSequence, est: EspEstimator) -> bytes:
    """Container bytes for ``x``; ``est`` must be fresh and is advanced over ``x``."""
    if est.k != 0:
        raise ValueError("encode needs a fresh estimator")
    header = ContainerHeader.for_estimator(est, len(x))
    enc = RangeEncoder()
    encode_bit = enc.encode
    update = est.update
    for bit in x:
        encode_bit(bit, quantize(est.p1))
        update(bit)
    return header.pack() + enc.finish()


def decode(data: bytes, expected: ContainerHeader | None = None) -> BitSequence:
    """Restore the bit sequence from container bytes.

    Raises a :class:`ContainerError` subclass for every kind of malformed input.
    With ``expected`` the header must also match it field for field.
    """
    header = ContainerHeader.unpack(data)
    if expected is not None and header != expected:
        raise ContainerError("container header does not match the expected header")
    est = header.estimator()
    payload = data[HEADER_SIZE:]
    if header.bit_length > 0 and len(payload) < 4:
        raise TruncatedPayload("payload shorter than the coder's initial window")
    if header.bit_length == 0:
        if payload and payload != b"\x00" * len(payload):
            raise TrailingData("payload present for an empty sequence")
        return BitSequence()
    dec = RangeDecoder(payload)
    decode_bit = dec.decode
    update = est.update
    bits = bytearray(header.bit_length)
    for i in range(header.bit_length):
        bit = decode_bit(quantize(est.p1))
        update(bit)
        bits[i] = bit
    if dec.pos != len(payload):
        raise TrailingData(f"{len(payload) - dec.pos} unused payload bytes")
    return BitSequence.from_array(np.frombuffer(bytes(bits), dtype=np.uint8))


def payload_bits(container: bytes) -> int:
    return 8 * (len(container) - HEADER_SIZE)


def compress_bytes(data: bytes, schedule: SmoothingSchedule, p1: float = 0.5) -> bytes:
    return encode(BitSequence.from_bytes(data), EspEstimator(schedule, p1))


def decompress_bytes(container: bytes) -> bytes:
    bits = decode(container)
    if len(bits) % 8:
        raise ContainerError(f"bit length {len(bits)} is not a whole number of bytes")
    return bits.to_bytes()
