"""Random linear network coding over GF(2^8).

The same codec serves both coding layers: the MPTCP/NC layer codes fixed
blocks of source segments before they are handed to sub-flows, and the
TCP/NC layer codes the contents of each sub-flow's congestion window.  At
the inner layer the payloads are serialized outer-layer packets, treated as
opaque bytes; the composition of the two linear maps is still linear.

Field elements are plain ints (or ``uint8`` arrays) in ``[0, 255]``;
arithmetic uses the primitive polynomial ``x^8 + x^4 + x^3 + x^2 + 1``.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import InvalidInputError

PRIMITIVE_POLY = 0x11D
FIELD_SIZE = 256
DEFAULT_BLOCK = 32
SEGMENT_SIZE = 1350


def _build_tables() -> tuple[np.ndarray, np.ndarray]:
    exp = np.zeros(512, dtype=np.uint8)
    log = np.zeros(256, dtype=np.int32)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= PRIMITIVE_POLY
    exp[255:510] = exp[:255]
    return exp, log


EXP, LOG = _build_tables()


def _build_mul_table() -> np.ndarray:
    a = np.arange(256)
    table = EXP[(LOG[a][:, None] + LOG[a][None, :]) % 255].astype(np.uint8)
    table[0, :] = 0
    table[:, 0] = 0
    return table


MUL = _build_mul_table()
INV = np.zeros(256, dtype=np.uint8)
INV[1:] = EXP[(255 - LOG[1:]) % 255]
_MUL_FLAT = MUL.ravel()

# Bulk products work on payloads packed eight bytes to a uint64 word.
_ZERO_WORD = np.uint64(0)
_LOW7 = np.uint64(0x7F7F7F7F7F7F7F7F)
_HIGH1 = np.uint64(0x0101010101010101)
_REDUCE = np.uint64(PRIMITIVE_POLY & 0xFF)
_POWERS_OF_X = np.array([1 << b for b in range(8)], dtype=np.uint8)
# Below these sizes numpy call overhead dominates, so fewer, larger calls win.
_GATHER_BYTES = 1 << 12
_BROADCAST_WORDS = 1 << 15


def _check(x: int) -> int:
    x = int(x)
    if not 0 <= x < FIELD_SIZE:
        raise InvalidInputError(f"{x} is not an element of GF(256)")
    return x


def gf_add(a: int, b: int) -> int:
    return _check(a) ^ _check(b)


def gf_mul(a: int, b: int) -> int:
    return int(MUL[_check(a), _check(b)])


def gf_inv(a: int) -> int:
    if _check(a) == 0:
        raise InvalidInputError("0 has no multiplicative inverse")
    return int(INV[a])


def gf_scale(c: int, vec: np.ndarray) -> np.ndarray:
    """Multiply every element of ``vec`` by the scalar ``c``."""
    return MUL[c][vec]


@dataclass(frozen=True, eq=False)
class CodedPacket:
    """A coded packet: coefficient vector over its generation plus payload.

    Wire format (big-endian)::

        generation_id  u32
        size           u16   number of coefficients
        coefficients   size bytes
        payload_len    u16
        payload        payload_len bytes
    """

    generation_id: int
    coefficients: np.ndarray
    payload: bytes

    def __post_init__(self) -> None:
        coeffs = np.array(self.coefficients, dtype=np.uint8)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "payload", bytes(self.payload))

    @property
    def size(self) -> int:
        return len(self.coefficients)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CodedPacket):
            return NotImplemented
        return (
            self.generation_id == other.generation_id
            and np.array_equal(self.coefficients, other.coefficients)
            and self.payload == other.payload
        )

    def to_bytes(self) -> bytes:
        return (
            struct.pack(">IH", self.generation_id, self.size)
            + self.coefficients.tobytes()
            + struct.pack(">H", len(self.payload))
            + self.payload
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> CodedPacket:
        try:
            gen, size = struct.unpack_from(">IH", data, 0)
            off = 6
            coeffs = np.frombuffer(data, dtype=np.uint8, count=size, offset=off)
            off += size
            (plen,) = struct.unpack_from(">H", data, off)
            off += 2
        except (struct.error, ValueError) as exc:
            raise InvalidInputError(f"truncated coded packet: {exc}") from None
        payload = data[off : off + plen]
        if len(payload) != plen or off + plen != len(data):
            raise InvalidInputError("payload length does not match packet size")
        return cls(gen, coeffs.copy(), payload)


def _as_matrix(generation: Sequence[bytes]) -> np.ndarray:
    if not generation:
        raise InvalidInputError("generation must contain at least one packet")
    lengths = {len(p) for p in generation}
    if len(lengths) != 1:
        raise InvalidInputError(f"ragged payload lengths {sorted(lengths)}")
    return np.frombuffer(b"".join(bytes(p) for p in generation), dtype=np.uint8).reshape(
        len(generation), -1
    )


def _planes(packets: np.ndarray) -> np.ndarray:
    """Rows ``packets[m] * x^b`` for ``b = 0..7``, packed as uint64 words.

    Row ``8 m + b`` holds packet ``m`` times ``x^b``; payloads are
    zero-padded to a multiple of 8 bytes.
    """
    n, length = packets.shape
    padded = np.zeros((n, -(-length // 8) * 8), dtype=np.uint8)
    padded[:, :length] = packets
    if padded.size <= _GATHER_BYTES:
        # One table lookup beats eight rounds of word arithmetic on small inputs.
        return MUL[_POWERS_OF_X[None, :, None], padded[:, None, :]].reshape(8 * n, -1).view(np.uint64)
    v = padded.view(np.uint64)
    out = np.empty((n, 8, v.shape[1]), dtype=np.uint64)
    for b in range(8):
        out[:, b] = v
        # Multiply every byte by x, reducing the bytes that overflow.
        v = ((v & _LOW7) << np.uint64(1)) ^ (((v >> np.uint64(7)) & _HIGH1) * _REDUCE)
    return out.reshape(8 * n, -1)


def _product(coefficients: np.ndarray, planes: np.ndarray, length: int) -> np.ndarray:
    """Matrix product ``coefficients @ packets`` over GF(256), packets given by :func:`_planes`.

    ``c * P`` is the XOR of the planes ``P x^b`` for the set bits ``b`` of
    ``c``, so each output row is an XOR over a subset of plane rows.
    """
    a = len(coefficients)
    # Bit b of coefficient m selects plane row 8 m + b.
    bits = np.unpackbits(coefficients, axis=-1, bitorder="little").view(bool)
    if a * planes.size <= _BROADCAST_WORDS:
        out = np.bitwise_xor.reduce(np.where(bits[:, :, None], planes, _ZERO_WORD), axis=1)
    else:
        out = np.empty((a, planes.shape[1]), dtype=np.uint64)
        for i in range(a):
            out[i] = np.bitwise_xor.reduce(planes[bits[i]], axis=0)
    return out.view(np.uint8)[:, :length]


def combine(coefficients: np.ndarray, packets: np.ndarray) -> np.ndarray:
    """Linear combination ``sum_m coefficients[m] * packets[m]`` over GF(256)."""
    coefficients = np.asarray(coefficients, dtype=np.uint8)
    return _product(coefficients[None, :], _planes(packets), packets.shape[1])[0]


class Encoder:
    """Random linear encoder bound to one generation.

    Precomputes the generation's bit planes once, so emitting many packets
    from the same generation is cheaper than repeated :func:`encode` calls.
    """

    def __init__(self, generation: Sequence[bytes], generation_id: int = 0):
        packets = _as_matrix(generation)
        self.generation_id = generation_id
        self.size, self.length = packets.shape
        self._planes = _planes(packets)

    def emit(self, rng: np.random.Generator, coefficients: Sequence[int] | None = None) -> CodedPacket:
        n = self.size
        if coefficients is None:
            raw = rng.bytes(n)
            while not any(raw):
                raw = rng.bytes(n)
            coeffs = np.frombuffer(raw, dtype=np.uint8)
        else:
            coeffs = np.array([_check(c) for c in coefficients], dtype=np.uint8)
            if len(coeffs) != n:
                raise InvalidInputError(f"{len(coeffs)} coefficients for {n} packets")
        bits = np.unpackbits(coeffs, bitorder="little").view(bool)
        body = np.bitwise_xor.reduce(self._planes[bits], axis=0)
        return CodedPacket(self.generation_id, coeffs, body.tobytes()[: self.length])


def encode(
    generation: Sequence[bytes],
    rng: np.random.Generator,
    generation_id: int = 0,
    coefficients: Sequence[int] | None = None,
) -> CodedPacket:
    """Emit one random linear combination of the packets in ``generation``.

    Coefficients are uniform over the field; an all-zero draw is discarded
    and redrawn.  Passing ``coefficients`` pins the combination.
    """
    return Encoder(generation, generation_id).emit(rng, coefficients)


def systematic(generation: Sequence[bytes], index: int, generation_id: int = 0) -> CodedPacket:
    """The uncoded packet ``index`` with a unit coefficient vector."""
    coeffs = np.zeros(len(generation), dtype=np.uint8)
    coeffs[index] = 1
    return encode(generation, None, generation_id, coeffs)


class Reception(enum.Enum):
    INNOVATIVE = "innovative"
    REDUNDANT = "redundant"


class NotReadyError(RuntimeError):
    def __init__(self, missing_dof: int):
        self.missing_dof = missing_dof
        super().__init__(f"decoder needs {missing_dof} more degree(s) of freedom")


@dataclass
class DecoderState:
    """Progressive Gauss-Jordan decoder for one generation.

    Elimination runs on coefficient vectors only.  The first ``rank`` rows
    of ``rows`` stay in reduced row-echelon form and ``pivots[r]`` is the
    column whose unit entry row ``r`` carries; the pivot columns are the
    source packets the receiver has "seen".  Alongside, ``transform[r]``
    records row ``r`` as a combination of the stored innovative packets, so
    payloads are combined once, in :func:`decode_all`.
    """

    generation_id: int
    size: int
    pivots: list[int] = field(init=False, default_factory=list)
    length: int | None = field(init=False, default=None)
    _aug: np.ndarray = field(init=False, repr=False)
    _payloads: list[bytes] = field(init=False, default_factory=list, repr=False)
    _pivot_cols: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.size < 1:
            raise InvalidInputError("generation size must be >= 1")
        # Coefficient rows next to their transform rows.
        self._aug = np.zeros((self.size, 2 * self.size), dtype=np.uint8)
        self._pivot_cols = np.zeros(self.size, dtype=np.intp)

    @property
    def rows(self) -> np.ndarray:
        return self._aug[: self.rank, : self.size]

    @property
    def transform(self) -> np.ndarray:
        return self._aug[: self.rank, self.size :]

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def seen(self) -> frozenset[int]:
        return frozenset(self.pivots)

    @property
    def complete(self) -> bool:
        return self.rank == self.size

    def receive(self, pkt: CodedPacket) -> Reception:
        if pkt.generation_id != self.generation_id:
            raise InvalidInputError(
                f"packet for generation {pkt.generation_id} given to decoder {self.generation_id}"
            )
        n = self.size
        if pkt.size != n:
            raise InvalidInputError(f"packet has {pkt.size} coefficients, generation has {n}")
        if self.length is None:
            self.length = len(pkt.payload)
        elif len(pkt.payload) != self.length:
            raise InvalidInputError("payload length differs within generation")

        k = self.rank
        if k == n:
            return Reception.REDUNDANT
        aug = self._aug[:k]
        row = self._aug[k]
        row[:n] = pkt.coefficients
        row[n:] = 0
        row[n + k] = 1
        if k:
            # Other rows are zero in each pivot column, so all eliminations
            # can use the incoming coefficients at once.
            cs = row[self._pivot_cols[:k]].astype(np.intp)
            row ^= np.bitwise_xor.reduce(_MUL_FLAT.take((cs[:, None] << 8) | aug), axis=0)
        col = int((row[:n] != 0).argmax())
        if not row[col]:
            return Reception.REDUNDANT

        row[:] = MUL[INV[row[col]]].take(row)
        if k:
            aug ^= MUL[aug[:, col]][:, row]
        self._payloads.append(pkt.payload)
        self.pivots.append(col)
        self._pivot_cols[k] = col
        return Reception.INNOVATIVE


def new_decoder(generation_id: int, size: int) -> DecoderState:
    return DecoderState(generation_id, size)


def decoder_receive(state: DecoderState, pkt: CodedPacket) -> Reception:
    """Feed one coded packet to ``state``; report whether it added a DOF."""
    return state.receive(pkt)


def dof_needed(state: DecoderState) -> int:
    return state.size - state.rank


def decode_all(state: DecoderState) -> list[bytes]:
    """Source payloads in generation order; needs a full-rank decoder."""
    if not state.complete:
        raise NotReadyError(dof_needed(state))
    # Full rank leaves ``rows`` a permutation of the identity.
    order = np.argsort(state.pivots)
    stored = np.frombuffer(b"".join(state._payloads), dtype=np.uint8).reshape(state.size, -1)
    sources = _product(state.transform[order], _planes(stored), state.length)
    return [r.tobytes() for r in sources]


def segment(data: bytes, segment_size: int = SEGMENT_SIZE, block: int = DEFAULT_BLOCK) -> list[list[bytes]]:
    """Split ``data`` into generations of ``block`` fixed-size segments.

    The final segment is zero-padded; callers keep ``len(data)`` to strip it.
    """
    if segment_size < 1 or block < 1:
        raise InvalidInputError("segment_size and block must be >= 1")
    segs = [data[i : i + segment_size] for i in range(0, len(data), segment_size)] or [b""]
    segs[-1] = segs[-1].ljust(segment_size, b"\0")
    return [segs[i : i + block] for i in range(0, len(segs), block)]


def reassemble(generations: Sequence[Sequence[bytes]], length: int) -> bytes:
    return b"".join(b"".join(g) for g in generations)[:length]
