"""Coded packets, CNC/CDC source encoding, relay recoding and decoding.

Coding vectors and coefficient matrices are plain numpy arrays of field
symbols; a matrix has one coding vector per row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .gf import GF256, FieldContext


class ConfigurationError(ValueError):
    """Parameters that violate an operation's preconditions."""


class NodeSilent(Exception):
    """A relay has nothing to recode, so it transmits nothing this round."""


class DecodeFailure(Exception):
    """The received coding vectors do not span the source space."""

    def __init__(self, rank: int, m: int):
        super().__init__(f"rank {rank} < {m}: cannot decode")
        self.rank = rank
        self.m = m


@dataclass
class SourceBlock:
    """``m`` equal-length information packets as rows of field symbols.

    ``padding_bits`` records the zero bits appended when the byte payload
    does not split evenly into q-bit symbols.
    """

    packets: np.ndarray
    field: FieldContext = GF256
    padding_bits: int = 0

    def __post_init__(self):
        self.packets = np.atleast_2d(np.asarray(self.packets, dtype=self.field.dtype))
        if self.packets.ndim != 2:
            raise ConfigurationError("packets must be a 2-D array")
        if np.any(self.packets >= self.field.size):
            raise ConfigurationError("payload symbol outside the field")

    @property
    def m(self) -> int:
        return self.packets.shape[0]

    @property
    def symbols(self) -> int:
        return self.packets.shape[1]

    @property
    def payload_length_bits(self) -> int:
        return self.symbols * self.field.q

    @classmethod
    def from_bytes(cls, payloads: list[bytes], field: FieldContext = GF256) -> "SourceBlock":
        lengths = {len(p) for p in payloads}
        if len(lengths) != 1:
            raise ConfigurationError("all packets in a block must have equal length")
        raw = np.frombuffer(b"".join(payloads), dtype=np.uint8).reshape(len(payloads), -1)
        if field.q == 8:
            return cls(raw.copy(), field)
        bits = np.unpackbits(raw, axis=1)
        nbits = bits.shape[1]
        padding = -nbits % field.q
        bits = np.pad(bits, ((0, 0), (0, padding)))
        weights = 1 << np.arange(field.q - 1, -1, -1, dtype=np.int64)
        symbols = bits.reshape(len(payloads), -1, field.q).astype(np.int64) @ weights
        return cls(symbols.astype(field.dtype), field, padding)

    def to_bytes(self) -> list[bytes]:
        return packets_to_bytes(self.packets, self.field, self.padding_bits)

    @classmethod
    def random(cls, m: int, symbols: int, rng: np.random.Generator,
               field: FieldContext = GF256) -> "SourceBlock":
        return cls(field.random_elements(rng, (m, symbols)), field)


def packets_to_bytes(packets: np.ndarray, field: FieldContext, padding_bits: int = 0) -> list[bytes]:
    packets = np.asarray(packets)
    if field.q == 8:
        return [row.astype(np.uint8).tobytes() for row in packets]
    shifts = np.arange(field.q - 1, -1, -1)
    bits = ((packets[..., None].astype(np.int64) >> shifts) & 1).reshape(packets.shape[0], -1)
    if padding_bits:
        bits = bits[:, :-padding_bits]
    return [np.packbits(row.astype(np.uint8)).tobytes() for row in bits]


@dataclass
class CodedPacket:
    coding_vector: np.ndarray
    payload: np.ndarray
    hop_index: int = 0

    def __eq__(self, other) -> bool:
        return (isinstance(other, CodedPacket) and self.hop_index == other.hop_index
                and np.array_equal(self.coding_vector, other.coding_vector)
                and np.array_equal(self.payload, other.payload))


def coding_matrix(packets: list[CodedPacket], m: int | None = None,
                  field: FieldContext = GF256) -> np.ndarray:
    if not packets:
        return np.zeros((0, m or 0), dtype=field.dtype)
    return np.stack([p.coding_vector for p in packets]).astype(field.dtype)


def _packets(coeffs: np.ndarray, block: SourceBlock, hop_index: int = 0) -> list[CodedPacket]:
    payloads = block.field.matmul(coeffs, block.packets)
    return [CodedPacket(c.copy(), y, hop_index) for c, y in zip(coeffs, payloads)]


def rlnc_encode(block: SourceBlock, m_prime: int, rng: np.random.Generator) -> list[CodedPacket]:
    """Source-side random linear network coding.

    Every coefficient is uniform over the field, so an all-zero coding
    vector is possible (with probability 2^(-q m)).
    """
    if m_prime < block.m:
        raise ConfigurationError(f"m_prime={m_prime} < m={block.m}")
    coeffs = block.field.random_elements(rng, (m_prime, block.m))
    return _packets(coeffs, block)


def dc_coefficients(m: int, m_prime: int, field: FieldContext = GF256,
                    systematic: bool = True) -> np.ndarray:
    """Diversity-coding coefficient matrix.

    Systematic form: ``m`` identity rows followed by ``m_prime - m``
    Vandermonde protection rows, row j holding alpha^(j*l) for l = 0..m-1.
    Non-systematic form: ``m_prime`` Vandermonde rows starting at j = 0.
    """
    if m < 1 or m_prime < m:
        raise ConfigurationError(f"need 1 <= m <= m_prime, got m={m}, m_prime={m_prime}")
    vandermonde_rows = m_prime - m if systematic else m_prime
    if vandermonde_rows > field.order:
        raise ConfigurationError(
            f"{vandermonde_rows} Vandermonde rows exceed the {field.order} distinct "
            f"evaluation points of GF(2^{field.q})")
    j = np.arange(vandermonde_rows)[:, None]
    l = np.arange(m)[None, :]
    vander = field.exp_table[(j * l) % field.order]
    if not systematic:
        return vander.astype(field.dtype)
    return np.vstack([np.eye(m, dtype=field.dtype), vander]).astype(field.dtype)


def dc_encode(block: SourceBlock, m_prime: int, systematic: bool = True) -> list[CodedPacket]:
    coeffs = dc_coefficients(block.m, m_prime, block.field, systematic)
    return _packets(coeffs, block)


def recode(received: list[CodedPacket], rng: np.random.Generator,
           field: FieldContext = GF256, hop_index: int | None = None) -> CodedPacket:
    """Combine received packets with fresh uniform coefficients."""
    if not received:
        raise NodeSilent("no packets received")
    coeffs = field.random_elements(rng, (1, len(received)))
    vectors = coding_matrix(received, field=field)
    payloads = np.stack([p.payload for p in received]).astype(field.dtype)
    if hop_index is None:
        hop_index = max(p.hop_index for p in received) + 1
    return CodedPacket(field.matmul(coeffs, vectors)[0], field.matmul(coeffs, payloads)[0],
                       hop_index)


def row_reduce(matrix, field: FieldContext = GF256, ncols: int | None = None,
               reduced: bool = True) -> tuple[np.ndarray, list[int]]:
    """Gaussian elimination over the field.

    Pivots are searched only in the first ``ncols`` columns (all columns by
    default); row operations span the full width so augmented payload
    columns follow along. The pivot for each column is the first nonzero
    entry at or below the current pivot row. Returns the echelon form
    (reduced row echelon form if ``reduced``) and the pivot columns.
    """
    a = np.array(matrix, dtype=field.dtype, copy=True, ndmin=2)
    rows, cols = a.shape
    if ncols is None:
        ncols = cols
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        a[r] = field.mul_array(field.inv_table[a[r, c]], a[r])
        if reduced:
            others = np.flatnonzero(a[:, c])
            others = others[others != r]
        else:
            others = r + 1 + np.flatnonzero(a[r + 1:, c])
        if others.size:
            a[others] ^= field.mul_array(a[others, c][:, None], a[r][None, :])
        pivots.append(c)
        r += 1
    return a, pivots


def batch_rank(stack, field: FieldContext = GF256) -> np.ndarray:
    """Ranks of a stack of matrices, shape (B, rows, cols), eliminated in lockstep.

    Zero rows do not change the rank, so callers may pad ragged matrices
    with them.
    """
    a = np.array(stack, dtype=field.dtype, copy=True, ndmin=3)
    batch, rows, cols = a.shape
    ranks = np.zeros(batch, dtype=np.int64)
    if rows == 0 or cols == 0:
        return ranks
    used = np.zeros((batch, rows), dtype=bool)
    for c in range(cols):
        candidates = (a[:, :, c] != 0) & ~used
        live = np.flatnonzero(candidates.any(axis=1))
        if live.size == 0:
            continue
        pivot = candidates[live].argmax(axis=1)
        prow = a[live, pivot]
        prow = field.mul_array(field.inv_table[prow[:, c]][:, None], prow)
        used[live, pivot] = True
        factors = a[live, :, c]
        factors[used[live]] = 0
        a[live] ^= field.mul_array(factors[:, :, None], prow[:, None, :])
        ranks[live] += 1
    return ranks


def rank(matrix, field: FieldContext = GF256) -> int:
    a = np.asarray(matrix)
    if a.size == 0:
        return 0
    return int(batch_rank(a[None] if a.ndim == 2 else a, field)[0])


def innovative_count(matrix, field: FieldContext = GF256) -> int:
    """Number of information packets the matrix's row space can recover."""
    return rank(matrix, field)


def decode(packets: list[CodedPacket], m: int, field: FieldContext = GF256) -> np.ndarray:
    """Recover the ``m`` source payloads, shape (m, symbols).

    Raises :class:`DecodeFailure` carrying the achieved rank when the
    coding vectors do not span the source space.
    """
    if not packets:
        raise DecodeFailure(0, m)
    vectors = coding_matrix(packets, m, field)
    if vectors.shape[1] != m:
        raise ConfigurationError(f"coding vectors have length {vectors.shape[1]}, expected {m}")
    payloads = np.stack([p.payload for p in packets]).astype(field.dtype)
    reduced, pivots = row_reduce(np.hstack([vectors, payloads]), field, ncols=m)
    if len(pivots) < m:
        raise DecodeFailure(len(pivots), m)
    return reduced[:m, m:]


def is_mds(matrix, m: int, field: FieldContext = GF256) -> bool:
    """True when every m-row subset of ``matrix`` is nonsingular."""
    a = np.asarray(matrix)
    return all(rank(a[list(rows)], field) == m for rows in combinations(range(a.shape[0]), m))
