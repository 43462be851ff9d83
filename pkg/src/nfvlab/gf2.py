"""Binary linear algebra over GF(2): generator matrices, encoding, code metrics.

Matrices are stored row-major with each row packed into a Python int
(bit j = column j), so GF(2) row combinations are single XORs and
Hamming weights are popcounts.  This keeps exhaustive codeword
enumeration cheap for the code sizes used here (up to 2**24 messages).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Exhaustive codeword enumeration walks 2**rows messages.
MAX_ENUM_ROWS = 24


class MatrixFormatError(ValueError):
    """Raised when a generator-matrix file is malformed; carries the line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BitMatrix:
    """Immutable binary matrix with int-packed rows (bit j of a row = column j)."""

    __slots__ = ("rows", "cols", "row_ints")

    def __init__(self, rows: int, cols: int, row_ints):
        if rows < 1 or cols < 1:
            raise ValueError(f"matrix must be at least 1x1, got {rows}x{cols}")
        row_ints = tuple(int(r) for r in row_ints)
        if len(row_ints) != rows:
            raise ValueError(f"expected {rows} packed rows, got {len(row_ints)}")
        mask = (1 << cols) - 1
        for i, r in enumerate(row_ints):
            if r < 0 or r & ~mask:
                raise ValueError(f"row {i} has bits outside {cols} columns")
        self.rows = rows
        self.cols = cols
        self.row_ints = row_ints

    @classmethod
    def from_rows(cls, rows) -> "BitMatrix":
        """Build from an iterable of rows, each an iterable of 0/1 entries."""
        packed = []
        ncols = None
        for row in rows:
            bits = [int(b) for b in row]
            if any(b not in (0, 1) for b in bits):
                raise ValueError("matrix entries must be 0 or 1")
            if ncols is None:
                ncols = len(bits)
            elif len(bits) != ncols:
                raise ValueError("ragged rows: all rows must have equal length")
            packed.append(sum(b << j for j, b in enumerate(bits)))
        if not packed or ncols == 0:
            raise ValueError("matrix must be at least 1x1")
        return cls(len(packed), ncols, packed)

    @classmethod
    def from_array(cls, arr) -> "BitMatrix":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got ndim={arr.ndim}")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("matrix entries must be 0 or 1")
        packed = np.packbits(arr.astype(np.uint8), axis=1, bitorder="little")
        ints = [int.from_bytes(row.tobytes(), "little") for row in packed]
        return cls(arr.shape[0], arr.shape[1], ints)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, [1 << i for i in range(n)])

    @classmethod
    def ones(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, [(1 << cols) - 1] * rows)

    def get(self, i: int, j: int) -> int:
        return (self.row_ints[i] >> j) & 1

    def to_array(self) -> np.ndarray:
        """Dense uint8 copy, shape (rows, cols)."""
        nbytes = (self.cols + 7) // 8
        data = b"".join(r.to_bytes(nbytes, "little") for r in self.row_ints)
        packed = np.frombuffer(data, dtype=np.uint8).reshape(self.rows, nbytes)
        return np.unpackbits(packed, axis=1, bitorder="little", count=self.cols)

    def column_int(self, j: int) -> int:
        """Column j packed into an int (bit i = row i)."""
        c = 0
        for i, r in enumerate(self.row_ints):
            c |= ((r >> j) & 1) << i
        return c

    def column_weights(self) -> list[int]:
        """Hamming weight of each column."""
        return [self.column_int(j).bit_count() for j in range(self.cols)]

    def row_weights(self) -> list[int]:
        return [r.bit_count() for r in self.row_ints]

    def __eq__(self, other):
        return (
            isinstance(other, BitMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.row_ints == other.row_ints
        )

    def __hash__(self):
        return hash((self.rows, self.cols, self.row_ints))

    def __repr__(self):
        body = ", ".join(
            "".join(str((r >> j) & 1) for j in range(self.cols)) for r in self.row_ints
        )
        return f"BitMatrix({self.rows}x{self.cols}: {body})"


def _pack_bits(bits) -> int:
    return sum((int(b) & 1) << j for j, b in enumerate(bits))


def encode(G: BitMatrix, u) -> np.ndarray:
    """GF(2) product u @ G.

    `u` is a length-``G.rows`` bit vector (or a 2-D array of such rows,
    encoded row by row).  Returns uint8 arrays.
    """
    arr = np.asarray(u)
    if arr.ndim == 2:
        if arr.shape[1] != G.rows:
            raise ValueError(
                f"dimension mismatch: input rows have length {arr.shape[1]}, "
                f"matrix has {G.rows} rows"
            )
        return np.stack([encode(G, row) for row in arr])
    if arr.ndim != 1 or arr.shape[0] != G.rows:
        shape = arr.shape if arr.ndim else ()
        raise ValueError(
            f"dimension mismatch: input has shape {shape}, "
            f"matrix has {G.rows} rows"
        )
    acc = 0
    for i, b in enumerate(arr.tolist()):
        if b & 1:
            acc ^= G.row_ints[i]
    return np.array([(acc >> j) & 1 for j in range(G.cols)], dtype=np.uint8)


def column_weights(G: BitMatrix) -> list[int]:
    return G.column_weights()


def min_distance(G: BitMatrix) -> int:
    """Minimum Hamming weight over the nonzero codewords of the row space.

    Exhaustive Gray-code walk over all 2**rows messages; refuses matrices
    with more than MAX_ENUM_ROWS rows.
    """
    if G.rows > MAX_ENUM_ROWS:
        raise ValueError(
            f"exhaustive search limit exceeded: {G.rows} rows > {MAX_ENUM_ROWS}"
        )
    best = G.cols + 1
    cw = 0
    prev_gray = 0
    for m in range(1, 1 << G.rows):
        gray = m ^ (m >> 1)
        flipped = (gray ^ prev_gray).bit_length() - 1
        prev_gray = gray
        cw ^= G.row_ints[flipped]
        if cw:
            w = cw.bit_count()
            if w < best:
                best = w
                if best == 1:
                    break
    if best > G.cols:
        raise ValueError("zero row space: matrix has no nonzero codeword")
    return best


@dataclass(frozen=True)
class NfvCode:
    """An (N, K) binary linear combining code with its derived metrics.

    K = generator.rows source packets, N = generator.cols servers.
    Column weight d_i counts how many source packets feed server i;
    all-zero columns are rejected because such a server would receive
    pure noise and contribute nothing.
    """

    generator: BitMatrix
    name: str = "code"
    column_weights: tuple = field(init=False)
    d_min: int = field(init=False)

    def __post_init__(self):
        weights = tuple(self.generator.column_weights())
        if any(w == 0 for w in weights):
            bad = [j for j, w in enumerate(weights) if w == 0]
            raise ValueError(f"all-zero generator column(s) at index {bad}")
        object.__setattr__(self, "column_weights", weights)
        object.__setattr__(self, "d_min", min_distance(self.generator))

    @property
    def n_servers(self) -> int:
        return self.generator.cols

    @property
    def k_blocks(self) -> int:
        return self.generator.rows

    @property
    def d_max(self) -> int:
        return max(self.column_weights)


CODE_KINDS = ("single", "repetition", "parallel", "split_repetition", "spc", "explicit")


def make_code(kind: str, n_servers: int | None = None, k_blocks: int | None = None,
              *, matrix: BitMatrix | None = None, name: str | None = None) -> NfvCode:
    """Construct one of the canonical combining codes.

    kind:
      single            1x1 (one server decodes the whole frame)
      repetition        1xN all-ones
      parallel          NxN identity
      split_repetition  2xN, each half of the frame replicated on N/2 servers
      spc               (N-1)xN identity plus an all-ones parity column
      explicit          caller-supplied generator (``matrix=``)

    ``k_blocks`` is optional and only cross-checked against the kind.
    """
    if kind not in CODE_KINDS:
        raise ValueError(f"unknown code kind {kind!r}; expected one of {CODE_KINDS}")
    if kind == "explicit":
        if matrix is None:
            raise ValueError("explicit kind requires matrix=")
        if k_blocks is not None and k_blocks != matrix.rows:
            raise ValueError(f"k_blocks={k_blocks} but matrix has {matrix.rows} rows")
        if n_servers is not None and n_servers != matrix.cols:
            raise ValueError(f"n_servers={n_servers} but matrix has {matrix.cols} columns")
        return NfvCode(matrix, name=name or "explicit")

    if kind == "single":
        if n_servers not in (None, 1) or k_blocks not in (None, 1):
            raise ValueError("single-server code requires N = K = 1")
        n_servers = 1
        gen = BitMatrix(1, 1, [1])
        expect_k = 1
    else:
        if n_servers is None or n_servers < 1:
            raise ValueError(f"kind {kind!r} requires a positive n_servers")
        if kind == "repetition":
            gen = BitMatrix.ones(1, n_servers)
            expect_k = 1
        elif kind == "parallel":
            gen = BitMatrix.identity(n_servers)
            expect_k = n_servers
        elif kind == "split_repetition":
            if n_servers % 2 or n_servers < 2:
                raise ValueError("split_repetition requires an even n_servers >= 2")
            half = n_servers // 2
            lo = (1 << half) - 1
            gen = BitMatrix(2, n_servers, [lo, lo << half])
            expect_k = 2
        else:  # spc
            if n_servers < 2:
                raise ValueError("spc requires n_servers >= 2")
            k = n_servers - 1
            parity = 1 << (n_servers - 1)
            gen = BitMatrix(k, n_servers, [(1 << i) | parity for i in range(k)])
            expect_k = k
    if k_blocks is not None and k_blocks != expect_k:
        raise ValueError(f"kind {kind!r} with N={n_servers} implies K={expect_k}, got {k_blocks}")
    return NfvCode(gen, name=name or kind)


def load_generator(path) -> BitMatrix:
    """Read a generator matrix file.

    Format: first line "K N" (decimal, single space); then K lines of
    exactly N characters from {0,1}; LF endings; trailing blank lines
    are ignored.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().split("\n")
    if not lines or not lines[0].strip():
        raise MatrixFormatError("missing header 'K N'", line=1)
    header = lines[0].split(" ")
    if len(header) != 2:
        raise MatrixFormatError(f"header must be 'K N', got {lines[0]!r}", line=1)
    try:
        k, n = int(header[0]), int(header[1])
    except ValueError:
        raise MatrixFormatError(f"header must be two integers, got {lines[0]!r}", line=1) from None
    if k < 1 or n < 1:
        raise MatrixFormatError(f"dimensions must be positive, got K={k} N={n}", line=1)
    packed = []
    for i in range(k):
        lineno = i + 2
        if i + 1 >= len(lines):
            raise MatrixFormatError(f"expected {k} matrix rows, file ends early", line=lineno)
        row = lines[i + 1]
        if len(row) != n or any(c not in "01" for c in row):
            raise MatrixFormatError(
                f"row must be exactly {n} characters from {{0,1}}, got {row!r}", line=lineno
            )
        packed.append(sum((c == "1") << j for j, c in enumerate(row)))
    for extra, row in enumerate(lines[k + 1:], start=k + 2):
        if row.strip():
            raise MatrixFormatError(f"unexpected content after matrix rows: {row!r}", line=extra)
    return BitMatrix(k, n, packed)


def save_generator(G: BitMatrix, path) -> None:
    """Write a generator matrix in the format read by load_generator()."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"{G.rows} {G.cols}\n")
        for r in G.row_ints:
            fh.write("".join(str((r >> j) & 1) for j in range(G.cols)) + "\n")


# Built-in (8,4) reference code used throughout the demos and tests:
# an intermediate design between parallel (d_min=1) and repetition (d_min=N).
REF84_ROWS = (
    "10000110",
    "00011001",
    "01000011",
    "10101000",
)


def reference_code() -> NfvCode:
    """The built-in (8,4) combining code with d_min = 3 and chromatic number 3."""
    gen = BitMatrix.from_rows([[int(c) for c in row] for row in REF84_ROWS])
    return NfvCode(gen, name="ref84")
