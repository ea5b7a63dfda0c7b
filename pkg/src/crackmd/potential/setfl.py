"""Reader and writer for multi-element ``setfl`` (eam.alloy) tables.

Layout::

    3 comment lines
    Nelements Sym1 Sym2 ...
    Nrho drho Nr dr cutoff
    for each element:
        Z mass a lattice-type
        Nrho values of F(rho)
        Nr values of rho(r)
    for each pair i >= j:
        Nr values of r*phi(r)

Numbers after line 5 may be wrapped across lines arbitrarily.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from ..errors import ConfigurationError, ParseError

END_TOLERANCE = 1e-6


class ValidationError(ConfigurationError):
    pass


@dataclass
class EamTable:
    elements: list[str]
    nrho: int
    drho: float
    nr: int
    dr: float
    cutoff: float
    embedding: np.ndarray  # (nel, nrho) eV
    density: np.ndarray  # (nel, nr)
    pair_rphi: np.ndarray  # (nel, nel, nr) eV·Å, symmetric
    numbers: list[int]
    masses: list[float]
    lattice_constants: list[float]
    lattice_types: list[str]
    comments: list[str] = field(default_factory=lambda: ["", "", ""])

    def __post_init__(self):
        self.embedding = np.asarray(self.embedding, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        self.pair_rphi = np.asarray(self.pair_rphi, dtype=float)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def index(self, symbol: str) -> int:
        try:
            return self.elements.index(symbol)
        except ValueError:
            raise ConfigurationError(
                f"species {symbol!r} not in potential table (has {', '.join(self.elements)})"
            ) from None

    @property
    def r_grid(self) -> np.ndarray:
        return np.arange(self.nr) * self.dr

    @property
    def rho_grid(self) -> np.ndarray:
        return np.arange(self.nrho) * self.drho

    def pair_tables(self) -> list[tuple[int, int, np.ndarray]]:
        """Pair tables in file order, ``(i, j)`` with ``i >= j``."""
        return [(i, j, self.pair_rphi[i, j]) for i in range(self.n_elements) for j in range(i + 1)]

    def validate(self) -> "EamTable":
        nel = self.n_elements
        if nel < 1:
            raise ValidationError("table has no elements")
        if self.nrho < 2 or self.nr < 2:
            raise ValidationError(f"grid sizes must be >= 2 (nrho={self.nrho}, nr={self.nr})")
        if not (self.drho > 0 and self.dr > 0 and self.cutoff > 0):
            raise ValidationError("drho, dr and cutoff must be positive")
        if self.nr * self.dr < self.cutoff:
            raise ValidationError(
                f"r grid too short: nr*dr = {self.nr * self.dr:g} < cutoff {self.cutoff:g}"
            )
        if self.embedding.shape != (nel, self.nrho) or self.density.shape != (nel, self.nr):
            raise ValidationError("embedding/density array shapes do not match the grid")
        if self.pair_rphi.shape != (nel, nel, self.nr):
            raise ValidationError("pair array shape does not match the grid")
        if not np.array_equal(self.pair_rphi, self.pair_rphi.transpose(1, 0, 2)):
            raise ValidationError("pair tables are not symmetric")
        for arr, what in ((self.embedding, "F(rho)"), (self.density, "rho(r)"), (self.pair_rphi, "r*phi(r)")):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"non-finite value in {what} table")
        for e, sym in enumerate(self.elements):
            if abs(self.density[e, -1]) > END_TOLERANCE:
                raise ValidationError(f"{sym}: rho(r) does not vanish at the last grid point")
        for i, j, t in self.pair_tables():
            if abs(t[-1]) > END_TOLERANCE:
                raise ValidationError(
                    f"{self.elements[i]}-{self.elements[j]}: r*phi(r) does not vanish at the last grid point"
                )
        return self


class _Tokens:
    """Whitespace token stream that remembers 1-based line numbers."""

    def __init__(self, lines: list[str], first_line: int):
        self._it = self._gen(lines, first_line)
        self.line = first_line

    @staticmethod
    def _gen(lines, first_line) -> Iterator[tuple[str, int]]:
        for offset, line in enumerate(lines):
            for tok in line.split():
                yield tok, first_line + offset

    def next(self, context: str) -> tuple[str, int]:
        try:
            tok, self.line = next(self._it)
        except StopIteration:
            raise ParseError(f"truncated table: {context}", None) from None
        return tok, self.line

    def floats(self, count: int, context: str) -> np.ndarray:
        out = np.empty(count)
        for k in range(count):
            try:
                tok, line = next(self._it)
            except StopIteration:
                raise ParseError(
                    f"truncated table: {context}: expected {count} values, got {k}", None
                ) from None
            self.line = line
            out[k] = _to_float(tok, line, context)
        return out


def _to_float(tok: str, line: int, context: str) -> float:
    try:
        return float(tok.replace("D", "E").replace("d", "e"))
    except ValueError:
        raise ParseError(f"non-numeric token {tok!r} in {context}", line) from None


def _to_int(tok: str, line: int, context: str) -> int:
    try:
        value = float(tok)
    except ValueError:
        raise ParseError(f"non-numeric token {tok!r} in {context}", line) from None
    if value != int(value):
        raise ParseError(f"expected an integer for {context}, got {tok!r}", line)
    return int(value)


def parse_setfl(text: str | bytes) -> EamTable:
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    lines = text.splitlines()
    if len(lines) < 5:
        raise ParseError("truncated table: header needs 5 lines", len(lines) or None)
    comments = lines[:3]

    head = lines[3].split()
    if not head:
        raise ParseError("missing element count", 4)
    nel = _to_int(head[0], 4, "element count")
    symbols = head[1:]
    if nel < 1 or len(symbols) != nel:
        raise ParseError(f"element count {nel} does not match {len(symbols)} symbols", 4)

    grid = lines[4].split()
    if len(grid) < 5:
        raise ParseError("grid line needs: Nrho drho Nr dr cutoff", 5)
    nrho = _to_int(grid[0], 5, "Nrho")
    drho = _to_float(grid[1], 5, "drho")
    nr = _to_int(grid[2], 5, "Nr")
    dr = _to_float(grid[3], 5, "dr")
    cutoff = _to_float(grid[4], 5, "cutoff")
    if nrho < 2 or nr < 2:
        raise ValidationError(f"grid sizes must be >= 2 (nrho={nrho}, nr={nr})")

    toks = _Tokens(lines[5:], 6)
    numbers, masses, alats, ltypes = [], [], [], []
    embedding = np.empty((nel, nrho))
    density = np.empty((nel, nr))
    for e, sym in enumerate(symbols):
        ctx = f"element {sym} header"
        tok, line = toks.next(ctx)
        numbers.append(_to_int(tok, line, ctx))
        tok, line = toks.next(ctx)
        masses.append(_to_float(tok, line, ctx))
        tok, line = toks.next(ctx)
        alats.append(_to_float(tok, line, ctx))
        tok, _ = toks.next(ctx)
        ltypes.append(tok)
        embedding[e] = toks.floats(nrho, f"element {sym} F(rho)")
        density[e] = toks.floats(nr, f"element {sym} rho(r)")

    pair = np.empty((nel, nel, nr))
    for i in range(nel):
        for j in range(i + 1):
            vals = toks.floats(nr, f"pair {symbols[i]}-{symbols[j]} r*phi(r)")
            pair[i, j] = vals
            pair[j, i] = vals

    table = EamTable(
        elements=list(symbols),
        nrho=nrho,
        drho=drho,
        nr=nr,
        dr=dr,
        cutoff=cutoff,
        embedding=embedding,
        density=density,
        pair_rphi=pair,
        numbers=numbers,
        masses=masses,
        lattice_constants=alats,
        lattice_types=ltypes,
        comments=comments,
    )
    return table.validate()


def read_setfl(path: str | Path) -> EamTable:
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise ConfigurationError(f"potential file not found: {path}") from None
    return parse_setfl(data)


def _write_block(out: io.StringIO, values: np.ndarray, per_line: int = 5) -> None:
    for k in range(0, len(values), per_line):
        out.write(" ".join(f"{v:.16e}" for v in values[k : k + per_line]))
        out.write("\n")


def write_setfl(table: EamTable) -> str:
    out = io.StringIO()
    comments = (list(table.comments) + ["", "", ""])[:3]
    for c in comments:
        out.write(c.rstrip("\n") + "\n")
    out.write(f"{table.n_elements} " + " ".join(table.elements) + "\n")
    out.write(f"{table.nrho} {float(table.drho)!r} {table.nr} {float(table.dr)!r} {float(table.cutoff)!r}\n")
    for e in range(table.n_elements):
        out.write(
            f"{int(table.numbers[e])} {float(table.masses[e])!r} {float(table.lattice_constants[e])!r} "
            f"{table.lattice_types[e]}\n"
        )
        _write_block(out, table.embedding[e])
        _write_block(out, table.density[e])
    for _, _, t in table.pair_tables():
        _write_block(out, t)
    return out.getvalue()
