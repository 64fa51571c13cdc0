# Lattice geometry, regions, configurations and light-cone bookkeeping

import hashlib
import itertools
import math
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationInfo, field_validator

from config import SYMBOL_DIGITS
from errors import CoverageError, GeometryError

Cell = tuple[int, ...]
Vector = tuple[int, ...]


class Geometry(BaseModel):
    """A periodic torus of side lengths `sides` over an alphabet of size `alphabet`"""

    model_config = ConfigDict(frozen=True)

    sides: tuple[int, ...]
    alphabet: int = 2

    @field_validator("sides")
    @classmethod
    def _check_sides(cls, sides: tuple[int, ...]) -> tuple[int, ...]:
        if not sides:
            raise ValueError("geometry needs at least one axis")
        if any(n < 1 for n in sides):
            raise ValueError("side lengths must be positive")
        return sides

    @field_validator("alphabet")
    @classmethod
    def _check_alphabet(cls, alphabet: int) -> int:
        if not 2 <= alphabet <= len(SYMBOL_DIGITS):
            raise ValueError(f"alphabet size must be between 2 and {len(SYMBOL_DIGITS)}")
        return alphabet

    @property
    def dimension(self) -> int:
        return len(self.sides)

    @property
    def cell_count(self) -> int:
        return math.prod(self.sides)

    def wrap(self, cell: Union[int, Sequence[int]]) -> Cell:
        """Normalize a (possibly negative) coordinate onto the torus"""
        if isinstance(cell, (int, np.integer)):
            cell = (int(cell),)
        cell = tuple(int(c) for c in cell)
        if len(cell) != self.dimension:
            raise GeometryError(f"cell {cell} does not have {self.dimension} coordinates")
        return tuple(c % n for c, n in zip(cell, self.sides))

    def vector(self, vector: Union[int, Sequence[int]]) -> Vector:
        if isinstance(vector, (int, np.integer)):
            vector = (int(vector),)
        vector = tuple(int(v) for v in vector)
        if len(vector) != self.dimension:
            raise GeometryError(f"vector {vector} does not have {self.dimension} coordinates")
        return vector


class Region(BaseModel):
    """Distinct torus cells in canonical (lexicographic) order"""

    model_config = ConfigDict(frozen=True)

    geometry: Geometry
    cells: tuple[Cell, ...] = ()

    @field_validator("cells", mode="before")
    @classmethod
    def _normalize_cells(cls, cells, info: ValidationInfo):
        geometry = info.data.get("geometry")
        if geometry is None:
            return cells
        if isinstance(cells, (int, np.integer)):
            cells = [cells]
        normalized = [geometry.wrap(cell) for cell in cells]
        if len(set(normalized)) != len(normalized):
            raise ValueError("region contains duplicate cells")
        return tuple(sorted(normalized))

    @classmethod
    def of(cls, geometry: Geometry, cells: Iterable = ()) -> "Region":
        return cls(geometry=geometry, cells=list(cells))

    @classmethod
    def full(cls, geometry: Geometry) -> "Region":
        return cls(geometry=geometry, cells=list(itertools.product(*(range(n) for n in geometry.sides))))

    @classmethod
    def parse(cls, geometry: Geometry, text: str) -> "Region":
        text = text.strip()
        if not text:
            return cls(geometry=geometry)
        cells = [tuple(int(part) for part in chunk.split(",")) for chunk in text.split(";")]
        return cls(geometry=geometry, cells=cells)

    def to_text(self) -> str:
        return ";".join(",".join(str(c) for c in cell) for cell in self.cells)

    def __len__(self) -> int:
        return len(self.cells)

    def __contains__(self, cell) -> bool:
        return self.geometry.wrap(cell) in set(self.cells)

    def position(self, cell) -> int:
        """Index of a cell in canonical order"""
        return self.cells.index(self.geometry.wrap(cell))

    def _same_torus(self, other: "Region") -> None:
        if other.geometry != self.geometry:
            raise GeometryError("regions live on different tori")

    def union(self, *others: "Region") -> "Region":
        cells = set(self.cells)
        for other in others:
            self._same_torus(other)
            cells.update(other.cells)
        return Region(geometry=self.geometry, cells=list(cells))

    def intersection(self, other: "Region") -> "Region":
        self._same_torus(other)
        return Region(geometry=self.geometry, cells=list(set(self.cells) & set(other.cells)))

    def difference(self, other: "Region") -> "Region":
        self._same_torus(other)
        return Region(geometry=self.geometry, cells=list(set(self.cells) - set(other.cells)))

    def issubset(self, other: "Region") -> bool:
        self._same_torus(other)
        return set(self.cells) <= set(other.cells)

    def isdisjoint(self, other: "Region") -> bool:
        self._same_torus(other)
        return set(self.cells).isdisjoint(other.cells)

    def translate(self, vector) -> "Region":
        vector = self.geometry.vector(vector)
        return Region(
            geometry=self.geometry,
            cells=[tuple(c + v for c, v in zip(cell, vector)) for cell in self.cells],
        )

    def flat_indices(self) -> np.ndarray:
        """Row-major offsets of the cells inside a torus array"""
        if not self.cells:
            return np.zeros(0, dtype=np.int64)
        coords = np.array(self.cells, dtype=np.int64).T
        return np.ravel_multi_index(tuple(coords), self.geometry.sides).astype(np.int64)


class Configuration(BaseModel):
    """Symbols on a region, one per cell in canonical region order"""

    model_config = ConfigDict(frozen=True)

    region: Region
    symbols: tuple[int, ...] = ()

    @field_validator("symbols", mode="before")
    @classmethod
    def _check_symbols(cls, symbols, info: ValidationInfo):
        region = info.data.get("region")
        if isinstance(symbols, str):
            symbols = [SYMBOL_DIGITS.index(ch) for ch in symbols.lower()]
        symbols = tuple(int(s) for s in symbols)
        if region is None:
            return symbols
        if len(symbols) != len(region):
            raise ValueError(f"{len(symbols)} symbols given for a region of {len(region)} cells")
        if any(s < 0 or s >= region.geometry.alphabet for s in symbols):
            raise ValueError("symbol outside the alphabet")
        return symbols

    @classmethod
    def of(cls, region: Region, symbols) -> "Configuration":
        return cls(region=region, symbols=symbols)

    @classmethod
    def zeros(cls, region: Region) -> "Configuration":
        return cls(region=region, symbols=(0,) * len(region))

    @classmethod
    def from_cells(cls, geometry: Geometry, assignment: dict) -> "Configuration":
        """Build from {cell: symbol}; cells may be given unwrapped"""
        wrapped = {geometry.wrap(cell): int(symbol) for cell, symbol in assignment.items()}
        region = Region(geometry=geometry, cells=list(wrapped))
        return cls(region=region, symbols=[wrapped[cell] for cell in region.cells])

    @classmethod
    def from_code(cls, region: Region, code: int) -> "Configuration":
        a = region.geometry.alphabet
        symbols = []
        for _ in range(len(region)):
            code, digit = divmod(code, a)
            symbols.append(digit)
        return cls(region=region, symbols=tuple(reversed(symbols)))

    @classmethod
    def parse(cls, geometry: Geometry, text: str) -> "Configuration":
        region_text, _, symbol_text = text.partition("|")
        return cls(region=Region.parse(geometry, region_text), symbols=symbol_text.strip())

    @property
    def geometry(self) -> Geometry:
        return self.region.geometry

    def __len__(self) -> int:
        return len(self.symbols)

    def code(self) -> int:
        """Integer index in A^R, first cell most significant"""
        a = self.geometry.alphabet
        value = 0
        for s in self.symbols:
            value = value * a + s
        return value

    def symbol_at(self, cell) -> int:
        return self.symbols[self.region.position(cell)]

    def as_dict(self) -> dict:
        return dict(zip(self.region.cells, self.symbols))

    def symbol_text(self) -> str:
        return "".join(SYMBOL_DIGITS[s] for s in self.symbols)

    def to_text(self) -> str:
        return f"{self.region.to_text()}|{self.symbol_text()}"

    def merge(self, other: "Configuration") -> "Configuration":
        """Union of two configurations on disjoint regions"""
        if not self.region.isdisjoint(other.region):
            raise CoverageError("cannot merge configurations on overlapping regions")
        return Configuration.from_cells(self.geometry, {**self.as_dict(), **other.as_dict()})

    def translate(self, vector) -> "Configuration":
        vector = self.geometry.vector(vector)
        moved = {tuple(c + v for c, v in zip(cell, vector)): s for cell, s in self.as_dict().items()}
        return Configuration.from_cells(self.geometry, moved)


class FullState(BaseModel):
    """One symbol per torus cell; `phase` is the time parity block rules need"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    geometry: Geometry
    cells: np.ndarray
    phase: int = 0

    @field_validator("cells", mode="before")
    @classmethod
    def _check_cells(cls, cells, info: ValidationInfo):
        geometry = info.data.get("geometry")
        array = np.array(cells, dtype=np.uint8, copy=True)
        if geometry is not None:
            if array.size != geometry.cell_count:
                raise ValueError(f"{array.size} symbols given for {geometry.cell_count} cells")
            array = array.reshape(geometry.sides)
            if array.size and int(array.max()) >= geometry.alphabet:
                raise ValueError("symbol outside the alphabet")
        array.flags.writeable = False
        return array

    @classmethod
    def zeros(cls, geometry: Geometry) -> "FullState":
        return cls(geometry=geometry, cells=np.zeros(geometry.sides, dtype=np.uint8))

    @classmethod
    def from_configuration(cls, config: Configuration) -> "FullState":
        """Torus state equal to `config` on its region and zero elsewhere"""
        array = np.zeros(config.geometry.cell_count, dtype=np.uint8)
        array[config.region.flat_indices()] = config.symbols
        return cls(geometry=config.geometry, cells=array)

    @classmethod
    def from_text(cls, geometry: Geometry, text: str, phase: int = 0) -> "FullState":
        return cls(geometry=geometry, cells=[SYMBOL_DIGITS.index(ch) for ch in text], phase=phase)

    def to_text(self) -> str:
        return "".join(SYMBOL_DIGITS[s] for s in self.cells.ravel())

    def digest(self) -> str:
        """sha256 over the bit-packed symbols, the torus shape and the phase"""
        bits = max(1, (self.geometry.alphabet - 1).bit_length())
        planes = [(self.cells.ravel() >> b) & 1 for b in range(bits)]
        h = hashlib.sha256()
        h.update(repr((self.geometry.sides, self.geometry.alphabet, self.phase)).encode())
        for plane in planes:
            h.update(np.packbits(plane.astype(np.uint8)).tobytes())
        return h.hexdigest()

    def __eq__(self, other) -> bool:
        if not isinstance(other, FullState):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and self.phase == other.phase
            and np.array_equal(self.cells, other.cells)
        )

    def __hash__(self) -> int:
        return hash((self.geometry, self.phase, self.cells.tobytes()))


def moore_neighborhood(region: Region, radius: int, geometry: Optional[Geometry] = None) -> Region:
    """All cells within L-infinity distance `radius` of the region, with torus wrap"""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    geometry = geometry or region.geometry
    if geometry != region.geometry:
        raise GeometryError("region belongs to a different torus")
    offsets = list(itertools.product(range(-radius, radius + 1), repeat=geometry.dimension))
    cells = {
        geometry.wrap(tuple(c + o for c, o in zip(cell, offset)))
        for cell in region.cells
        for offset in offsets
    }
    return Region(geometry=geometry, cells=list(cells))


def restrict(state: Union[FullState, Configuration], region: Region) -> Configuration:
    """s|_R for a full state or a configuration on a larger region"""
    if isinstance(state, FullState):
        if region.geometry != state.geometry:
            raise GeometryError("region belongs to a different torus")
        symbols = state.cells.ravel()[region.flat_indices()]
        return Configuration(region=region, symbols=tuple(int(s) for s in symbols))
    if not region.issubset(state.region):
        raise CoverageError("region is not contained in the configuration's region")
    lookup = state.as_dict()
    return Configuration(region=region, symbols=tuple(lookup[cell] for cell in region.cells))


def axis_extent(coordinates: Iterable[int], n: int) -> int:
    """Length of the shortest circular arc (in steps) covering the coordinates"""
    values = sorted({c % n for c in coordinates})
    if len(values) <= 1:
        return 0
    gaps = [b - a for a, b in zip(values, values[1:])]
    gaps.append(values[0] + n - values[-1])
    return n - max(gaps)


def light_cone_valid(geometry: Geometry, region: Region, t: int) -> bool:
    """True iff the radius-t neighborhood of the region does not wrap onto itself"""
    if t < 0:
        raise ValueError("time must be non-negative")
    if not region.cells:
        return True
    for axis, n in enumerate(geometry.sides):
        extent = axis_extent((cell[axis] for cell in region.cells), n)
        if 2 * t + extent >= n:
            return False
    return True


def translate(obj: Union[Region, Configuration, FullState], vector):
    """Translate a region, configuration or full state by a lattice vector"""
    if isinstance(obj, FullState):
        vector = obj.geometry.vector(vector)
        moved = np.roll(obj.cells, shift=vector, axis=tuple(range(obj.geometry.dimension)))
        return FullState(geometry=obj.geometry, cells=moved, phase=obj.phase)
    return obj.translate(vector)
