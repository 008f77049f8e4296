"""Model inputs and states shared by every other module.

All rates are stored as :class:`fractions.Fraction` so that drift identities
can be checked with zero error. Components are indexed from 0 in Python and
from 1 in every file format and CLI output.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ._exact import as_fraction

INT64_MAX = 2**63 - 1


class Mode(str, Enum):
    """Which chain a model describes."""

    LCP = "lcp"  # continuous-time competition process
    DTMC = "dtmc"  # its embedded jump chain
    URN = "urn"  # generalized Polya urn with removals


class ModelParseError(ValueError):
    """A model file could not be parsed. ``location`` names the line or field."""

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class ModelValidationError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid model: " + "; ".join(self.violations))


@dataclass(frozen=True)
class InteractionMatrix:
    """Square matrix of nonnegative rationals with a zero diagonal.

    ``entries[i][j]`` is how strongly component ``j`` kills component ``i``.
    Construction only normalizes the entries to Fractions and checks the
    shape; the value invariants are reported by :func:`validate_model`.
    """

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(as_fraction(v) for v in row) for row in self.entries)
        if not rows:
            raise ValueError("interaction matrix must have at least one row")
        n = len(rows)
        for k, row in enumerate(rows):
            if len(row) != n:
                raise ValueError(f"matrix is not square: row {k + 1} has {len(row)} entries, expected {n}")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def zeros(cls, n):
        return cls(tuple((0,) * n for _ in range(n)))

    @classmethod
    def from_array(cls, array):
        """Build from a nested sequence or numpy array (floats are converted exactly)."""
        if isinstance(array, InteractionMatrix):
            return array
        if isinstance(array, np.ndarray):
            array = array.tolist()
        return cls(tuple(tuple(row) for row in array))

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def rows(self):
        return [list(row) for row in self.entries]

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.entries], dtype=float)

    def pattern(self) -> np.ndarray:
        """Boolean zero/nonzero pattern."""
        return np.array([[v != 0 for v in row] for row in self.entries], dtype=bool)

    def scaled(self, c) -> "InteractionMatrix":
        c = as_fraction(c)
        return InteractionMatrix(tuple(tuple(c * v for v in row) for row in self.entries))

    def permuted(self, perm: Sequence[int]) -> "InteractionMatrix":
        """Relabel so that new component ``k`` is old component ``perm[k]``."""
        return InteractionMatrix(tuple(tuple(self.entries[p][q] for q in perm) for p in perm))

    def submatrix(self, keep: Sequence[int]) -> "InteractionMatrix":
        keep = sorted(keep)
        return InteractionMatrix(tuple(tuple(self.entries[p][q] for q in keep) for p in keep))

    def row_sums(self):
        return [sum(row, Fraction(0)) for row in self.entries]

    def column_sums(self):
        return [sum((row[j] for row in self.entries), Fraction(0)) for j in range(self.n)]

    def denominator_lcm(self) -> int:
        out = 1
        for row in self.entries:
            for v in row:
                out = np.lcm(out, v.denominator).item()
        return out


@dataclass(frozen=True)
class ModelSpec:
    """Birth rate, interaction matrix, optional immigration and chain mode."""

    alpha: Fraction
    matrix: InteractionMatrix
    immigration: Optional[tuple] = None
    mode: Mode = Mode.DTMC
    initial: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_fraction(self.alpha))
        if not isinstance(self.matrix, InteractionMatrix):
            object.__setattr__(self, "matrix", InteractionMatrix.from_array(self.matrix))
        if self.immigration is not None:
            object.__setattr__(self, "immigration", tuple(as_fraction(v) for v in self.immigration))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.initial is not None:
            object.__setattr__(self, "initial", tuple(int(v) for v in self.initial))

    @property
    def n(self) -> int:
        return self.matrix.n

    @property
    def has_immigration(self) -> bool:
        """Immigration only matters outside urn mode and when some rate is positive."""
        return (
            self.mode is not Mode.URN
            and self.immigration is not None
            and any(v > 0 for v in self.immigration)
        )

    def immigration_rates(self):
        if not self.has_immigration:
            return [Fraction(0)] * self.n
        return list(self.immigration)

    def with_matrix(self, matrix) -> "ModelSpec":
        return ModelSpec(self.alpha, matrix, None, self.mode, None)


@dataclass(frozen=True)
class PopulationState:
    """Vector of nonnegative integer counts."""

    counts: tuple

    def __post_init__(self):
        counts = tuple(int(v) for v in self.counts)
        if any(v < 0 for v in counts):
            raise ValueError(f"negative count in state {counts}")
        if any(v > INT64_MAX for v in counts):
            raise OverflowError("count exceeds 64-bit range")
        object.__setattr__(self, "counts", counts)

    def __len__(self):
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)

    def __getitem__(self, i):
        return self.counts[i]

    @property
    def positive(self) -> bool:
        return all(v > 0 for v in self.counts)


def as_state(state, n=None) -> PopulationState:
    if not isinstance(state, PopulationState):
        state = PopulationState(tuple(state))
    if n is not None and len(state) != n:
        raise ValueError(f"state has {len(state)} components, model has {n}")
    return state


@dataclass(frozen=True, order=True)
class SurvivorSet:
    """A set of components, stored as a bitmask (bit ``i`` is component ``i``).

    Ordering is by bitmask, which is the catalog's canonical order.
    """

    mask: int
    members: frozenset = field(compare=False, default=frozenset())

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(i for i in range(self.mask.bit_length()) if self.mask >> i & 1))

    @classmethod
    def of(cls, members: Iterable[int]) -> "SurvivorSet":
        mask = 0
        for i in members:
            mask |= 1 << int(i)
        return cls(mask)

    def labels(self):
        """1-based component labels, ascending."""
        return tuple(sorted(i + 1 for i in self.members))

    def __len__(self):
        return len(self.members)

    def __contains__(self, i):
        return i in self.members

    def __iter__(self):
        return iter(sorted(self.members))

    def __str__(self):
        return "{" + ",".join(str(k) for k in self.labels()) + "}"


def validate_model(spec: ModelSpec) -> list:
    """Return the list of violated model invariants (empty means OK)."""
    out = []
    a = spec.matrix
    n = a.n
    for i in range(n):
        for j in range(n):
            v = a[i, j]
            if v < 0:
                out.append(f"negative entry at ({i + 1},{j + 1})")
            if i == j and v != 0:
                out.append(f"nonzero diagonal at ({i + 1},{i + 1})")
    if spec.mode is Mode.URN:
        if spec.alpha < 0:
            out.append("alpha must be nonnegative")
        if spec.alpha.denominator != 1:
            out.append("alpha must be an integer in urn mode")
        if any(v.denominator != 1 for row in a.entries for v in row):
            out.append("matrix entries must be integers in urn mode")
    elif spec.alpha <= 0:
        out.append("alpha must be positive")
    if spec.immigration is not None:
        if len(spec.immigration) != n:
            out.append(f"immigration has length {len(spec.immigration)}, expected {n}")
        if any(v < 0 for v in spec.immigration):
            out.append("immigration rates must be nonnegative")
    if spec.initial is not None:
        if len(spec.initial) != n:
            out.append(f"initial state has length {len(spec.initial)}, expected {n}")
        if any(v < 0 for v in spec.initial):
            out.append("initial counts must be nonnegative")
    return out


def check_model(spec: ModelSpec) -> ModelSpec:
    violations = validate_model(spec)
    if violations:
        raise ModelValidationError(violations)
    return spec


# ---------------------------------------------------------------- file format

_MODE_NAMES = {m.value: m for m in Mode}


def _rational(value, where):
    if isinstance(value, bool) or isinstance(value, float):
        raise ModelParseError(f"expected an integer or a rational string, got {value!r}", where)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ModelParseError(f"not a rational number: {value!r}", where) from None
    raise ModelParseError(f"expected an integer or a rational string, got {type(value).__name__}", where)


def parse_model(data: dict) -> ModelSpec:
    """Build a validated :class:`ModelSpec` from the decoded JSON object."""
    if not isinstance(data, dict):
        raise ModelParseError("top level must be a JSON object")
    unknown = set(data) - {"alpha", "matrix", "immigration", "mode", "initial"}
    if unknown:
        raise ModelParseError(f"unknown field(s) {sorted(unknown)}")
    for name in ("alpha", "matrix"):
        if name not in data:
            raise ModelParseError("missing required field", name)
    alpha = _rational(data["alpha"], "alpha")
    rows = data["matrix"]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ModelParseError("must be a non-empty array of arrays", "matrix")
    n = len(rows)
    for i, row in enumerate(rows):
        if len(row) != n:
            raise ModelParseError(f"row has {len(row)} entries, expected {n}", f"matrix[{i + 1}]")
    entries = tuple(
        tuple(_rational(v, f"matrix[{i + 1}][{j + 1}]") for j, v in enumerate(row)) for i, row in enumerate(rows)
    )
    immigration = None
    if data.get("immigration") is not None:
        imm = data["immigration"]
        if not isinstance(imm, list):
            raise ModelParseError("must be an array", "immigration")
        immigration = tuple(_rational(v, f"immigration[{k + 1}]") for k, v in enumerate(imm))
    mode_name = data.get("mode", "dtmc")
    if mode_name not in _MODE_NAMES:
        raise ModelParseError(f"must be one of {sorted(_MODE_NAMES)}, got {mode_name!r}", "mode")
    initial = None
    if data.get("initial") is not None:
        init = data["initial"]
        if not isinstance(init, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in init):
            raise ModelParseError("must be an array of integers", "initial")
        initial = tuple(init)
    spec = ModelSpec(alpha, InteractionMatrix(entries), immigration, _MODE_NAMES[mode_name], initial)
    return check_model(spec)


def load_model(path) -> ModelSpec:
    """Read a model-spec JSON file. Raises ModelParseError or ModelValidationError."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelParseError(str(exc), str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from None
    return parse_model(data)


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def model_to_dict(spec: ModelSpec) -> dict:
    out = {
        "alpha": _fmt(spec.alpha),
        "matrix": [[_fmt(v) for v in row] for row in spec.matrix.entries],
        "mode": spec.mode.value,
    }
    if spec.immigration is not None:
        out["immigration"] = [_fmt(v) for v in spec.immigration]
    if spec.initial is not None:
        out["initial"] = list(spec.initial)
    return out


def dump_model(spec: ModelSpec) -> str:
    return json.dumps(model_to_dict(spec), indent=2)


def save_model(spec: ModelSpec, path) -> None:
    Path(path).write_text(dump_model(spec) + "\n", encoding="utf-8")
