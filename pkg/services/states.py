"""Problem model: bipartite pure states, transformation problems and mixed inputs."""

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from infrastructure.linalg import DEFAULT_TOLERANCE, Tolerance, partial_trace_B, vec_to_matrix
from utils.errors import DimensionError, NormalizationError, PreconditionError


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """
    A pure state of an m x n bipartite system.

    ``amplitudes`` is the row-major vector x with matrix form X[i, j] = x[i*n + j].
    ``normalization_factor`` is the norm the amplitudes had before they were
    rescaled with ``--normalize`` (1.0 when the file was already normalized).
    """

    m: int
    n: int
    amplitudes: np.ndarray
    normalization_factor: float = 1.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.m < 1 or self.n < 1:
            raise DimensionError(f"State dimensions must be positive, got m={self.m}, n={self.n}")
        if amps.size != self.m * self.n:
            raise DimensionError(f"State has {amps.size} amplitudes, expected m*n = {self.m * self.n}")
        if not np.all(np.isfinite(amps)):
            raise DimensionError("State has non-finite amplitudes")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_matrix(cls, X) -> "BipartiteState":
        X = np.asarray(X, dtype=complex)
        if X.ndim != 2:
            raise DimensionError(f"Matrix form must be two-dimensional, got shape {X.shape}")
        return cls(X.shape[0], X.shape[1], X.reshape(-1))

    @property
    def matrix(self) -> np.ndarray:
        return vec_to_matrix(self.amplitudes, self.m, self.n)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
        return abs(self.norm - 1.0) <= tol.rel_eps + tol.abs_eps

    def normalized(self) -> "BipartiteState":
        """Unit-norm copy, recording the original norm."""
        norm = self.norm
        if norm == 0:
            raise NormalizationError("Cannot normalize the zero vector")
        return BipartiteState(self.m, self.n, self.amplitudes / norm, normalization_factor=norm)

    def reduced_density(self) -> np.ndarray:
        """tr_B |x><x|."""
        return partial_trace_B(self)

    def density(self) -> np.ndarray:
        """|x><x| on the joint space."""
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True, eq=False)
class StatePair:
    """One required mapping x -> y, with optional weight from a mixed-input reduction."""

    x: BipartiteState
    y: BipartiteState
    weight: Optional[float] = None
    source: Optional[str] = None


def _check_bounds(p_max: Optional[int], q_max: Optional[int]) -> None:
    for label, bound in (("p_max", p_max), ("q_max", q_max)):
        if bound is not None and bound < 1:
            raise PreconditionError(f"Ancilla bound {label} must be >= 1, got {bound}")


@dataclass(frozen=True, eq=False)
class TransformProblem:
    """
    Ordered (input, output) pairs plus the ancilla bounds of the question.

    A bound of None means the question puts no limit on that ancilla.
    """

    pairs: Tuple[StatePair, ...]
    p_max: Optional[int] = 1
    q_max: Optional[int] = 1
    name: Optional[str] = None

    def __post_init__(self):
        pairs = tuple(self.pairs)
        object.__setattr__(self, "pairs", pairs)
        if not pairs:
            raise PreconditionError("A transformation problem needs at least one pair")
        _check_bounds(self.p_max, self.q_max)
        m, n = pairs[0].x.m, pairs[0].x.n
        for i, pair in enumerate(pairs):
            for label, state in (("x", pair.x), ("y", pair.y)):
                if (state.m, state.n) != (m, n):
                    raise DimensionError(
                        f"Pair {i + 1} {label} is {state.m}x{state.n}, expected {m}x{n}"
                    )

    @classmethod
    def from_matrices(cls, Xs: Sequence, Ys: Sequence, p_max: Optional[int] = 1, q_max: Optional[int] = 1,
                      name: Optional[str] = None) -> "TransformProblem":
        if len(Xs) != len(Ys):
            raise DimensionError(f"{len(Xs)} inputs but {len(Ys)} outputs")
        pairs = tuple(
            StatePair(BipartiteState.from_matrix(X), BipartiteState.from_matrix(Y)) for X, Y in zip(Xs, Ys)
        )
        return cls(pairs, p_max=p_max, q_max=q_max, name=name)

    @property
    def k(self) -> int:
        return len(self.pairs)

    @property
    def m(self) -> int:
        return self.pairs[0].x.m

    @property
    def n(self) -> int:
        return self.pairs[0].x.n

    @property
    def inputs(self) -> List[BipartiteState]:
        return [p.x for p in self.pairs]

    @property
    def outputs(self) -> List[BipartiteState]:
        return [p.y for p in self.pairs]

    @property
    def X_list(self) -> List[np.ndarray]:
        return [p.x.matrix for p in self.pairs]

    @property
    def Y_list(self) -> List[np.ndarray]:
        return [p.y.matrix for p in self.pairs]

    @property
    def weights(self) -> List[Optional[float]]:
        return [p.weight for p in self.pairs]

    def subproblem(self, indices: Sequence[int]) -> "TransformProblem":
        """Problem restricted to the given 0-based pair indices."""
        return replace(self, pairs=tuple(self.pairs[i] for i in indices))

    def with_bounds(self, p_max: Optional[int] = None, q_max: Optional[int] = None) -> "TransformProblem":
        return replace(
            self,
            p_max=self.p_max if p_max is None else p_max,
            q_max=self.q_max if q_max is None else q_max,
        )

    @property
    def bounded(self) -> bool:
        """True when both ancilla dimensions are limited by the question."""
        return self.p_max is not None and self.q_max is not None

    def search_bounds(self, p_cap: int, q_cap: int) -> Tuple[int, int]:
        """Largest (p, q) a certificate search visits; caps stand in for a missing bound."""
        p = p_cap if self.p_max is None else self.p_max
        q = q_cap if self.q_max is None else self.q_max
        return p, q


@dataclass(frozen=True, eq=False)
class MixedInputProblem:
    """
    Mixed inputs A_i = sum_j x_ij x_ij^H, each to be sent to the pure output y_i.

    Components are unnormalized vectors; their squared norms are the weights.
    """

    mixed_inputs: Tuple[Tuple[np.ndarray, ...], ...]
    outputs: Tuple[BipartiteState, ...]
    p_max: Optional[int] = 1
    q_max: Optional[int] = 1
    name: Optional[str] = None
    _dims: Tuple[int, int] = field(init=False, repr=False, default=(0, 0))

    def __post_init__(self):
        outputs = tuple(self.outputs)
        inputs = tuple(tuple(np.asarray(c, dtype=complex).reshape(-1) for c in comps) for comps in self.mixed_inputs)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "mixed_inputs", inputs)
        if not outputs:
            raise PreconditionError("A mixed-input problem needs at least one input")
        _check_bounds(self.p_max, self.q_max)
        if len(inputs) != len(outputs):
            raise DimensionError(f"{len(inputs)} mixed inputs but {len(outputs)} outputs")
        m, n = outputs[0].m, outputs[0].n
        for i, (comps, y) in enumerate(zip(inputs, outputs)):
            if (y.m, y.n) != (m, n):
                raise DimensionError(f"Output {i + 1} is {y.m}x{y.n}, expected {m}x{n}")
            if not comps:
                raise PreconditionError(f"Mixed input {i + 1} has no components")
            for j, c in enumerate(comps):
                if c.size != m * n:
                    raise DimensionError(
                        f"Component {j + 1} of mixed input {i + 1} has {c.size} amplitudes, expected {m * n}"
                    )
        object.__setattr__(self, "_dims", (m, n))

    @property
    def m(self) -> int:
        return self._dims[0]

    @property
    def n(self) -> int:
        return self._dims[1]

    def density(self, i: int) -> np.ndarray:
        """A_i on the joint space."""
        return sum(np.outer(c, c.conj()) for c in self.mixed_inputs[i])
