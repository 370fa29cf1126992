"""Problem file ingestion, serialization, Gram matrices and the mixed-input reduction."""

import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

# Ensure parent directory is in path
_parent = Path(__file__).resolve().parent.parent
if str(_parent) not in sys.path:
    sys.path.insert(0, str(_parent))

from config.settings import settings
from infrastructure.json_codec import (
    decode_dense_matrix,
    decode_vector,
    dumps,
    encode_vector,
    loads,
    validate,
)
from infrastructure.linalg import Tolerance
from services.states import BipartiteState, MixedInputProblem, StatePair, TransformProblem
from utils.errors import DimensionError, NormalizationError, ZeroComponentError
from utils.log import get_logger

logger = get_logger("problems")

StateLike = Union[BipartiteState, np.ndarray, Sequence[complex]]


class ProblemService:
    """Service for loading, validating and reducing transformation problems."""

    def __init__(self, tol: Optional[Tolerance] = None):
        self._tol = tol

    @property
    def tol(self) -> Tolerance:
        return self._tol or settings.tolerance()

    # ------------------------------------------------------------------
    # Loading
    # ------------------------------------------------------------------

    def load_problem(self, text: str, normalize: bool = False, tol: Optional[Tolerance] = None,
                     name: Optional[str] = None) -> TransformProblem:
        """
        Parse and validate a problem file.

        Args:
            text: UTF-8 JSON contents of the problem file.
            normalize: Rescale unnormalized states instead of rejecting them.
            tol: Tolerance for the normalization check.
            name: Problem name used when the file does not carry one.

        Returns:
            Validated TransformProblem. A "mixed" section is reduced to weighted
            pure pairs and appended after the explicit pairs.
        """
        tol = tol or self.tol
        doc = loads(text, "problem")
        validate(doc, "problem")

        m, n = doc["m"], doc["n"]
        pairs: List[StatePair] = []
        for idx, entry in enumerate(doc.get("pairs", []), start=1):
            x = self._decode_state(entry, "x", m, n, f"pair {idx} input")
            y = self._decode_state(entry, "y", m, n, f"pair {idx} output")
            x = self._check_norm(x, normalize, tol, f"Pair {idx} input")
            y = self._check_norm(y, normalize, tol, f"Pair {idx} output")
            pairs.append(StatePair(x, y, weight=entry.get("weight"), source=entry.get("source")))

        # Absent bounds leave the ancilla open
        p_max = doc.get("p_max")
        q_max = doc.get("q_max")
        problem_name = doc.get("name", name)

        if "mixed" in doc:
            mixed = self._decode_mixed(doc, normalize, tol)
            pairs.extend(self.mixed_reduction(mixed, tol).pairs)

        problem = TransformProblem(tuple(pairs), p_max=p_max, q_max=q_max, name=problem_name)
        logger.info(f"✓ Loaded {problem.k} pairs ({m}x{n}, p_max={p_max}, q_max={q_max})")
        return problem

    def load_problem_file(self, path: Union[str, Path], normalize: bool = False,
                          tol: Optional[Tolerance] = None) -> TransformProblem:
        path = Path(path)
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
        return self.load_problem(text, normalize=normalize, tol=tol, name=path.stem)

    def load_mixed_problem(self, text: str, normalize: bool = False,
                           tol: Optional[Tolerance] = None) -> MixedInputProblem:
        """Parse only the "mixed" section of a problem file."""
        tol = tol or self.tol
        doc = loads(text, "problem")
        validate(doc, "problem")
        if "mixed" not in doc:
            raise DimensionError("Problem file has no mixed section")
        return self._decode_mixed(doc, normalize, tol)

    def _decode_state(self, entry: Dict[str, Any], key: str, m: int, n: int, label: str) -> BipartiteState:
        if key in entry:
            amps = decode_vector(entry[key], label)
            if amps.size != m * n:
                raise DimensionError(f"{label} has {amps.size} amplitudes, expected m*n = {m * n}")
            return BipartiteState(m, n, amps)
        X = decode_dense_matrix(entry[key.upper()], label)
        if X.shape != (m, n):
            raise DimensionError(f"{label} matrix is {X.shape[0]}x{X.shape[1]}, expected {m}x{n}")
        return BipartiteState.from_matrix(X)

    @staticmethod
    def _check_norm(state: BipartiteState, normalize: bool, tol: Tolerance, label: str) -> BipartiteState:
        if state.is_normalized(tol):
            return state
        if not normalize:
            raise NormalizationError(f"{label} has norm {state.norm:.12g}; pass --normalize to rescale")
        normalized = state.normalized()
        logger.info(f"  {label}: rescaled by 1/{state.norm:.6g}")
        return normalized

    def _decode_mixed(self, doc: Dict[str, Any], normalize: bool, tol: Tolerance) -> MixedInputProblem:
        m, n = doc["m"], doc["n"]
        section = doc["mixed"]
        outputs = []
        for idx, raw in enumerate(section["outputs"], start=1):
            amps = decode_vector(raw, f"mixed output {idx}")
            if amps.size != m * n:
                raise DimensionError(f"mixed output {idx} has {amps.size} amplitudes, expected {m * n}")
            outputs.append(self._check_norm(BipartiteState(m, n, amps), normalize, tol, f"Mixed output {idx}"))
        inputs = []
        for idx, entry in enumerate(section["inputs"], start=1):
            comps = [decode_vector(c, f"mixed input {idx} component {j}")
                     for j, c in enumerate(entry["components"], start=1)]
            inputs.append(tuple(comps))
        return MixedInputProblem(
            tuple(inputs),
            tuple(outputs),
            p_max=doc.get("p_max"),
            q_max=doc.get("q_max"),
            name=doc.get("name"),
        )

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def serialize_problem(self, problem: TransformProblem) -> Dict[str, Any]:
        """Problem-file document; load_problem of its JSON gives the same problem."""
        doc: Dict[str, Any] = {}
        if problem.name:
            doc["name"] = problem.name
        doc.update({"m": problem.m, "n": problem.n})
        for key in ("p_max", "q_max"):
            if getattr(problem, key) is not None:
                doc[key] = getattr(problem, key)
        pairs = []
        for pair in problem.pairs:
            entry: Dict[str, Any] = {"x": encode_vector(pair.x.amplitudes), "y": encode_vector(pair.y.amplitudes)}
            if pair.weight is not None:
                entry["weight"] = float(pair.weight)
            if pair.source:
                entry["source"] = pair.source
            pairs.append(entry)
        doc["pairs"] = pairs
        return doc

    def to_json(self, problem: TransformProblem) -> str:
        return dumps(self.serialize_problem(problem))

    # ------------------------------------------------------------------
    # Gram matrices and mixed inputs
    # ------------------------------------------------------------------

    def gram_matrix(self, states: Sequence[StateLike], tol: Optional[Tolerance] = None) -> np.ndarray:
        """
        Gram matrix G[i, j] = <x_i|x_j>.

        Accepts BipartiteStates or plain vectors. The result is exactly
        Hermitian; diagonal entries within tolerance of 1 are set to 1.
        """
        tol = tol or self.tol
        vectors = [np.asarray(getattr(s, "amplitudes", s), dtype=complex).reshape(-1) for s in states]
        if not vectors:
            raise DimensionError("Gram matrix of an empty family")
        length = vectors[0].size
        for i, v in enumerate(vectors):
            if v.size != length:
                raise DimensionError(f"State {i + 1} has dimension {v.size}, expected {length}")
        V = np.column_stack(vectors)
        G = V.conj().T @ V
        G = (G + G.conj().T) / 2
        diag = np.real(np.diag(G)).copy()
        diag[np.abs(diag - 1.0) <= 10 * (tol.rel_eps + tol.abs_eps)] = 1.0
        np.fill_diagonal(G, diag)
        return G

    def mixed_reduction(self, problem: MixedInputProblem, tol: Optional[Tolerance] = None) -> TransformProblem:
        """
        Reduce mixed inputs to weighted pure pairs (x_ij/|x_ij|, y_i), weight |x_ij|^2.

        Raises:
            NormalizationError: some A_i does not have unit trace.
            ZeroComponentError: some component has zero norm.
        """
        tol = tol or self.tol
        pairs = []
        for i, (comps, y) in enumerate(zip(problem.mixed_inputs, problem.outputs), start=1):
            weights = [float(np.vdot(c, c).real) for c in comps]
            trace = sum(weights)
            if abs(trace - 1.0) > tol.rel_eps + tol.abs_eps:
                raise NormalizationError(f"Mixed input {i} has trace {trace:.12g}, expected 1")
            for j, (c, w) in enumerate(zip(comps, weights), start=1):
                norm = np.sqrt(w)
                if norm <= tol.abs_eps:
                    raise ZeroComponentError(f"Component {j} of mixed input {i} has zero norm")
                x = BipartiteState(problem.m, problem.n, c / norm)
                pairs.append(StatePair(x, y, weight=w, source=f"mixed {i}.{j}"))
        logger.info(f"✓ Reduced {len(problem.outputs)} mixed inputs to {len(pairs)} weighted pure pairs")
        return TransformProblem(tuple(pairs), p_max=problem.p_max, q_max=problem.q_max, name=problem.name)


# Global instance
problem_service = ProblemService()
