"""
Continuous-time Bayesian network model.

A CTBN is a set of components, each with a finite state space, a list of
parent components and one conditional rate matrix per parent-state
assignment. Parent assignments index the conditional rate matrices in
row-major order over the declared parent order.
"""

import logging
from functools import cached_property
from typing import Any, Dict, List, Sequence, Set, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..errors import ModelValidationError, NumericalInputError, StateSpaceTooLargeError

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-12
DEFAULT_STATE_SPACE_CAP = 4096

JointState = Tuple[int, ...]


def _frozen_array(value: Any) -> np.ndarray:
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


class ModelViolation(BaseModel):
    """A single violated model invariant."""

    kind: str = Field(..., description="Invariant family")
    component: int = Field(..., description="Component id")
    parent_config: int | None = Field(None, description="Flattened parent assignment")
    row: int | None = Field(None, description="Source state a")
    column: int | None = Field(None, description="Target state b")
    message: str = Field(..., description="Human readable description")


class ValidationReport(BaseModel):
    """Outcome of validate_model."""

    is_valid: bool = True
    errors: List[ModelViolation] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)

    def add(self, violation: ModelViolation) -> None:
        self.is_valid = False
        self.errors.append(violation)

    def summary(self) -> str:
        if self.is_valid:
            return "model is valid"
        lines = [f"{len(self.errors)} violation(s):"]
        lines.extend(f"  - {error.message}" for error in self.errors)
        return "\n".join(lines)


class CTBNModel(BaseModel):
    """Component graph plus conditional rate matrices.

    ``cims[i]`` has shape ``(P_i, d_i, d_i)`` where ``P_i`` is the number of
    joint assignments of ``parents[i]``. ``initial[i]`` is the per-component
    factor of the product-form initial distribution.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    state_sizes: List[int] = Field(..., description="Cardinality d_i per component")
    parents: List[List[int]] = Field(..., description="Ordered parent ids per component")
    cims: List[np.ndarray] = Field(..., description="Conditional rate matrices")
    initial: List[np.ndarray] = Field(..., description="Initial distribution factors")

    @field_validator("cims", mode="before")
    @classmethod
    def _coerce_cims(cls, value: Any) -> List[np.ndarray]:
        arrays = []
        for table in value:
            array = _frozen_array(table)
            if array.ndim == 2:
                array = _frozen_array(array[np.newaxis])
            arrays.append(array)
        return arrays

    @field_validator("initial", mode="before")
    @classmethod
    def _coerce_initial(cls, value: Any) -> List[np.ndarray]:
        return [_frozen_array(vector) for vector in value]

    @field_validator("parents", mode="before")
    @classmethod
    def _coerce_parents(cls, value: Any) -> List[List[int]]:
        return [[int(p) for p in plist] for plist in value]

    @property
    def num_components(self) -> int:
        return len(self.state_sizes)

    @cached_property
    def graph(self) -> nx.DiGraph:
        """Parent → child graph (may contain cycles)."""
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.num_components))
        for child, plist in enumerate(self.parents):
            graph.add_edges_from((parent, child) for parent in plist)
        return graph

    @cached_property
    def _children(self) -> List[List[int]]:
        return [sorted(self.graph.successors(i)) for i in range(self.num_components)]

    @cached_property
    def _parent_dims(self) -> List[Tuple[int, ...]]:
        return [tuple(self.state_sizes[p] for p in plist) for plist in self.parents]

    @property
    def joint_size(self) -> int:
        return int(np.prod(self.state_sizes, dtype=np.int64))

    def check_component(self, i: int) -> None:
        if not 0 <= i < self.num_components:
            raise NumericalInputError(
                f"component id {i} out of range [0, {self.num_components})"
            )

    def children(self, i: int) -> List[int]:
        self.check_component(i)
        return self._children[i]

    def num_parent_configs(self, i: int) -> int:
        return int(np.prod(self._parent_dims[i], dtype=np.int64))

    def parent_config_index(self, i: int, parent_states: Sequence[int]) -> int:
        """Row-major index of a parent assignment given in declared order."""
        dims = self._parent_dims[i]
        if not dims:
            return 0
        return int(np.ravel_multi_index(tuple(int(s) for s in parent_states), dims))

    def parent_config_states(self, i: int, index: int) -> Tuple[int, ...]:
        dims = self._parent_dims[i]
        if not dims:
            return ()
        return tuple(int(s) for s in np.unravel_index(index, dims))

    def conditional_rates(self, i: int, parent_states: Sequence[int]) -> np.ndarray:
        return self.cims[i][self.parent_config_index(i, parent_states)]

    def to_document(self) -> Dict[str, Any]:
        """JSON-ready model document."""
        return {
            "state_sizes": list(self.state_sizes),
            "parents": [list(p) for p in self.parents],
            "cims": [table.tolist() for table in self.cims],
            "initial": [vector.tolist() for vector in self.initial],
        }

    @classmethod
    def from_document(cls, document: Dict[str, Any], validate: bool = True) -> "CTBNModel":
        """Build a model from a JSON document, applying validate_model."""
        model = cls.model_validate(document)
        if validate:
            report = validate_model(model)
            if not report.is_valid:
                raise ModelValidationError(report.summary(), report)
        return model


def validate_model(model: CTBNModel) -> ValidationReport:
    """Check every CTBN invariant and report all violations."""
    report = ValidationReport()
    M = model.num_components

    if len(model.parents) != M or len(model.cims) != M or len(model.initial) != M:
        report.add(ModelViolation(
            kind="shape",
            component=-1,
            message=(
                f"expected {M} parent lists, rate tables and initial vectors; got "
                f"{len(model.parents)}, {len(model.cims)}, {len(model.initial)}"
            ),
        ))
        return report

    for i, d in enumerate(model.state_sizes):
        if d < 1:
            report.add(ModelViolation(
                kind="state_size", component=i,
                message=f"component {i} has non-positive state count {d}",
            ))

    for i, plist in enumerate(model.parents):
        for p in plist:
            if p == i:
                report.add(ModelViolation(
                    kind="self_parent", component=i,
                    message=f"component {i} lists itself as a parent",
                ))
            elif not 0 <= p < M:
                report.add(ModelViolation(
                    kind="parent_range", component=i,
                    message=f"component {i} has out-of-range parent {p}",
                ))
        if len(set(plist)) != len(plist):
            report.add(ModelViolation(
                kind="duplicate_parent", component=i,
                message=f"component {i} has duplicate parents {plist}",
            ))
    if not report.is_valid:
        return report

    for i, table in enumerate(model.cims):
        d = model.state_sizes[i]
        expected = (model.num_parent_configs(i), d, d)
        if table.shape != expected:
            report.add(ModelViolation(
                kind="shape", component=i,
                message=f"component {i} rate table has shape {table.shape}, expected {expected}",
            ))
            continue
        if not np.all(np.isfinite(table)):
            report.add(ModelViolation(
                kind="non_finite", component=i,
                message=f"component {i} rate table has non-finite entries",
            ))
            continue
        for u in range(expected[0]):
            matrix = table[u]
            for a in range(d):
                for b in range(d):
                    if a != b and matrix[a, b] < 0:
                        report.add(ModelViolation(
                            kind="negative_rate", component=i, parent_config=u,
                            row=a, column=b,
                            message=(
                                f"negative rate q[{a},{b}] = {matrix[a, b]:.6g} "
                                f"(component {i}, parent config {u})"
                            ),
                        ))
                row_sum = float(matrix[a].sum())
                if abs(row_sum) > ROW_SUM_TOLERANCE:
                    report.add(ModelViolation(
                        kind="row_sum", component=i, parent_config=u, row=a,
                        message=(
                            f"row {a} sums to {row_sum:.6g} "
                            f"(component {i}, parent config {u})"
                        ),
                    ))

    for i, vector in enumerate(model.initial):
        d = model.state_sizes[i]
        if vector.shape != (d,):
            report.add(ModelViolation(
                kind="shape", component=i,
                message=f"component {i} initial vector has shape {vector.shape}, expected ({d},)",
            ))
            continue
        if (
            not np.all(np.isfinite(vector))
            or np.any(vector < 0)
            or abs(float(vector.sum()) - 1.0) > ROW_SUM_TOLERANCE
        ):
            report.add(ModelViolation(
                kind="initial", component=i,
                message=f"component {i} initial vector is not a distribution",
            ))

    if report.is_valid:
        logger.debug(f"Validated model with {M} components")
    return report


def parent_projection(model: CTBNModel, i: int, a: Sequence[int]) -> Tuple[int, ...]:
    """Restrict a joint state to the parents of component i (declared order)."""
    model.check_component(i)
    check_joint_state(model, a)
    return tuple(int(a[p]) for p in model.parents[i])


def markov_blanket(model: CTBNModel, i: int) -> Set[int]:
    """Parents, children and co-parents of component i."""
    model.check_component(i)
    graph = model.graph
    blanket = set(graph.predecessors(i)) | set(graph.successors(i))
    for child in graph.successors(i):
        blanket |= set(graph.predecessors(child))
    blanket.discard(i)
    return blanket


def check_joint_state(model: CTBNModel, a: Sequence[int]) -> None:
    if len(a) != model.num_components:
        raise NumericalInputError(
            f"joint state has length {len(a)}, expected {model.num_components}"
        )
    for i, (state, d) in enumerate(zip(a, model.state_sizes)):
        if not 0 <= int(state) < d:
            raise NumericalInputError(f"state {state} of component {i} out of range [0, {d})")


def joint_index(model: CTBNModel, a: Sequence[int]) -> int:
    """Row-major flat index of a joint state (component 0 most significant)."""
    check_joint_state(model, a)
    return int(np.ravel_multi_index(tuple(int(s) for s in a), tuple(model.state_sizes)))


def joint_state(model: CTBNModel, index: int) -> JointState:
    return tuple(int(s) for s in np.unravel_index(index, tuple(model.state_sizes)))


def joint_states_table(model: CTBNModel) -> np.ndarray:
    """All joint states as an (S, M) integer array in flat-index order."""
    S = model.joint_size
    return np.stack(np.unravel_index(np.arange(S), tuple(model.state_sizes)), axis=1)


def amalgamate(model: CTBNModel, cap: int = DEFAULT_STATE_SPACE_CAP) -> np.ndarray:
    """Joint rate matrix of the CTBN.

    Every component contributes its conditional row to the entries that
    differ from the source state in at most that component; diagonals
    accumulate the per-component diagonals.
    """
    S = model.joint_size
    if S > cap:
        raise StateSpaceTooLargeError(
            f"joint state space has {S} states, above the cap of {cap}"
        )

    sizes = np.asarray(model.state_sizes)
    strides = np.ones(model.num_components, dtype=np.int64)
    for i in range(model.num_components - 2, -1, -1):
        strides[i] = strides[i + 1] * sizes[i + 1]

    states = joint_states_table(model)
    flat = np.arange(S)
    Q = np.zeros((S, S))

    for i in range(model.num_components):
        d = model.state_sizes[i]
        if model.parents[i]:
            dims = tuple(model.state_sizes[p] for p in model.parents[i])
            configs = np.ravel_multi_index(tuple(states[:, p] for p in model.parents[i]), dims)
        else:
            configs = np.zeros(S, dtype=np.int64)
        rows = model.cims[i][configs, states[:, i], :]
        base = flat - states[:, i] * strides[i]
        for b in range(d):
            np.add.at(Q, (flat, base + b * strides[i]), rows[:, b])

    logger.debug(f"Amalgamated {model.num_components} components into {S} joint states")
    return Q
