"""
Vote-based aggregation.

Each round every vertex receives, through one semiring product with the
filtered strength matrix, the most attractive neighbor: a Seed beats an
Undecided vertex, which beats a Decided one; among equals the stronger
connection wins and then the smaller vertex id. An Undecided vertex that
hears from a Seed joins it; one that hears from an Undecided neighbor
votes for that neighbor. Votes accumulate across rounds and an Undecided
vertex with enough votes becomes a Seed. Seeds and Decided vertices never
change again. The strength filter halves every round.

After the last round each seed defines one aggregate; leftover
Undecided vertices become singletons. Aggregates are numbered by
ascending seed id. Restriction is the 0/1 membership matrix R and
prolongation is P = R^T.
"""

import logging
from enum import IntEnum
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from src.errors import DimensionMismatchError
from src.laplacian import enforce_zero_row_sums
from src.sparse_core import BlockLayout, Semiring, reduce_by_key, spgemm, spmv_semiring

logger = logging.getLogger(__name__)

DEFAULT_VOTE_THRESHOLD = 8
DEFAULT_VOTING_ROUNDS = 10
DEFAULT_FILTER_BASE = 0.5


class State(IntEnum):
    """Aggregation state; larger values are more attractive."""
    DECIDED = 0
    UNDECIDED = 1
    SEED = 2


STATUS_DTYPE = np.dtype([("state", np.int8), ("index", np.int64)])
MESSAGE_DTYPE = np.dtype([("state", np.int8), ("index", np.int64), ("weight", np.float64)])
NULL_MESSAGE = (int(State.DECIDED), -1, 0.0)


class VertexStatus(NamedTuple):
    state: State
    index: int


class AggMessage(NamedTuple):
    state: State
    index: int
    weight: float


class Assignment(NamedTuple):
    """``agg_of[i]`` is the aggregate of vertex i; ``seed_of[a]`` the seed of aggregate a."""
    agg_of: np.ndarray
    seed_of: np.ndarray

    @property
    def num_aggregates(self) -> int:
        return int(self.seed_of.size)


def initial_status(n: int) -> np.ndarray:
    status = np.empty(n, dtype=STATUS_DTYPE)
    status["state"] = State.UNDECIDED
    status["index"] = np.arange(n)
    return status


def status_at(status: np.ndarray, i: int) -> VertexStatus:
    return VertexStatus(State(int(status["state"][i])), int(status["index"][i]))


def message_at(messages: np.ndarray, i: int) -> AggMessage:
    m = messages[i]
    return AggMessage(State(int(m["state"])), int(m["index"]), float(m["weight"]))


def _combine(s: np.ndarray, status: np.ndarray) -> np.ndarray:
    out = np.empty(s.size, dtype=MESSAGE_DTYPE)
    out["state"] = status["state"]
    out["index"] = status["index"]
    out["weight"] = s
    empty = s == 0
    if empty.any():
        out[empty] = NULL_MESSAGE
    return out


def _prefer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    valid_a = a["index"] >= 0
    valid_b = b["index"] >= 0
    a_wins = (a["state"] > b["state"]) | (
        (a["state"] == b["state"])
        & (
            (a["weight"] > b["weight"])
            | (
                (a["weight"] == b["weight"])
                & ((valid_a & ~valid_b) | (valid_a & valid_b & (a["index"] < b["index"])))
            )
        )
    )
    out = b.copy()
    out[a_wins] = a[a_wins]
    return out


AGGREGATION_SEMIRING = Semiring(
    "aggregation",
    multiply=_combine,
    add=_prefer,
    identity=NULL_MESSAGE,
    dtype=MESSAGE_DTYPE,
)


def filter_strength(S: sp.spmatrix, factor: float) -> sp.csr_matrix:
    """Drop entries below ``factor``."""
    if not 0 < factor <= 1:
        raise ValueError(f"filter factor must lie in (0, 1], got {factor}")
    S = sp.csr_matrix(S, copy=True)
    S.data[S.data < factor] = 0.0
    S.eliminate_zeros()
    return S


def aggregation_step(
    S_filt: sp.spmatrix,
    status: np.ndarray,
    votes: np.ndarray,
    threshold: int = DEFAULT_VOTE_THRESHOLD,
    layout: BlockLayout | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One voting round; returns new ``(status, votes)`` arrays."""
    n = S_filt.shape[0]
    if status.shape[0] != n or votes.shape[0] != n:
        raise DimensionMismatchError(f"status/votes of length {status.shape[0]}/{votes.shape[0]} "
                                     f"for {n} vertices")
    D = (layout or BlockLayout()).partition(S_filt)
    d = spmv_semiring(D, status, AGGREGATION_SEMIRING)

    undecided = status["state"] == State.UNDECIDED
    new_status = status.copy()

    joins = undecided & (d["state"] == State.SEED) & (d["index"] >= 0)
    new_status["state"][joins] = State.DECIDED
    new_status["index"][joins] = d["index"][joins]

    voters = undecided & (d["state"] == State.UNDECIDED) & (d["index"] >= 0)
    tally = reduce_by_key(d["index"][voters], np.ones(int(voters.sum()), dtype=np.int64),
                          np.add, 0, n)
    new_votes = votes + tally

    promote = (new_status["state"] == State.UNDECIDED) & (new_votes >= threshold)
    new_status["state"][promote] = State.SEED
    new_status["index"][promote] = np.flatnonzero(promote)
    return new_status, new_votes


def aggregate(
    S: sp.spmatrix,
    rounds: int = DEFAULT_VOTING_ROUNDS,
    threshold: int = DEFAULT_VOTE_THRESHOLD,
    layout: BlockLayout | None = None,
) -> Assignment:
    """Run the voting rounds and convert the final status into aggregates."""
    S = sp.csr_matrix(S)
    n = S.shape[0]
    status = initial_status(n)
    votes = np.zeros(n, dtype=np.int64)

    for iteration in range(1, rounds + 1):
        S_filt = filter_strength(S, DEFAULT_FILTER_BASE ** iteration)
        status, votes = aggregation_step(S_filt, status, votes, threshold, layout)
        logger.debug(
            f"Voting round {iteration}: "
            f"{int((status['state'] == State.SEED).sum())} seeds, "
            f"{int((status['state'] == State.UNDECIDED).sum())} undecided"
        )

    roots = np.where(status["state"] == State.DECIDED, status["index"], np.arange(n))
    seed_of, agg_of = np.unique(roots, return_inverse=True)
    return Assignment(agg_of.astype(np.int64), seed_of.astype(np.int64))


def build_restriction(a: Assignment) -> sp.csr_matrix:
    """m x n membership matrix with one unit entry per column."""
    n = a.agg_of.size
    return sp.csr_matrix(
        (np.ones(n), (a.agg_of, np.arange(n))), shape=(a.num_aggregates, n)
    )


def galerkin_coarse(R: sp.spmatrix, L: sp.spmatrix, P: sp.spmatrix) -> sp.csr_matrix:
    """R L P, symmetrized, with the diagonal reset to restore zero row sums."""
    if R.shape[1] != L.shape[0] or L.shape[1] != P.shape[0]:
        raise DimensionMismatchError(f"cannot form R L P from {R.shape}, {L.shape}, {P.shape}")
    coarse = spgemm(spgemm(R, L), P)
    coarse = 0.5 * (coarse + coarse.T)
    return enforce_zero_row_sums(coarse)
