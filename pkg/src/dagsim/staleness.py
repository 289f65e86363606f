"""Labeling of long-withheld blocks as stale.

A block is judged the first time it becomes reachable from a chain tip:
its age there is the parent-tree distance from the tip down to their
lowest common ancestor.  Strictly greater than the window ``p`` means
stale; at exactly ``p`` the block is still fresh.  Verdicts recorded at a
tip are inherited verbatim by every descendant tip, so the per-tip sets
are stored as shared layers: each block contributes only its newly judged
additions, and the cumulative set is reused unchanged whenever nothing was
added.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NotAnAncestor, NotInPast
from .store import BlockDag, BlockId


def lca(dag: BlockDag, a: BlockId, b: BlockId) -> BlockId:
    """Deepest block that is a parent-tree ancestor of both arguments."""
    return dag.id_at(dag.lca_ix(dag.index_of(a), dag.index_of(b)))


def distance(dag: BlockDag, descendant: BlockId, ancestor: BlockId) -> int:
    """Parent steps from ``descendant`` up to ``ancestor``; 0 iff equal."""
    dix = dag.index_of(descendant)
    aix = dag.index_of(ancestor)
    dd, da = dag.depth_of(dix), dag.depth_of(aix)
    if da > dd or dag.ancestor_at(dix, da) != aix:
        raise NotAnAncestor(f"{ancestor.hex()[:12]} not on the parent chain")
    return dd - da


@dataclass(frozen=True)
class StaleSet:
    tip: BlockId
    members: frozenset[BlockId]
    p: int


class StaleIndex:
    """Incremental stale bookkeeping for one dag and one window ``p``.

    ``new_stale(ix)`` lists the blocks first judged (and condemned) at
    block ``ix``; ``cum(ix)`` is the full stale set of ``ix`` as a shared
    frozenset.  Rows are built lazily in insertion order, so the index is
    cheap on mostly-honest dags where additions are rare.
    """

    def __init__(self, dag: BlockDag, p: int):
        if p < 1:
            raise ValueError("staleness window must be positive")
        self.dag = dag
        self.p = p
        self._new: list[tuple[int, ...]] = [()]
        self._cum: list[frozenset[int]] = [frozenset()]

    def _ensure(self, ix: int) -> None:
        dag = self.dag
        depth = dag._depth
        while len(self._new) <= ix:
            j = len(self._new)
            dj = depth[j]
            fresh_cut = dj - self.p  # ancestors above this depth mean stale
            added: list[int] = []
            for a in dag.delta_past_ix(j):
                if depth[dag.lca_ix(a, j)] < fresh_cut:
                    added.append(a)
            pix = dag.parent_index(j)
            base = self._cum[pix]
            self._new.append(tuple(added))
            self._cum.append(base | set(added) if added else base)

    def new_stale(self, ix: int) -> tuple[int, ...]:
        self._ensure(ix)
        return self._new[ix]

    def cum(self, ix: int) -> frozenset[int]:
        self._ensure(ix)
        return self._cum[ix]

    def is_stale_ix(self, target_ix: int, tip_ix: int) -> bool:
        return target_ix in self.cum(tip_ix)


def stale_index(dag: BlockDag, p: int) -> StaleIndex:
    """Shared per-dag index (append-only stores never invalidate it)."""
    idx = dag._stale_indexes.get(p)
    if idx is None:
        idx = StaleIndex(dag, p)
        dag._stale_indexes[p] = idx
    return idx


def stale_set(dag: BlockDag, tip: BlockId, p: int) -> StaleSet:
    """Stale set of ``tip``: genesis yields the empty set."""
    ix = dag.index_of(tip)
    members = stale_index(dag, p).cum(ix)
    return StaleSet(tip=tip, members=frozenset(dag.id_at(j) for j in members), p=p)


def is_stale(dag: BlockDag, tip: BlockId, bid: BlockId, p: int) -> bool:
    """Whether ``bid`` is stale with respect to ``tip``."""
    tix = dag.index_of(tip)
    bix = dag.index_of(bid)
    if not dag.in_past_ix(tix, bix):
        raise NotInPast(f"{bid.hex()[:12]} is not reachable from the tip")
    return stale_index(dag, p).is_stale_ix(bix, tix)
