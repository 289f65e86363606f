"""Total order over a block's past, evaluated as one chain.

A block's order extends its parent's order: walk the parent chain from
genesis and, at every chain step, splice in the blocks that became
reachable at that step (in depth-first visit order, references expanded in
their stored order), followed by the step's block itself.  The store
precomputes those per-block splices at insertion, so ordering any block is
a single chain walk with no recursion.
"""

from __future__ import annotations

from .errors import PrefixMismatch, UnknownBlock
from .store import BlockDag, BlockId


def order(dag: BlockDag, bid: BlockId) -> list[BlockId]:
    """Permutation of past(bid): genesis first, ``bid`` last.

    Every block appears after everything in its own past, and the order of
    a block's parent is always a strict prefix.
    """
    ix = dag.index_of(bid)
    chain: list[int] = []
    while ix >= 0:
        chain.append(ix)
        ix = dag.parent_index(ix)
    chain.reverse()

    ids = dag._ids
    out: list[BlockId] = [ids[chain[0]]]
    for step in chain[1:]:
        out.extend(ids[j] for j in dag.delta_past_ix(step))
        out.append(ids[step])
    return out


def order_incremental(dag: BlockDag, prev_order: list[BlockId], bid: BlockId) -> list[BlockId]:
    """Extend the parent's order to ``bid`` without recomputing the prefix.

    ``prev_order`` must be order(parent(bid)); cheap structural checks
    (length, endpoints) guard against passing the wrong list.
    """
    ix = dag.index_of(bid)
    pix = dag.parent_index(ix)
    if pix < 0:
        raise UnknownBlock("genesis has no parent order to extend")
    parent_id = dag.id_at(pix)
    if (
        not prev_order
        or prev_order[0] != dag.genesis
        or prev_order[-1] != parent_id
        or len(prev_order) != dag.past_size(pix)
    ):
        raise PrefixMismatch("previous order does not match the block's parent")

    ids = dag._ids
    out = list(prev_order)
    out.extend(ids[j] for j in dag.delta_past_ix(ix))
    out.append(bid)
    return out
