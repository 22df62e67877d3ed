"""Candidate expansion with normalized-key deduplication.

Surface action strings are noisy: the same underlying operation shows up with
different casing, spacing, jittered coordinates, or as a free-text alias.  A
normalization key collapses these so sibling slots are spent on genuinely
distinct operations; the effective branching factor of a node is however many
distinct keys survive among the proposals, never more than the proposal
budget.
"""
from __future__ import annotations

import math
import re
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .tree import ActionChunk, SearchTree, TreeError

CHUNK_SEP = ";"

_CALL_RE = re.compile(r"^([A-Za-z_][\w.-]*)\s*\((.*)\)$", re.S)
_NUM_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)$")


@dataclass(frozen=True)
class NormalizationContext:
    """Alias table (exact surface or lexical-key matches) plus lexical knobs."""

    alias_map: Mapping[str, str] | None = None
    coord_bucket: int = 10

    def __post_init__(self):
        if self.coord_bucket < 1:
            raise ValueError("coord_bucket must be >= 1")


def _bucket(x: float, width: int) -> str:
    v = int(math.floor(x / width + 0.5)) * width
    return str(v)


def _split_args(argstr: str) -> list[str]:
    """Split on top-level commas, respecting single/double quotes."""
    args, buf, quote = [], [], None
    for ch in argstr:
        if quote:
            buf.append(ch)
            if ch == quote:
                quote = None
        elif ch in "'\"":
            buf.append(ch)
            quote = ch
        elif ch == ",":
            args.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    if buf or args:
        args.append("".join(buf))
    return args


def lexical_key(action: str, coord_bucket: int = 10) -> str:
    """Case/spacing/coordinate-insensitive form of one action string.

    ``name(args)`` calls get a lowercased name, numeric args snapped to the
    nearest ``coord_bucket`` multiple, and quote style unified; anything that
    does not parse as a call is lowercased with whitespace collapsed (never an
    error).
    """
    s = " ".join(action.split())
    m = _CALL_RE.match(s)
    if not m:
        return s.lower()
    name = m.group(1).lower()
    out = []
    for arg in _split_args(m.group(2)):
        a = arg.strip()
        if _NUM_RE.match(a):
            out.append(_bucket(float(a), coord_bucket))
        elif len(a) >= 2 and a[0] == a[-1] and a[0] in "'\"":
            out.append("'" + a[1:-1] + "'")
        else:
            out.append(a)
    return f"{name}({','.join(out)})"


def normalize_action(action: str, ctx: NormalizationContext) -> str:
    """Normalized key for a surface action string.

    The alias map wins over lexical rules: an exact surface match is checked
    first, then the lexical key is looked up (catching spacing/jitter variants
    of a listed alias), then the lexical key itself is the answer.  Canonical
    ids are lexical fixed points, so the map is idempotent by construction.
    """
    trimmed = action.strip()
    if not trimmed:
        raise ValueError("empty action string")
    key = lexical_key(trimmed, ctx.coord_bucket)
    if ctx.alias_map is not None:
        hit = ctx.alias_map.get(trimmed)
        if hit is None:
            hit = ctx.alias_map.get(key)
        if hit is not None:
            return hit
    return key


def chunk_key(atoms: Sequence[str], ctx: NormalizationContext) -> str:
    if not atoms:
        raise ValueError("empty atom sequence")
    return CHUNK_SEP.join(normalize_action(a, ctx) for a in atoms)


def make_chunk(atoms: Sequence[str], ctx: NormalizationContext) -> ActionChunk:
    return ActionChunk(tuple(atoms), chunk_key(atoms, ctx))


def admit_candidates(candidates: Iterable[ActionChunk | Sequence[str]],
                     ctx: NormalizationContext) -> list[ActionChunk]:
    """First-come admission: a candidate enters iff its normalized key is new
    among the already-admitted set.  Order-preserving and prefix-stable."""
    admitted: list[ActionChunk] = []
    seen: set[str] = set()
    for cand in candidates:
        chunk = cand if isinstance(cand, ActionChunk) else make_chunk(tuple(cand), ctx)
        if chunk.norm_key not in seen:
            seen.add(chunk.norm_key)
            admitted.append(chunk)
    return admitted


def _roll_candidate(env, proposer, head: str, slot: int, *, reflection,
                    iteration: int, leaf: int, chunk_size: int):
    """Play out one candidate: step the head action, then keep proposing and
    stepping on the clone until the chunk is full or the episode ends."""
    clone = env.clone()
    atoms: list[str] = []
    action = head
    for step in range(chunk_size):
        obs = clone.observe()
        if obs.terminal != "none":
            break
        if step > 0:
            tail = proposer.propose(obs.screen, reflection, 1,
                                    iteration=iteration, leaf=leaf,
                                    slot=(slot, step))
            if not tail:
                break
            action = tail[0]
        clone.step(action)
        atoms.append(action)
    return atoms, clone


def expand_node(tree: SearchTree, leaf: int, proposer, env, ctx: NormalizationContext,
                k: int, chunk_size: int, *, reflection=None, iteration: int = 0,
                env_pool: Executor | None = None,
                keep_snapshots: bool = True) -> list[tuple[int, object]]:
    """Propose ``k`` candidate chunks at ``env`` (positioned at ``leaf``),
    dedup whole chunks by normalized key, and add one child per admitted
    chunk.  Children are added unscored; the caller judges the sibling set
    next.  Returns ``[(child_id, observation), ...]`` in admission order.
    """
    if k < 1:
        raise ValueError("proposal budget must be >= 1")
    if chunk_size < 1:
        raise ValueError("chunk size must be >= 1")
    obs0 = env.observe()
    if obs0.terminal != "none":
        raise TreeError(f"cannot expand terminal node {leaf}")
    heads = proposer.propose(obs0.screen, reflection, k,
                             iteration=iteration, leaf=leaf)
    if env_pool is not None:
        futs = [env_pool.submit(_roll_candidate, env, proposer, head, j,
                                reflection=reflection, iteration=iteration,
                                leaf=leaf, chunk_size=chunk_size)
                for j, head in enumerate(heads)]
        rolled = [f.result() for f in futs]
    else:
        rolled = [_roll_candidate(env, proposer, head, j, reflection=reflection,
                                  iteration=iteration, leaf=leaf,
                                  chunk_size=chunk_size)
                  for j, head in enumerate(heads)]
    out: list[tuple[int, object]] = []
    seen: set[str] = set()
    for atoms, clone in rolled:
        if not atoms:
            continue
        chunk = make_chunk(atoms, ctx)
        if chunk.norm_key in seen:
            continue
        seen.add(chunk.norm_key)
        obs = clone.observe()
        child = tree.add_child(leaf, chunk,
                               state_ref=clone if keep_snapshots else None,
                               obs=obs, terminal=obs.terminal)
        out.append((child, obs))
    return out
