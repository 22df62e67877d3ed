"""The search loop: select, expand, judge sibling sets, back up.

Each iteration selects a leaf, positions an environment there (stored
snapshot or replay from the root), expands it into deduplicated candidate
chunks, judges the new sibling set in one comparative call (or per-sibling
independent calls under ablation), and backs every judged value up the root
path.  The previous iteration's best trajectory is distilled into a
*reflection* that biases the next iteration's proposals.

Two thread pools (optional) hide simulated latency: one for candidate
rollouts (environment work), one for per-sibling judge preparation.  All
randomness is keyed by logical call indexes, so parallel runs are
bit-identical to serial ones.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from contextlib import ExitStack
from dataclasses import dataclass, field
from typing import Mapping

from .backup import MAX, MODES, backpropagate, q_for_selection
from .expansion import expand_node
from .judging import (COMPARATIVE, JUDGE_MODES, JudgeFailure,
                      judge_comparative, judge_independent_set)
from .proposer import TaskInfeasible
from .selection import ALPHA_UCT, KINDS, SelectionPolicy, select_leaf
from .tree import ROOT, ActionChunk, SearchTree

SNAPSHOT = "snapshot"
REPLAY = "replay"
STATE_STRATEGIES = (SNAPSHOT, REPLAY)

OUTCOME_SUCCESS = "success"
OUTCOME_BUDGET = "budget_exhausted"
OUTCOME_INFEASIBLE = "infeasible"


class ReplayDivergence(RuntimeError):
    """Replay positioning reached a different observation than recorded."""


class StateError(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    c: float = 1.0
    expansion_factor: int = 5
    max_iterations: int = 20
    chunk_size: int = 1
    max_depth: int = 12
    backup: str = MAX
    judge_mode: str = COMPARATIVE
    selection: str = ALPHA_UCT
    state_strategy: str = SNAPSHOT
    parallel_actions: int = 0
    parallel_envs: int = 0
    seed: int = 0
    log_events: bool = True

    def validate(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.expansion_factor < 1:
            raise ValueError("expansion_factor must be >= 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not self.c >= 0:
            raise ValueError("exploration constant must be >= 0")
        if self.backup not in MODES:
            raise ValueError(f"unknown backup mode {self.backup!r}")
        if self.judge_mode not in JUDGE_MODES:
            raise ValueError(f"unknown judge mode {self.judge_mode!r}")
        if self.selection not in KINDS:
            raise ValueError(f"unknown selection rule {self.selection!r}")
        if self.state_strategy not in STATE_STRATEGIES:
            raise ValueError(f"unknown state strategy {self.state_strategy!r}")
        if self.parallel_actions < 0 or self.parallel_envs < 0:
            raise ValueError("parallelism degrees must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


@dataclass(frozen=True)
class TrajectoryStep:
    chunk: ActionChunk
    screen: str
    q: float


@dataclass(frozen=True)
class TrajectoryRecord:
    iteration: int
    steps: tuple[TrajectoryStep, ...]
    terminal: str


@dataclass(frozen=True)
class Reflection:
    """Proposal-bias payload distilled from an earlier trajectory.

    ``boost`` maps normalized atom keys to emphasis in [0, 1]; ``rho`` is the
    value-prediction residual fraction credited to this reflection (smaller =
    sharper memory of what worked).
    """

    source_iteration: int
    boost: Mapping[str, float] = field(default_factory=dict)
    rho: float = 1.0


@dataclass(frozen=True)
class ReflectorSpec:
    q_threshold: float = 0.0  # trajectory steps with q above this get boosted
    rho0: float = 1.0
    rho_decay: float = 0.8
    rho_min: float = 0.05

    def rho_at(self, iteration: int) -> float:
        return max(self.rho_min, self.rho0 * self.rho_decay ** max(0, iteration - 1))


class SimReflector:
    """Boosts the normalized atom keys of high-value steps from the previous
    iteration's trajectory; emits an empty reflection for the first."""

    def __init__(self, spec: ReflectorSpec | None = None):
        self.spec = spec or ReflectorSpec()

    def reflect(self, prev: TrajectoryRecord | None, instruction: str,
                iteration: int) -> Reflection:
        rho = self.spec.rho_at(iteration)
        if prev is None:
            return Reflection(source_iteration=0, boost={}, rho=rho)
        if prev.iteration >= iteration:
            raise ValueError("reflection must come from an earlier iteration")
        boost: dict[str, float] = {}
        for step in prev.steps:
            if step.q >= self.spec.q_threshold:
                emphasis = max(0.0, min(1.0, step.q))
                for key in step.chunk.norm_key.split(";"):
                    boost[key] = max(boost.get(key, 0.0), emphasis)
        return Reflection(source_iteration=prev.iteration, boost=boost, rho=rho)


@dataclass
class SearchResult:
    outcome: str
    best_path: tuple[ActionChunk, ...]
    iterations: int
    tree: SearchTree
    trace: tuple[str, ...]
    success_node: int | None = None


def position_env(tree: SearchTree, node_id: int, strategy: str):
    """Fresh environment clone positioned at ``node_id``.

    Snapshot strategy clones the state stored on the node; replay re-executes
    the root-to-node atom sequence on a clone of the root state and hard-fails
    if the reached observation differs from the recorded one.
    """
    if strategy not in STATE_STRATEGIES:
        raise ValueError(f"unknown state strategy {strategy!r}")
    rec = tree.node(node_id)
    if strategy == SNAPSHOT:
        if rec.state_ref is None:
            raise StateError(f"node {node_id} carries no snapshot")
        return rec.state_ref.clone()
    root_state = tree.node(ROOT).state_ref
    if root_state is None:
        raise StateError("replay positioning needs the root snapshot")
    env = root_state.clone()
    for nid in tree.path_to_root(node_id)[1:]:
        for atom in tree.nodes[nid].action.atoms:
            env.step(atom)
        expected = tree.nodes[nid].obs
        if expected is not None and env.observe() != expected:
            raise ReplayDivergence(
                f"replaying to node {nid} reached {env.observe()!r}, "
                f"recorded {expected!r}")
    return env


def extract_best_path(tree: SearchTree) -> tuple[ActionChunk, ...]:
    """Greedy max-value descent from the root; ties to the earliest child."""
    path: list[ActionChunk] = []
    node = ROOT
    while True:
        kids = tree.node(node).children
        scored = [cid for cid in kids if tree.nodes[cid].q_max is not None]
        if not scored:
            break
        best = max(scored, key=lambda cid: tree.nodes[cid].q_max)
        path.append(tree.nodes[best].action)
        node = best
    return tuple(path)


def _fmt_scores(scores) -> str:
    return "[" + ",".join(repr(float(s)) for s in scores) + "]"


def run_search(env, proposer, judge, reflector, config: SearchConfig) -> SearchResult:
    """Run the full loop against ``env`` from its current state.

    ``env`` itself is never mutated: iterations work on positioned clones.
    Trace lines (one per iteration plus a closing ``stop`` line) are part of
    the result and documented in the README.
    """
    config.validate()
    ctx = proposer.ctx
    policy = SelectionPolicy(kind=config.selection, c=config.c,
                             value_mode=config.backup)
    tree = SearchTree(root_state=env.clone(), root_obs=env.observe(),
                      track_mean=(config.backup == "mean"),
                      log_events=config.log_events)
    trace: list[str] = []
    prev_traj: TrajectoryRecord | None = None
    outcome = OUTCOME_BUDGET
    success_node: int | None = None
    iterations = 0

    with ExitStack() as stack:
        env_pool = action_pool = None
        if config.parallel_envs > 0:
            env_pool = stack.enter_context(
                ThreadPoolExecutor(max_workers=config.parallel_envs))
        if config.parallel_actions > 0:
            action_pool = stack.enter_context(
                ThreadPoolExecutor(max_workers=config.parallel_actions))

        for it in range(1, config.max_iterations + 1):
            iterations = it
            leaf = select_leaf(tree, policy)
            rec = tree.node(leaf)
            if rec.terminal != "none" or rec.depth >= config.max_depth:
                # unexpandable: re-assert its value so selection statistics
                # move and the visit bonus can steer the walk elsewhere
                if rec.init_value is None:
                    trace.append(f"iter={it} kind=revisit leaf={leaf} "
                                 f"depth={rec.depth}")
                    continue
                v = q_for_selection(tree, leaf, config.backup)
                backpropagate(tree, leaf, v, config.backup, iteration=it)
                trace.append(f"iter={it} kind=revisit leaf={leaf} "
                             f"depth={rec.depth} value={v!r}")
                continue
            positioned = position_env(tree, leaf, config.state_strategy)
            reflection = (reflector.reflect(prev_traj, env.instruction, it)
                          if reflector is not None else None)
            try:
                pairs = expand_node(
                    tree, leaf, proposer, positioned, ctx,
                    config.expansion_factor, config.chunk_size,
                    reflection=reflection, iteration=it, env_pool=env_pool,
                    keep_snapshots=(config.state_strategy == SNAPSHOT))
            except TaskInfeasible:
                outcome = OUTCOME_INFEASIBLE
                trace.append(f"iter={it} kind=stop outcome=infeasible leaf={leaf}")
                break
            if not pairs:
                # nothing admissible from here, ever: the proposer draw was
                # empty, so treat the node as a dead end from now on
                tree.mark_exhausted(leaf)
                if rec.init_value is None:
                    trace.append(f"iter={it} kind=stalled leaf={leaf}")
                    continue
                v = q_for_selection(tree, leaf, config.backup)
                backpropagate(tree, leaf, v, config.backup, iteration=it)
                trace.append(f"iter={it} kind=stalled leaf={leaf} value={v!r}")
                continue

            siblings = [(tree.nodes[cid].action, obs) for cid, obs in pairs]
            judge_fn = (judge_comparative if config.judge_mode == COMPARATIVE
                        else judge_independent_set)
            try:
                result = judge_fn(rec.obs, siblings, env.instruction, judge,
                                  call_key=(it,), pool=action_pool)
            except JudgeFailure:
                # abort the iteration: drop the unscored children so the
                # leaf stays expandable and a later iteration retries fresh
                tree.remove_tail([cid for cid, _ in pairs])
                trace.append(f"iter={it} kind=judge_failed leaf={leaf} "
                             f"dropped={len(pairs)}")
                continue
            for (cid, _), score in zip(pairs, result.scores):
                tree.set_init_value(cid, score)
            for (cid, _), score in zip(pairs, result.scores):
                backpropagate(tree, cid, tree.nodes[cid].init_value,
                              config.backup, iteration=it)
            child_ids = [cid for cid, _ in pairs]
            trace.append(
                f"iter={it} kind=expand leaf={leaf} depth={rec.depth} "
                f"b*={len(pairs)} children={child_ids} "
                f"scores={_fmt_scores(result.scores)} backup={config.backup}")

            best_idx = max(range(len(pairs)),
                           key=lambda i: result.scores[i])
            steps = []
            for nid in tree.path_to_root(leaf)[1:] + [pairs[best_idx][0]]:
                nrec = tree.nodes[nid]
                steps.append(TrajectoryStep(
                    chunk=nrec.action, screen=getattr(nrec.obs, "screen", ""),
                    q=q_for_selection(tree, nid, config.backup)))
            prev_traj = TrajectoryRecord(
                iteration=it, steps=tuple(steps),
                terminal=pairs[best_idx][1].terminal)

            winners = [cid for cid, obs in pairs if obs.terminal == "success"]
            if winners:
                outcome = OUTCOME_SUCCESS
                success_node = winners[0]
                trace.append(f"iter={it} kind=stop outcome=success "
                             f"node={success_node}")
                break
        else:
            trace.append(f"iter={iterations} kind=stop outcome=budget_exhausted")

    return SearchResult(outcome=outcome, best_path=extract_best_path(tree),
                        iterations=iterations, tree=tree, trace=tuple(trace),
                        success_node=success_node)
