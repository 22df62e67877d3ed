"""Synthetic environments: deterministic GUI screen graphs and bandits.

Screen graphs model app navigation: screens connected by canonical actions,
each canonical action carrying several surface spellings (aliases).  Stepping
resolves a surface string to its canonical action; unknown or inapplicable
actions are harmless self-loops.  Goal/trap screens are absorbing with reward
+1/-1 on entry.  Environments clone cheaply and exactly, which is what the
snapshot positioning strategy relies on.

Fixture files are plain text, one section per bracketed header::

    [meta]        instruction <free text>
    [screens]     whitespace-separated screen ids
    [start]       single screen id
    [goals]       screen ids            [traps]  screen ids
    [edges]       <screen> <canonical> -> <screen>
    [aliases]     <canonical> = <surface> | <surface> | ...
    [values]      <screen> <float in [-1,1]>
    [policy]      <screen> <canonical> <weight>
    [proposer]    <key> <float>   (duplicate_rate, reflection_gain,
                                   infeasible_after)

'#' starts a comment.  Canonical ids must be lexical fixed points (lowercase,
no spaces); goal reachability from the start screen is checked at load.
"""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .expansion import NormalizationContext, lexical_key
from .judging import NOISE_KINDS, TWO_POINT, PredictorSpec, sample_outcome

TERMINAL_NONE = "none"
TERMINAL_SUCCESS = "success"
TERMINAL_FAILURE = "failure"

_FIXTURE_DIR = Path(__file__).parent / "fixtures"


class FixtureError(ValueError):
    pass


class EnvError(RuntimeError):
    pass


@dataclass(frozen=True)
class Observation:
    screen: str
    actions: tuple[str, ...]  # sorted surface strings available here
    terminal: str = TERMINAL_NONE


@dataclass(frozen=True)
class GuiGraphSpec:
    name: str
    screens: tuple[str, ...]
    start: str
    goals: frozenset[str]
    traps: frozenset[str]
    edges: Mapping[tuple[str, str], str]  # (screen, canonical) -> screen
    aliases: Mapping[str, tuple[str, ...]]  # canonical -> surface spellings
    values: Mapping[str, float]
    instruction: str = "reach the goal screen"
    policy: Mapping[str, tuple[tuple[str, float], ...]] = field(default_factory=dict)
    proposer_params: Mapping[str, float] = field(default_factory=dict)
    coord_bucket: int = 10

    def __post_init__(self):
        known = set(self.screens)
        if len(known) != len(self.screens):
            raise FixtureError("duplicate screen ids")
        if self.start not in known:
            raise FixtureError(f"unknown start screen {self.start!r}")
        for s in self.goals | self.traps:
            if s not in known:
                raise FixtureError(f"terminal screen {s!r} not declared")
        if self.goals & self.traps:
            raise FixtureError("goal and trap sets overlap")
        if not self.goals:
            raise FixtureError("fixture declares no goal screen")
        terminal = self.goals | self.traps
        for (src, canon), dst in self.edges.items():
            if src not in known or dst not in known:
                raise FixtureError(f"edge {src!r}-[{canon}]->{dst!r} off the map")
            if src in terminal:
                raise FixtureError(f"terminal screen {src!r} has outgoing edges")
            if lexical_key(canon, self.coord_bucket) != canon:
                raise FixtureError(f"canonical id {canon!r} is not normal form")
        edge_canons = {c for (_, c) in self.edges}
        for canon, surfaces in self.aliases.items():
            if canon not in edge_canons:
                raise FixtureError(f"alias for unused canonical {canon!r}")
            if not surfaces:
                raise FixtureError(f"empty alias list for {canon!r}")
        for screen, v in self.values.items():
            if screen not in known:
                raise FixtureError(f"value for unknown screen {screen!r}")
            if not -1.0 <= float(v) <= 1.0:
                raise FixtureError(f"screen value {v!r} outside [-1, 1]")
        for screen, entries in self.policy.items():
            if screen not in known:
                raise FixtureError(f"policy for unknown screen {screen!r}")
            for canon, w in entries:
                if (screen, canon) not in self.edges:
                    raise FixtureError(
                        f"policy action {canon!r} has no edge at {screen!r}")
                if not w > 0:
                    raise FixtureError("policy weights must be positive")
        object.__setattr__(self, "_out", self._build_out())
        object.__setattr__(self, "_resolver", self._build_resolver())
        object.__setattr__(self, "_obs_cache", self._build_obs())
        self._check_reachable()

    # derived tables -------------------------------------------------------

    def _build_out(self):
        out: dict[str, list[tuple[str, str]]] = {s: [] for s in self.screens}
        for (src, canon), dst in sorted(self.edges.items()):
            out[src].append((canon, dst))
        return {s: tuple(v) for s, v in out.items()}

    def _build_resolver(self):
        res: dict[str, str] = {}

        def put(surface: str, canon: str):
            for form in (surface, lexical_key(surface, self.coord_bucket)):
                prev = res.get(form)
                if prev is not None and prev != canon:
                    raise FixtureError(
                        f"surface {form!r} maps to both {prev!r} and {canon!r}")
                res[form] = canon

        for (_, canon) in self.edges:
            put(canon, canon)
        for canon, surfaces in self.aliases.items():
            for s in surfaces:
                put(s, canon)
        return res

    def _build_obs(self):
        cache = {}
        for screen in self.screens:
            surfaces: list[str] = []
            for canon, _ in self._out[screen]:
                forms = self.aliases.get(canon) or (canon,)
                surfaces.extend(forms)
            cache[screen] = Observation(screen, tuple(sorted(surfaces)),
                                        self.terminal_of(screen))
        return cache

    def _check_reachable(self):
        seen = {self.start}
        queue = deque([self.start])
        while queue:
            cur = queue.popleft()
            for _, dst in self._out[cur]:
                if dst not in seen:
                    seen.add(dst)
                    queue.append(dst)
        if not self.goals & seen:
            raise FixtureError(f"no goal reachable from {self.start!r}")

    # public helpers ---------------------------------------------------------

    def terminal_of(self, screen: str) -> str:
        if screen in self.goals:
            return TERMINAL_SUCCESS
        if screen in self.traps:
            return TERMINAL_FAILURE
        return TERMINAL_NONE

    def true_value(self, screen: str) -> float:
        return float(self.values.get(screen, 0.0))

    def resolve(self, action: str) -> str | None:
        """Surface string -> canonical action id, or None if unrecognized."""
        trimmed = action.strip()
        hit = self._resolver.get(trimmed)
        if hit is None:
            hit = self._resolver.get(lexical_key(trimmed, self.coord_bucket))
        return hit

    def observation(self, screen: str) -> Observation:
        return self._obs_cache[screen]

    def alias_context(self) -> NormalizationContext:
        """Normalization context whose alias map mirrors this fixture."""
        return NormalizationContext(alias_map=dict(self._resolver),
                                    coord_bucket=self.coord_bucket)

    def surfaces_of(self, canon: str) -> tuple[str, ...]:
        return self.aliases.get(canon) or (canon,)


class GuiGraphEnv:
    """Mutable cursor over a GuiGraphSpec.  Cloning copies the cursor; the
    spec itself is immutable and shared."""

    def __init__(self, spec: GuiGraphSpec, *, step_latency_s: float = 0.0):
        self.spec = spec
        self.step_latency_s = float(step_latency_s)
        self._screen = spec.start
        self._steps = 0

    @property
    def instruction(self) -> str:
        return self.spec.instruction

    @property
    def screen(self) -> str:
        return self._screen

    def state(self) -> tuple:
        return (self._screen, self._steps)

    def observe(self) -> Observation:
        return self.spec.observation(self._screen)

    def step(self, action: str) -> tuple[Observation, float]:
        if self.step_latency_s > 0:
            time.sleep(self.step_latency_s)
        self._steps += 1
        obs = self.observe()
        if obs.terminal != TERMINAL_NONE:
            return obs, 0.0  # absorbing
        canon = self.spec.resolve(action)
        if canon is None:
            return obs, 0.0  # unrecognized action: self-loop
        dst = self.spec.edges.get((self._screen, canon))
        if dst is None:
            return obs, 0.0  # recognized but inapplicable here: self-loop
        self._screen = dst
        new_obs = self.observe()
        if new_obs.terminal == TERMINAL_SUCCESS:
            return new_obs, 1.0
        if new_obs.terminal == TERMINAL_FAILURE:
            return new_obs, -1.0
        return new_obs, 0.0

    def clone(self) -> "GuiGraphEnv":
        dup = GuiGraphEnv(self.spec, step_latency_s=self.step_latency_s)
        dup._screen = self._screen
        dup._steps = self._steps
        return dup


# -- fixture file parsing -----------------------------------------------------


def _strip(line: str) -> str:
    if "#" in line:
        line = line[:line.index("#")]
    return line.strip()


def parse_fixture(text: str, name: str = "<string>") -> GuiGraphSpec:
    sections: dict[str, list[str]] = {}
    current = "meta"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            sections.setdefault(current, [])
            continue
        sections.setdefault(current, []).append(line)

    def single(section: str) -> str:
        lines = sections.get(section, [])
        if len(lines) != 1 or len(lines[0].split()) != 1:
            raise FixtureError(f"{name}: [{section}] needs exactly one id")
        return lines[0]

    screens: list[str] = []
    for line in sections.get("screens", []):
        screens.extend(line.split())
    goals = frozenset(t for line in sections.get("goals", []) for t in line.split())
    traps = frozenset(t for line in sections.get("traps", []) for t in line.split())

    edges: dict[tuple[str, str], str] = {}
    for line in sections.get("edges", []):
        parts = line.split()
        if len(parts) != 4 or parts[2] != "->":
            raise FixtureError(f"{name}: bad edge line {line!r}")
        src, canon, _, dst = parts
        if (src, canon) in edges:
            raise FixtureError(f"{name}: duplicate edge {src} {canon}")
        edges[(src, canon)] = dst

    aliases: dict[str, tuple[str, ...]] = {}
    for line in sections.get("aliases", []):
        if "=" not in line:
            raise FixtureError(f"{name}: bad alias line {line!r}")
        canon, rest = line.split("=", 1)
        canon = canon.strip()
        surfaces = tuple(s.strip() for s in rest.split("|") if s.strip())
        if canon in aliases:
            raise FixtureError(f"{name}: duplicate alias block for {canon!r}")
        aliases[canon] = surfaces

    values: dict[str, float] = {}
    for line in sections.get("values", []):
        parts = line.split()
        if len(parts) != 2:
            raise FixtureError(f"{name}: bad value line {line!r}")
        values[parts[0]] = float(parts[1])

    policy: dict[str, list[tuple[str, float]]] = {}
    for line in sections.get("policy", []):
        parts = line.split()
        if len(parts) != 3:
            raise FixtureError(f"{name}: bad policy line {line!r}")
        policy.setdefault(parts[0], []).append((parts[1], float(parts[2])))

    params: dict[str, float] = {}
    for line in sections.get("proposer", []):
        parts = line.split()
        if len(parts) != 2:
            raise FixtureError(f"{name}: bad proposer line {line!r}")
        params[parts[0]] = float(parts[1])

    instruction = "reach the goal screen"
    for line in sections.get("meta", []):
        key, _, rest = line.partition(" ")
        if key == "instruction" and rest.strip():
            instruction = rest.strip()

    return GuiGraphSpec(
        name=name, screens=tuple(screens), start=single("start"),
        goals=goals, traps=traps, edges=edges, aliases=aliases,
        values=values, instruction=instruction,
        policy={s: tuple(v) for s, v in policy.items()},
        proposer_params=params)


def builtin_fixtures() -> tuple[str, ...]:
    return tuple(sorted(p.stem for p in _FIXTURE_DIR.glob("*.env")))


def load_fixture(name: str) -> GuiGraphSpec:
    """Load a built-in fixture by name, or any fixture file by path."""
    path = Path(name)
    if not path.suffix:
        path = _FIXTURE_DIR / f"{name}.env"
    if not path.exists():
        raise FixtureError(f"no fixture {name!r} (builtins: "
                           f"{', '.join(builtin_fixtures())})")
    return parse_fixture(path.read_text(), name=path.stem)


# -- bandit family ------------------------------------------------------------


@dataclass(frozen=True)
class BanditSpec:
    """K-armed bandit whose pulls decompose as prediction + bounded residual.

    Rewards live in [0, 1] by construction (checked against the noise support
    at the blind rho = 1 width, so tightening rho never violates the bound).
    """

    means: tuple[float, ...]
    sigma_x2: float = 0.0
    rho: float = 1.0
    noise: str = TWO_POINT
    seed: int = 0

    def __post_init__(self):
        if not self.means:
            raise ValueError("bandit needs at least one arm")
        if self.noise not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.noise!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must be in [0, 1]")
        if self.sigma_x2 < 0:
            raise ValueError("sigma_x2 must be >= 0")
        best = max(self.means)
        if sum(1 for m in self.means if m == best) != 1:
            raise ValueError("bandit needs a unique best arm")
        s = math.sqrt(self.sigma_x2)
        half = s if self.noise == TWO_POINT else s * math.sqrt(3.0)
        for m in self.means:
            if m - half < 0.0 or m + half > 1.0:
                raise ValueError(
                    f"arm mean {m} with noise half-width {half:.4f} leaves [0, 1]")

    @property
    def k(self) -> int:
        return len(self.means)

    @property
    def best_arm(self) -> int:
        return max(range(self.k), key=lambda i: self.means[i])

    @property
    def residual_var(self) -> float:
        return self.rho * self.sigma_x2

    @property
    def gaps(self) -> tuple[float, ...]:
        """Positive gaps of the suboptimal arms, in arm order."""
        best = self.means[self.best_arm]
        return tuple(best - m for m in self.means if best - m > 0)

    @property
    def all_gaps(self) -> tuple[float, ...]:
        best = self.means[self.best_arm]
        return tuple(best - m for m in self.means)

    def predictor(self) -> PredictorSpec:
        return PredictorSpec(rho=self.rho, sigma_x2=self.sigma_x2,
                             noise=self.noise, seed=self.seed)


def bandit_pull(spec: BanditSpec, arm: int, rng) -> tuple[float, float]:
    """(prediction, reward) for one pull.  Consumes exactly one uniform draw
    from ``rng`` whatever the arm, so pull streams depend only on pull order."""
    if not 0 <= arm < spec.k:
        raise ValueError(f"arm {arm} out of range")
    return sample_outcome(spec.predictor(), spec.means[arm], rng)
