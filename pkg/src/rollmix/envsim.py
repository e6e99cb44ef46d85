"""Toy partially observable environments that emit valid populations.

Hidden states map onto similarity classes through an observation
function; states sharing an observation expose the same action set, so
an agent acting on observations alone is well defined.  Rollouts record
the observed class of every visited state under a globally fresh tag,
and every rollout ends on a fresh terminal label, which makes any
collection of simulated rollouts a valid population by construction.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .model import (
    ActionLabel,
    ClassId,
    Population,
    Rollout,
    StateTag,
    TaggedState,
    TerminalLabel,
    validate_population,
)

_LETTERS = "abcdefghijklmnopqrstuvwxyz"

CAP_TERMINAL_PREFIX = "cap"


class InvalidConfig(Exception):
    pass


@dataclass(frozen=True)
class SimConfig:
    """Knobs for random environment construction and rollout generation."""

    n_states: int
    n_observations: int
    n_actions: int
    max_branching: int
    depth_cap: int
    payoff_range: tuple[int, int]
    rollouts: int
    seed: int
    cap_payoff: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        counts = (
            self.n_states,
            self.n_observations,
            self.n_actions,
            self.max_branching,
            self.depth_cap,
            self.rollouts,
        )
        if any(c < 1 for c in counts):
            raise InvalidConfig("all counts must be positive")
        if self.n_observations > self.n_states:
            raise InvalidConfig("cannot have more observations than states")
        if self.payoff_range[0] > self.payoff_range[1]:
            raise InvalidConfig("payoff range is inverted")


@dataclass(frozen=True)
class Transition:
    """Categorical successor distribution plus a termination probability."""

    successors: tuple[int, ...]
    probabilities: tuple[float, ...]
    termination: float


@dataclass(frozen=True)
class EnvModel:
    """Hidden dynamics: observation map, per-class action sets, kernel."""

    n_states: int
    observation: tuple[ClassId, ...]  # state -> similarity class (1-based)
    class_actions: Mapping[ClassId, tuple[ActionLabel, ...]]
    transitions: Mapping[tuple[int, ActionLabel], Transition]
    payoff_range: tuple[int, int]
    cap_payoff: Fraction
    depth_cap: int
    seed: int
    root_state: int = 0

    def observe(self, state: int) -> ClassId:
        return self.observation[state]

    def actions_at(self, state: int) -> tuple[ActionLabel, ...]:
        return self.class_actions[self.observe(state)]

    @property
    def root_actions(self) -> tuple[ActionLabel, ...]:
        return self.actions_at(self.root_state)


def action_names(n: int) -> tuple[ActionLabel, ...]:
    return tuple(f"act{i}" for i in range(1, n + 1))


def make_random_pomdp(cfg: SimConfig, rng: random.Random | None = None) -> EnvModel:
    """Draw a random environment honouring the observation-map constraints.

    Every observation class receives at least one state and a nonempty
    action set shared by all its states; every (state, action) can
    terminate immediately with positive probability, so termination is
    always reachable within any depth cap.
    """
    rng = rng if rng is not None else random.Random(cfg.seed)
    # Onto observation map: first one state per class, then the rest at random.
    assignment = list(range(1, cfg.n_observations + 1))
    assignment += [rng.randint(1, cfg.n_observations) for _ in range(cfg.n_states - cfg.n_observations)]
    rng.shuffle(assignment)
    observation = tuple(assignment)

    alphabet = action_names(cfg.n_actions)
    class_actions: dict[ClassId, tuple[ActionLabel, ...]] = {}
    for cls in range(1, cfg.n_observations + 1):
        k = rng.randint(1, cfg.n_actions)
        class_actions[cls] = tuple(sorted(rng.sample(alphabet, k)))

    transitions: dict[tuple[int, ActionLabel], Transition] = {}
    for s in range(cfg.n_states):
        for a in class_actions[observation[s]]:
            branch = rng.randint(1, cfg.max_branching)
            succ = tuple(rng.sample(range(cfg.n_states), min(branch, cfg.n_states)))
            raw = [rng.random() + 0.05 for _ in succ]
            term = rng.uniform(0.1, 0.5)
            scale = (1.0 - term) / sum(raw)
            probs = tuple(w * scale for w in raw)
            transitions[(s, a)] = Transition(succ, probs, term)

    return EnvModel(
        n_states=cfg.n_states,
        observation=observation,
        class_actions=class_actions,
        transitions=transitions,
        payoff_range=cfg.payoff_range,
        cap_payoff=cfg.cap_payoff,
        depth_cap=cfg.depth_cap,
        seed=cfg.seed,
    )


class TagAllocator:
    """Globally unique occurrence tags rendered as letter strings.

    The single shared counter is the only coordination point between
    concurrently simulated rollouts.
    """

    def __init__(self) -> None:
        self._next = 0

    def take(self) -> StateTag:
        n, self._next = self._next, self._next + 1
        symbol = ""
        while True:
            symbol = _LETTERS[n % 26] + symbol
            n = n // 26 - 1
            if n < 0:
                break
        return StateTag(symbol, 0)


@dataclass
class SimulatedRollout:
    rollout: Rollout
    payoff: Fraction
    cap_hit: bool


def simulate_rollout(
    env: EnvModel,
    action: ActionLabel,
    rng: random.Random,
    tags: TagAllocator,
    terminal: TerminalLabel,
) -> SimulatedRollout:
    """One trial from the root state: the given first action, then uniform
    random actions, recording observed classes under fresh tags.

    Hitting the depth cap ends the rollout on a distinguished cap
    terminal (``terminal`` prefixed) with the configured cap payoff.
    """
    if action not in env.root_actions:
        raise InvalidConfig(f"action {action!r} unavailable at the root state")
    states: list[TaggedState] = []
    s = env.root_state
    a = action
    while True:
        tr = env.transitions[(s, a)]
        if rng.random() < tr.termination:
            payoff = Fraction(rng.randint(*env.payoff_range))
            return SimulatedRollout(Rollout(action, tuple(states), terminal), payoff, False)
        r = rng.random() * sum(tr.probabilities)
        acc = 0.0
        s = tr.successors[-1]
        for succ, prob in zip(tr.successors, tr.probabilities):
            acc += prob
            if r < acc:
                s = succ
                break
        states.append(TaggedState(env.observe(s), tags.take()))
        if len(states) >= env.depth_cap:
            cap_name = f"{CAP_TERMINAL_PREFIX}_{terminal}"
            return SimulatedRollout(
                Rollout(action, tuple(states), cap_name), env.cap_payoff, True
            )
        a = rng.choice(env.actions_at(s))


@dataclass(frozen=True)
class GeneratedSample:
    population: Population
    payoffs: Mapping[TerminalLabel, Fraction]
    cap_hits: int


def generate_population(
    env: EnvModel,
    actions: Sequence[ActionLabel],
    rng: random.Random,
) -> GeneratedSample:
    """One rollout per entry of the action sequence, plus its payoff map."""
    tags = TagAllocator()
    rollouts: list[Rollout] = []
    payoffs: dict[TerminalLabel, Fraction] = {}
    cap_hits = 0
    for i, action in enumerate(actions, start=1):
        sim = simulate_rollout(env, action, rng, tags, f"t{i}")
        rollouts.append(sim.rollout)
        payoffs[sim.rollout.terminal] = sim.payoff
        cap_hits += int(sim.cap_hit)
    return GeneratedSample(validate_population(rollouts), payoffs, cap_hits)


def sim_config_to_json(cfg: SimConfig) -> dict:
    return {
        "n_states": cfg.n_states,
        "n_observations": cfg.n_observations,
        "n_actions": cfg.n_actions,
        "max_branching": cfg.max_branching,
        "depth_cap": cfg.depth_cap,
        "payoff_range": list(cfg.payoff_range),
        "rollouts": cfg.rollouts,
        "seed": cfg.seed,
        "cap_payoff": str(cfg.cap_payoff),
    }


def sim_config_from_json(data: dict) -> SimConfig:
    return SimConfig(
        n_states=data["n_states"],
        n_observations=data["n_observations"],
        n_actions=data["n_actions"],
        max_branching=data["max_branching"],
        depth_cap=data["depth_cap"],
        payoff_range=tuple(data["payoff_range"]),
        rollouts=data["rollouts"],
        seed=data["seed"],
        cap_payoff=Fraction(data.get("cap_payoff", 0)),
    )


def env_to_json(env: EnvModel) -> dict:
    return {
        "n_states": env.n_states,
        "observation": list(env.observation),
        "class_actions": {str(cls): list(acts) for cls, acts in sorted(env.class_actions.items())},
        "transitions": {
            f"{s}:{a}": {
                "successors": list(tr.successors),
                "probabilities": list(tr.probabilities),
                "termination": tr.termination,
            }
            for (s, a), tr in sorted(env.transitions.items())
        },
        "payoff_range": list(env.payoff_range),
        "cap_payoff": str(env.cap_payoff),
        "depth_cap": env.depth_cap,
        "seed": env.seed,
        "root_state": env.root_state,
    }


def env_from_json(data: dict) -> EnvModel:
    transitions = {}
    for key, tr in data["transitions"].items():
        state_text, _, action = key.partition(":")
        transitions[(int(state_text), action)] = Transition(
            tuple(tr["successors"]), tuple(tr["probabilities"]), tr["termination"]
        )
    return EnvModel(
        n_states=data["n_states"],
        observation=tuple(data["observation"]),
        class_actions={int(cls): tuple(acts) for cls, acts in data["class_actions"].items()},
        transitions=transitions,
        payoff_range=tuple(data["payoff_range"]),
        cap_payoff=Fraction(data["cap_payoff"]),
        depth_cap=data["depth_cap"],
        seed=data["seed"],
        root_state=data.get("root_state", 0),
    )
