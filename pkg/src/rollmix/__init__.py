"""rollmix: a workbench for rollout-population recombination analysis.

The package connects four views of the same object and lets each one
check the others:

* populations of rollouts with crossover transformations acting on them
  (:mod:`rollmix.model`, :mod:`rollmix.recombine`);
* exact succession statistics and the closed-form limiting frequency of
  any rollout schema (:mod:`rollmix.stats`);
* the exact orbit oracle: uniform averages over everything recombination
  can reach (:mod:`rollmix.recombine`);
* the weighted succession digraph with payoff-harvesting random walkers
  and its exact expected-payoff solver (:mod:`rollmix.digraph`).

:mod:`rollmix.envsim` generates valid populations from toy partially
observable environments, and :mod:`rollmix.cli` wraps everything in a
reproducible command-line pipeline.
"""

__version__ = "0.1.0"

from .model import (
    InvalidPopulationError,
    Population,
    ROOT,
    Rollout,
    Schema,
    StateTag,
    TaggedState,
    Violation,
    WILDCARD,
    inflate,
    is_homologous,
    population_violations,
    schema_count,
    schema_match,
    state,
    validate_population,
)
from .stats import DownReport, down_report, frequency_children, limiting_frequency
from .recombine import (
    ChainTrace,
    InflatedOrbit,
    OrbitCapExceeded,
    OrbitSet,
    Transform,
    TransformDistribution,
    TransformKind,
    apply_chi,
    apply_nu,
    apply_transform,
    enumerate_inflated_orbit,
    enumerate_orbit,
    generator_index,
    orbit_frequency,
    run_chain,
)
from .digraph import (
    CapExceeded,
    EvaluationReport,
    NoData,
    QTable,
    Unsolvable,
    WalkOutcome,
    WeightedDigraph,
    build_digraph,
    evaluate_actions,
    exact_expected_payoff,
    ingest_rollout,
    path_probability,
    update_q,
    walk,
)
from .envsim import EnvModel, SimConfig, generate_population, make_random_pomdp, simulate_rollout
from .fileio import (
    ParseError,
    SchemaSyntaxError,
    format_schema,
    load_population,
    parse_schema,
    roundtrip_population,
    save_population,
)

__all__ = [name for name in dir() if not name.startswith("_")]
