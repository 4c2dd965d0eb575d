"""Deterministic simulation of finite grids of Turing machines that interact
through a shared one-sided communication tape."""

from gridsim.configfile import VERSION as __version__
from gridsim.constructions import (
    CONSTRUCTIONS,
    OracleStream,
    alternating_writers,
    build,
    decode_space,
    expand_pairs,
    oracle_initial_info,
    oracle_partner,
    pair_cell_decoder,
    pair_cell_encoder,
    scheduled_exchange,
    ten_to_one,
    with_controller,
)
from gridsim.equivalence import (
    Divergence,
    EnumerationCertificate,
    Equal,
    FlatExecution,
    NotFlattenable,
    check_equivalence,
    enumerate_outputs,
    flatten,
    partition_harness,
)
from gridsim.grid import (
    Controller,
    Directive,
    GridConfig,
    Member,
    Trace,
    UnresolvedConflict,
    classify,
    diff_traces,
    replay,
    run_grid,
)
from gridsim.machine import MachineSpec, Rule, format_machine, machine, parse_machine, run, step
from gridsim.scheduling import (
    ExchangeSchedule,
    TimeScaleMap,
    admits,
    identity,
    interleaving,
    irrational,
    move_ticks,
    rational,
    table,
)
from gridsim.space import CommSpace, WriteEvent
