import itertools
import json
import math

import pytest

from reflex.algebra import UniversalSet, parse_expr, equivalent
from reflex.codec import ALLIANCE, CONFLICT, ID, AltCode, Codebook
from reflex.netsim import (
    DEFAULT_OMEGAS,
    PAYLOAD_DELAY,
    DeliveryError,
    IntentTable,
    NegotiationParams,
    Network,
    SelectivityError,
    addressing_leaks,
    and_rule,
    draw_relationship_intents,
    exchange_influences,
    install_relationships,
    make_rng,
    medium_pulses,
    ordered_pairs,
    plan_influence,
    rgt_round,
)
from reflex.rgt import (
    Interval,
    InfluenceMatrix,
    Relation,
    RelationshipGraph,
    decision_formula,
    forward_task,
    graph_to_polynomial,
)
from reflex.scenario import ScenarioConfig, bundled, run_scenario

NEGOTIATION_DRAWS = {("a", "b"): 0.81, ("a", "c"): 0.92, ("b", "a"): 0.63, ("b", "c"): 0.12, ("c", "a"): 0.09, ("c", "b"): 0.27}
NEGOTIATION_CODES = {("a", "b"): 0, ("a", "c"): 0, ("b", "a"): 0, ("b", "c"): 1, ("c", "a"): 1, ("c", "b"): 1}


@pytest.fixture
def net(U):
    return Network(DEFAULT_OMEGAS, U)


def sample_influences(S):
    raw = {("a", "b"): "{alpha}", ("a", "c"): "0", ("b", "a"): "{alpha}",
           ("b", "c"): "{beta}", ("c", "a"): "{beta}", ("c", "b"): "0"}
    return {k: S(v) for k, v in raw.items()}


def test_ordered_pairs():
    assert ordered_pairs("cab") == [("a", "b"), ("a", "c"), ("b", "a"), ("b", "c"), ("c", "a"), ("c", "b")]


def test_params_validation():
    with pytest.raises(ValueError):
        NegotiationParams(p_alliance=1.5)


def test_network_rejects_duplicate_frequencies(U):
    with pytest.raises(ValueError):
        Network({"a": 2.0, "b": 2.0}, U)


def test_selectivity_self_test_rejects_close_carriers(U):
    with pytest.raises(SelectivityError):
        Network({"a": 3 * math.pi / 2, "b": 3 * math.pi / 2 + 0.05}, U)


def test_default_carriers_are_selective_for_id_and_conflict(U):
    assert addressing_leaks(DEFAULT_OMEGAS, Codebook.default(U), symbols=[ID, CONFLICT]) == []


def test_send_self_is_error(net):
    with pytest.raises(ValueError):
        net.send("a", "a", ID)


def test_send_id_worked_example(net):
    msg = net.send("a", "c", ALLIANCE)
    assert msg.id_train.carrier_omega == DEFAULT_OMEGAS["a"]
    assert msg.payload_train.carrier_omega == DEFAULT_OMEGAS["c"]
    assert msg.payload_time == pytest.approx(msg.id_phase_time + PAYLOAD_DELAY)
    assert msg.crosstalk == ()
    assert net.units["b"].inbox == []
    assert [m.sender for m in net.units["c"].inbox] == ["a"]
    for unit in net.units.values():
        assert unit.heard == [msg]


def test_send_conflict_updates_every_table(net):
    net.send("a", "b", CONFLICT)
    for unit in net.units.values():
        assert unit.relations_seen == {("a", "b"): Relation.CONFLICT}


def test_missing_relationship_is_delivery_error(net):
    net.send("a", "b", CONFLICT)
    with pytest.raises(DeliveryError):
        net.units["a"].relationship_graph(net.subjects)


def test_injected_draws_give_codes(U):
    table = draw_relationship_intents("abc", NegotiationParams(), draws=NEGOTIATION_DRAWS)
    assert table.codes() == NEGOTIATION_CODES
    assert table.draws == NEGOTIATION_DRAWS


def test_half_draws_all_alliance():
    table = draw_relationship_intents("abc", NegotiationParams(), draws={p: 0.5 for p in ordered_pairs("abc")})
    assert set(table.intents.values()) == {Relation.ALLIANCE}


def test_draws_are_seeded():
    a = draw_relationship_intents("abcd", NegotiationParams(seed=3))
    b = draw_relationship_intents("abcd", NegotiationParams(seed=3))
    c = draw_relationship_intents("abcd", NegotiationParams(seed=4))
    assert a.draws == b.draws != c.draws
    assert all(0 <= x < 1 for x in a.draws.values())


def test_alliance_frequency_monte_carlo():
    rng = make_rng(12345)
    params = NegotiationParams()
    ids = [f"u{i}" for i in range(10)]
    hits = total = 0
    while total < 100_000:
        table = draw_relationship_intents(ids, params, rng)
        hits += sum(r is Relation.ALLIANCE for r in table.intents.values())
        total += len(table.intents)
    assert abs(hits / total - 0.61) < 0.01


def test_install_example1(net, U):
    table = draw_relationship_intents("abc", NegotiationParams(), draws=NEGOTIATION_DRAWS)
    graph = install_relationships(net, table)
    assert graph.relation("b", "c") is Relation.ALLIANCE
    assert graph.relation("a", "b") is Relation.CONFLICT and graph.relation("a", "c") is Relation.CONFLICT
    assert graph_to_polynomial(graph) == parse_expr("a + bc", U)
    assert net.knowledge_identical()


def test_install_all_alliance(net, U):
    table = IntentTable({}, {p: Relation.ALLIANCE for p in ordered_pairs("abc")})
    assert equivalent(graph_to_polynomial(install_relationships(net, table)), parse_expr("abc", U), "abc", U)


def test_one_sided_alliance_is_conflict():
    intents = {p: Relation.ALLIANCE for p in ordered_pairs("ab")}
    intents["b", "a"] = Relation.CONFLICT
    assert and_rule("ab", IntentTable({}, intents)).relation("a", "b") is Relation.CONFLICT


def test_and_rule_symmetric_exhaustive():
    pairs = ordered_pairs("abc")
    for bits in itertools.product([Relation.ALLIANCE, Relation.CONFLICT], repeat=len(pairs)):
        intents = dict(zip(pairs, bits))
        swapped = {(u, v): intents[v, u] for u, v in pairs}
        assert and_rule("abc", IntentTable({}, intents)) == and_rule("abc", IntentTable({}, swapped))


def test_exchange_reaches_every_unit(net, U, S):
    install_relationships(net, draw_relationship_intents("abc", NegotiationParams(), draws=NEGOTIATION_DRAWS))
    matrix = exchange_influences(net, sample_influences(S))
    assert matrix.cells() == sample_influences(S)
    for unit in net.units.values():
        assert unit.influences_seen == sample_influences(S)
    assert net.knowledge_identical()


def test_exchange_all_zero(net, S):
    intents = {p: S("0") for p in ordered_pairs("abc")}
    assert set(exchange_influences(net, intents).cells().values()) == {S("0")}


def test_rgt_round_example2(net, U, S):
    install_relationships(net, draw_relationship_intents("abc", NegotiationParams(), draws=NEGOTIATION_DRAWS))
    exchange_influences(net, sample_influences(S))
    assert rgt_round(net) == {
        "a": Interval(S("0"), S("1")),
        "b": Interval(S("{alpha}"), S("{alpha}")),
        "c": Interval(S("0"), S("{beta}")),
    }


def test_rgt_round_single_allied_pair(U, S):
    net = Network({"a": DEFAULT_OMEGAS["a"], "b": DEFAULT_OMEGAS["b"]}, U)
    install_relationships(net, IntentTable({}, {p: Relation.ALLIANCE for p in ordered_pairs("ab")}))
    exchange_influences(net, {("a", "b"): S("1"), ("b", "a"): S("1")})
    point = Interval(S("1"), S("1"))
    assert rgt_round(net) == {"a": point, "b": point}


def test_serialization_and_payload_timing(net, S):
    install_relationships(net, draw_relationship_intents("abc", NegotiationParams(), draws=NEGOTIATION_DRAWS))
    exchange_influences(net, sample_influences(S))
    trains = net.medium.log
    assert len(trains) == 2 * len(net.messages) == 24
    for prev, nxt in zip(trains, trains[1:]):
        assert nxt.start_time > prev.end_time
    for m in net.messages:
        assert m.payload_train.start_time == m.id_phase_time + PAYLOAD_DELAY
    pulses = medium_pulses(net)
    assert len(pulses) == 72 and pulses == sorted(pulses, key=lambda p: p.time)


def test_plan_influence(U, S):
    graph = RelationshipGraph.from_pairs("abc", {("a", "b"): Relation.ALLIANCE, ("a", "c"): Relation.CONFLICT,
                                                  ("b", "c"): Relation.CONFLICT})
    assert plan_influence("b", graph, "a", S("{alpha}"), U) == {"b": S("{alpha}"), "c": S("{alpha}")}
    assert plan_influence("a", graph, "a", S("{alpha}"), U) is None
    with pytest.raises(ValueError):
        plan_influence("z", graph, "a", S("{alpha}"), U)


def test_plan_influence_example3(U, S):
    pairs = {(u, v): Relation.ALLIANCE if "d" not in (u, v) else Relation.CONFLICT
             for u, v in itertools.combinations("abcd", 2)}
    graph = RelationshipGraph.from_pairs("abcd", pairs)
    assert plan_influence("a", graph, "d", S("1"), U) == {"a": S("1"), "b": S("1"), "c": S("1")}


def test_plan_influence_empty_solution_set():
    one = UniversalSet(("x",))
    graph = RelationshipGraph.from_pairs("ab", {("a", "b"): Relation.CONFLICT})
    # a + b folds to 1, so a's equation is x = 1x + 1~x and its interval is always [1, 1]
    assert plan_influence("b", graph, "a", one.empty(), one) is None


def _scenario_end_to_end(name):
    cfg = ScenarioConfig.load(bundled(name))
    result = run_scenario(cfg)
    graph = cfg.direct_graph()
    direct = forward_task(decision_formula(graph), InfluenceMatrix(cfg.ids, cfg.influence_intents()),
                          cfg.universe_set())
    return cfg, result, direct


@pytest.mark.parametrize("name", ["example2.json", "table1.json"])
def test_end_to_end_soundness(name):
    cfg, result, direct = _scenario_end_to_end(name)
    from reflex.scenario import decision_record
    assert result.report["decisions"] == {s: decision_record(r) for s, r in direct.items()}
    assert result.net.knowledge_identical()


def test_example3_run():
    cfg = ScenarioConfig.load(bundled("example3.json"))
    report = run_scenario(cfg).report
    for x in "abc":
        assert report["decisions"][x] == {"status": "interval", "lower": "1", "upper": "1", "members": ["1"]}
    assert report["decisions"]["d"]["lower"] == "0" and report["decisions"]["d"]["upper"] == "1"
    assert report["plan"]["strategy"] == {"b": "1", "c": "1", "d": "1"}


def test_run_determinism():
    cfg = ScenarioConfig.load(bundled("example2.json"))
    r1, r2 = run_scenario(cfg, seed=5), run_scenario(cfg, seed=5)
    assert json.dumps(r1.report) == json.dumps(r2.report)
    assert r1.net.message_rows() == r2.net.message_rows()
    assert [u.knowledge() for u in r1.net.units.values()] == [u.knowledge() for u in r2.net.units.values()]


def test_random_negotiation_matches_and_rule(U):
    cfg = ScenarioConfig.from_dict(
        {"universe": ["alpha", "beta"], "units": [{"id": u, "omega": w} for u, w in DEFAULT_OMEGAS.items()],
         "seed": 11}
    )
    result = run_scenario(cfg)
    graph = and_rule(cfg.ids, cfg.intent_table())
    from reflex.scenario import relations_record
    assert result.report["relations"] == relations_record(graph)
