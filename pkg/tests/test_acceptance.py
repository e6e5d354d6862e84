"""Acceptance criteria, one test each; every test also leaves a PASS/FAIL line in the summary."""
import itertools
import math
import time
from contextlib import contextmanager

import pytest
from conftest import ACCEPTANCE_LINES

from reflex.algebra import UniversalSet, all_elements, equivalent, parse_expr
from reflex.codec import Codebook, detect, encode, expand
from reflex.netsim import (
    DEFAULT_OMEGAS,
    NegotiationParams,
    Network,
    draw_relationship_intents,
    install_relationships,
    make_rng,
)
from reflex.neuron import NeuronParams, Pulse, simulate
from reflex.rgt import (
    InfluenceMatrix,
    Interval,
    NotDecomposable,
    Relation,
    RelationshipGraph,
    canonical_coefficients,
    canonical_expressions,
    fold_diagonal,
    forward_task,
    graph_to_polynomial,
    inverse_task,
    stratify,
)
from reflex.cli import main

U = UniversalSet(("alpha", "beta"))
S = U.parse_set
P = lambda text: parse_expr(text, U)  # noqa: E731
W_A, W_B, W_C = 3 * math.pi / 2, 4 * math.pi / 3, 5 * math.pi / 3


@contextmanager
def criterion(number, title):
    try:
        yield
    except BaseException as exc:
        ACCEPTANCE_LINES.append(f"FAIL  {number:>2}. {title}: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}")
        raise
    ACCEPTANCE_LINES.append(f"PASS  {number:>2}. {title}")


def fold(text):
    return fold_diagonal(stratify(P(text)))


def test_01_fold_identity():
    with criterion(1, "fold identity for ab+c and abc+d"):
        start = time.perf_counter()
        assert equivalent(fold("ab + c"), P("ab + c"), "abc", U)
        assert equivalent(fold("abc + d"), P("abc + d"), "abcd", U)
        assert time.perf_counter() - start < 1.0


def test_02_canonical_forms():
    cases = [
        ("ab + c", "abc", "a", "b + c", "c"),
        ("ab + c", "abc", "b", "a + c", "c"),
        ("ab + c", "abc", "c", "1", "ab"),
        ("abc + d", "abcd", "a", "bc + d", "d"),
        ("abc + d", "abcd", "d", "1", "abc"),
    ]
    with criterion(2, "canonical forms of ab+c and abc+d"):
        for poly, subjects, x, a_text, b_text in cases:
            A, B = canonical_expressions(fold(poly), x, U)
            assert equivalent(A, P(a_text), subjects, U), (poly, x, "A")
            assert equivalent(B, P(b_text), subjects, U), (poly, x, "B")


def test_03_forward_example2():
    raw = {("a", "b"): "{alpha}", ("a", "c"): "0", ("b", "a"): "{alpha}",
           ("b", "c"): "{beta}", ("c", "a"): "{beta}", ("c", "b"): "0"}
    with criterion(3, "forward task, example2 scenario"):
        result = forward_task(fold("a + bc"), InfluenceMatrix("abc", {k: S(v) for k, v in raw.items()}), U)
        assert result == {
            "a": Interval(S("0"), S("1")),
            "b": Interval(S("{alpha}"), S("{alpha}")),
            "c": Interval(S("0"), S("{beta}")),
        }


def test_04_forward_example3():
    with criterion(4, "forward task, example3 scenario"):
        folded = fold("abc + d")
        for d_value in all_elements(U):
            cells = {(r, c): U.empty() for r in "abc" for c in "abcd" if r != c}
            cells.update({("d", x): d_value for x in "abc"})
            result = forward_task(folded, InfluenceMatrix("abcd", cells), U)
            for x in "abc":
                assert result[x] == Interval(d_value, d_value)
            if d_value == U.full():
                assert result["d"] == Interval(S("0"), S("1"))


def test_05_inverse_task():
    with criterion(5, "inverse task on ab+c, target {alpha}"):
        target = S("{alpha}")
        got = inverse_task(fold("ab + c"), "a", target, "abc", U)
        oracle = []
        for b, c in itertools.product(all_elements(U), repeat=2):
            # a's canonical coefficients read straight off ab + c
            if (b | c) == target and c == target:
                oracle.append({"b": b, "c": c})
        assert len(oracle) == 2 and got == oracle
        assert {(str(s["b"]), str(s["c"])) for s in got} == {("{alpha}", "{alpha}"), ("0", "{alpha}")}
        for sol in got:
            coeffs = canonical_coefficients(fold("ab + c"), "a", sol, U)
            assert coeffs.A == coeffs.B == target


def spikes(omega, carrier, mags, start=1.0):
    period = 2 * math.pi / carrier
    pulses = [Pulse(start + k * period, m) for k, m in enumerate(mags)]
    return len(simulate(NeuronParams(omega=omega), pulses, pulses[-1].time + 3.0).spikes)


def test_06_neuron_selectivity():
    with criterion(6, "resonate-and-fire selectivity"):
        start = time.perf_counter()
        for mags in ([0.4] * 3, [-0.4] * 3):
            for omega, carrier in itertools.product((W_A, W_B), repeat=2):
                n = spikes(omega, carrier, mags)
                assert (n >= 1) if omega == carrier else (n == 0), (mags, omega, carrier, n)
        for mags in ([0.1, 0.4, 0.6], [-0.1, -0.4, -0.6]):
            for omega in (W_A, W_B):
                assert spikes(omega, omega, mags) >= 1, (mags, omega)
        assert time.perf_counter() - start < 1.0


def test_07_codebook_detection():
    omegas = {"a": W_A, "b": W_B, "c": W_C}
    bank = {u: NeuronParams(omega=w) for u, w in omegas.items()}
    book = Codebook.default(U)
    with criterion(7, "every default code is detected on its carrier only"):
        wrong = []
        for mags, sym in book.entries:
            for carrier, w in omegas.items():
                train = encode(sym, w, 1.0, carrier, book)
                fired = {ch for ch, _ in detect(bank, expand(train), train.window)}
                if fired != {carrier}:
                    wrong.append(f"{mags} on {carrier} fired {sorted(fired)}")
        assert not wrong, "; ".join(wrong)


def test_08_example1_end_to_end():
    draws = {("a", "b"): 0.81, ("a", "c"): 0.92, ("b", "a"): 0.63,
             ("b", "c"): 0.12, ("c", "a"): 0.09, ("c", "b"): 0.27}
    expected_codes = {("a", "b"): 0, ("a", "c"): 0, ("b", "a"): 0, ("b", "c"): 1, ("c", "a"): 1, ("c", "b"): 1}
    with criterion(8, "example1 negotiation over the medium"):
        table = draw_relationship_intents("abc", NegotiationParams(), draws=draws)
        assert table.codes() == expected_codes
        graph = install_relationships(Network(DEFAULT_OMEGAS, U), table)
        assert graph.relation("b", "c") is Relation.ALLIANCE
        assert graph.relation("a", "b") is Relation.CONFLICT and graph.relation("a", "c") is Relation.CONFLICT
        assert graph_to_polynomial(graph) == P("a + bc")


def test_09_negotiation_statistics():
    with criterion(9, "alliance frequency at p = 0.61"):
        rng = make_rng(2024)
        values = rng.random(100_000)
        frequency = float((values <= 0.61).mean())
        assert abs(frequency - 0.61) <= 0.01, frequency
        ids = [f"u{i:02d}" for i in range(20)]
        params = NegotiationParams()
        rng = make_rng(2024)
        allied = total = 0
        while total < 100_000:
            table = draw_relationship_intents(ids, params, rng)
            allied += sum(r is Relation.ALLIANCE for r in table.intents.values())
            total += len(table.intents)
        assert abs(allied / total - 0.61) <= 0.01, allied / total


def test_10_decomposability():
    with criterion(10, "path graph rejected, all 3-subject graphs decompose"):
        path = {p: Relation.CONFLICT for p in itertools.combinations("wxyz", 2)}
        path.update({("w", "x"): Relation.ALLIANCE, ("x", "y"): Relation.ALLIANCE, ("y", "z"): Relation.ALLIANCE})
        with pytest.raises(NotDecomposable):
            graph_to_polynomial(RelationshipGraph.from_pairs("wxyz", path))
        pairs = list(itertools.combinations("abc", 2))
        for labels in itertools.product([Relation.ALLIANCE, Relation.CONFLICT], repeat=3):
            graph_to_polynomial(RelationshipGraph.from_pairs("abc", dict(zip(pairs, labels))))


def test_11_determinism(tmp_path, capsys):
    with criterion(11, "byte-identical reruns of example3 with seed 7"):
        outs = [tmp_path / "first", tmp_path / "second"]
        for out in outs:
            assert main(["run", "example3.json", "--seed", "7", "--out-dir", str(out)]) == 0
        capsys.readouterr()
        for name in ("messages.csv", "decisions.json"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
