import json
from fractions import Fraction

import pytest

from corepricing.cli import main
from corepricing.formats import (
    instance_from_json,
    instance_to_json,
    load_instance,
    save_instance,
)
from corepricing.harness import (
    CSV_COLUMNS,
    ComparisonReport,
    Epsilon,
    GeneratorConfig,
    compare,
    fairness_by_ads,
    fairness_ratio,
    generate,
    name_instances,
    revenue_table,
    run_mechanism,
)
from corepricing.model import AuctionOutcome
from corepricing.oracles import SlateOracle
from instances import M, five_bidders, five_bidder_slate, complements

SMALL = GeneratorConfig(
    advertisers=(2, 4), decorations=(1, 3), lines=(1, 4), line_limits=(4, 8), count=3
)


def test_generator_is_deterministic():
    assert generate(SMALL) == generate(SMALL)
    other = GeneratorConfig(**{**SMALL.__dict__, "seed": 1})
    assert generate(other) != generate(SMALL)


def test_generator_shapes():
    instances = generate(SMALL)
    assert [i.max_lines for i in instances] == [4] * 3 + [8] * 3
    for inst in instances:
        assert 2 <= len(inst.advertisers) <= 4
        for ad in inst.ads:
            assert 1 <= ad.lines <= 4
            assert ad.bid % 1000 == 0
            assert ad.score == int(ad.score)
    names = list(name_instances(instances))
    assert names[:2] == ["m04-0000", "m04-0001"] and names[3] == "m08-0000"


def test_generator_edge_cases():
    none = generate(GeneratorConfig(advertisers=(0, 0), line_limits=(5,), count=2))
    assert all(inst.ads == () for inst in none)
    with pytest.raises(ValueError):
        GeneratorConfig(lines=(0, 3))
    with pytest.raises(ValueError):
        GeneratorConfig.from_dict({"colour": "blue"})
    cfg = GeneratorConfig.from_dict({"lines": [2, 5], "seed": 4})
    assert cfg.lines == (2, 5) and cfg.seed == 4


def test_longer_ads_click_more():
    cfg = GeneratorConfig(pclick_lift_milli=(5, 5), pclick_base_milli=(100, 100), count=2)
    for inst in generate(cfg):
        for ad in inst.ads:
            assert ad.pclick == Fraction(100 + 5 * (ad.lines - 3), 1000)


def _outcome(utilities):
    values = {i: 100 for i in utilities}
    payments = {i: 100 - u for i, u in utilities.items()}
    return AuctionOutcome("x", {i: frozenset({i}) for i in utilities}, values, payments)


def test_fairness_ratio():
    assert fairness_ratio(_outcome({1: 30, 2: 20})) == Fraction(3, 2)
    assert fairness_ratio(_outcome({1: 10, 2: 20, 3: 15})) == 2
    assert fairness_ratio(_outcome({1: 7})) == 1
    assert fairness_ratio(_outcome({1: 7, 2: 0})) is None
    assert fairness_ratio(_outcome({})) is None


def test_epsilon():
    assert Epsilon.parse("250").resolve(None) == 250
    eps = Epsilon.parse("rel:0.01")
    assert eps.resolve(SlateOracle(five_bidder_slate())) == 16 * M // 10
    # never below the bidder count
    assert Epsilon.parse("rel:1e-12").resolve(SlateOracle(five_bidder_slate())) == 5
    with pytest.raises(ValueError):
        Epsilon.parse("rel:2")


def test_run_mechanisms_on_five_bidders():
    eps = 10_000
    assert run_mechanism("vcg", five_bidders(), eps).revenue == 40 * M
    core = run_mechanism("core", five_bidders(), eps)
    assert 60 * M <= core.revenue <= 60 * M + 2 * eps
    with pytest.raises(TypeError):
        run_mechanism("gsp-opt", five_bidders(), eps)
    with pytest.raises(ValueError):
        run_mechanism("auction", five_bidders(), eps)


def test_compare_report():
    instances = {"five": five_bidders(), "pair": complements(), "slate": five_bidder_slate()}
    report = compare(instances, ("core", "vcg", "gsp-opt"), Epsilon(absolute=10_000))
    assert [(r.instance_id, r.mechanism) for r in report.rows] == [
        ("five", "core"), ("five", "vcg"),
        ("pair", "core"), ("pair", "vcg"),
        ("slate", "core"), ("slate", "vcg"), ("slate", "gsp-opt"),
    ]
    # profiles have no slate for GSP to price
    assert [(i, m) for i, m, _ in report.failures] == [("five", "gsp-opt"), ("pair", "gsp-opt")]
    rows = report.by_mechanism("core")
    assert rows["pair"].revenue_vs_vcg == pytest.approx(50.5, abs=0.01)
    assert report.by_mechanism("vcg")["five"].revenue_vs_vcg == 1.0

    again = ComparisonReport.from_csv(report.to_csv())
    assert again.rows == report.rows
    assert report.to_csv().splitlines()[0] == ",".join(CSV_COLUMNS)


def test_compare_is_deterministic():
    named = name_instances(generate(SMALL))
    a = compare(named, epsilon="rel:0.001")
    b = compare(named, epsilon="rel:0.001")
    assert not a.failures
    assert [r.without_timing() for r in a.rows] == [r.without_timing() for r in b.rows]


def test_summary_tables():
    named = name_instances(generate(SMALL))
    report = compare(named, ("vcg", "core", "gsp-greedy"), "rel:0.001")
    table = revenue_table(report, named)
    assert {(r["line_limit"], r["mechanism"]) for r in table} == {
        (m, k) for m in (4, 8) for k in ("vcg", "core", "gsp-greedy")
    }
    first = [r for r in table if r["line_limit"] == 4 and r["mechanism"] == "vcg"][0]
    assert first["revenue_normalized"] == pytest.approx(1.0)
    assert fairness_by_ads(report, named)


def test_instance_json_round_trip(tmp_path):
    for inst in (five_bidders(), five_bidder_slate()):
        assert instance_from_json(json.loads(json.dumps(instance_to_json(inst)))) == inst
        save_instance(inst, tmp_path / "x.json")
        assert load_instance(tmp_path / "x.json") == inst
    with pytest.raises(ValueError):
        instance_from_json({"what": 1})


class TestCli:
    def test_generate_and_compare(self, tmp_path, capsys):
        config = tmp_path / "gen.json"
        config.write_text(json.dumps({**SMALL.__dict__, "line_limits": [5], "count": 2}))
        folder = tmp_path / "inst"
        assert main(["generate", "--config", str(config), "--out", str(folder)]) == 0
        assert sorted(p.name for p in folder.iterdir()) == ["m05-0000.json", "m05-0001.json"]
        out = tmp_path / "report.csv"
        summary = tmp_path / "summary.csv"
        code = main(
            ["compare", "--instances", str(folder), "--out", str(out),
             "--summary", str(summary), "--epsilon", "rel:0.001"]
        )
        assert code == 0
        report = ComparisonReport.from_csv(out.read_text())
        assert len(report.rows) == 2 * 5
        assert summary.read_text().startswith("line_limit,mechanism")

    def test_price_and_verify(self, tmp_path, capsys):
        path = tmp_path / "five.json"
        save_instance(five_bidders(), path)
        trace = tmp_path / "trace.jsonl"
        assert main(["price", "--instance", str(path), "--epsilon", "10000",
                     "--trace", str(trace)]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["mechanism"] == "core"
        assert len(trace.read_text().splitlines()) == 3
        point = json.dumps(result["utilities_micro"])
        assert main(["verify", "--instance", str(path), "--point", point,
                     "--epsilon", "10000"]) == 0
        verdict = json.loads(capsys.readouterr().out)
        assert verdict["in_core"] and verdict["eps_bidder_optimal"]
        assert main(["verify", "--instance", str(path), "--point", "[0, 0, 0, 0, 0]"]) == 1

    def test_price_baseline(self, tmp_path, capsys):
        path = tmp_path / "slate.json"
        save_instance(five_bidder_slate(), path)
        assert main(["price", "--instance", str(path), "--mechanism", "gsp-greedy"]) == 0
        result = json.loads(capsys.readouterr().out)
        assert "cpc_micro" in result
