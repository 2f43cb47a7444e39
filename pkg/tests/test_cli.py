import io
import math

import numpy as np
import pytest
from scipy import stats as scipy_stats

from snmcache import cli
from snmcache.analysis import (
    class_summary,
    classify_contents,
    content_stats,
    density_map,
    sliced_popularity,
    write_density_csv,
    write_rank_csv,
)
from snmcache.generators import generate_snm, parse_snm_config
from snmcache.trace import read_trace, write_trace

from helpers import make_trace, random_trace, reference_classes


def write_trace_file(trace, path):
    with open(path, "w", encoding="utf-8") as f:
        write_trace(trace, f)


def read_trace_file(path):
    with open(path, encoding="utf-8") as f:
        return read_trace(f)


@pytest.fixture
def toy_trace_path(tmp_path):
    path = tmp_path / "toy.trace"
    write_trace_file(make_trace(["a"] * 6 + ["b"] * 3 + ["c"]), path)
    return path


class TestAnalyze:
    def test_rank_csv_of_toy_trace(self, toy_trace_path, tmp_path):
        out = tmp_path / "out"
        rc = cli.main(["analyze", str(toy_trace_path), "--out", str(out), "--slices", "1", "--top", "3"])
        assert rc == 0
        lines = (out / "ranks.csv").read_text().splitlines()
        assert lines[0] == "rank,mean,p5,p95"
        assert lines[1].startswith("1,0.6,")
        assert lines[2].startswith("2,0.3,")
        assert lines[3].startswith("3,0.1,")

    def test_missing_file_exits_2(self, tmp_path):
        rc = cli.main(["analyze", str(tmp_path / "absent.trace"), "--out", str(tmp_path)])
        assert rc == 2

    def test_malformed_trace_exits_2(self, tmp_path):
        bad = tmp_path / "bad.trace"
        bad.write_text("not a trace\n")
        assert cli.main(["analyze", str(bad), "--out", str(tmp_path)]) == 2

    def test_matches_library_byte_for_byte(self, tmp_path):
        trace = generate_snm(reference_classes(n_videos=150.0), 30.0, seed=2)
        trace_path = tmp_path / "t.trace"
        write_trace_file(trace, trace_path)
        out = tmp_path / "out"
        rc = cli.main([
            "analyze", str(trace_path), "--out", str(out),
            "--slices", "4", "--top", "10",
            "--lifespan-bins", "0,5,10,20,30", "--volume-bins", "10,40,160",
            "--contents", "c1_0,c5_3",
        ])
        assert rc == 0

        buf = io.StringIO()
        write_rank_csv(sliced_popularity(trace, 4, 10), buf)
        assert (out / "ranks.csv").read_text() == buf.getvalue()

        stats = content_stats(trace)
        buf = io.StringIO()
        write_density_csv(density_map(stats, 10, [0, 5, 10, 20, 30], [10, 40, 160]), buf)
        assert (out / "density.csv").read_text() == buf.getvalue()

        buf = io.StringIO()
        buf.write("content_id,volume,lifespan,first_request,last_request\n")
        for cid in sorted(stats):
            s = stats[cid]
            buf.write(f"{cid},{s.volume},{s.lifespan!r},{s.first_request!r},{s.last_request!r}\n")
        assert (out / "content_stats.csv").read_text() == buf.getvalue()

        cumulative = (out / "cumulative.csv").read_text().splitlines()
        assert cumulative[0] == "content_id,timestamp,cum_requests"
        wanted = {"c1_0", "c5_3"}
        n_expected = sum(1 for e in trace.events if e.content_id in wanted)
        assert len(cumulative) - 1 == n_expected


class TestFit:
    def test_all_low_volume_gives_single_stationary_class(self, tmp_path):
        path = tmp_path / "small.trace"
        write_trace_file(make_trace(["a", "b", "a"]), path)
        rc = cli.main(["fit", str(path), "--out", str(tmp_path / "fit")])
        assert rc == 0
        text = (tmp_path / "fit" / "snm.conf").read_text()
        class_lines = [l for l in text.splitlines() if l.startswith("class=")]
        assert len(class_lines) == 1
        assert class_lines[0].startswith("class=0")
        assert "shape=stationary" in class_lines[0]

    def test_bounds_override(self, tmp_path):
        trace = generate_snm(reference_classes(n_videos=400.0), 30.0, seed=3)
        path = tmp_path / "t.trace"
        write_trace_file(trace, path)
        rc = cli.main(["fit", str(path), "--out", str(tmp_path / "fit"),
                       "--bounds", "1,3,7,14"])
        assert rc == 0
        config = parse_snm_config(tmp_path / "fit" / "snm.conf")
        stats = content_stats(trace)
        expected = class_summary(trace, classify_contents(stats, 10, [1, 3, 7, 14]), [1, 3, 7, 14])
        by_id = {c.class_id: c for c in config.classes}
        for s in expected:
            if s.volume_samples:
                assert by_id[s.class_id].arrival_rate == pytest.approx(s.arrival_rate)

    def test_empty_trace_exits_2(self, tmp_path):
        path = tmp_path / "empty.trace"
        path.write_text("# trace-v1 horizon=5\n")
        assert cli.main(["fit", str(path), "--out", str(tmp_path / "fit")]) == 2

    def test_fit_generate_fit_reproduces_arrival_rates(self, tmp_path):
        horizon = 90.0
        trace = generate_snm(reference_classes(horizon=horizon, shape="uniform"), horizon, seed=11)
        path = tmp_path / "a.trace"
        write_trace_file(trace, path)
        assert cli.main(["fit", str(path), "--out", str(tmp_path / "f1"), "--shape", "uniform"]) == 0
        assert cli.main(["generate", str(tmp_path / "f1" / "snm.conf"), "--seed", "12",
                         "--out", str(tmp_path / "b.trace")]) == 0
        assert cli.main(["fit", str(tmp_path / "b.trace"), "--out", str(tmp_path / "f2"),
                         "--shape", "uniform"]) == 0
        first = {c.class_id: c for c in parse_snm_config(tmp_path / "f1" / "snm.conf").classes}
        second = {c.class_id: c for c in parse_snm_config(tmp_path / "f2" / "snm.conf").classes}
        total = sum(len(c.volumes) for c in first.values())
        for cid, cfg in first.items():
            if len(cfg.volumes) / total < 0.01:
                continue  # sub-percent classes are all noise
            assert second[cid].arrival_rate == pytest.approx(cfg.arrival_rate, rel=0.15)


class TestGenerate:
    def snm_config_text(self, seed="seed=21\n", daynight="off"):
        return (
            "horizon_days=6.0\n" + seed + f"daynight={daynight}\n"
            "class=1, arrival_rate=8, lifespan_days=1.1, shape=exponential, volumes=const:30\n"
            "class=5, arrival_rate=20, lifespan_days=5, shape=stationary, volumes=const:12\n"
        )

    def test_same_config_and_seed_identical_files(self, tmp_path):
        cfg = tmp_path / "snm.conf"
        cfg.write_text(self.snm_config_text())
        for name in ("one.trace", "two.trace"):
            assert cli.main(["generate", str(cfg), "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "one.trace").read_bytes() == (tmp_path / "two.trace").read_bytes()

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "snm.conf"
        cfg.write_text(self.snm_config_text())
        assert cli.main(["generate", str(cfg), "--out", str(tmp_path / "a.trace")]) == 0
        assert cli.main(["generate", str(cfg), "--seed", "22", "--out", str(tmp_path / "b.trace")]) == 0
        assert (tmp_path / "a.trace").read_bytes() != (tmp_path / "b.trace").read_bytes()

    def test_no_seed_anywhere_exits_2(self, tmp_path):
        cfg = tmp_path / "snm.conf"
        cfg.write_text(self.snm_config_text(seed=""))
        assert cli.main(["generate", str(cfg), "--out", str(tmp_path / "x.trace")]) == 2

    def test_invalid_config_names_field(self, tmp_path, capsys):
        cfg = tmp_path / "snm.conf"
        cfg.write_text("horizon_days=5\nclass=1, arrival_rate=1, shape=uniform, volumes=const:5\n")
        assert cli.main(["generate", str(cfg), "--seed", "1", "--out", str(tmp_path / "x.trace")]) == 2
        assert "lifespan_days" in capsys.readouterr().err

    def test_irm_generation(self, tmp_path):
        out = tmp_path / "irm.trace"
        rc = cli.main(["generate", "--irm", "2,0.0,20000,5", "--seed", "4", "--out", str(out)])
        assert rc == 0
        trace = read_trace_file(out)
        assert len(trace.events) == 20000
        share = trace.content_ids().count("r1") / 20000
        assert share == pytest.approx(0.5, abs=0.02)

    def test_irm_requires_seed(self, tmp_path):
        assert cli.main(["generate", "--irm", "2,0.0,100,5", "--out", str(tmp_path / "x.trace")]) == 2

    def test_config_and_irm_mutually_exclusive(self, tmp_path):
        cfg = tmp_path / "snm.conf"
        cfg.write_text(self.snm_config_text())
        rc = cli.main(["generate", str(cfg), "--irm", "2,0,10,5", "--seed", "1",
                       "--out", str(tmp_path / "x.trace")])
        assert rc == 2

    def test_daynight_fractional_day_profile(self, tmp_path):
        cfg = tmp_path / "snm.conf"
        cfg.write_text(
            "horizon_days=20\nseed=5\ndaynight=on\n"
            "class=0, arrival_rate=50, lifespan_days=0, shape=stationary, volumes=const:40\n"
        )
        out = tmp_path / "dn.trace"
        assert cli.main(["generate", str(cfg), "--out", str(out)]) == 0
        frac = np.asarray(read_trace_file(out).timestamps()) % 1.0
        cdf = lambda x: x + (1.0 - np.cos(2 * np.pi * x)) / (2 * np.pi)
        stat = scipy_stats.kstest(frac, cdf).statistic
        assert stat < 1.628 / math.sqrt(len(frac))


class TestShuffle:
    def test_identity_when_k_is_request_count(self, toy_trace_path, tmp_path):
        out = tmp_path / "s.trace"
        rc = cli.main(["shuffle", str(toy_trace_path), "10", "--seed", "1", "--out", str(out)])
        assert rc == 0
        assert out.read_bytes() == toy_trace_path.read_bytes()

    def test_volumes_preserved_and_reproducible(self, tmp_path):
        rng = np.random.default_rng(0)
        trace = random_trace(rng, 300, 12)
        path = tmp_path / "t.trace"
        write_trace_file(trace, path)
        outs = []
        for name in ("a.trace", "b.trace"):
            out = tmp_path / name
            assert cli.main(["shuffle", str(path), "3", "--seed", "77", "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        shuffled = read_trace_file(tmp_path / "a.trace")
        assert sorted(shuffled.content_ids()) == sorted(trace.content_ids())

    def test_bad_k_exits_2(self, toy_trace_path, tmp_path):
        rc = cli.main(["shuffle", str(toy_trace_path), "900", "--seed", "1",
                       "--out", str(tmp_path / "x.trace")])
        assert rc == 2


class TestEvaluate:
    def test_toy_curve_matches_hand_traced_lru(self, tmp_path):
        path = tmp_path / "t.trace"
        write_trace_file(make_trace([1, 2, 1, 3, 1]), path)
        out = tmp_path / "out"
        rc = cli.main(["evaluate", str(path), "--capacities", "1,2,3",
                       "--targets", "0.3", "--out", str(out)])
        assert rc == 0
        lines = (out / "curve_t.csv").read_text().splitlines()
        assert lines == ["capacity,hit_prob", "1,0.0", "2,0.4", "3,0.4"]
        sizes = (out / "required_sizes.csv").read_text().splitlines()
        assert sizes[1] == "t,0.3,2"

    def test_identical_traces_identical_columns(self, tmp_path):
        rng = np.random.default_rng(1)
        trace = random_trace(rng, 300, 15)
        p1, p2 = tmp_path / "x.trace", tmp_path / "sub"
        p2.mkdir()
        p2 = p2 / "x.trace"
        write_trace_file(trace, p1)
        write_trace_file(trace, p2)
        out = tmp_path / "out"
        rc = cli.main(["evaluate", str(p1), str(p2), "--targets", "0.1,0.2", "--out", str(out)])
        assert rc == 0
        rows = (out / "required_sizes.csv").read_text().splitlines()[1:]
        assert [r.split(",")[2] for r in rows[:2]] == [r.split(",")[2] for r in rows[2:]]

    def test_unattainable_targets_still_exit_0(self, tmp_path):
        path = tmp_path / "u.trace"
        write_trace_file(make_trace(list(range(20))), path)
        out = tmp_path / "out"
        rc = cli.main(["evaluate", str(path), "--targets", "0.5", "--out", str(out)])
        assert rc == 0
        assert "unattainable" in (out / "required_sizes.csv").read_text()

    def test_eviction_stats_flag(self, tmp_path):
        path = tmp_path / "t.trace"
        write_trace_file(make_trace([1, 2, 1, 3, 1]), path)
        out = tmp_path / "out"
        rc = cli.main(["evaluate", str(path), "--capacities", "1,2",
                       "--eviction-stats", "--out", str(out)])
        assert rc == 0
        lines = (out / "evictions_t.csv").read_text().splitlines()
        assert lines[0] == "capacity,hit_prob,evictions,mean_eviction_time"
        assert len(lines) == 3

    def test_empty_trace_exits_2(self, tmp_path):
        path = tmp_path / "e.trace"
        path.write_text("# trace-v1 horizon=4\n")
        assert cli.main(["evaluate", str(path), "--out", str(tmp_path / "out")]) == 2
