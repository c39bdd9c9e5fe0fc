import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from razorbus.errors import TraceError
from razorbus.interconnect import BusGeometry, classify_transition
from razorbus.traces import (PSEUDO_BENCHMARKS, Trace, generate, load_trace, parse_trace_spec,
                             pseudo_benchmark_suite, save_trace)


def test_parse_two_words(tmp_path):
    p = tmp_path / "t.hex"
    p.write_text("00000000\nFFFFFFFF\n")
    assert load_trace(p).words.tolist() == [0, 0xFFFFFFFF]


def test_comments_blank_lines_and_prefix(tmp_path):
    p = tmp_path / "t.hex"
    p.write_text("# header\n\n0x1f  # trailing\n  a\n")
    assert load_trace(p).words.tolist() == [0x1F, 0xA]


@pytest.mark.parametrize("body, line", [("00\nzz\n", 2), ("1\n\n100000000\n", 3)])
def test_malformed_lines_report_line_number(tmp_path, body, line):
    p = tmp_path / "t.hex"
    p.write_text(body)
    with pytest.raises(TraceError, match=f"line {line}"):
        load_trace(p)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 2 ** 32 - 1), min_size=1, max_size=50))
def test_save_load_roundtrip(tmp_path_factory, words):
    path = tmp_path_factory.mktemp("rt") / "t.hex"
    t = Trace(np.array(words), "x")
    save_trace(t, path)
    assert load_trace(path).words.tolist() == words


def test_storage_is_four_bytes_per_word():
    t = generate("uniform-random", 1000)
    assert t.words.dtype == np.uint32 and t.words.nbytes == 4000


def test_quiet_is_constant():
    t = generate("quiet", 100, params={"value": 5})
    assert set(t.words.tolist()) == {5}


def test_adversarial_gives_class_four_everywhere_possible():
    g = BusGeometry()
    t = generate("adversarial", 6)
    prev = int(t.words[0])
    for w in t.words[1:].tolist():
        classes = classify_transition(prev, w, g)
        assert all(c.toggled for c in classes)
        for i, c in enumerate(classes):
            interior = i % g.shield_interval not in (0, g.shield_interval - 1)
            assert c.k == (4 if interior else 3)
        prev = w


def test_toggle_half_matches_uniform_statistics():
    n = 100_000
    t = generate("per-bit-toggle", n, seed=1, params={"p": 0.5})
    toggles = np.unpackbits((t.words[1:] ^ t.words[:-1]).view(np.uint8)).reshape(-1, 32).sum(axis=0)
    expected = (n - 1) / 2
    chi2 = float((((toggles - expected) ** 2) / expected * 2).sum())
    assert chi2 < 70  # 32 dof; p ~ 1e-4


def test_generators_are_seed_deterministic():
    for name, (kind, params) in PSEUDO_BENCHMARKS.items():
        a = generate(kind, 5000, 7, params)
        b = generate(kind, 5000, 7, params)
        assert np.array_equal(a.words, b.words), name


def test_suite_has_ten_distinct_traces():
    suite = pseudo_benchmark_suite(20_000)
    assert len(suite) == 10
    assert len({t.words.tobytes() for t in suite}) == 10


def test_unknown_kind_and_params_rejected():
    with pytest.raises(TraceError):
        generate("sawtooth", 10)
    with pytest.raises(TraceError):
        generate("quiet", 10, params={"pp": 1})


def test_trace_specs(tmp_path):
    t = parse_trace_spec("gen:per-bit-toggle:p=0.2,n=123,seed=4")
    assert len(t) == 123
    assert len(parse_trace_spec("bench:pb03-moderate:n=50")) == 50
    p = tmp_path / "w.hex"
    p.write_text("1\n2\n")
    assert parse_trace_spec(f"file:{p}").words.tolist() == [1, 2]
    with pytest.raises(TraceError):
        parse_trace_spec("bench:nope:n=5")
