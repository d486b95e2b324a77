import json
import random

import pytest

from codeedit.corpus import (BOS, EOS, PAD, UNK, ConfigError, EditPair, FormatError,
                             InsufficientData, ProblemMismatch, Submission, SynthConfig,
                             UnknownProblem, Vocab, build_edit_pairs, build_quadruples, build_vocab,
                             decode, encode, ingest, quadruple_from_json, quadruple_to_json,
                             read_jsonl, read_submission_rows, similarity_label, split_by_student,
                             synthesize_corpus, write_jsonl)
from codeedit.corpus.bank import BANK, make_problem
from codeedit.corpus.vocab import lexemes
from codeedit.corpus.inject import INJECTORS, apply_bugs, compatible
from codeedit.minilang import TestCaseMask, mask_for_source, parse_source, pretty, save_problems


def _sub(student, seq, mask, code="x", pid="p"):
    return Submission(student, pid, seq, code, TestCaseMask.from_string(mask))


def _pair(student, m1, m2, pid="p", seq=0):
    return EditPair(_sub(student, seq, m1, f"a{seq}", pid), _sub(student, seq + 1, m2, f"b{seq}", pid))


# -- bank and injectors -----------------------------------------------------

@pytest.mark.parametrize("pid", sorted(BANK))
def test_bank_reference_passes_all_tests(pid):
    prob = make_problem(pid)
    assert prob.test_count >= 5
    assert mask_for_source(BANK[pid]["reference"], prob).all_pass


@pytest.mark.parametrize("pid", sorted(BANK))
def test_every_injector_site_is_detected(pid):
    prob = make_problem(pid)
    ref = parse_source(BANK[pid]["reference"])
    for name in BANK[pid]["injectors"]:
        sites = INJECTORS[name].sites(ref)
        assert sites, name
        for site in sites:
            buggy = apply_bugs(ref, [(name, site)])
            assert not mask_for_source(pretty(buggy), prob).all_pass, (name, site)


def test_apply_bugs_leaves_reference_untouched():
    ref = parse_source(BANK["zipZap"]["reference"])
    before = pretty(ref)
    site = INJECTORS["off_by_one"].sites(ref)[0]
    apply_bugs(ref, [("off_by_one", site)])
    assert pretty(ref) == before


def test_off_by_one_bumps_loop_bound():
    fn = parse_source("int f(String s) { int n = 0; for (int i = 5; i >= 2; i--) { n++; } return n; }")
    site = INJECTORS["off_by_one"].sites(fn)[0]
    assert "i >= 3" in pretty(apply_bugs(fn, [("off_by_one", site)]))


def test_nested_sites_are_incompatible():
    assert not compatible([("a", (("body", None),)), ("b", (("body", None), ("stmts", 0)))])
    assert compatible([("a", (("x", 0),)), ("b", (("x", 1),))])


# -- synthesis --------------------------------------------------------------

def test_synthesis_is_deterministic():
    a = synthesize_corpus(SynthConfig(n_students=8), seed=5)[1]
    b = synthesize_corpus(SynthConfig(n_students=8), seed=5)[1]
    c = synthesize_corpus(SynthConfig(n_students=8), seed=6)[1]
    assert a == b
    assert a != c


def test_zero_students_gives_empty_corpus():
    problems, rows = synthesize_corpus(SynthConfig(n_students=0), seed=0)
    assert rows == [] and len(problems) == len(BANK)


def test_synthesis_rejects_unknown_names():
    with pytest.raises(ConfigError):
        synthesize_corpus(SynthConfig(problems=["nope"]), seed=0)
    with pytest.raises(ConfigError):
        synthesize_corpus(SynthConfig(problems=["zipZap"], injectors={"zipZap": ["nope"]}), seed=0)
    with pytest.raises(ConfigError):
        # the if-else problem has no loop to break
        synthesize_corpus(SynthConfig(problems=["sortaSum"], injectors={"sortaSum": ["off_by_one"]}), seed=0)


def test_histories_fix_one_bug_at_a_time(small_corpus):
    _, subs, pairs = small_corpus
    for p in pairs:
        assert set(p.second.bugs) <= set(p.first.bugs)
        assert len(p.fixed_bugs) == 1
    assert all(s.mask.all_pass == (not s.bugs) for s in subs)


# -- ingest -----------------------------------------------------------------

def _write_rows(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


def test_ingest_orders_by_timestamp(tmp_path):
    save_problems([make_problem("zipZap")], tmp_path / "problems")
    ref = BANK["zipZap"]["reference"]
    rows = [
        {"student_id": "s1", "problem_id": "zipZap", "timestamp": "2020-01-01T10:05:00", "code": ref},
        {"student_id": "s1", "problem_id": "zipZap", "timestamp": "2020-01-01T10:00:00", "code": "broken"},
    ]
    _write_rows(tmp_path / "subs.jsonl", rows)
    subs = ingest(tmp_path / "subs.jsonl", tmp_path / "problems")
    assert [s.seq_index for s in subs] == [0, 1]
    assert subs[0].code == "broken" and set(str(subs[0].mask)) == {"0"}
    assert subs[1].mask.all_pass


@pytest.mark.parametrize("line,msg", [
    ("{not json", "invalid JSON"),
    ('{"student_id": "s", "problem_id": "p", "timestamp": "t"}', "missing field 'code'"),
    ('{"student_id": 3, "problem_id": "p", "timestamp": "t", "code": ""}', "must be a string"),
])
def test_malformed_rows_report_line(tmp_path, line, msg):
    good = '{"student_id": "s", "problem_id": "p", "timestamp": "t0", "code": ""}'
    (tmp_path / "f.jsonl").write_text(good + "\n" + line + "\n", encoding="utf-8")
    with pytest.raises(FormatError) as exc:
        read_submission_rows(tmp_path / "f.jsonl")
    assert exc.value.line == 2
    assert msg in str(exc.value)


def test_unknown_problem_and_duplicates(tmp_path):
    save_problems([make_problem("zipZap")], tmp_path / "problems")
    row = {"student_id": "s", "problem_id": "zipZap", "timestamp": "t", "code": ""}
    _write_rows(tmp_path / "dup.jsonl", [row, row])
    with pytest.raises(FormatError):
        ingest(tmp_path / "dup.jsonl", tmp_path / "problems")
    _write_rows(tmp_path / "unk.jsonl", [{**row, "problem_id": "other"}])
    with pytest.raises(UnknownProblem):
        ingest(tmp_path / "unk.jsonl", tmp_path / "problems")


# -- pairs, labels, quadruples, splits ------------------------------------------

def test_identical_consecutive_submissions_make_no_pair():
    subs = [_sub("s", 0, "01", "same"), _sub("s", 1, "01", "same"), _sub("s", 2, "11", "new")]
    pairs = build_edit_pairs(subs)
    assert len(pairs) == 1 and pairs[0].first.seq_index == 1


def test_pairs_per_history_length():
    subs = [_sub("s", i, "01", f"c{i}") for i in range(3)] + [_sub("t", 0, "01", "lone")]
    pairs = build_edit_pairs(subs)
    assert len(pairs) == 2 and {p.student_id for p in pairs} == {"s"}


def test_similarity_label_oracle():
    a = _pair("s1", "001", "011")
    assert similarity_label(a, _pair("s2", "001", "011")) == 1
    assert similarity_label(a, a) == 1
    b = _pair("s1", "1010", "1110")
    assert similarity_label(b, _pair("s2", "1010", "1110")) == 1
    assert similarity_label(b, _pair("s2", "1010", "1111")) == 0
    assert similarity_label(a, _pair("s2", "001", "111")) == 0
    assert similarity_label(a, _pair("s2", "000", "011")) == 0
    with pytest.raises(ProblemMismatch):
        similarity_label(a, _pair("s2", "001", "011", pid="q"))


def test_quadruple_balance_and_labels(small_corpus):
    _, _, pairs = small_corpus
    quads = build_quadruples(pairs, 200, 0.5, seed=0)
    assert len(quads) == 200
    assert sum(q.label for q in quads) == 100
    for q in quads:
        assert q.pair_a.problem_id == q.pair_b.problem_id
        assert q.label == similarity_label(q.pair_a, q.pair_b)
        assert q.pair_a.ref != q.pair_b.ref


def test_quadruple_sampling_is_seeded(small_corpus):
    _, _, pairs = small_corpus
    a = [quadruple_to_json(q) for q in build_quadruples(pairs, 50, 0.5, seed=4)]
    b = [quadruple_to_json(q) for q in build_quadruples(pairs, 50, 0.5, seed=4)]
    assert a == b


def test_single_transition_group_has_no_negatives():
    pairs = [_pair(f"s{i}", "00", "01") for i in range(4)]
    with pytest.raises(InsufficientData):
        build_quadruples(pairs, 4, 0.5)


def test_insufficient_positives():
    pairs = [_pair("s1", "00", "01"), _pair("s2", "00", "11")]
    with pytest.raises(InsufficientData):
        build_quadruples(pairs, 2, 0.5)
    assert build_quadruples(pairs, 0) == []


def test_split_is_disjoint_and_sized():
    students = [f"s{i:03d}" for i in range(100)]
    split = split_by_student(students, (0.9, 0.05, 0.05), seed=1)
    sets = [set(split.train), set(split.validation), set(split.test)]
    assert [len(s) for s in sets] == [90, 5, 5]
    assert not (sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2])
    assert set().union(*sets) == set(students)
    with pytest.raises(ValueError):
        split_by_student(students, (0.5, 0.5, 0.5))


def test_split_edge_fractions_and_seed():
    students = [f"s{i}" for i in range(20)]
    split = split_by_student(students, (1.0, 0.0, 0.0), seed=0)
    assert sorted(split.train) == sorted(students) and not split.validation and not split.test
    a = split_by_student(students, (0.5, 0.25, 0.25), seed=3)
    b = split_by_student(students, (0.5, 0.25, 0.25), seed=3)
    assert (a.train, a.validation, a.test) == (b.train, b.validation, b.test)


def test_split_drops_cross_split_quadruples(small_corpus):
    _, subs, pairs = small_corpus
    quads = build_quadruples(pairs, 100, 0.5, seed=2)
    split = split_by_student({s.student_id for s in subs}, (0.6, 0.2, 0.2), seed=0, quadruples=quads)
    kept = sum(len(v) for v in split.quadruples.values())
    assert kept < len(quads)
    for name, qs in split.quadruples.items():
        ids = set(getattr(split, name))
        assert all(q.pair_a.student_id in ids and q.pair_b.student_id in ids for q in qs)


def test_quadruple_json_round_trip(tmp_path, small_corpus):
    _, subs, pairs = small_corpus
    index = {s.ref: s for s in subs}
    quads = build_quadruples(pairs, 20, 0.5, seed=0)
    write_jsonl(tmp_path / "q.jsonl", [{"_meta": {"x": 1}}] + [quadruple_to_json(q) for q in quads])
    back = [quadruple_from_json(d, index) for d in read_jsonl(tmp_path / "q.jsonl")]
    assert back == quads


# -- vocabulary ---------------------------------------------------------------

def test_vocab_reserved_ids_and_round_trip(small_corpus):
    _, subs, _ = small_corpus
    vocab = build_vocab(s.code for s in subs)
    assert vocab.itos[:4] == ["<pad>", "<s>", "</s>", "<unk>"]
    assert (PAD, BOS, EOS, UNK) == (0, 1, 2, 3)
    for s in subs[:20]:
        ids = encode(s.code, vocab)
        assert ids[0] == BOS and ids[-1] == EOS
        assert decode(ids, vocab).split(" ") == lexemes(s.code)
    assert Vocab.from_json(json.loads(json.dumps(vocab.to_json()))).itos == vocab.itos


def test_encode_unknown_and_truncation(caplog):
    vocab = build_vocab(["int x = 1 ;"])
    ids = encode("int y = 1 ;", vocab)
    assert UNK in ids
    long_ids = encode("x " * 50, vocab, max_len=10)
    assert len(long_ids) == 10 and long_ids[-1] == EOS
    assert "truncating" in caplog.text


def test_empty_code_encodes_to_markers():
    assert encode("", build_vocab(["a"])) == [BOS, EOS]


def test_decode_stops_at_eos():
    vocab = build_vocab(["a b"])
    a, b = vocab.stoi["a"], vocab.stoi["b"]
    assert decode([BOS, a, PAD, b, EOS, a], vocab) == "a b"


def test_vocab_hash_mismatch_is_detected():
    vocab = build_vocab(["a b"])
    d = vocab.to_json()
    d["hash"] = "0" * 16
    with pytest.raises(ValueError):
        Vocab.from_json(d)


def test_label_matches_recomputed_masks(small_corpus):
    pm, _, pairs = small_corpus
    rng = random.Random(0)
    for q in rng.sample(build_quadruples(pairs, 80, 0.5, seed=9), 30):
        masks = [mask_for_source(s.code, pm[s.problem_id])
                 for s in (q.pair_a.first, q.pair_a.second, q.pair_b.first, q.pair_b.second)]
        assert q.label == int(masks[0] == masks[2] and masks[1] == masks[3])
