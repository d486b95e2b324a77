import pytest

from codeedit.corpus import SynthConfig, build_edit_pairs, ingest_rows, synthesize_corpus


@pytest.fixture(scope="session")
def small_corpus():
    """A 30-student synthetic corpus: ``(problems by id, submissions, pairs)``."""
    problems, rows = synthesize_corpus(SynthConfig(n_students=30), seed=3)
    pm = {p.problem_id: p for p in problems}
    subs = ingest_rows(rows, pm)
    return pm, subs, build_edit_pairs(subs)


TINY_OVERRIDES = [
    "--corpus.n_students", "40", "--dataset.fractions", "0.6,0.2,0.2",
    "--dataset.train_quadruples", "60", "--dataset.validation_quadruples", "16",
    "--dataset.test_quadruples", "16", "--dataset.max_len", "128",
    "--model.d", "16", "--model.layers", "1", "--model.heads", "2", "--model.ff_dim", "32",
    "--train.epochs", "1", "--cluster.k", "3",
]
PIPELINE = ("gen-corpus", "ingest", "exec-tests", "build-dataset", "train", "eval", "cluster")


def run_cli(out_dir, command, *argv):
    """Run one subcommand with the tiny overrides; later flags in ``argv`` win."""
    from codeedit.cli import main
    return main([command, "--paths.output_dir", str(out_dir), *TINY_OVERRIDES, *argv])


@pytest.fixture(scope="session")
def tiny_runs(tmp_path_factory):
    """Two complete pipeline runs with the same seed in separate directories."""
    outs = []
    for name in ("run_a", "run_b"):
        out = tmp_path_factory.mktemp(name)
        for cmd in PIPELINE:
            assert run_cli(out, cmd) == 0, cmd
        outs.append(out)
    return outs


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
