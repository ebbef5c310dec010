from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mtt.cli import load_prelude, run_text  # noqa: E402
from mtt.elab import Session  # noqa: E402
from mtt.surface.parser import parse_term  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


def corpus_files() -> list[Path]:
    return sorted(CORPUS.glob("*.mtt"))


def extend(env, text: str, file: str = "<test>"):
    """Environment after processing ``text``; fails the test on any diagnostic."""
    report, env = run_text(text, env, file)
    assert report.ok, report.transcript()
    return env


def elaborate(env, text: str):
    """Closed elaboration of a term written in surface syntax."""
    ops = {k: (e.level, e.assoc) for k, e in env.notations.items()}
    return Session(env).elaborate_closed(env, parse_term(text, ops))


@pytest.fixture(scope="session")
def prelude():
    return load_prelude()


@pytest.fixture(scope="session")
def group_env(prelude):
    return extend(prelude, """
        Axiom G : group.
        Axiom g h : G.
        Axiom i j : int.
        Axiom a b c : nat.
        Axiom H : a <= b.
        Axiom H1 : a <= b.
        Axiom H2 : b <= c.
    """)


@pytest.fixture(scope="session")
def canonical_env(group_env):
    return extend(group_env, "Canonical Structure IntGroup.")


@pytest.fixture(scope="session")
def corpus_runs(prelude):
    """(path, report, per-command environments) for every corpus file."""
    from mtt.elab import Session
    from mtt.surface.parser import iter_commands

    out = []
    for path in corpus_files():
        session = Session(prelude)
        envs, results = [], []
        ops = lambda: {k: (e.level, e.assoc) for k, e in session.env.notations.items()}  # noqa: E731
        for cmd in iter_commands(path.read_text(), ops, str(path)):
            env_before = session.env
            res = session.process(cmd)
            results.append(res)
            envs.append(env_before)
            if not res.ok:
                break
        out.append((path, results, envs))
    return out


@pytest.fixture(scope="session")
def corpus_elaborations(corpus_runs):
    """(environment, closed term, type) for every term the elaborator produced on the corpus."""
    items = []
    for _, results, envs in corpus_runs:
        for res, env in zip(results, envs):
            for term, ty in res.elaborated:
                items.append((env, term, ty))
    return items
