import numpy as np
import pytest

from alviz import dataset, engine

# Populated by the acceptance suite; echoed after the run so the verdict
# lines survive output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def small_config(**overrides):
    base = dict(
        strategies=("al", "uc", "rn"),
        batch_size=20,
        num_batches=5,
        seed=42,
        split=dataset.SplitSpec(0.25, 42),
    )
    base.update(overrides)
    return engine.ExperimentConfig(**base)


@pytest.fixture(scope="session")
def small_dataset():
    return dataset.make_synthetic("piecewise_constant", n=400, d=4, noise_sd=0.1, seed=7)


@pytest.fixture(scope="session")
def small_artifact(small_dataset):
    return engine.run_experiment(small_config(), small_dataset)


@pytest.fixture(scope="session")
def artifact_file(small_artifact, tmp_path_factory):
    path = tmp_path_factory.mktemp("artifacts") / "small.json"
    small_artifact.save(path)
    return path


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
