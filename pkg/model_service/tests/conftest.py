import json
from pathlib import Path

import pytest

from model_service.data import load_labeled_json
from model_service.training import TrainingConfig, train

FIXTURES = Path(__file__).parent / "fixtures"


def split_fixture():
    examples = load_labeled_json(FIXTURES / "separable_200.json")
    n = len(examples)
    train_end = int(n * 0.8)
    test_end = int(n * 0.9)
    return examples[:train_end], examples[train_end:test_end], examples[test_end:]


@pytest.fixture(scope="session")
def separable_splits():
    return split_fixture()


@pytest.fixture(scope="session")
def trained_artifact(tmp_path_factory, separable_splits):
    train_set, _, validation_set = separable_splits
    artifact_dir = tmp_path_factory.mktemp("artifact")
    config = TrainingConfig(max_epochs=40)
    return train(train_set, validation_set, config, artifact_dir)
