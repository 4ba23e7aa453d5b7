import shutil
from pathlib import Path

import pytest

from kpmatch import corpus

FIXTURE_DIR = Path(__file__).parent / "fixtures" / "synthetic"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURE_DIR


@pytest.fixture(scope="session")
def train_ds():
    return corpus.load_argkp(FIXTURE_DIR / "corpus", corpus.Split.TRAIN)


@pytest.fixture(scope="session")
def dev_ds():
    return corpus.load_argkp(FIXTURE_DIR / "corpus", corpus.Split.DEV)


@pytest.fixture(scope="session")
def test_ds():
    return corpus.load_argkp(FIXTURE_DIR / "corpus", corpus.Split.TEST)


@pytest.fixture(scope="session")
def embeddings():
    return corpus.load_embeddings(FIXTURE_DIR / "embeddings.jsonl")


@pytest.fixture()
def fixture_copy(tmp_path):
    """A throwaway copy of the bundled fixture for tests that mutate files."""
    dest = tmp_path / "synthetic"
    shutil.copytree(FIXTURE_DIR, dest)
    return dest


def write_corpus(
    directory: Path,
    split: str,
    arguments: list[tuple],
    keypoints: list[tuple],
    labels: list[tuple],
) -> Path:
    """Write a minimal ArgKP-shaped split into `directory`."""
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / f"arguments_{split}.csv", "w", encoding="utf-8") as fh:
        fh.write("arg_id,argument,topic,stance\n")
        for row in arguments:
            fh.write(",".join(str(x) for x in row) + "\n")
    with open(directory / f"key_points_{split}.csv", "w", encoding="utf-8") as fh:
        fh.write("key_point_id,key_point,topic,stance\n")
        for row in keypoints:
            fh.write(",".join(str(x) for x in row) + "\n")
    with open(directory / f"labels_{split}.csv", "w", encoding="utf-8") as fh:
        fh.write("arg_id,key_point_id,label\n")
        for row in labels:
            fh.write(",".join(str(x) for x in row) + "\n")
    return directory
