import numpy as np
import pytest

from ternrc import make_glyph_dataset, write_idx_images, write_idx_labels


@pytest.fixture(scope="session")
def glyph_train():
    return make_glyph_dataset(12000, seed=1)


@pytest.fixture(scope="session")
def glyph_test():
    return make_glyph_dataset(8000, seed=2)


@pytest.fixture(scope="session")
def idx_files(tmp_path_factory, glyph_train, glyph_test):
    """Synthetic digit partitions written as IDX files, so the harness runs
    through its normal ingestion path."""
    root = tmp_path_factory.mktemp("idx")
    paths = {
        "images": root / "train-images-idx3-ubyte",
        "labels": root / "train-labels-idx1-ubyte",
        "test_images": root / "t10k-images-idx3-ubyte",
        "test_labels": root / "t10k-labels-idx1-ubyte",
    }
    write_idx_images(glyph_train.images, paths["images"])
    write_idx_labels(glyph_train.labels, paths["labels"])
    write_idx_images(glyph_test.images, paths["test_images"])
    write_idx_labels(glyph_test.labels, paths["test_labels"])
    return {k: str(v) for k, v in paths.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(0)
