import pytest

from tactiletex.dataset import assign_split, generate_synthetic_corpus


@pytest.fixture(scope="session")
def pair_corpus(tmp_path_factory):
    # 15 pairs at 64x64, split 12 train / 3 test
    root = tmp_path_factory.mktemp("hg_corpus")
    manifest = generate_synthetic_corpus(root, entries_per_category=5, resolution=(64, 64), seed=3)
    return assign_split(manifest, train_fraction=0.8, seed=0)


@pytest.fixture(scope="session")
def quick_result(tmp_path_factory, pair_corpus):
    from heightgen import TrainingConfig, train

    out = tmp_path_factory.mktemp("hg_artifact")
    config = TrainingConfig(epochs=2, pretrain_epochs=1, seed=0)
    return train(config, pair_corpus, out)
