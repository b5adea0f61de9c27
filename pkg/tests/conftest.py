import pytest

from propval.domain import PropertyType
from propval.gbdt import TrainParams, save_model, train
from propval.ingest import save_corpus
from propval.synth import synth_corpus, synth_generate


@pytest.fixture(scope="session")
def apartment_ds():
    return synth_generate(11, 300, 0.8, PropertyType.APARTMENT)


@pytest.fixture(scope="session")
def apartment_model(apartment_ds):
    return train(apartment_ds, TrainParams(num_trees=30, min_samples_leaf=10, seed=3))


@pytest.fixture(scope="session")
def service_dir(tmp_path_factory):
    """Data directory with datasets, stats, and small trained models."""
    root = tmp_path_factory.mktemp("corpus")
    datasets = synth_corpus(5, 200, 0.8)
    save_corpus(datasets, root)
    params = TrainParams(num_trees=20, min_samples_leaf=5, seed=1)
    for ptype, ds in datasets.items():
        save_model(train(ds, params), root / "models" / f"{ptype.value.lower()}.model")
    return root
