import pytest

from bfa_casestudy.data import make_dataset, train_float_mlp
from bfa_casestudy.quantize import QuantizedModel


@pytest.fixture(scope="session")
def dataset():
    return make_dataset(seed=0)


@pytest.fixture(scope="session")
def trained_model(dataset):
    """Quantized 16-16-4 classifier fit on the synthetic clusters."""
    X, y, _, _ = dataset
    weights, biases = train_float_mlp(X, y, hidden=16, seed=0)
    return QuantizedModel(weights, biases)


@pytest.fixture()
def model(trained_model):
    return trained_model.copy()
