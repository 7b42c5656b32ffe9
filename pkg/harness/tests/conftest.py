import pytest

from testkit import make_image_folder


@pytest.fixture(scope="session")
def folder10(tmp_path_factory):
    root = tmp_path_factory.mktemp("imgs10")
    return make_image_folder(root, ["cat", "dog"], 5, seed=11)


@pytest.fixture(scope="session")
def folder100(tmp_path_factory):
    root = tmp_path_factory.mktemp("imgs100")
    return make_image_folder(root, ["a", "b", "c", "d"], 25, seed=42)
