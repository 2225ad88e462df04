import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite", deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


@pytest.fixture(scope="session")
def small_corpus():
    """A 20-image synthetic corpus shared by the slower end-to-end tests."""
    from qsqs.synthetic import generate_corpus
    return generate_corpus(num_images=20, seed=11)


@pytest.fixture(scope="session")
def small_corpus_files(small_corpus, tmp_path_factory):
    from qsqs.io import save_detections, save_ground_truth
    dets, gts = small_corpus
    root = tmp_path_factory.mktemp("corpus")
    det_path = root / "detections.json"
    gt_path = root / "ground_truth.json"
    save_detections(dets, det_path)
    save_ground_truth(gts, gt_path)
    return det_path, gt_path
