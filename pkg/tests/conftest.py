import numpy as np
import pytest

from collarwave import synth
from collarwave.features import apply_normalizer, featurize, fit_normalizer
from collarwave.ingest import RawRecording
from collarwave.models import TrainConfig, train
from collarwave.preprocess import label_windows, make_windows

_criteria: dict[int, tuple[str, str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call":
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    if rep.failed and not detail:
        detail = str(call.excinfo.value).splitlines()[0] if call.excinfo else ""
    _criteria[number] = ("PASS" if rep.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        status, title, detail = _criteria[number]
        line = f"{status} criterion {number:2d}: {title}"
        terminalreporter.write_line(f"{line} ({detail})" if detail else line)


def grid_recording(n, rate=12.5, t0=0.0, seed=0, device_id="dev"):
    rng = np.random.default_rng(seed)
    t = t0 + np.arange(n) * (1000.0 / rate)
    return RawRecording(device_id, rate, t, rng.uniform(-2, 2, (n, 3)))


def corpus_dataset(seed=0, **kw):
    windows = []
    for rec, track in synth.corpus(seed=seed, **kw):
        windows += label_windows(make_windows(rec), track)
    return featurize(windows)


@pytest.fixture(scope="session")
def synthetic_ds():
    return corpus_dataset(seed=0)


@pytest.fixture(scope="session")
def trained_models(synthetic_ds):
    stats = fit_normalizer(synthetic_ds)
    norm = apply_normalizer(synthetic_ds, stats)
    return {kind: train(norm, TrainConfig(kind, seed=3), stats)
            for kind in ("naive_bayes", "logreg", "knn", "random_forest", "svm_linear")}


def write_fixture_corpus(directory, seed=0):
    """Binary logs plus annotation files for the synthetic dogs; returns (cwa, csv) path pairs."""
    from collarwave.ingest import write_annotations_csv, write_cwa

    out = []
    for rec, track in synth.corpus(seed=seed):
        cwa = directory / f"{rec.device_id}.cwa"
        ann = directory / f"{rec.device_id}_annotations.csv"
        cwa.write_bytes(write_cwa(rec))
        ann.write_text(write_annotations_csv(track))
        out.append((cwa, ann))
    return out
