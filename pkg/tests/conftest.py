import numpy as np
import pytest

from lcprune import FeaturePack, LayerMatrix


def make_pack(feats_per_layer, labels=None, probs=None, perplexities=None,
              split="unsplit"):
    layers = [LayerMatrix(f"l{i}", np.asarray(f, dtype=np.float32))
              for i, f in enumerate(feats_per_layer)]
    lab = None if labels is None else np.asarray(labels, dtype="<u4")
    pr = None if probs is None else np.asarray(probs, dtype=np.float32)
    pp = None if perplexities is None else np.asarray(perplexities, dtype=np.float32)
    return FeaturePack(layers=layers, labels=lab, probs=pr, perplexities=pp,
                       split=split)


@pytest.fixture
def tiny_pack():
    return make_pack([[[0.0, 0.0], [1.0, 0.0], [5.0, 5.0]]], labels=[0, 1, 0])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for status, name in RESULTS:
        terminalreporter.write_line(f"[{status}] {name}")
