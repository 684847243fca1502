"""Smoke test for the fallstream Python module.

Build and install first:  pip install -e . --no-build-isolation
Then run:                 python python/smoke_test.py
"""

import math
import random
import tempfile
from pathlib import Path

import fallstream

G = 9.80665


def walking(n, rng):
    out = []
    for i in range(n):
        b = 2.5 * math.sin(2 * math.pi * 1.6 * i / 20)
        out.append((0.3 * b + rng.uniform(-0.3, 0.3), G + b, 0.6 * b))
    return out


def falling(n, rng):
    out = []
    for i in range(n):
        if i < n // 2:
            out.append((0.5, G + rng.uniform(-0.3, 0.3), 0.3))
        else:
            k = i - n // 2
            spike = 25.0 / (k + 1) if k < 4 else 0.0
            out.append((G * 0.95 + spike, 0.4 + 0.6 * spike, 1.0 + rng.uniform(-0.3, 0.3)))
    return out


def write_trial(path, samples, code):
    lines = [f"{i * 50},{ax!r},{ay!r},{az!r},{code}" for i, (ax, ay, az) in enumerate(samples)]
    path.write_text("\n".join(lines) + "\n")


def main():
    rng = random.Random(0)
    names = fallstream.feature_names()
    assert len(names) == fallstream.FEATURE_COUNT == 58
    assert fallstream.activity_class("FOL") == "FALL"
    assert fallstream.activity_class("WAL") == "ADL"

    window = walking(200, rng)
    feats = fallstream.extract_features(window)
    assert len(feats) == 58 and all(math.isfinite(v) for v in feats)

    c = fallstream.sisfall_characteristics([(0.0, 0.0, 0.0), (3.0, 1.0, 4.0)])
    assert abs(c["c2"] - 5.0) < 1e-12 and c["c8"] <= c["c9"]

    scaler = fallstream.Scaler.fit([feats, fallstream.extract_features(falling(200, rng))])
    scaled = scaler.transform(feats)
    assert all(0.0 <= v <= 1.0 for v in scaled)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        data = tmp / "data"
        data.mkdir()
        for k in range(12):
            fall = k % 2 == 0
            samples = falling(1000, rng) if fall else walking(1000, rng)
            write_trial(data / f"trial_{k:02}.csv", samples, "FOL" if fall else "WAL")

        report = fallstream.prepare(data, tmp / "features.csv")
        assert report["trials"] == 12 and report["windows"] == 60, report

        trained = fallstream.train(tmp / "features.csv", tmp / "model.json", epochs=30)
        print("train", trained)
        metrics = fallstream.evaluate(tmp / "features.csv", tmp / "model.json", split="test")
        assert metrics["accuracy"] == trained["test_accuracy"]

        model = fallstream.Model.load(tmp / "model.json")
        assert model.layer_dims == [58, 64, 32, 1]
        assert model.digest == trained["digest"]
        p, cls = model.classify(falling(200, rng))
        assert 0.0 < p < 1.0 and cls in ("FALL", "ADL")
        assert model.predict(feats) == model.classify(window)[0]

        stats = fallstream.replay(
            data / "trial_00.csv", tmp / "model.json", sinks=[f"file:{tmp / 'det.jsonl'}"]
        )
        assert stats["detections"] == 5, stats
        assert len((tmp / "det.jsonl").read_text().splitlines()) == 5
    print("ok", model)


if __name__ == "__main__":
    main()
