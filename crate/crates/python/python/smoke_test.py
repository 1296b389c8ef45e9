"""Exercises the extension module end to end on a tiny corpus."""

import os
import tempfile

import viewspan_py as vs


def main():
    corpus = vs.Corpus(n_real=8, n_fake=8, seed=3)
    assert len(corpus) == 16
    ids = corpus.ids()
    info = corpus.info(ids[0])
    assert info["label"] == "real" and info["generator"] == "real"
    assert corpus.manifest_csv().startswith("id,")

    videos = [corpus.video(i) for i in ids]
    labels = [corpus.info(i)["label"] for i in ids]
    real = [v.residual() for v, l in zip(videos, labels) if l == "real"]
    fake = [v.residual() for v, l in zip(videos, labels) if l == "fake"]
    assert min(fake) > max(real), (real, fake)

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "video")
        videos[0].save(path)
        again = vs.Video.load(path)
        assert again.frame_count == videos[0].frame_count == 6
        # frames are stored as f32
        assert max(abs(a - b) for a, b in zip(again.frame(2), videos[0].frame(2))) < 1e-6

        detector, losses = vs.Detector.train(videos, labels, epochs=30, seed=3)
        assert len(losses) == 31 and losses[-1] < losses[0]
        ckpt = os.path.join(tmp, "detector.prm")
        detector.save(ckpt)
        assert vs.Detector.load(ckpt) == detector

    trace = detector.detect(videos[-1])
    assert len(trace["frame_scores"]) == 5
    assert abs(sum(trace["frame_scores"]) / 5 - trace["video_score"]) < 1e-12
    assert trace["label"] in ("real", "fake")

    assert abs(vs.average_precision([0.9, 0.8, 0.7, 0.6], [True, False, True, False]) - 5 / 6) < 1e-12
    f = 120.0
    points = [[(c - 8) / f * 2.0, (r - 8) / f * 2.0, 2.0] for r in range(16) for c in range(16)]
    assert abs(vs.estimate_focal(points, 16, 16) - f) < 1e-6

    larger = vs.Corpus(n_real=12, n_fake=12, seed=4)
    report = vs.train_test(larger, detector="residual", seed=4)
    assert 0.0 <= report["video_accuracy"] <= 1.0
    matrix = vs.cross_prompt(larger, detector="residual", seed=4)
    assert len(matrix) == 3 and all(len(row) == 4 for row in matrix)

    try:
        vs.Video.load("/nonexistent/video")
    except ValueError:
        pass
    else:
        raise AssertionError("missing directory should raise")
    print("smoke test passed")


if __name__ == "__main__":
    main()
