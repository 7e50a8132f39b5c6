"""Builds the three-scene AP fixture and scores it with pycocotools.

Writes tests/fixtures/ap_three_scene.json and the matching C++ header used by
`vlodtta check`. Rerun only if the fixture itself has to change:

    python3 tests/oracles/coco_reference.py
"""

import contextlib
import io
import json
import pathlib

import numpy as np
from pycocotools.coco import COCO
from pycocotools.cocoeval import COCOeval

ROOT = pathlib.Path(__file__).resolve().parents[2]
CLASSES = 3  # class 2 never appears in the ground truth


def build(rng):
    scenes = []
    scores = list(rng.permutation(np.arange(5, 100)) / 100.0)
    for _ in range(3):
        gts, dets = [], []
        for _ in range(int(rng.integers(2, 5))):
            c = int(rng.integers(0, 2))
            x, y = rng.uniform(0, 500, 2).round(2)
            w, h = rng.uniform(20, 120, 2).round(2)
            gts.append({"box": [x, y, round(x + w, 2), round(y + h, 2)], "class_id": c})
            for _ in range(int(rng.integers(1, 4))):
                dx, dy, dw, dh = (rng.normal(0, 0.12, 4) * [w, h, w, h]).round(2)
                wrong = rng.uniform() < 0.15
                dets.append({"box": [round(x + dx, 2), round(y + dy, 2),
                                     round(x + w + dx + dw, 2), round(y + h + dy + dh, 2)],
                             "class_id": int(rng.integers(0, CLASSES)) if wrong else c,
                             "score": scores.pop()})
        for _ in range(2):
            x, y = rng.uniform(0, 500, 2).round(2)
            w, h = rng.uniform(20, 120, 2).round(2)
            dets.append({"box": [x, y, round(x + w, 2), round(y + h, 2)],
                         "class_id": int(rng.integers(0, CLASSES)), "score": scores.pop()})
        scenes.append({"ground_truth": gts, "detections": dets})
    return scenes


def xywh(b):
    return [b[0], b[1], b[2] - b[0], b[3] - b[1]]


def reference(scenes):
    images, anns, results = [], [], []
    for i, s in enumerate(scenes):
        images.append({"id": i, "width": 640, "height": 640})
        for g in s["ground_truth"]:
            bb = xywh(g["box"])
            anns.append({"id": len(anns) + 1, "image_id": i, "category_id": g["class_id"],
                         "bbox": bb, "area": bb[2] * bb[3], "iscrowd": 0})
        for d in s["detections"]:
            results.append({"image_id": i, "category_id": d["class_id"], "bbox": xywh(d["box"]),
                            "score": d["score"]})
    gt = COCO()
    gt.dataset = {"images": images, "annotations": anns,
                  "categories": [{"id": c} for c in range(CLASSES)]}
    with contextlib.redirect_stdout(io.StringIO()):
        gt.createIndex()
        dt = gt.loadRes(results)
        ev = COCOeval(gt, dt, "bbox")
        ev.evaluate()
        ev.accumulate()
        ev.summarize()
    # precision: [T, R, K, A, M]; area "all", maxDets 100
    prec = ev.eval["precision"][:, :, :, 0, 2]
    per_class = {}
    for k in range(CLASSES):
        p = prec[:, :, k]
        if (p > -1).all():
            per_class[k] = p.mean(axis=1).tolist()
    return {"mAP": float(ev.stats[0]), "AP50": float(ev.stats[1]), "AP75": float(ev.stats[2]),
            "per_class": per_class}


def header(scenes, ref):
    lines = ["#pragma once", "",
             "// Generated by tests/oracles/coco_reference.py from pycocotools; do not edit.", "",
             "#include <vector>", "", '#include "vlodtta/eval.hpp"', "",
             "namespace vlodtta::fixtures {", "",
             "inline std::vector<ImageRecord> ap_three_scene() {",
             "  std::vector<ImageRecord> images(3);"]
    for i, s in enumerate(scenes):
        for g in s["ground_truth"]:
            b = ", ".join(repr(float(v)) for v in g["box"])
            lines.append(f"  images[{i}].ground_truth.push_back({{Box({b}), {g['class_id']}}});")
        for d in s["detections"]:
            b = ", ".join(repr(float(v)) for v in d["box"])
            lines.append(f"  images[{i}].detections.push_back({{Box({b}), {d['class_id']}, {float(d['score'])!r}}});")
    lines += ["  return images;", "}", "",
              f"inline constexpr int kApThreeSceneClasses = {CLASSES};",
              f"inline constexpr double kApThreeSceneMap = {ref['mAP']!r};",
              f"inline constexpr double kApThreeSceneAp50 = {ref['AP50']!r};",
              f"inline constexpr double kApThreeSceneAp75 = {ref['AP75']!r};", "",
              "}  // namespace vlodtta::fixtures", ""]
    return "\n".join(lines)


def main():
    scenes = build(np.random.default_rng(20240917))
    ref = reference(scenes)
    out = {"classes": CLASSES, "scenes": scenes, "expected": ref}
    (ROOT / "tests/fixtures/ap_three_scene.json").write_text(json.dumps(out, indent=1) + "\n")
    dest = ROOT / "include/vlodtta/fixtures/ap_three_scene.hpp"
    dest.parent.mkdir(exist_ok=True)
    dest.write_text(header(scenes, ref))
    print(json.dumps(ref))


if __name__ == "__main__":
    main()
