"""Recomputes visible features from raw landmark coordinates.

Written independently of the C++ code: angles come from atan2 of the two rays
rather than from a clamped dot product.
"""
import json
import math
import sys


def dist(p, q):
    return math.sqrt((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2)


def mid(p, q):
    return ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2)


def angle(v, a, b):
    t = math.atan2(a[1] - v[1], a[0] - v[0]) - math.atan2(b[1] - v[1], b[0] - v[0])
    t = abs(math.remainder(t, 2 * math.pi))
    return t


def face(f):
    h = dist(f["face_top"], f["face_bottom"])
    le = mid(f["left_eye_outer"], f["left_eye_inner"])
    re = mid(f["right_eye_outer"], f["right_eye_inner"])
    eyes = mid(le, re)
    m = mid(f["mouth_top"], f["mouth_bottom"])
    lengths = [
        dist(f["left_eye_outer"], f["left_eye_inner"]),
        dist(f["right_eye_outer"], f["right_eye_inner"]),
        dist(f["mouth_left"], f["mouth_right"]),
        dist(f["left_eye_top"], f["left_eye_bottom"]),
        dist(f["right_eye_top"], f["right_eye_bottom"]),
        dist(f["mouth_top"], f["mouth_bottom"]),
        dist(le, re),
        (dist(le, f["left_brow_center"]) + dist(re, f["right_brow_center"])) / 2,
        dist(eyes, m),
        dist(eyes, f["nose_tip"]),
        dist(f["nose_tip"], m),
    ]
    return [x / h for x in lengths] + [angle(le, re, m), angle(re, le, m), angle(m, le, re)]


def posture(p):
    h = dist(p["head"], mid(p["left_ankle"], p["right_ankle"]))
    out = []
    for side in ("left", "right"):
        out.append(angle(p[side + "_elbow"], p[side + "_shoulder"], p[side + "_wrist"]))
    for side in ("left", "right"):
        out.append(angle(p[side + "_shoulder"], p["neck"], p[side + "_elbow"]))
    for side in ("left", "right"):
        out.append(angle(p[side + "_hip"], p["neck"], p[side + "_knee"]))
    out += [
        dist(p["left_wrist"], p["right_wrist"]) / h,
        dist(p["left_wrist"], p["head"]) / h,
        dist(p["right_wrist"], p["head"]) / h,
        dist(p["left_shoulder"], p["right_shoulder"]) / h,
        dist(p["left_hip"], p["right_hip"]) / h,
        dist(p["head"], p["neck"]) / h,
    ]
    for side in ("left", "right"):
        out.append(dist(p[side + "_shoulder"], p[side + "_elbow"]) / dist(p[side + "_elbow"], p[side + "_wrist"]))
    for side in ("left", "right"):
        out.append(dist(p[side + "_hip"], p[side + "_knee"]) / dist(p[side + "_knee"], p[side + "_ankle"]))
    return out


def main(path):
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            out = {"id": rec["id"]}
            if "face" in rec:
                out["face"] = face(rec["face"])
            if "posture" in rec:
                out["posture"] = posture(rec["posture"])
            print(json.dumps(out))


if __name__ == "__main__":
    main(sys.argv[1])
