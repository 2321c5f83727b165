"""Copy-paste integration of simulated body, hand and face estimates.

The hands' global wrist orientation is converted into a local wrist
rotation under the body's arm chain, so the whole-body hand points the way
the hand module said it should.

Run: python3 demos/02_copy_paste.py
"""

import numpy as np

from wholebody.integrate import copy_paste
from wholebody.model import global_rotations
from wholebody.rotation import rodrigues
from wholebody.synthetic import simulate_frame
from wholebody.toy import make_toy_model

toy = make_toy_model()
frame, truth = simulate_frame(toy, np.random.default_rng(1))
e = frame.estimates
result = copy_paste(e["body"], e["left_hand"], e["right_hand"], e["face"], toy)

R = global_rotations(toy, result.pose)
for side in ("left", "right"):
    wrist = toy.joint_index(f"{side}_wrist")
    err = np.linalg.norm(R[wrist] - rodrigues(e[f"{side}_hand"].global_orient))
    print(f"{side} wrist: global orientation matches the hand estimate to {err:.1e}")

sources = {}
for joint, src in result.provenance.items():
    sources.setdefault(src, []).append(joint)
for src, joints in sorted(sources.items()):
    print(f"{src:10s} -> {len(joints):2d} joints ({', '.join(joints[:4])}{', ...' if len(joints) > 4 else ''})")

# a low-confidence hand is ignored: the wrist falls back to the body estimate
e["left_hand"].keypoints2d[:, 2] = 0.05
fallback = copy_paste(e["body"], e["left_hand"], e["right_hand"], e["face"], toy)
print("\nwith an unreliable left hand the left wrist comes from:", fallback.provenance["left_wrist"])
