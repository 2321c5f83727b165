"""Build the toy whole-body model, pose it, and poke at the rotation helpers.

Run: python3 demos/01_model_and_rotations.py
"""

import numpy as np

from wholebody.model import global_rotations, pose_model
from wholebody.rotation import MIRROR, mirror_axis_angle, rodrigues, rodrigues_inverse
from wholebody.toy import make_toy_model, sample_pose

toy = make_toy_model()
print(f"toy model: {toy.num_vertices} vertices, {toy.num_joints} joints, {toy.num_keypoints} keypoints, "
      f"{toy.num_shape} shape / {toy.num_expression} expression coefficients, height {toy.height():.3f} m")
for part in ("body", "left_hand", "right_hand", "face"):
    print(f"  {part:10s} {len(toy.part_vertices[part]):4d} vertices")

rng = np.random.default_rng(0)
pose = sample_pose(toy, rng)
pose.shape = rng.normal(0, 1, toy.num_shape)
mesh = pose_model(toy, pose)
wrist = toy.joint_index("right_wrist")
print("\nposed right wrist at", np.round(mesh.joints3d[wrist], 4))
print("its global rotation:\n", np.round(global_rotations(toy, pose)[wrist], 4))

# axis-angle round trip, including an angle right at pi
for aa in ([0.3, -0.2, 0.1], [0.0, 0.0, np.pi], [1e-10, 0.0, 0.0]):
    back = rodrigues_inverse(rodrigues(aa))
    print(f"\n{aa} -> {np.round(back, 12)}")

# mirroring a rotation is conjugation by diag(-1, 1, 1)
a = np.array([0.4, 0.7, -0.2])
gap = np.abs(rodrigues(mirror_axis_angle(a)) - MIRROR @ rodrigues(a) @ MIRROR).max()
print(f"\nmirror {a} -> {mirror_axis_angle(a)}, conjugation gap {gap:.1e}")
