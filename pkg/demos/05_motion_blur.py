"""Motion-blur augmentation: kernels at a few intensities applied to a test pattern.

Writes ``blur_*.pgm`` next to the current directory.

Run: python3 demos/05_motion_blur.py
"""

import numpy as np

from wholebody.augment import convolve, generate_kernel, write_netpbm

# checkerboard with a bright disc, so blur direction is easy to see
y, x = np.mgrid[:128, :128]
image = (((x // 16 + y // 16) % 2) * 160 + 40).astype(np.uint8)
image[(x - 64) ** 2 + (y - 64) ** 2 < 20**2] = 255
write_netpbm("blur_input.pgm", image)

for intensity in (0.0, 0.3, 0.6, 1.0):
    k = generate_kernel(21, intensity, seed=4)
    nz = np.count_nonzero(k.weights)
    out = convolve(image, k)
    write_netpbm(f"blur_{intensity:.1f}.pgm", out)
    change = np.abs(out.astype(int) - image).mean()
    print(f"intensity {intensity:.1f}: {nz:3d} nonzero taps, sum {k.weights.sum():.12f}, mean |change| {change:.2f}")

print("\nkernel at intensity 0.6 (x100, rounded):")
print(np.round(100 * generate_kernel(21, 0.6, seed=4).weights[6:15, 6:15]).astype(int))
