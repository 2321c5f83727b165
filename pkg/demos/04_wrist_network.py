"""Train the wrist-integration network on synthesized arm fits.

Each training sample displaces a projected wrist and refits the shoulder
and elbow to reach it; the network learns to map the current arm pose plus
the normalized 2D displacement to the refitted arm.  The full-size run
(5000 samples, 200 epochs) lives in the acceptance tests; this demo uses a
smaller one by default.

Run: python3 demos/04_wrist_network.py [--samples 1000] [--epochs 60]
"""

import argparse
import time

import numpy as np

from wholebody.toy import make_toy_model
from wholebody.wristnet import WristNet, synthesize_dataset, train, wrist_errors

parser = argparse.ArgumentParser()
parser.add_argument("--samples", type=int, default=1000)
parser.add_argument("--epochs", type=int, default=60)
args = parser.parse_args()

toy = make_toy_model()
start = time.perf_counter()
data = synthesize_dataset(toy, args.samples, seed=0)
print(f"{len(data)} samples in {time.perf_counter() - start:.1f} s ({data.failed} arm fits rejected)")
print(f"  arm fits cut the wrist cost by at least {100 * (1 - (data.cost_after / data.cost_before).max()):.2f}%")

train_set, test_set = data.split(0.2)
net = WristNet.initialize(seed=0)
print(f"network {' -> '.join(map(str, net.dims))}, {net.num_parameters()} parameters")
start = time.perf_counter()
net, curve = train(net, train_set, epochs=args.epochs)
print(f"trained {args.epochs} epochs in {time.perf_counter() - start:.1f} s")
for epoch in np.unique(np.linspace(0, args.epochs, 6).astype(int)):
    print(f"  epoch {epoch:4d}  loss {curve[epoch]:.5f}")

base, adjusted = wrist_errors(net, test_set, toy)
print(f"\nheld-out 2D wrist error: copy-paste {base.mean():.2f} px, wrist-net {adjusted.mean():.2f} px "
      f"(ratio {adjusted.mean() / base.mean():.3f})")
