"""Regenerates the bundled example files in assets/ (fixed seed)."""
import pathlib
import sys

import numpy as np

out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "assets")
out.mkdir(parents=True, exist_ok=True)
rng = np.random.default_rng(20240607)


def fmt(v):
    return f"{v:.6g}"


# 50 -> 200 -> 10 classifier with He-style random weights.
dims = [50, 200, 10]
with open(out / "classifier.net", "w") as f:
    f.write("relu-net v1\n")
    f.write("dims " + " ".join(map(str, dims)) + "\n")
    for l in range(1, len(dims)):
        w = rng.normal(0.0, np.sqrt(2.0 / dims[l - 1]), size=(dims[l], dims[l - 1]))
        b = rng.normal(0.0, 0.1, size=dims[l])
        f.write(f"layer {l} {'relu' if l < len(dims) - 1 else 'identity'}\n")
        for row in w:
            f.write(" ".join(fmt(v) for v in row) + "\n")
        f.write(" ".join(fmt(v) for v in b) + "\n")

x0 = rng.uniform(0.0, 1.0, size=dims[0])
(out / "classifier_x0.csv").write_text(",".join(fmt(v) for v in x0) + "\n")
(out / "classifier_radius.txt").write_text("0.002\n")

# Labeled training sample and a shifted, rescaled target sample (40 points each).
n = 40
xs = rng.normal(0.0, 1.0, size=n)
ys = np.where(xs + 0.3 * rng.normal(size=n) > 0.0, 1, -1)
xt = 1.1 * rng.normal(0.0, 1.0, size=n) + 0.4
with open(out / "shift_train.csv", "w") as f:
    f.write("x,y\n")
    for x, y in zip(xs, ys):
        f.write(f"{fmt(x)},{y}\n")
with open(out / "shift_target.csv", "w") as f:
    f.write("x\n")
    for x in xt:
        f.write(f"{fmt(x)}\n")

# 2-sparse centered additive model on [-1, 1]^5 with alpha = 1, beta = 0.5.
alpha, beta = 1.0, 0.5
lines = ["additive v1", "dim 5", "const 0"]
lines += [f"ref {j} -1 1" for j in range(5)]
lines += ["pwl 0 2", f"-1 {-alpha:g}", f"1 {alpha:g}"]
lines += [f"poly 2 2 {-beta / 3:.17g} 0 {beta:g}"]
(out / "sparse_additive.add").write_text("\n".join(lines) + "\n")
