"""Train and quantize the shipped reference MNIST MLP.

Offline tooling; needs torch, which the package itself does not import.

    python scripts/build_reference_model.py /path/to/mnist_5k.csv.gz

The input is the 5000-image MNIST subset bundled in the mlxtend wheel
(``mlxtend/data/data/mnist_5k.csv.gz``: 784 pixel columns then the label).
1792 images (7 x 256) are held out and written as IDX files; the rest train
the float model, which is then quantized to int8 weights with int32 biases.
"""

import argparse
import gzip
import json
import struct
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

DIMS = (784, 256, 256, 256, 10)
HELD_OUT = 7 * 256


def write_idx(path, array, magic):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", magic))
        for d in array.shape:
            fh.write(struct.pack(">I", d))
        fh.write(array.astype(np.uint8).tobytes())


def augment(x, gen):
    n = x.shape[0]
    angle = (torch.rand(n, generator=gen) - 0.5) * (2 * np.pi * 12 / 360)
    scale = 1 + (torch.rand(n, generator=gen) - 0.5) * 0.2
    shift = (torch.rand(n, 2, generator=gen) - 0.5) * 0.2
    cos, sin = torch.cos(angle) / scale, torch.sin(angle) / scale
    theta = torch.stack(
        [torch.stack([cos, -sin, shift[:, 0]], 1), torch.stack([sin, cos, shift[:, 1]], 1)], 1
    )
    grid = F.affine_grid(theta, (n, 1, 28, 28), align_corners=False)
    return F.grid_sample(x.view(n, 1, 28, 28), grid, align_corners=False).view(n, 784)


def build_net():
    layers = []
    for i, (a, b) in enumerate(zip(DIMS[:-1], DIMS[1:])):
        layers.append(torch.nn.Linear(a, b))
        if i < len(DIMS) - 2:
            layers.append(torch.nn.ReLU())
    return torch.nn.Sequential(*layers)


def train(xtr, ytr, epochs, seed):
    torch.manual_seed(seed)
    gen = torch.Generator().manual_seed(seed)
    net = build_net()
    opt = torch.optim.Adam(net.parameters(), lr=1e-3, weight_decay=1e-5)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, epochs)
    x = torch.tensor(xtr, dtype=torch.float32)
    y = torch.tensor(ytr, dtype=torch.long)
    for _ in range(epochs):
        perm = torch.randperm(len(x), generator=gen)
        for s in range(0, len(x), 64):
            idx = perm[s : s + 64]
            loss = F.cross_entropy(net(augment(x[idx], gen)), y[idx])
            opt.zero_grad()
            loss.backward()
            opt.step()
        sched.step()
    return net


def quantize_net(net, xcal):
    """Symmetric per-tensor int8 weights; activation scales from calibration data."""
    linears = [m for m in net if isinstance(m, torch.nn.Linear)]
    in_scale = 1.0 / 127
    h = xcal
    out = []
    for li, lin in enumerate(linears):
        w = lin.weight.detach().numpy().astype(np.float64)
        b = lin.bias.detach().numpy().astype(np.float64)
        w_scale = float(np.abs(w).max() / 127)
        wq = np.clip(np.rint(w / w_scale), -128, 127).astype(np.int8)
        bq = np.rint(b / (w_scale * in_scale)).astype(np.int32)
        h = np.maximum(h @ w.T + b, 0) if li < len(linears) - 1 else h @ w.T + b
        last = li == len(linears) - 1
        out_scale = float(np.percentile(h, 99.99) / 127) if not last else 1.0
        out.append(dict(wq=wq, bq=bq, w_scale=w_scale, in_scale=in_scale, out_scale=out_scale))
        in_scale = out_scale
    return out


def quantized_forward(qlayers, pixels):
    a = np.clip(np.rint(pixels / 255.0 * 127), -128, 127).astype(np.int64).T
    for li, q in enumerate(qlayers):
        acc = q["wq"].astype(np.int64) @ a + q["bq"].astype(np.int64)[:, None]
        acc = ((acc + 2**23) % 2**24) - 2**23
        if li == len(qlayers) - 1:
            return acc.argmax(axis=0)
        real = np.maximum(acc, 0) * (q["w_scale"] * q["in_scale"])
        a = np.clip(np.rint(real / q["out_scale"]), 0, 127).astype(np.int64)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/undervolt/data"))
    ap.add_argument("--epochs", type=int, default=60)
    ap.add_argument("--seed", type=int, default=2018)
    args = ap.parse_args()

    raw = np.loadtxt(gzip.open(args.csv), delimiter=",")
    pixels, labels = raw[:, :784].astype(np.uint8), raw[:, 784].astype(np.int64)
    perm = np.random.default_rng(args.seed).permutation(len(labels))
    held, tr = perm[:HELD_OUT], perm[HELD_OUT:]

    net = train(pixels[tr] / 255.0, labels[tr], args.epochs, args.seed)
    with torch.no_grad():
        fpred = net(torch.tensor(pixels[held] / 255.0, dtype=torch.float32)).argmax(1).numpy()
    qlayers = quantize_net(net, pixels[tr] / 255.0)
    qpred = quantized_forward(qlayers, pixels[held])
    print(f"float acc {np.mean(fpred == labels[held]):.4f}  int8 acc {np.mean(qpred == labels[held]):.4f}")

    out = Path(args.out)
    (out / "mnist").mkdir(parents=True, exist_ok=True)
    (out / "model").mkdir(parents=True, exist_ok=True)
    write_idx(out / "mnist/heldout-images-idx3-ubyte", pixels[held].reshape(-1, 28, 28), 0x00000803)
    write_idx(out / "mnist/heldout-labels-idx1-ubyte", labels[held], 0x00000801)
    manifest = {"name": "mnist-mlp-784x256x256x256x10", "layers": []}
    for li, q in enumerate(qlayers):
        wname, bname = f"fc{li + 1}.w.i8", f"fc{li + 1}.b.i32"
        q["wq"].astype("<i1").tofile(out / "model" / wname)
        q["bq"].astype("<i4").tofile(out / "model" / bname)
        manifest["layers"].append(
            {
                "in_dim": DIMS[li],
                "out_dim": DIMS[li + 1],
                "weights": wname,
                "bias": bname,
                "weight_scale": q["w_scale"],
                "input_scale": q["in_scale"],
                "output_scale": q["out_scale"],
                "activation": "relu" if li < len(qlayers) - 1 else "none",
            }
        )
    (out / "model/manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
