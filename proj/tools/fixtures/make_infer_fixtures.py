#!/usr/bin/env python3
"""Generate the inference parity fixtures with PyTorch.

Writes into tests/fixtures/infer/:
  G_h.v2hw, G_s.v2hw          seeded U-Net generators in the V2HW archive format
  input_NN.png                20 visual images (64x64 RGB, 8-bit)
  expected_h_NN.v2hs          raw G_h output for input NN (torch forward, float32)
  expected_s_NN.v2hs          raw G_s output for input NN

The networks are randomly initialised, not trained: the fixtures pin down the
interpreter's arithmetic, not output quality.

Usage: python3 tools/fixtures/make_infer_fixtures.py [--out DIR] [--seed N]
"""

import argparse
import json
import struct
import zlib
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torch import nn

N_INPUTS = 20
SIZE = 64


class UNet(nn.Module):
    """4 down / 4 up encoder-decoder with skip connections and a tanh head."""

    def __init__(self):
        super().__init__()
        self.e1 = nn.Conv2d(3, 8, 4, 2, 1)
        self.e2 = nn.Conv2d(8, 16, 4, 2, 1)
        self.n2 = nn.InstanceNorm2d(16, affine=True)
        self.e3 = nn.Conv2d(16, 32, 4, 2, 1)
        self.n3 = nn.InstanceNorm2d(32, affine=True)
        self.e4 = nn.Conv2d(32, 32, 4, 2, 1)
        self.d1 = nn.ConvTranspose2d(32, 32, 4, 2, 1)
        self.m1 = nn.InstanceNorm2d(32, affine=True)
        self.d2 = nn.ConvTranspose2d(64, 16, 4, 2, 1)
        self.m2 = nn.InstanceNorm2d(16, affine=True)
        self.d3 = nn.ConvTranspose2d(32, 8, 4, 2, 1)
        self.m3 = nn.InstanceNorm2d(8)
        self.d4 = nn.ConvTranspose2d(16, 4, 4, 2, 1)
        self.head = nn.Conv2d(4, 1, 3, 1, 0)

    def forward(self, x):
        e1 = nn.functional.leaky_relu(self.e1(x), 0.2)
        e2 = nn.functional.leaky_relu(self.n2(self.e2(e1)), 0.2)
        e3 = nn.functional.leaky_relu(self.n3(self.e3(e2)), 0.2)
        e4 = torch.relu(self.e4(e3))
        d1 = torch.cat([torch.relu(self.m1(self.d1(e4))), e3], 1)
        d2 = torch.cat([torch.relu(self.m2(self.d2(d1))), e2], 1)
        d3 = torch.cat([torch.relu(self.m3(self.d3(d2))), e1], 1)
        d4 = torch.relu(self.d4(d3))
        return torch.tanh(self.head(nn.functional.pad(d4, (1, 1, 1, 1), mode="reflect")))


def graph_nodes():
    def conv(name, src, stride, padding):
        return {"name": name, "op": "conv2d", "inputs": [src], "weight": f"{name}.weight",
                "bias": f"{name}.bias", "stride": stride, "padding": padding}

    def convt(name, src):
        return {"name": name, "op": "conv_transpose2d", "inputs": [src], "weight": f"{name}.weight",
                "bias": f"{name}.bias", "stride": 2, "padding": 1, "output_padding": 0}

    def norm(name, src, affine=True):
        n = {"name": name, "op": "instance_norm", "inputs": [src], "eps": 1e-5}
        if affine:
            n.update(weight=f"{name}.weight", bias=f"{name}.bias")
        return n

    def act(name, op, src, **kw):
        return {"name": name, "op": op, "inputs": [src], **kw}

    return [
        conv("e1", "input", 2, 1), act("e1a", "leaky_relu", "e1", alpha=0.2),
        conv("e2", "e1a", 2, 1), norm("n2", "e2"), act("e2a", "leaky_relu", "n2", alpha=0.2),
        conv("e3", "e2a", 2, 1), norm("n3", "e3"), act("e3a", "leaky_relu", "n3", alpha=0.2),
        conv("e4", "e3a", 2, 1), act("e4a", "relu", "e4"),
        convt("d1", "e4a"), norm("m1", "d1"), act("d1a", "relu", "m1"),
        {"name": "s1", "op": "concat", "inputs": ["d1a", "e3a"]},
        convt("d2", "s1"), norm("m2", "d2"), act("d2a", "relu", "m2"),
        {"name": "s2", "op": "concat", "inputs": ["d2a", "e2a"]},
        convt("d3", "s2"), norm("m3", "d3", affine=False), act("d3a", "relu", "m3"),
        {"name": "s3", "op": "concat", "inputs": ["d3a", "e1a"]},
        convt("d4", "s3"), act("d4a", "relu", "d4"),
        {"name": "p4", "op": "pad", "inputs": ["d4a"], "padding": 1, "mode": "reflect"},
        conv("head", "p4", 1, 0), act("out", "tanh", "head"),
    ]


def descriptor(kind, seed):
    out = {"shape": [1, SIZE, SIZE], "range": [-1.0, 1.0], "kind": kind}
    if kind == "height":
        out["decode"] = {"scale": 1.0, "offset": 1.0}
    else:
        out["decode"] = {"bins": 33, "frames": 5, "db_floor": -80.0, "reference_magnitude": 16.0,
                         "original_length": 128, "window_length": 64, "hop_length": 16,
                         "fft_length": 64, "window": "hann", "sample_rate_hz": 60.0}
    return {
        "input": {"shape": [3, SIZE, SIZE], "mean": [0.5] * 3, "std": [0.5] * 3},
        "output": out,
        "nodes": graph_nodes(),
        "metadata": {"name": "G_h" if kind == "height" else "G_s", "training_seed": seed},
    }


def write_archive(path, desc, model):
    body = bytearray(b"V2HW")
    body += struct.pack("<I", 1)
    text = json.dumps(desc, sort_keys=True).encode("utf-8")
    body += struct.pack("<I", len(text)) + text
    tensors = [(name, t.detach().cpu().numpy().astype("<f4")) for name, t in model.state_dict().items()]
    body += struct.pack("<I", len(tensors))
    for name, arr in tensors:
        raw = name.encode("utf-8")
        body += struct.pack("<H", len(raw)) + raw
        body += struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
        body += arr.tobytes(order="C")
    body += struct.pack("<I", zlib.crc32(bytes(body)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(body))


def write_v2hs(path, matrix):
    m = np.asarray(matrix, dtype="<f4")
    head = b"V2HS" + struct.pack("<IIII", 1, m.shape[0], m.shape[1], 0)
    Path(path).write_bytes(head + m.tobytes(order="C"))


def make_inputs(rng):
    yy, xx = np.mgrid[0:SIZE, 0:SIZE].astype(np.float64)
    images = []
    for _ in range(N_INPUTS):
        img = np.zeros((SIZE, SIZE, 3))
        for ch in range(3):
            acc = np.zeros((SIZE, SIZE))
            for _ in range(4):
                fx, fy = rng.uniform(-0.3, 0.3, size=2)
                acc += rng.uniform(0.2, 1.0) * np.sin(2 * np.pi * (fx * xx + fy * yy) + rng.uniform(0, 2 * np.pi))
            img[..., ch] = acc
        img = (img - img.min()) / (img.max() - img.min())
        img = np.clip(0.8 * img + 0.1 + rng.normal(0, 0.02, img.shape), 0, 1)
        images.append(np.floor(img * 255 + 0.5).astype(np.uint8))
    return images


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[2] / "tests" / "fixtures" / "infer"))
    ap.add_argument("--seed", type=int, default=20240611)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(args.seed)
    torch.use_deterministic_algorithms(True)
    models = {}
    for kind, name in (("height", "G_h"), ("spectrogram", "G_s")):
        model = UNet().eval()
        with torch.no_grad():
            # Random affine parameters so the norm layers do more than the identity.
            for mod in model.modules():
                if isinstance(mod, nn.InstanceNorm2d) and mod.affine:
                    mod.weight.uniform_(0.5, 1.5)
                    mod.bias.uniform_(-0.2, 0.2)
        write_archive(out / f"{name}.v2hw", descriptor(kind, args.seed), model)
        models[name] = model

    rng = np.random.default_rng(args.seed)
    for i, img in enumerate(make_inputs(rng)):
        Image.fromarray(img, "RGB").save(out / f"input_{i:02d}.png")
        x = torch.from_numpy(img.astype(np.float32) / np.float32(255.0)).permute(2, 0, 1).unsqueeze(0)
        x = (x - 0.5) / 0.5
        with torch.no_grad():
            for name, tag in (("G_h", "h"), ("G_s", "s")):
                y = models[name](x)[0, 0].numpy()
                write_v2hs(out / f"expected_{tag}_{i:02d}.v2hs", y)
    print(f"wrote fixtures for {N_INPUTS} inputs to {out}")


if __name__ == "__main__":
    main()
