#!/usr/bin/env python3
"""Independent numpy reference for the encoder/decoder arithmetic.

Reads a weight container directly and recomputes encoder hidden states and
full-sequence decoder logits for fixed inputs, then prints a C++ header with
the expected values. Regenerate with:

    cmake --build build --target fidkit
    build/tools/fidkit make-toy-model --d-model 8 --heads 2 --enc-layers 2 \
        --dec-layers 2 --d-ff 16 --d-kv 4 --vocab-size 32 --buckets 8 \
        --seed 1234 --out /tmp/ref_untied
    build/tools/fidkit make-toy-model --d-model 8 --heads 2 --enc-layers 2 \
        --dec-layers 2 --d-ff 16 --d-kv 4 --vocab-size 32 --buckets 8 \
        --seed 4321 --tied-head --out /tmp/ref_tied
    python3 tests/oracle/reference_model.py /tmp/ref_untied /tmp/ref_tied \
        > tests/data/reference_values.hpp
"""

import json
import struct
import sys

import numpy as np

ENC_IDS = [5, 9, 3, 17, 2, 11]
ENC_MASK = [1, 1, 1, 1, 1, 0]
DEC_PREFIX = [0, 4, 7, 21]
EPS = 1e-6


def load_container(path):
    with open(path, "rb") as f:
        blob = f.read()
    assert blob[:8] == b"FIDW0001", "bad magic"
    (header_len,) = struct.unpack("<Q", blob[8:16])
    header = json.loads(blob[16 : 16 + header_len].decode("utf-8"))
    payload = blob[16 + header_len :]
    tensors = {}
    for name, entry in header.items():
        shape = entry["shape"]
        off = entry["offset"]
        n = int(np.prod(shape)) if shape else 0
        arr = np.frombuffer(payload, dtype="<f4", count=n, offset=off)
        tensors[name] = arr.reshape(shape).astype(np.float32)
    return tensors


def rmsnorm(x, w):
    scale = 1.0 / np.sqrt(np.mean(x * x, axis=-1, keepdims=True).astype(np.float32) + EPS)
    return (x * scale * w).astype(np.float32)


def rel_bucket(rel, bidirectional, num_buckets, max_distance=128):
    bucket = 0
    n = rel
    if bidirectional:
        num_buckets //= 2
        if n > 0:
            bucket += num_buckets
        n = abs(n)
    else:
        n = max(-n, 0)
    max_exact = num_buckets // 2
    if n < max_exact:
        return bucket + n
    large = max_exact + int(
        np.log(n / max_exact) / np.log(max_distance / max_exact) * (num_buckets - max_exact)
    )
    return bucket + min(large, num_buckets - 1)


def softmax(x):
    x = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(x)
    return (e / np.sum(e, axis=-1, keepdims=True)).astype(np.float32)


def attention(q, k, v, bias):
    # q: [tq, h, d], k/v: [tk, h, d], bias: [h, tq, tk]
    scores = np.einsum("qhd,khd->hqk", q, k).astype(np.float32) + bias
    probs = softmax(scores)
    return np.einsum("hqk,khd->qhd", probs, v).astype(np.float32)


def split_heads(x, heads):
    tq, inner = x.shape
    return x.reshape(tq, heads, inner // heads)


def encoder_forward(w, cfg, ids, mask):
    heads = cfg["n_heads"]
    x = w["shared.embedding"][ids].astype(np.float32)
    seq = len(ids)
    table = w["enc.0.self_attn.rel_bias"]
    bias = np.zeros((heads, seq, seq), dtype=np.float32)
    for i in range(seq):
        for j in range(seq):
            if not mask[j]:
                bias[:, i, j] = -np.inf
            else:
                bias[:, i, j] = table[rel_bucket(j - i, True, cfg["rel_pos_buckets"])]
    for layer in range(cfg["n_enc_layers"]):
        p = f"enc.{layer}"
        n = rmsnorm(x, w[p + ".self_attn.norm"])
        q = split_heads(n @ w[p + ".self_attn.q"], heads)
        k = split_heads(n @ w[p + ".self_attn.k"], heads)
        v = split_heads(n @ w[p + ".self_attn.v"], heads)
        out = attention(q, k, v, bias).reshape(seq, -1)
        x = (x + out @ w[p + ".self_attn.o"]).astype(np.float32)
        n = rmsnorm(x, w[p + ".ffn.norm"])
        x = (x + np.maximum(n @ w[p + ".ffn.wi"], 0.0) @ w[p + ".ffn.wo"]).astype(np.float32)
    return rmsnorm(x, w["enc.final_norm"])


def decoder_forward(w, cfg, prefix, enc, enc_mask):
    heads = cfg["n_heads"]
    tq = len(prefix)
    src = enc.shape[0]
    x = w["shared.embedding"][prefix].astype(np.float32)

    table = w["dec.0.self_attn.rel_bias"]
    self_bias = np.zeros((heads, tq, tq), dtype=np.float32)
    for i in range(tq):
        for j in range(tq):
            if j > i:
                self_bias[:, i, j] = -np.inf
            else:
                self_bias[:, i, j] = table[rel_bucket(j - i, False, cfg["rel_pos_buckets"])]
    cross_bias = np.zeros((heads, tq, src), dtype=np.float32)
    for j in range(src):
        if not enc_mask[j]:
            cross_bias[:, :, j] = -np.inf

    for layer in range(cfg["n_dec_layers"]):
        p = f"dec.{layer}"
        n = rmsnorm(x, w[p + ".self_attn.norm"])
        q = split_heads(n @ w[p + ".self_attn.q"], heads)
        k = split_heads(n @ w[p + ".self_attn.k"], heads)
        v = split_heads(n @ w[p + ".self_attn.v"], heads)
        out = attention(q, k, v, self_bias).reshape(tq, -1)
        x = (x + out @ w[p + ".self_attn.o"]).astype(np.float32)

        n = rmsnorm(x, w[p + ".cross_attn.norm"])
        q = split_heads(n @ w[p + ".cross_attn.q"], heads)
        k = split_heads(enc @ w[p + ".cross_attn.k"], heads)
        v = split_heads(enc @ w[p + ".cross_attn.v"], heads)
        out = attention(q, k, v, cross_bias).reshape(tq, -1)
        x = (x + out @ w[p + ".cross_attn.o"]).astype(np.float32)

        n = rmsnorm(x, w[p + ".ffn.norm"])
        x = (x + np.maximum(n @ w[p + ".ffn.wi"], 0.0) @ w[p + ".ffn.wo"]).astype(np.float32)

    fn = rmsnorm(x, w["dec.final_norm"])
    if "lm_head" in w:
        return fn @ w["lm_head"]
    return (fn @ w["shared.embedding"].T) * np.float32(1.0 / np.sqrt(cfg["d_model"]))


def emit_array(name, arr):
    flat = np.asarray(arr, dtype=np.float32).ravel()
    parts = ", ".join("%.9gf" % v for v in flat)
    print(f"inline constexpr float {name}[{len(flat)}] = {{{parts}}};")


def main():
    untied_dir, tied_dir = sys.argv[1], sys.argv[2]
    print("// Generated by tests/oracle/reference_model.py; do not edit by hand.")
    print("#pragma once")
    print()
    print("namespace refdata {")
    print()
    print(f"inline constexpr int kEncIds[] = {{{', '.join(map(str, ENC_IDS))}}};")
    print(f"inline constexpr int kEncMask[] = {{{', '.join(map(str, ENC_MASK))}}};")
    print(f"inline constexpr int kDecPrefix[] = {{{', '.join(map(str, DEC_PREFIX))}}};")
    print()
    for tag, model_dir in (("Untied", untied_dir), ("Tied", tied_dir)):
        w = load_container(f"{model_dir}/model.fidw")
        cfg = json.load(open(f"{model_dir}/model.json"))
        enc = encoder_forward(w, cfg, ENC_IDS, ENC_MASK)
        logits = decoder_forward(w, cfg, DEC_PREFIX, enc, ENC_MASK)
        emit_array(f"kEncoderStates{tag}", enc)
        emit_array(f"kDecoderLogits{tag}", logits)
        print()
    print("}  // namespace refdata")


if __name__ == "__main__":
    main()
