"""Regenerates data/vocab/bytes.json and data/vocab/bpe-1000.json.

The BPE-style table is 256 byte tokens, 743 greedy pair merges learned from
the compact serialization of the vendored draft2020-12 suite, and EOS.
"""
import base64
import collections
import glob
import json


def write(path, toks, eos):
    with open(path, "w") as f:
        f.write(json.dumps({"eos_id": eos}) + "\n")
        f.write(json.dumps([base64.b64encode(t).decode() for t in toks]) + "\n")


def corpus():
    texts = []
    for p in sorted(glob.glob("data/json-schema-test-suite/tests/draft2020-12/*.json")):
        for case in json.load(open(p)):
            texts.append(json.dumps(case["schema"], separators=(",", ":")).encode())
            for t in case["tests"]:
                texts.append(json.dumps(t["data"], separators=(",", ":")).encode())
    return texts


def main():
    write("data/vocab/bytes.json", [bytes([b]) for b in range(256)] + [b""], 256)
    words = [[bytes([b]) for b in t] for t in corpus()]
    vocab = [bytes([b]) for b in range(256)]
    seen = set(vocab)
    while len(vocab) < 999:
        pairs = collections.Counter()
        for w in words:
            for a, b in zip(w, w[1:]):
                pairs[(a, b)] += 1
        (a, b), _ = max(pairs.items(), key=lambda kv: (kv[1], [-x for x in kv[0][0] + kv[0][1]]))
        merged = a + b
        if merged not in seen:
            vocab.append(merged)
            seen.add(merged)
        rewritten = []
        for w in words:
            out, i = [], 0
            while i < len(w):
                if i + 1 < len(w) and w[i] == a and w[i + 1] == b:
                    out.append(merged)
                    i += 2
                else:
                    out.append(w[i])
                    i += 1
            rewritten.append(out)
        words = rewritten
    write("data/vocab/bpe-1000.json", vocab + [b""], 999)


if __name__ == "__main__":
    main()
