#!/usr/bin/env python3
"""Fetch the Cora / Citeseer / Pubmed citation graphs and write them as
whitespace edge lists with dense node ids.

The raw files ship inside the `pgl` wheel on PyPI, which is the only copy
reachable from hosts that can talk to a package index but not GitHub.

Outputs (under data/<name>/):
  edges.txt         "# nodes N" header, then undirected edge list, one "src dst" per line, src < dst
  edges_directed.txt  (cora only) citing -> cited
  labels.tsv        node<TAB>class id
"""
import argparse
import glob
import os
import pickle
import subprocess
import sys
import tempfile
import zipfile

WHEEL_SPEC = "pgl==2.2.6"


def fetch_wheel(dest):
    subprocess.check_call(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", dest, WHEEL_SPEC]
    )
    return glob.glob(os.path.join(dest, "pgl-*.whl"))[0]


def write_edges(path, n, edges):
    with open(path, "w") as f:
        f.write(f"# nodes {n}\n# src dst\n")
        for a, b in edges:
            f.write(f"{a} {b}\n")


def write_labels(path, labels):
    with open(path, "w") as f:
        for i, c in enumerate(labels):
            f.write(f"{i}\t{c}\n")


def cora(zf, out):
    content = zf.read("pgl/data/cora/cora.content").decode().splitlines()
    ids = {}
    classes = {}
    labels = []
    for line in content:
        parts = line.split("\t")
        ids[parts[0]] = len(ids)
        labels.append(classes.setdefault(parts[-1], len(classes)))
    directed = set()
    for line in zf.read("pgl/data/cora/cora.cites").decode().splitlines():
        cited, citing = line.split()
        s, t = ids[citing], ids[cited]
        if s != t:
            directed.add((s, t))
    undirected = sorted({(min(a, b), max(a, b)) for a, b in directed})
    os.makedirs(out, exist_ok=True)
    write_edges(os.path.join(out, "edges_directed.txt"), len(ids), sorted(directed))
    write_edges(os.path.join(out, "edges.txt"), len(ids), undirected)
    write_labels(os.path.join(out, "labels.tsv"), labels)
    return len(ids), len(directed), len(undirected)


def planetoid(zf, name, out):
    def load(suffix):
        raw = zf.read(f"pgl/data/{name}/ind.{name}.{suffix}")
        return pickle.loads(raw, encoding="latin1")

    graph = load("graph")
    ally = load("ally")
    ty = load("ty")
    test_idx = [int(x) for x in zf.read(f"pgl/data/{name}/ind.{name}.test.index").decode().split()]
    n = max(max(graph.keys()), max(max(v) for v in graph.values() if v)) + 1
    edges = set()
    for a, nbrs in graph.items():
        for b in nbrs:
            if a != b:
                edges.add((min(a, b), max(a, b)))
    labels = [-1] * n
    for i, row in enumerate(ally):
        labels[i] = int(row.argmax())
    for j, i in enumerate(test_idx):
        if i < n:
            labels[i] = int(ty[j].argmax()) if ty[j].sum() > 0 else -1
    os.makedirs(out, exist_ok=True)
    write_edges(os.path.join(out, "edges.txt"), n, sorted(edges))
    with open(os.path.join(out, "labels.tsv"), "w") as f:
        for i, c in enumerate(labels):
            if c >= 0:
                f.write(f"{i}\t{c}\n")
    return n, len(edges)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    ap.add_argument("--wheel", help="use an already downloaded pgl wheel")
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel or fetch_wheel(tmp)
        zf = zipfile.ZipFile(wheel)
        print("cora", cora(zf, os.path.join(args.out, "cora")))
        for name in ("citeseer", "pubmed"):
            print(name, planetoid(zf, name, os.path.join(args.out, name)))


if __name__ == "__main__":
    main()
