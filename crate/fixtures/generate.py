"""Regenerates the bundled SWC fixtures. Deterministic; run from any cwd."""

import math
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))


class Builder:
    def __init__(self, root=(0.0, 0.0, 0.0), radius=0.1):
        self.rows = []
        self.add(root, radius, -1)

    def add(self, pos, radius, parent):
        nid = len(self.rows) + 1
        self.rows.append((nid, pos, radius, parent))
        return nid

    def pos(self, nid):
        return self.rows[nid - 1][1]

    def write(self, name, header):
        with open(os.path.join(HERE, name), "w") as f:
            f.write(f"# {header}\n")
            for nid, (x, y, z), r, parent in self.rows:
                f.write(f"{nid} 0 {x:.6g} {y:.6g} {z:.6g} {r:.6g} {parent}\n")


def unit(v):
    n = math.sqrt(sum(c * c for c in v))
    return tuple(c / n for c in v)


def add(a, b, s=1.0):
    return tuple(x + s * y for x, y in zip(a, b))


def perpendicular(d):
    ref = (0.0, 0.0, 1.0) if abs(d[2]) < 0.9 else (1.0, 0.0, 0.0)
    c = (d[1] * ref[2] - d[2] * ref[1], d[2] * ref[0] - d[0] * ref[2], d[0] * ref[1] - d[1] * ref[0])
    return unit(c)


def rotate(v, axis, angle):
    # Rodrigues
    k = unit(axis)
    c, s = math.cos(angle), math.sin(angle)
    dot = sum(a * b for a, b in zip(k, v))
    cross = (k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0])
    return tuple(v[i] * c + cross[i] * s + k[i] * dot * (1 - c) for i in range(3))


def y_tree():
    b = Builder(radius=0.05)
    a = b.add((0.0, 1.0, 0.2), 0.05, 1)
    m = b.add((0.1, 2.0, 0.0), 0.05, a)
    c = b.add((-0.8, 2.7, 0.3), 0.04, m)
    b.add((-1.3, 3.6, 0.1), 0.03, c)
    b.add((0.9, 2.8, -0.4), 0.04, m)
    b.write("y_tree.swc", "Y-shaped tree, three segments")


def planar():
    b = Builder(radius=0.05)
    s1 = b.add((0.0, 1.0, 0.0), 0.05, 1)
    s2 = b.add((0.2, 2.0, 0.0), 0.05, s1)
    l1 = b.add((-0.8, 2.8, 0.0), 0.04, s2)
    l2 = b.add((-1.4, 3.7, 0.0), 0.04, l1)
    ll = b.add((-2.4, 4.0, 0.0), 0.03, l2)
    b.add((-3.3, 4.6, 0.0), 0.03, ll)
    lr = b.add((-1.2, 4.8, 0.0), 0.03, l2)
    b.add((-1.0, 5.8, 0.0), 0.03, lr)
    r1 = b.add((1.2, 2.6, 0.0), 0.04, s2)
    r2 = b.add((2.1, 3.1, 0.0), 0.04, r1)
    rl = b.add((2.4, 4.1, 0.0), 0.03, r2)
    b.add((2.3, 5.1, 0.0), 0.03, rl)
    rr = b.add((3.2, 3.2, 0.0), 0.03, r2)
    b.add((4.1, 2.8, 0.0), 0.03, rr)
    b.write("planar.swc", "strictly planar tree in z = 0")


def helix():
    b = Builder(radius=0.05)
    prev = 1
    mid = None
    for k in range(1, 13):
        t = k * 0.5
        prev = b.add((math.cos(t) * 1.5, math.sin(t) * 1.5, 0.4 * t), 0.05, prev)
        if k == 6:
            mid = prev
    tip = mid
    for k in range(1, 4):
        tip = b.add(add(b.pos(mid), (0.0, 0.0, -1.0), k * 0.9), 0.04, tip)
    b.write("helix.swc", "helix with one side branch")


def star(k=6):
    b = Builder(radius=0.05)
    for i in range(k):
        a = 2 * math.pi * i / k
        b.add((math.cos(a), math.sin(a), 0.3 * math.sin(3 * a)), 0.05, 1)
    b.write("star.swc", f"star with {k} leaves")


def grow(b, rng, parent, direction, depth_left, radius, step, nodes, spread):
    """Grows one segment of `nodes` nodes and branches in two at its end."""
    d = direction
    at = parent
    for _ in range(nodes):
        d = unit(add(d, tuple(rng.uniform(-0.25, 0.25) for _ in range(3))))
        at = b.add(add(b.pos(at), d, step * rng.uniform(0.8, 1.2)), radius, at)
    return at, d


def binary_tree(name, header, seed, branchings, root_children, step, radius, spread, seg_nodes):
    rng = random.Random(seed)
    b = Builder(radius=radius * 1.5)
    frontier = []
    for i in range(root_children):
        a = 2 * math.pi * i / root_children
        d = unit((math.cos(a), math.sin(a), rng.uniform(-0.3, 0.3)))
        end, dd = grow(b, rng, 1, d, 0, radius, step, rng.randint(*seg_nodes), spread)
        frontier.append((end, dd, radius))
    done = 0
    while done < branchings:
        # widest-first keeps the tree balanced
        end, d, r = frontier.pop(0)
        axis = perpendicular(d)
        axis = rotate(axis, d, rng.uniform(0, 2 * math.pi))
        r2 = max(r * 0.85, radius * 0.4)
        for sign in (1, -1):
            cd = rotate(d, axis, sign * rng.uniform(*spread))
            e, ed = grow(b, rng, end, cd, 0, r2, step, rng.randint(*seg_nodes), spread)
            frontier.append((e, ed, r2))
        done += 1
    b.write(name, header)


def neuron():
    rng = random.Random(7)
    b = Builder(radius=0.6)
    frontier = []
    stems = 4
    for i in range(stems):
        a = 2 * math.pi * i / stems + rng.uniform(-0.3, 0.3)
        d = unit((math.cos(a), math.sin(a), rng.uniform(-0.4, 0.4)))
        first = b.add(add(b.pos(1), d, 2.5), 0.25, 1)
        end, dd = grow(b, rng, first, d, 0, 0.2, 1.6, rng.randint(2, 4), None)
        frontier.append((end, dd, 0.2, 0))
    branchings = 0
    while frontier and len(b.rows) < 170:
        end, d, r, depth = frontier.pop(0)
        if depth >= 4 or rng.random() < 0.12 * depth:
            continue
        axis = rotate(perpendicular(d), d, rng.uniform(0, 2 * math.pi))
        r2 = max(r * 0.8, 0.08)
        for sign in (1, -1):
            cd = rotate(d, axis, sign * rng.uniform(0.35, 0.8))
            e, ed = grow(b, rng, end, cd, 0, r2, 1.6, rng.randint(2, 5), None)
            frontier.append((e, ed, r2, depth + 1))
        branchings += 1
    b.write("neuron.swc", "synthetic dendritic arbor, soma at the root")


if __name__ == "__main__":
    y_tree()
    planar()
    helix()
    star()
    binary_tree("random20.swc", "random binary tree, 20 segments", 11, 9, 2, 1.0, 0.05, (0.4, 0.9), (1, 4))
    binary_tree("vessel60.swc", "vessel-like tree, 60 segments", 23, 29, 2, 1.2, 0.08, (0.3, 0.7), (2, 4))
    neuron()
