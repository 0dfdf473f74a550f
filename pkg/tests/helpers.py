"""Shapes shared by several test modules."""
from gridshrink.grid import Shape, extract_segments


def hpath(n, y=0):
    return Shape.path([(x, y) for x in range(n)], anchor=0)


def l_path():
    # bend at index 2
    return Shape.path([(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)], anchor=0)


def plus_tree(arm=1):
    pts = [(0, 0)]
    edges = []
    for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        prev = 0
        for s in range(1, arm + 1):
            pts.append((dx * s, dy * s))
            edges.append((prev, len(pts) - 1))
            prev = len(pts) - 1
    return Shape.from_points(pts, edges, anchor=0)


def comb_pair():
    """Two branches whose order flips when the spine between them shortens.

    Every target segment is no longer than its initial segment, yet the tip
    of the left branch ends up east of the right branch.
    """
    pts = [(x, 0) for x in range(7)] + [(1, 1), (1, 2), (1, 3), (2, 3), (3, 3), (5, 1), (5, 2)]
    idx = {p: i for i, p in enumerate(pts)}
    edges = [(idx[(x, 0)], idx[(x + 1, 0)]) for x in range(6)]
    chain_a = [(1, 0), (1, 1), (1, 2), (1, 3), (2, 3), (3, 3)]
    chain_b = [(5, 0), (5, 1), (5, 2)]
    for chain in (chain_a, chain_b):
        edges += [(idx[a], idx[b]) for a, b in zip(chain, chain[1:])]
    tree = Shape.from_points(pts, edges, anchor=0)
    lengths = []
    for s in extract_segments(tree):
        a, b = tree.pos[s.nodes[0]], tree.pos[s.nodes[-1]]
        lengths.append(2 if (a, b) == ((1, 0), (5, 0)) else s.length)
    return tree, lengths
