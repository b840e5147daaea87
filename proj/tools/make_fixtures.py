#!/usr/bin/env python3
"""Regenerates the placeholder game fixtures.

The move sequences are seeded random play, legal under occupancy with captures
resolved and suicide avoided. Only the root metadata describes the real games.
"""
import argparse
import pathlib
import random

SIZE = 19
LETTERS = "abcdefghijklmnopqrs"


def neighbors(p):
    c, r = p
    for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        q = (c + dc, r + dr)
        if 0 <= q[0] < SIZE and 0 <= q[1] < SIZE:
            yield q


def group(board, p):
    color = board[p]
    seen, stack, libs = {p}, [p], set()
    while stack:
        for q in neighbors(stack.pop()):
            if q not in board:
                libs.add(q)
            elif board[q] == color and q not in seen:
                seen.add(q)
                stack.append(q)
    return seen, libs


def play(board, p, color):
    """Places a stone; returns False (board untouched) for suicide."""
    board[p] = color
    for q in neighbors(p):
        if board.get(q) not in (None, color):
            stones, libs = group(board, q)
            if not libs:
                for s in stones:
                    del board[s]
    if not group(board, p)[1]:
        del board[p]
        return False
    return True


def moves(n, seed):
    rng = random.Random(seed)
    board, out, color = {}, [], "B"
    while len(out) < n:
        empty = [(c, r) for c in range(SIZE) for r in range(SIZE) if (c, r) not in board]
        rng.shuffle(empty)
        for p in empty:
            if play(board, p, color):
                out.append((color, LETTERS[p[0]] + LETTERS[p[1]]))
                break
        else:
            out.append((color, ""))
        color = "W" if color == "B" else "B"
    return out


NOTE = "Placeholder move sequence generated offline; only the header describes the original game."

GAMES = {
    "game1.sgf": (216, 1, {"PB": "Antti Törmänen", "BR": "1p", "PW": "Shuto Shun", "WR": "8p",
                           "DT": "2022-03-14", "RE": "W+2.5"}),
    "game2.sgf": (307, 2, {"PB": "kata1-b40c256-s11101799168-d2715431527",
                           "PW": "kata1-b60c320-s6321537280-d2951683615",
                           "AP": "KataGo:1.11.0", "DT": "2022-08-10"}),
}


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("outdir", type=pathlib.Path)
    args = parser.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    for name, (n, seed, meta) in GAMES.items():
        props = dict(meta, GC=NOTE)
        head = "(;GM[1]FF[4]CA[UTF-8]SZ[19]KM[6.5]" + "".join(f"{k}[{v}]" for k, v in props.items())
        body = "".join(f";{c}[{v}]" for c, v in moves(n, seed))
        (args.outdir / name).write_text(head + "\n" + body + ")\n", encoding="utf-8")


if __name__ == "__main__":
    main()
