"""Seeded text mutator shared by the parser fuzz tests."""

import random

TOKENS = ["nan", "inf", "-inf", "1e400", "-0", "", " ", "0", "-1", "3.5", "x", "\t", ",", "=", '"', "'",
          "[run]", "[host]", "mode", "Lattice=", "q", "#", "\x00", "é", "9" * 30, "-2147483649"]


def mutate(text: str, rng: random.Random, n_ops: int = 3) -> str:
    """Apply a few random edits: character and token insertions, deletions, line shuffles."""
    for _ in range(rng.randint(1, n_ops)):
        op = rng.randrange(7)
        if op == 0 and text:
            i = rng.randrange(len(text))
            text = text[:i] + text[i + 1:]
        elif op == 1:
            i = rng.randrange(len(text) + 1)
            text = text[:i] + chr(rng.randrange(32, 127)) + text[i:]
        elif op == 2:
            i = rng.randrange(len(text) + 1)
            text = text[:i] + rng.choice(TOKENS) + text[i:]
        elif op == 3:
            lines = text.split("\n")
            i = rng.randrange(len(lines))
            lines.insert(rng.randrange(len(lines) + 1), lines[i])
            text = "\n".join(lines)
        elif op == 4:
            lines = text.split("\n")
            del lines[rng.randrange(len(lines))]
            text = "\n".join(lines)
        elif op == 5:
            words = text.split(" ")
            words[rng.randrange(len(words))] = rng.choice(TOKENS)
            text = " ".join(words)
        else:
            lines = text.split("\n")
            rng.shuffle(lines)
            text = "\n".join(lines)
    return text
