"""Independent re-derivation of the simulator's keyed draws.

draw(seed, key) = splitmix64(fnv1a64(f"{seed}|{key}")) >> 11, scaled by 2**-53.
"""
M = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & M
    return h


def splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & M
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
    return z ^ (z >> 31)


def draw(seed: int, key: str) -> float:
    return (splitmix64(fnv1a64(f"{seed}|{key}".encode())) >> 11) * 2.0**-53


def positional_ids(seed, n, q):
    return [f"case-{i:04d}" for i in range(n) if draw(seed, f"case-{i:04d}|flip") < q]


if __name__ == "__main__":
    for seed in (7, 20240101):
        ids = positional_ids(seed, 1000, 0.3)
        print(f"seed={seed} n=1000 q=0.3 positional={len(ids)} first5={ids[:5]}")
        print(f"seed={seed} n=200  q=0.3 positional={len(positional_ids(seed, 200, 0.3))}")
    print("draw(7,'case-0000') =", repr(draw(7, "case-0000")))
    print("draw(0,'') =", repr(draw(0, "")))
    print("fnv1a64('') =", hex(fnv1a64(b"")), "fnv1a64('a') =", hex(fnv1a64(b"a")))
