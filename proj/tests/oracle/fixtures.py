"""Independent reference used to freeze the golden fixtures in the C++ tests.

Exact integer fixed-point arithmetic, cipher evaluated as plain functions
(no bit-permutation tables). Run: python3 tests/oracle/fixtures.py
"""
from itertools import permutations

L = 62
ONE = 1 << L


def dec(text):
    whole, _, frac = text.partition(".")
    num = int(whole or "0") * 10 ** len(frac) + int(frac or "0")
    den = 10 ** len(frac)
    return (num * ONE + den // 2) // den


def div(num, den):
    return (num * ONE + den // 2) // den


def skew(x, a):
    return div(x, a) if x <= a else div(ONE - x, ONE - a)


def G(x, a, b):
    return b if x in (0, ONE) else skew(x, a)


def derive_x0(t, gamma, n):
    k = len(str(t)) - 1
    x = div(10 ** k, t)
    for _ in range(4 * n):
        x = skew(x, gamma)
    return x


def noise(x0, a, b, n, count):
    x, bits = x0, []
    while len(bits) < 4 * n * count:
        bits.append(0 if x <= a else 1)
        x = G(x, a, b)
    return [int("".join(map(str, bits[4 * n * j:4 * n * j + 4 * n])), 2) for j in range(count)]


TABLE = list(permutations((1, 2, 3, 4)))[:16]


def f_ji(v, n):
    w = TABLE[v]
    width = 4 * n
    qmask = (1 << n) - 1

    def f(x):
        q = [(x >> (n * (4 - k))) & qmask for k in range(1, 5)]
        y = 0
        for k in range(4):
            y = (y << n) | q[w[k] - 1]
        return ((y << 1) | (y >> (width - 1))) & ((1 << width) - 1)
    return f


def f_j(vj, n):
    funcs = [f_ji((vj >> (4 * (n - i))) & 0xF, n) for i in range(1, n + 1)]

    def f(x):
        for g in funcs:
            x = g(x)
        return x
    return f


def encrypt(alpha, beta, gamma, K, t, n, plain):
    a, b, g = dec(alpha), dec(beta), dec(gamma)
    r = len(plain)
    U = noise(derive_x0(t, g, n), a, b, n, r + 2)
    mask = (1 << (4 * n)) - 1
    c_prev, p_prev, out = U[0], U[1], []
    for j in range(1, r + 1):
        u = U[j + 1]
        c = f_j(U[j - 1] ^ K, n)(plain[j - 1] ^ ((c_prev + u) & mask)) ^ ((p_prev + u) & mask)
        out.append(c)
        c_prev, p_prev = c, plain[j - 1]
    return out


if __name__ == "__main__":
    print("derive_x0(1234, 0.3, n=2) raw =", hex(derive_x0(1234, dec("0.3"), 2)))
    raw = dec("0.123")
    print("binary_precision(0.123) =", L - ((raw & -raw).bit_length() - 1))
    raw = dec("0.4")
    print("binary_precision(0.4) =", L - ((raw & -raw).bit_length() - 1))
    plain = [0x00, 0x01, 0x7F, 0x80, 0xFF, 0x5A, 0xA5, 0x3C]
    print("golden =", [hex(c) for c in encrypt("0.43", "0.7", "0.37", 0xA5, 1234, 2, plain)])
    print("skew(0.55, 0.1) raw =", hex(skew(dec("0.55"), dec("0.1"))), "half =", hex(ONE // 2))
