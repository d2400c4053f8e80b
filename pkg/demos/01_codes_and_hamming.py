"""
Binary codes and Hamming distance
=================================

Codes are ±1 vectors stored one bit per dimension.
"""

import numpy as np

from brcd.codes import BitCode, CodeMatrix, cosine, dot_pm1, hamming, sign_quantize

# quantise a real vector; zero goes to +1
v = np.array([0.7, -0.2, 0.0, 1.3, -4.0])
code = sign_quantize(v)
print("code      ", code.to_pm1())
print("packed    ", [f"{byte:08b}" for byte in code.packed])

# distance and inner product are two views of the same thing
other = BitCode.from_pm1([1, 1, 1, -1, -1])
print("hamming   ", hamming(code, other))
print("dot       ", dot_pm1(code, other), "= b - 2 * hamming")
print("cosine    ", cosine(code, other))

# a whole matrix at once
rng = np.random.default_rng(0)
codes = CodeMatrix.from_pm1(rng.choice([-1, 1], size=(4, 12)), ids=[10, 11, 12, 13])
print(codes)
print("complement distance", hamming(codes[0], codes[0].complement()))
