"""Reference values of J_n(z) and H1_n(z) at 150 significant digits.

Regenerate with: python3 gen_bessel_oracle.py > bessel_oracle.csv
"""
import math
import random

import mpmath as mp

mp.mp.dps = 150
random.seed(20240611)

points = []
for _ in range(240):
    r = random.uniform(1e-3, 20.0)
    a = random.choice([0.0, math.pi / 4, -math.pi / 4, random.uniform(-math.pi / 4, math.pi / 4)])
    points.append((random.randint(0, 30), r * math.cos(a), r * math.sin(a)))
for nu in (0, 1, 5, 14, 30):
    for z in (complex(1, 0), complex(20, 0), complex(0.5, 0.5), complex(14.1, -14.1)):
        points.append((nu, z.real, z.imag))

print("nu,re_z,im_z,re_j,im_j,re_h,im_h")
for nu, x, y in points:
    z = mp.mpc(x, y)
    j = mp.besselj(nu, z)
    h = j + 1j * mp.bessely(nu, z)
    vals = [mp.nstr(v, 20, min_fixed=1, max_fixed=0) for v in (j.real, j.imag, h.real, h.imag)]
    print(f"{nu},{x!r},{y!r}," + ",".join(vals))
