"""Recompute the frozen reference values used in tests/test_oracles_frozen.py.

Everything here uses mpmath at 40 digits and none of the package numerics,
so the values are an independent check of the package implementation.
"""

import mpmath as mp

mp.mp.dps = 40


def hk(alpha, k, x):
    x = mp.mpf(x)
    return mp.fsum((-1) ** j * mp.binomial(k, j) * (x - j) ** alpha for j in range(k + 1) if x > j)


def hk_integral(alpha, k, q):
    f = lambda x: abs(hk(alpha, k, x)) ** q
    return _quad_to_inf(f, list(range(0, k + 21)), (alpha - k) * q)


def _quad_to_inf(f, head_pts, expo, top=mp.mpf(10) ** 12):
    # h_k cancels catastrophically at huge x; integrate to ``top`` with 60 digits
    # and add the leading power law beyond it
    with mp.workdps(60):
        pts = list(head_pts)
        while pts[-1] < top:
            pts.append(min(pts[-1] * 10, top))
        body = mp.quad(f, pts)
        return body + f(top) * top / (-expo - 1)


def vm(alpha, k, p, u, head=400):
    # direct head + Euler-Maclaurin tail with three derivative corrections
    f = lambda x: abs(hk(alpha, k, x)) ** p
    s = mp.fsum(f(l + u) for l in range(head))
    a = head + u
    tail = _quad_to_inf(f, [a], (alpha - k) * p) + f(a) / 2
    tail += -mp.diff(f, a, 1) / 12 + mp.diff(f, a, 3) / 720 - mp.diff(f, a, 5) / 30240
    return s + tail


def abs_moment(beta, p):
    return 2 ** p * mp.gamma((1 + p) / 2) * mp.gamma(1 - p / beta) / (mp.gamma(1 - p / 2) * mp.sqrt(mp.pi))


def stable_density(x, beta):
    return mp.quadosc(lambda u: mp.cos(u * x) * mp.exp(-u ** beta), [0, mp.inf], omega=x) / mp.pi


def gamma_burnin(alpha, lam, q, tol):
    s = alpha * q + 1
    f = lambda T: mp.log((lam * q) ** (-s) * mp.gammainc(s, lam * q * T)) - mp.log(tol)
    return mp.findroot(f, 10)


if __name__ == "__main__":
    a, b = mp.mpf("0.1"), mp.mpf("1.5")
    print("hk_int(0.1,1,1.5) =", mp.nstr(hk_integral(a, 1, b), 17))
    print("hk_int(0.5,1,2.5) =", mp.nstr(hk_integral(mp.mpf("0.5"), 1, mp.mpf("2.5")), 17))
    print("hk_int(1.3,2,2) =", mp.nstr(hk_integral(mp.mpf("1.3"), 2, 2), 17))
    print("E|Z|(1.5, 1) =", mp.nstr(abs_moment(b, 1), 17))
    print("E|Z|(1.5, 0.5) =", mp.nstr(abs_moment(b, mp.mpf("0.5")), 17))
    print("m_p(0.1,1.5,1) =", mp.nstr(hk_integral(a, 1, b) ** (1 / b) * abs_moment(b, 1), 17))
    for u in ("0", "0.25", "0.5", "1"):
        print(f"vm(0.3,1,3,{u}) =", mp.nstr(vm(mp.mpf("0.3"), 1, 3, mp.mpf(u)), 17))
    print("vm(0.5,2,1.5,0.3) =", mp.nstr(vm(mp.mpf("0.5"), 2, mp.mpf("1.5"), mp.mpf("0.3")), 17))
    for x in ("0.5", "2", "10"):
        print(f"density(1.5, {x}) =", mp.nstr(stable_density(mp.mpf(x), b), 17))
    print("density(0.7, 3) =", mp.nstr(stable_density(mp.mpf(3), mp.mpf("0.7")), 17))
    print("burnin(gamma 0.1, lam 1, q 1.5, 1e-6) =", mp.nstr(gamma_burnin(a, 1, b, mp.mpf("1e-6")), 17))
    print("hk(0.3,1,50) =", mp.nstr(hk(mp.mpf("0.3"), 1, 50), 17))
    print("hk(0.7,3,100.5) =", mp.nstr(hk(mp.mpf("0.7"), 3, mp.mpf("100.5")), 17))
