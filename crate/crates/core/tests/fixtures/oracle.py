"""Independent high-precision evaluator used to freeze expected values.

Runs with mpmath at 50 digits.  Nothing here imports the Rust code; the
numbers printed are pasted into the Rust tests as frozen fixtures.

    python3 crates/core/tests/fixtures/oracle.py
"""
from itertools import product

import mpmath as mp

mp.mp.dps = 50

UM = mp.mpf("1e-4")  # cm per micrometre
MU_I = mp.mpf("4e16")
SIGMA_I = mp.mpf("0.3") * MU_I


def Q(x):
    return mp.erfc(x / mp.sqrt(2)) / 2


def peak_gain(d_cm):
    return d_cm ** -3 * (3 / (2 * mp.pi * mp.e)) ** mp.mpf(1.5)


def impulse(t, d, D):
    return (4 * mp.pi * D * t) ** mp.mpf(-1.5) * mp.exp(-d * d / (4 * D * t))


def relay(s, mu, sigma, beta):
    """Returns (gamma', P_D, P_FA) for the single-sample Gaussian LRT."""
    ahat = s / sigma ** 2
    gamma = (s * s + 2 * s * mu) / (2 * sigma ** 2) + mp.log((1 - beta) / beta)
    gp = gamma / ahat
    return gp, Q((gp - s - mu) / sigma), Q((gp - mu) / sigma)


def fusion(branches, beta):
    """branches: list of (s_tilde, mu, sigma, pd, pfa). Returns (alphas, gpp)."""
    alphas, thetas = [], []
    for s, mu, sg, pd, pfa in branches:
        k = pd - pfa
        alphas.append(s / sg ** 2 * k)
        thetas.append((s * s + 2 * s * mu) / (2 * sg ** 2) * k)
    return alphas, mp.log((1 - beta) / beta) + sum(thetas)


def eq20(branches, beta):
    a, gpp = fusion(branches, beta)
    v = mp.sqrt(sum(ai ** 2 * b[2] ** 2 for ai, b in zip(a, branches)))
    m1 = sum(ai * (b[0] + b[1]) for ai, b in zip(a, branches))
    m0 = sum(ai * b[1] for ai, b in zip(a, branches))
    pd = Q((gpp - m1) / v)
    pfa = Q((gpp - m0) / v)
    return beta * (1 - pd) + (1 - beta) * pfa, pd, pfa


def chain_exact(branches, beta):
    """Exact P_e of the linear fusion rule when relays err: enumerate relay
    decision patterns, each pattern gives a Gaussian statistic."""
    a, gpp = fusion(branches, beta)
    v = mp.sqrt(sum(ai ** 2 * b[2] ** 2 for ai, b in zip(a, branches)))
    miss = 0
    fa = 0
    for pattern in product([0, 1], repeat=len(branches)):
        p1 = p0 = mp.mpf(1)
        mean = 0
        for bit, ai, b in zip(pattern, a, branches):
            s, mu, sg, pd, pfa = b
            p1 *= pd if bit else 1 - pd
            p0 *= pfa if bit else 1 - pfa
            mean += ai * (bit * s + mu)
        tail = Q((gpp - mean) / v)
        miss += p1 * (1 - tail)
        fa += p0 * tail
    return beta * miss + (1 - beta) * fa


def coop(q0, qi, d_sr, d_rd, n, beta=mp.mpf("0.5"), mu=MU_I, sigma=SIGMA_I):
    s = q0 * peak_gain(d_sr)
    _, pd, pfa = relay(s, mu, sigma, beta)
    st = qi * peak_gain(d_rd)
    return [(st, mu, sigma, pd, pfa)] * n


def siso(q, d, beta=mp.mpf("0.5")):
    _, pd, pfa = relay(q * peak_gain(d), MU_I, SIGMA_I, beta)
    return beta * (1 - pd) + (1 - beta) * pfa


def simo(q, d, m, beta=mp.mpf("0.5")):
    st = q * peak_gain(d)
    return eq20([(st, MU_I, SIGMA_I, 1, 0)] * m, beta)[0]


def fmt(x):
    return mp.nstr(x, 17)


def main():
    half = mp.mpf("0.5")
    print("== channel")
    d10, d20, d30 = 10 * UM, 20 * UM, 30 * UM
    D = mp.mpf("1e-6")
    print("peak_gain(10um)", fmt(peak_gain(d10)))
    print("peak_gain(20um)", fmt(peak_gain(d20)))
    print("h(t_p) 10um", fmt(impulse(d10 ** 2 / (6 * D), d10, D)))
    print("t_p 10um", fmt(d10 ** 2 / (6 * D)), "t_p 20um", fmt(d20 ** 2 / (6 * D)))
    mean5 = 5 * mp.mpf("3e9") * peak_gain(d30)
    print("mui 5x3e9@30um mean", fmt(mean5), "std", fmt(mean5 * mp.mpf("0.3")),
          "rel dev from 4e16", fmt(mean5 / MU_I - 1))

    print("== relay")
    print("desk", [fmt(v) for v in relay(2, 0, 1, half)])
    s = mp.mpf("1e9") * peak_gain(d10)
    print("regime s", fmt(s), [fmt(v) for v in relay(s, MU_I, SIGMA_I, half)])
    print("Q(1.6449)", fmt(Q(mp.mpf("1.6449"))), "Q(sqrt2)", fmt(Q(mp.sqrt(2))))

    print("== analytic regression points")
    q = mp.mpf("3e9")
    print("coop N=3 Q=3e9 uniform split",
          fmt(eq20(coop(q / 4, q / 4, d10, d20, 3), half)[0]))
    print("coop N=3 Q=3e9 per node",
          fmt(eq20(coop(q, q, d10, d20, 3), half)[0]))
    print("coop N=2 Q=1e9 beta=0.3 uniform split",
          fmt(eq20(coop(mp.mpf("1e9") / 3, mp.mpf("1e9") / 3, d10, d20, 2, mp.mpf("0.3")),
                       mp.mpf("0.3"))[0]))
    print("siso Q=3e9 d=25um", fmt(siso(q, 25 * UM)))
    print("miso Q=3e9 split 2 @30um", fmt(siso(q, d30)))
    print("simo Q=3e9 2 rx @25um", fmt(simo(q, 25 * UM, 2)))
    print("siso Q=3e9 d=25um beta=0.2", fmt(siso(q, 25 * UM, mp.mpf("0.2"))))

    print("== full chain regression points")
    d = 20 * UM
    print("chain near_dst Q=1e9 d=20um",
          fmt(chain_exact(coop(mp.mpf("1e9") / 3, mp.mpf("1e9") / 3, d * 2 / 3, d / 3, 2), half)))
    b3 = mp.mpf("0.3")
    print("chain N=2 Q=1e9 beta=0.3 uniform split",
          fmt(chain_exact(coop(mp.mpf("1e9") / 3, mp.mpf("1e9") / 3, d10, d20, 2, b3), b3)))

    print("== fig2a: per-node Q; |chain - eq20| vs 4 SE at 1e5")
    for n in (1, 2, 3):
        for e in [9 + k / 4 for k in range(9)]:
            q = mp.mpf(10) ** e
            br = coop(q, q, d10, d20, n)
            pe = eq20(br, half)[0]
            ex = chain_exact(br, half)
            se = mp.sqrt(pe * (1 - pe) / 1e5)
            print(n, mp.nstr(q, 4), mp.nstr(pe, 6), mp.nstr(ex, 6),
                  "bias/SE", mp.nstr((ex - pe) / se if se > 0 else 0, 3),
                  "siso", mp.nstr(siso(q, 25 * UM), 4))

    print("== fig2b (Q=1e9, sweep d) / fig2c (d=30um, sweep Q)")

    def crossover(q, d):
        out = {}
        for name, f in (("near_src", mp.mpf(1) / 3), ("mid", half), ("near_dst", mp.mpf(2) / 3)):
            br = coop(q / 3, q / 3, f * d, (1 - f) * d, 2)
            out[name] = (eq20(br, half)[0], chain_exact(br, half))
        miso = siso(q, d)
        sm = simo(q, d, 2)
        return out, miso, sm

    for d_um in [10, 15, 20, 25, 30, 35, 40]:
        out, miso, sm = crossover(mp.mpf("1e9"), d_um * UM)
        print("b d", d_um, "miso", mp.nstr(miso, 5), "simo", mp.nstr(sm, 5),
              {k: (mp.nstr(v[0], 5), mp.nstr(v[1], 5)) for k, v in out.items()})
    for e in [9 + k / 4 for k in range(9)]:
        out, miso, sm = crossover(mp.mpf(10) ** e, d30)
        print("c Q 1e%.2f" % e, "miso", mp.nstr(miso, 5), "simo", mp.nstr(sm, 5),
              {k: (mp.nstr(v[0], 5), mp.nstr(v[1], 5)) for k, v in out.items()})


if __name__ == "__main__":
    main()
