"""Independent high-precision reference values for the C++ tests.

Run `python3 tests/oracle/reference.py > tests/reference_values.hpp` to
regenerate. Uses mpmath only; shares no code with the library.
"""
import mpmath as mp

mp.mp.dps = 40
inf = mp.inf


def lognorm(x, m, v):
    return -mp.log(2 * mp.pi * v) / 2 - (x - m) ** 2 / (2 * v)


def conj_logjoint(pv, nv, x):
    return lambda z: lognorm(z, 0, pv) + lognorm(x, z, nv)


def bimodal_logjoint(c1=-2, c2=2, s=mp.mpf("0.75"), w1=mp.mpf("0.3"), w2=mp.mpf("0.7")):
    return lambda z: mp.log(w1 * mp.exp(lognorm(z, c1, s * s)) + w2 * mp.exp(lognorm(z, c2, s * s)))


def q_expect(g, logjoint, mu, rho):
    # E_q[g(V)] with V = log q - log p(x,z), q = N(mu, e^{2 rho})
    sd = mp.exp(rho)

    def integrand(z):
        lq = lognorm(z, mu, sd * sd)
        return mp.exp(lq) * g(lq - logjoint(z))

    pts = [mu - 14 * sd, mu - 4 * sd, mu, mu + 4 * sd, mu + 14 * sd]
    return mp.quad(integrand, pts)


def emit(name, value):
    print(f"inline constexpr double {name} = {mp.nstr(value, 20, strip_zeros=False)};")


def matern(r, s, l):
    a = mp.sqrt(3) * r / l
    return s * s * (1 + a) * mp.exp(-a)


print("// Generated by tests/oracle/reference.py (mpmath, 40 digits). Do not edit.")
print("#pragma once")
print("namespace ref {")

emit("kMatern_s1_l1_r1", matern(1, 1, 1))
emit("kGpLogJointN1", 2 * lognorm(0, 0, 1))
emit("kLogEvidenceStd", lognorm(0, 0, 2))
emit("kEvidenceStd", mp.exp(lognorm(0, 0, 2)))
emit("kAlphaHalfAtPosterior", mp.exp(lognorm(0, 0, 2)) ** mp.mpf("0.5"))
emit("kSqrt60Over2", mp.sqrt(60) / 2)
emit("kStdNormalLogPdf0", lognorm(0, 0, 1))

# Conjugate model (1, 1, 0), q = N(0.3, e^{-0.4}), V0 = 1.1
lj = conj_logjoint(1, 1, 0)
mu, rho, v0 = mp.mpf("0.3"), mp.mpf("-0.2"), mp.mpf("1.1")
emit("kConjA_Elbo", -q_expect(lambda v: v, lj, mu, rho))
for k in (1, 2, 3):
    emit(f"kConjA_Power{k}", q_expect(lambda v, k=k: (v0 - v) ** k, lj, mu, rho))
for K in (3, 5):
    s = q_expect(lambda v: sum((v0 - v) ** k / mp.factorial(k) for k in range(K + 1)), lj, mu, rho)
    emit(f"kConjA_Bound{K}", mp.exp(-v0) * s)
emit("kConjA_AlphaHalf", q_expect(lambda v: mp.exp(-mp.mpf("0.5") * v), lj, mu, rho))
m1 = q_expect(lambda v: v, lj, mu, rho)
m2 = q_expect(lambda v: (v - m1) ** 2, lj, mu, rho)
m3 = q_expect(lambda v: (v - m1) ** 3, lj, mu, rho)
emit("kConjA_Cumulant3", -m1 + m2 / 2 - m3 / 6)

# Conjugate model (2, 0.5, 1.3)
emit("kConjB_LogEvidence", lognorm(mp.mpf("1.3"), 0, mp.mpf("2.5")))
emit("kConjB_PostMean", mp.mpf("1.3") * 2 / mp.mpf("2.5"))
emit("kConjB_PostVar", 2 * mp.mpf("0.5") / mp.mpf("2.5"))

# Default bimodal target, q = N(0.5, e^{0.4}), V0 = 2
lj = bimodal_logjoint()
mu, rho, v0 = mp.mpf("0.5"), mp.mpf("0.2"), mp.mpf("2")
emit("kBimodal_Elbo", -q_expect(lambda v: v, lj, mu, rho))
emit("kBimodal_Surrogate3",
     q_expect(lambda v: sum((v0 - v) ** k / mp.factorial(k) for k in range(4)), lj, mu, rho))
emit("kBimodal_AlphaMoment02", q_expect(lambda v: mp.exp(-mp.mpf("0.8") * v), lj, mu, rho))
post_mean = mp.quad(lambda z: z * mp.exp(lj(z)), [-inf, -2, 0, 2, inf])
emit("kBimodal_Mean", post_mean)

# Two-point GP regression, Matern-3/2 (s=1.3, l=0.9), noise 0.5
xs = [mp.mpf(0), mp.mpf("0.7")]
ys = [mp.mpf("0.4"), mp.mpf("-0.3")]
K = mp.matrix(2, 2)
for i in range(2):
    for j in range(2):
        K[i, j] = matern(abs(xs[i] - xs[j]), mp.mpf("1.3"), mp.mpf("0.9"))
noise = mp.mpf("0.5") ** 2
A = K + noise * mp.eye(2)
Ainv = A ** -1
y = mp.matrix(ys)
mean = K * Ainv * y
cov = K - K * Ainv * K
emit("kGpr2_Mean0", mean[0])
emit("kGpr2_Mean1", mean[1])
emit("kGpr2_Var0", cov[0, 0])
emit("kGpr2_Var1", cov[1, 1])
emit("kGpr2_Cov01", cov[0, 1])
emit("kGpr2_LogEvidence", -mp.log(mp.det(2 * mp.pi * A)) / 2 - (y.T * Ainv * y)[0] / 2)

# Two-point GP classification, x = (0, 1), labels (1, 0), s = l = 1
Kc = mp.matrix([[1, matern(1, 1, 1)], [matern(1, 1, 1), 1]])
Kci = Kc ** -1
detc = mp.det(Kc)


def joint_c(f0, f1):
    quad = Kci[0, 0] * f0 * f0 + 2 * Kci[0, 1] * f0 * f1 + Kci[1, 1] * f1 * f1
    prior = mp.exp(-quad / 2) / (2 * mp.pi * mp.sqrt(detc))
    return prior / (1 + mp.exp(-f0)) / (1 + mp.exp(f1))


mp.mp.dps = 20
emit("kGpc2_Evidence", mp.quad(joint_c, [-12, 0, 12], [-12, 0, 12]))
print("}  // namespace ref")
