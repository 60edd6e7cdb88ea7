"""Symbolic Christoffel symbols and curvature for the Perturbed metric family.

g = I + eps * a(x) * (|x|^2 I - x x^T),  a = 1 + sin(k.x)/2,  k = (1, 2, 3).
Prints values frozen into tests/test_geometry.cpp.
"""
import sympy as sp

n = 3
eps = sp.Rational(1, 20)
xs = sp.symbols("x0:%d" % n)
k = [1, 2, 3]
a = 1 + sp.sin(sum(ki * xi for ki, xi in zip(k, xs))) / 2
r2 = sum(xi**2 for xi in xs)
g = sp.Matrix(n, n, lambda i, j: (1 if i == j else 0) + eps * a * (r2 * (1 if i == j else 0) - xs[i] * xs[j]))

point = {xs[0]: sp.Rational(1, 5), xs[1]: sp.Rational(-1, 10), xs[2]: sp.Rational(3, 20)}
ginv = g.subs(point).evalf(30).inv()

dg = [[[sp.diff(g[i, j], xs[l]) for l in range(n)] for j in range(n)] for i in range(n)]
dgp = [[[dg[i][j][l].subs(point).evalf(30) for l in range(n)] for j in range(n)] for i in range(n)]


def gamma_first(i, j, l):
    return (dgp[l][i][j] + dgp[l][j][i] - dgp[i][j][l]) / 2


gam = [[[sum(ginv[kk, l] * (dgp[l][i][j] + dgp[l][j][i] - dgp[i][j][l]) / 2 for l in range(n))
         for j in range(n)] for i in range(n)] for kk in range(n)]
for kk in range(n):
    for i in range(n):
        for j in range(i, n):
            print("Gamma[%d][%d][%d] = %.15e" % (kk, i, j, gam[kk][i][j]))

# R_ijkl = 1/2 (g_il,jk + g_jk,il - g_ik,jl - g_jl,ik) + g_pq (G^p_jk G^q_il - G^p_jl G^q_ik)
d2 = lambda i, j, p, q: sp.diff(g[i, j], xs[p], xs[q]).subs(point).evalf(30)
gp = g.subs(point).evalf(30)


def riem(i, j, kk, l):
    val = (d2(i, l, j, kk) + d2(j, kk, i, l) - d2(i, kk, j, l) - d2(j, l, i, kk)) / 2
    for p in range(n):
        for q in range(n):
            val += gp[p, q] * (gam[p][j][kk] * gam[q][i][l] - gam[p][j][l] * gam[q][i][kk])
    return val


for idx in [(0, 1, 0, 1), (0, 2, 0, 2), (1, 2, 1, 2), (0, 1, 0, 2), (0, 1, 1, 2)]:
    print("R%s = %.15e" % (str(idx), riem(*idx)))
