"""Independent sympy derivations of the expected values frozen into the C++ tests.

Run: python3 tests/oracles/derive_expected.py
Nothing here shares code with the C++ implementation; jets are modelled as
derivatives of an undetermined sympy Function and reductions modulo a
constraint are done by explicit back-substitution of differential consequences.
"""
import sympy as sp

t, x, y = sp.symbols("t x y")
u = sp.Function("u")(t, x)


def reduce_by(expr, leader_order_x, rhs_fn, max_order=8):
    """Replace u_{x^k t^m} with k >= leader_order_x using D_t^m D_x^(k-leader) rhs."""
    for total in range(max_order, leader_order_x - 1, -1):
        for k in range(total, leader_order_x - 1, -1):
            m = total - k
            args = [(x, k)] + ([(t, m)] if m else [])
            d = sp.Derivative(u, *args)
            repl = rhs_fn
            if k - leader_order_x:
                repl = sp.diff(repl, x, k - leader_order_x)
            if m:
                repl = sp.diff(repl, t, m)
            expr = expr.subs(d, repl)
    return expr


def full_reduce(expr, leader, rhs):
    prev = None
    while prev != expr:
        prev = expr
        expr = sp.expand(reduce_by(expr, leader, rhs))
    return sp.simplify(expr)


def prolong(eta, delta_derivs):
    """pr eta applied to Delta = sum of coefficient * u_J, given as {(kx,kt): coeff}."""
    out = 0
    for (kx, kt), coeff in delta_derivs.items():
        d = eta
        if kx:
            d = sp.diff(d, x, kx)
        if kt:
            d = sp.diff(d, t, kt)
        out += coeff * d
    return out


print("== prolongation of u_xx = u_x^3")
ux = sp.diff(u, x)
rhs = ux**3
print("u_xxx ->", full_reduce(sp.diff(u, x, 3), 2, rhs))
print("u_xxt ->", full_reduce(sp.diff(u, x, 2, t, 1), 2, rhs))

print("== invariance defects on u_xx = u_x^3")
A, B = sp.symbols("A B")
uxx = sp.diff(u, x, 2)
ut = sp.diff(u, t)
h = sp.Function("h")
Fsym = sp.Function("F")


def defect_cubic(eta):
    # Delta = u_xx - u_x^3: dDelta/du_xx = 1, dDelta/du_x = -3 u_x^2
    expr = sp.diff(eta, x, 2) - 3 * ux**2 * sp.diff(eta, x)
    return full_reduce(expr, 2, rhs)


print("K1:", defect_cubic(ut - (A / ux**3 + B / ux**2) * uxx))
print("K2:", defect_cubic(u * ux))
print("K3:", defect_cubic(h(u + 1 / ux)))
print("u^2:", sp.factor(defect_cubic(u**2)))
print("u:", sp.factor(defect_cubic(u)))
gen = sp.factor(defect_cubic(ut - Fsym(ux) * uxx))
print("generic F:", gen)

ks = list(range(-5, 3))
a = sp.symbols("a_m5 a_m4 a_m3 a_m2 a_m1 a_0 a_1 a_2")
poly_f = sum(ai * ux**k for ai, k in zip(a, ks))
d = sp.together(defect_cubic(ut - poly_f * uxx))
num = sp.expand(sp.numer(d))
p = sp.Symbol("p")
num_p = sp.expand(num.subs(ux, p))
eqs = sp.Poly(num_p, p).coeffs()
print("determining solution:", sp.solve(eqs, a, dict=True))

print("== u_xx = f(t,x) u under Q1")
f = sp.Function("f")(t, x)
alpha = sp.Function("alpha")(t)
eta = ut + sp.diff(u, x, 3) - 3 * uxx * ux / u + alpha * u
expr = sp.diff(eta, x, 2) - f * eta
defect = full_reduce(expr, 2, f * u)
kdv = sp.diff(f, t) + sp.diff(f, x, 3) - 6 * f * sp.diff(f, x)
print("defect:", sp.factor(defect))
print("c0 =", sp.simplify(defect / (u * kdv)))

print("== commutator [u, u u_x]")
eta1, eta2 = u, u * ux
pr1_eta2 = sp.diff(eta2, u) * eta1 + sp.diff(eta2, ux) * sp.diff(eta1, x)
pr2_eta1 = eta2
print(sp.expand(pr1_eta2 - pr2_eta1))

print("== reduction of Eq. (12) by ansatz (13)")
lam, lam1 = sp.symbols("lambda lambda1")
phi1, phi2 = sp.Function("phi1")(t), sp.Function("phi2")(t)
R = phi1 - 2 * x
U = phi2 - sp.sqrt(R)
Ux, Ut, Uxx = sp.diff(U, x), sp.diff(U, t), sp.diff(U, x, 2)
H = sp.Function("h")
pde = Ut - (A / Ux**3 + B / Ux**2) * Uxx - lam * U * Ux - lam1 * H(sp.simplify(U + 1 / Ux))
expect = (sp.diff(phi2, t) - A + lam - lam1 * H(phi2)) + (-sp.diff(phi1, t) / 2 - B - lam * phi2) / sp.sqrt(R)
print("difference:", sp.simplify(pde - expect))

print("== heat + quadratic ansatz")
q1, q2 = sp.Function("phi1")(t), sp.Function("phi2")(t)
Uq = q1 + q2 * x**2
print(sp.expand(sp.diff(Uq, t) - sp.diff(Uq, x, 2)))

print("== explicit solution residual check (symbolic)")
C, C1 = sp.symbols("C C1")
sol = (C * sp.exp(lam1 * t) - (A - lam) / lam1
       - sp.sqrt(2 * ((A - lam) * lam / lam1 - B) * t - 2 * lam / lam1 * C * sp.exp(lam1 * t) + C1 - 2 * x))
res = (sp.diff(sol, t) - (A / sp.diff(sol, x)**3 + B / sp.diff(sol, x)**2) * sp.diff(sol, x, 2)
       - lam * sol * sp.diff(sol, x) - lam1 * (sol + 1 / sp.diff(sol, x)))
print("residual:", sp.simplify(res))

print("== closed forms for RK4 check (A=2, lambda=1, lambda1=1, B=0, C=1)")
tt = sp.Symbol("t")
print("phi2(1) =", sp.N(sp.exp(1) - 1, 20))
