#!/usr/bin/env python3
"""Reference outputs for the CLI golden tests.

Everything here is built from dense numpy matrices (full atom-atom-field
Hilbert space, 16x16 four-qubit protocol rounds, a dense Lindblad
superoperator) and shares no code with the Rust crates. Run from this
directory:

    python3 generate.py
"""

import json
import math
from pathlib import Path

import numpy as np
from scipy.linalg import expm
from scipy.special import erf, gammaln
from scipy.sparse import csr_matrix, identity, kron
from scipy.sparse.linalg import expm_multiply

OUT = Path(__file__).resolve().parent

DEFAULTS = dict(
    nbar=100.0, phi=0.0, gtau1=2.0, gtau2=None, gtau_f=3.0, theta=None, p=None,
    p_window=(-2.0, 2.0), kappa=0.0, gamma=0.0, n_T=0.1, n_f=0, tol=1e-8, integrator="rk45",
)


def config(**kw):
    c = dict(DEFAULTS)
    c.update(kw)
    if c["gtau2"] is None:
        c["gtau2"] = c["gtau1"]
    if c["theta"] is None:
        c["theta"] = c["phi"] + math.pi / 2
    if c["p"] is None:
        c["p"] = 0.15 if (c["kappa"] > 0 or c["gamma"] > 0) else 0.0
    return c


def header(cmd, c, extra=()):
    lines = [f"# cqed-purify {cmd}"]
    for k in ["nbar", "phi", "gtau1", "gtau2", "gtau_f", "theta", "p"]:
        lines.append(f"# {k} = {num(c[k])}")
    lines.append(f"# p_window = {c['p_window'][0]!r},{c['p_window'][1]!r}")
    for k in ["kappa", "gamma", "n_T"]:
        lines.append(f"# {k} = {num(c[k])}")
    lines.append(f"# n_f = {c['n_f'] if c['n_f'] else 'auto'}")
    lines.append(f"# tol = {c['tol']!r}")
    lines.append(f"# integrator = {c['integrator']}")
    lines.extend(f"# {k} = {v}" for k, v in extra)
    return lines


def num(x):
    return repr(float(x))


def write_csv(name, head, columns, rows):
    text = "\n".join(head + [",".join(columns)] + [",".join(repr(float(x)) if not isinstance(x, int) else str(x) for x in r) for r in rows])
    (OUT / name).write_text(text + "\n")


# ---------------------------------------------------------------- field


def coherent(alpha, n):
    k = np.arange(n)
    r = abs(alpha)
    if r == 0:
        v = np.zeros(n, complex)
        v[0] = 1
        return v
    mag = np.exp(-0.5 * r * r + k * math.log(r) - 0.5 * gammaln(k + 1))
    return mag * np.exp(1j * k * np.angle(alpha))


def hermite_functions(x, n):
    h = np.zeros(n)
    h[0] = math.pi ** -0.25 * math.exp(-x * x / 2)
    if n > 1:
        h[1] = math.sqrt(2) * x * h[0]
    for k in range(2, n):
        h[k] = math.sqrt(2 / k) * x * h[k - 1] - math.sqrt((k - 1) / k) * h[k - 2]
    return h


def quad_row(theta, x, n):
    return np.exp(-1j * theta * np.arange(n)) * hermite_functions(x, n)


def ladder(n):
    return np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)


SP = np.array([[0, 0], [1, 0]], complex)  # |1><0|
SM = SP.T.copy()
I2 = np.eye(2)


def jc_hamiltonian(atom, n):
    a = ladder(n)
    if atom == 0:
        return np.kron(np.kron(SP, I2), a) + np.kron(np.kron(SM, I2), a.conj().T)
    return np.kron(np.kron(I2, SP), a) + np.kron(np.kron(I2, SM), a.conj().T)


def evolve_pure(c, alpha, gtau1, gtau2, n):
    """Sequential JCM evolution; each step runs in n+1 levels and drops the
    extra level afterwards."""
    psi = np.kron(np.asarray(c, complex), coherent(alpha, n))
    for atom, gt in [(0, gtau1), (1, gtau2)]:
        big = np.zeros(4 * (n + 1), complex)
        for s in range(4):
            big[s * (n + 1): s * (n + 1) + n] = psi[s * n:(s + 1) * n]
        big = expm(-1j * gt * jc_hamiltonian(atom, n + 1)) @ big
        psi = np.concatenate([big[s * (n + 1): s * (n + 1) + n] for s in range(4)])
    return psi.reshape(4, n)


def basis(label):
    if label == "singlet":
        return np.array([0, 1, -1, 0]) / math.sqrt(2)
    v = np.zeros(4)
    v[int(label, 2)] = 1
    return v


def bell(phi):
    s = 1 / math.sqrt(2)
    return dict(
        psi_minus=np.array([0, s, -s, 0], complex),
        phi_minus=np.array([np.exp(-1j * phi) * s, 0, 0, -np.exp(1j * phi) * s]),
        phi_plus=np.array([np.exp(-1j * phi) * s, 0, 0, np.exp(1j * phi) * s]),
        psi_plus=np.array([0, s, s, 0], complex),
    )


def m_ideal(phi):
    b = bell(phi)
    return np.outer(b["psi_minus"], b["psi_minus"].conj()) + np.outer(b["phi_minus"], b["phi_minus"].conj())


def grid(lo, hi, step):
    n = max(1, math.ceil((hi - lo) / step - 1e-9))
    h = (hi - lo) / n
    return [lo + h * k for k in range(n + 1)]


# ---------------------------------------------------------------- protocol


def werner(f):
    b = bell(0.0)
    t = (1 - f) / 3
    return (f * np.outer(b["psi_minus"], b["psi_minus"]) + t * np.outer(b["phi_minus"], b["phi_minus"].conj())
            + t * np.outer(b["phi_plus"], b["phi_plus"].conj()) + t * np.outer(b["psi_plus"], b["psi_plus"]))


def rho_psi(f):
    b = bell(0.0)
    return f * np.outer(b["psi_minus"], b["psi_minus"]) + (1 - f) * np.outer(b["psi_plus"], b["psi_plus"])


def fidelity(rho):
    v = bell(0.0)["psi_minus"]
    return float(np.real(v.conj() @ rho @ v))


def b_ops():
    x = np.array([[0, 1], [1, 0]], complex)
    y = np.array([[0, -1j], [1j, 0]])
    b1 = (I2 + 1j * x) / math.sqrt(2)
    b2 = (I2 - 1j * y) / math.sqrt(2)
    b3 = np.diag([1j, 1])
    return [b1, b2, b3, I2.astype(complex)]


def twirl(rho, werner_form):
    bb = [np.kron(b, b) for b in b_ops()]
    out = sum((u @ u).conj().T @ rho @ (u @ u) for u in bb) / 4
    if werner_form:
        out = sum(u.conj().T @ out @ u for u in bb[:3]) / 3
    return out


def four_op(k):
    """Kraus k on (A1, A2) and on (B1, B2); qubits ordered A1, B1, A2, B2."""
    t = k.reshape(2, 2, 2, 2)  # [a1', a2', a1, a2]
    op = np.einsum("acAC,bdBD->abcdABCD", t, t)
    return op.reshape(16, 16)


def protocol_round(rho, kraus, protocol, rotation=True):
    rho = twirl(rho, protocol == "aB")
    big = np.kron(rho, rho)
    k = four_op(kraus)
    after = k @ big @ k.conj().T
    p = float(np.real(np.trace(after)))
    t = after.reshape(2, 2, 2, 2, 2, 2, 2, 2)
    flip = np.kron(np.array([[0, 1], [1, 0]]), I2)
    out = np.zeros((4, 4), complex)
    for o2 in range(2):
        for o3 in range(2):
            blk = t[:, :, o2, o3, :, :, o2, o3].reshape(4, 4)
            if o2 == o3:
                blk = flip @ blk @ flip
            out += blk
    if protocol == "aD" and rotation:
        r = np.kron(b_ops()[2], b_ops()[2])
        out = r @ out @ r.conj().T
    return out / np.real(np.trace(out)), p


def kraus_matrix(c):
    n = c["n_f"]
    alpha = math.sqrt(c["nbar"]) * np.exp(1j * c["phi"])
    w = quad_row(c["theta"], c["p"], n)
    k = np.zeros((4, 4), complex)
    for i in range(4):
        e = np.zeros(4)
        e[i] = 1
        g = evolve_pure(e, alpha, c["gtau1"], c["gtau2"], n)
        k[:, i] = g @ w
    return k


def purify_case(name, cmd_protocol, f0, iterations, c, backend="ideal"):
    kr = m_ideal(c["phi"]) if backend == "ideal" else kraus_matrix(c)
    rho = werner(f0) if cmd_protocol == "aB" else rho_psi(f0)
    rows = [(0, fidelity(rho), 1.0, 1.0)]
    pairs = 1.0
    for it in range(1, iterations + 1):
        rho, p = protocol_round(rho, kr, cmd_protocol)
        pairs = pairs * 2 / p
        rows.append((it, fidelity(rho), p, pairs))
    extra = [("protocol", cmd_protocol), ("backend", backend), ("f0", num(f0))]
    if cmd_protocol == "aD":
        extra.append(("final_rotation", "true"))
    write_csv(name, header("purify", c, extra), ["iter", "F", "P_step", "cumulative_pairs"], rows)


def resources_case(name, protocol, f0, target):
    c = config()
    rho = werner(f0) if protocol == "aB" else rho_psi(f0)
    rows = [(0, f0, 1.0)]
    f, pairs = f0, 1.0
    while f < target:
        rho, p = protocol_round(rho, m_ideal(0.0), protocol)
        f = fidelity(rho)
        pairs = pairs * 2 / p
        rows.append((len(rows), f, pairs))
    extra = [("protocol", protocol), ("f0", num(f0)), ("target", num(target))]
    write_csv(name, header("resources", c, extra), ["N", "F_N", "NQ"], rows)


# ---------------------------------------------------------------- field commands


def trapezoid(xs, ys):
    return sum((xs[i + 1] - xs[i]) * (ys[i] + ys[i + 1]) / 2 for i in range(len(xs) - 1))


def quad_dist_case(name, c, lo, hi, step, state="00"):
    n = c["n_f"]
    amps = basis(state)
    g = evolve_pure(amps, math.sqrt(c["nbar"]) * np.exp(1j * c["phi"]), c["gtau1"], c["gtau2"], n)

    def pdf(x):
        return float(np.sum(np.abs(g @ quad_row(c["theta"], x, n)) ** 2))

    xs = grid(lo, hi, step)
    ys = [pdf(x) for x in xs]
    win = grid(c["p_window"][0], c["p_window"][1], 0.01)
    ph = trapezoid(win, [pdf(x) for x in win])
    star = m_ideal(c["phi"]) @ amps
    s = float(np.sum(np.abs(star) ** 2))
    werf = 0.5 * (erf(c["p_window"][1]) - erf(c["p_window"][0]))
    extra = [
        ("state", state),
        ("grid_integral", num(trapezoid(xs, ys))),
        ("success_probability", num(ph)),
        ("asymptotic_divided", num(werf / (s * s))),
        ("asymptotic_multiplied", num(werf * s)),
    ]
    write_csv(name, header("quad-dist", c, extra), ["p", "P"], list(zip(xs, ys)))


def fstar_case(name, c, nbars, lo, hi, step, state="00"):
    amps = basis(state)
    star = m_ideal(c["phi"]) @ amps
    star = star / np.linalg.norm(star)
    n = c["n_f"]
    ratio = c["gtau2"] / c["gtau1"]
    rows = []
    for nbar in nbars:
        alpha = math.sqrt(nbar) * np.exp(1j * c["phi"])
        for gt in grid(lo, hi, step):
            g = evolve_pure(amps, alpha, gt, gt * ratio, n)
            v = g @ quad_row(c["theta"], c["p"], n)
            rows.append((nbar, gt, float(abs(star.conj() @ v) ** 2 / np.sum(np.abs(v) ** 2))))
    extra = [("state", state), ("gtau2_over_gtau1", num(ratio))]
    write_csv(name, header("fstar-sweep", c, extra), ["nbar", "gtau", "fstar"], rows)


def qfunc_case(name, c, xr, pr, step, state="00"):
    n = c["n_f"]
    g = evolve_pure(basis(state), math.sqrt(c["nbar"]) * np.exp(1j * c["phi"]), c["gtau1"], c["gtau2"], n)
    xs, ps = grid(*xr, step), grid(*pr, step)
    rows, total = [], 0.0
    for p in ps:
        for x in xs:
            bra = coherent((x + 1j * p) / math.sqrt(2), n)
            q = float(np.sum(np.abs(g @ bra.conj()) ** 2) / math.pi)
            total += q
            rows.append((x, p, q))
    cell = (xs[1] - xs[0]) * (ps[1] - ps[0]) / 2
    extra = [("state", state), ("grid_integral", num(total * cell))]
    write_csv(name, header("qfunc", c, extra), ["x", "p", "Q"], rows)


# ---------------------------------------------------------------- lossy channel


def lindblad(h, jumps):
    d = h.shape[0]
    eye = identity(d, format="csr")
    h = csr_matrix(h)
    # row-major vec: vec(A X B) = (A kron B^T) vec(X)
    out = -1j * (kron(h, eye) - kron(eye, h.T))
    for l in jumps:
        l = csr_matrix(l)
        ld = l.conj().T
        ll = ld @ l
        out = out + kron(l, l.conj()) - 0.5 * kron(ll, eye) - 0.5 * kron(eye, ll.T)
    return out.tocsr()


def channel_case(name, c):
    n = c["n_f"]
    a = ladder(n)
    ad = a.conj().T
    i4 = np.eye(4)
    field = lambda op: np.kron(i4, op)
    jumps = [
        math.sqrt(c["kappa"] * (c["n_T"] + 1)) * field(a),
        math.sqrt(c["kappa"] * c["n_T"]) * field(ad),
        math.sqrt(c["gamma"]) * np.kron(np.kron(SM, I2), np.eye(n)),
        math.sqrt(c["gamma"]) * np.kron(np.kron(I2, SM), np.eye(n)),
    ]
    l1 = lindblad(jc_hamiltonian(0, n), jumps)
    lf = lindblad(np.zeros((4 * n, 4 * n)), jumps)
    l2 = lindblad(jc_hamiltonian(1, n), jumps)
    coh = coherent(math.sqrt(c["nbar"]) * np.exp(1j * c["phi"]), n)
    w = quad_row(c["theta"], c["p"], n)
    d = 4 * n
    entries = np.zeros((4, 4, 4, 4), complex)
    for i in range(4):
        for j in range(4):
            atoms = np.zeros((4, 4))
            atoms[i, j] = 1
            rho = np.kron(atoms, np.outer(coh, coh.conj())).reshape(-1)
            rho = expm_multiply(l1 * c["gtau1"], rho)
            rho = expm_multiply(lf * c["gtau_f"], rho)
            rho = expm_multiply(l2 * c["gtau2"], rho)
            rho = rho.reshape(d, d)
            for k in range(4):
                for l in range(4):
                    blk = rho[k * n:(k + 1) * n, l * n:(l + 1) * n]
                    entries[k, l, i, j] = w @ blk @ w.conj()
    doc = {
        "metadata": {"command": "channel", "config": {k: v for k, v in c.items() if k != "p_window"}},
        "entries": [[[[{"re": float(z.real), "im": float(z.imag)} for z in entries[k, l, i]] for i in range(4)]
                     for l in range(4)] for k in range(4)],
    }
    (OUT / name).write_text(json.dumps(doc, indent=1) + "\n")


def main():
    resources_case("resources_ad.csv", "aD", 0.7, 0.999999)
    resources_case("resources_ab.csv", "aB", 0.7, 0.99)
    purify_case("purify_ab_ideal.csv", "aB", 0.7, 4, config())
    purify_case("purify_ad_ideal.csv", "aD", 0.7, 5, config())
    purify_case("purify_ad_kraus.csv", "aD", 0.7, 4, config(nbar=10.0, n_f=45), backend="kraus")
    quad_dist_case("quad_dist.csv", config(nbar=10.0, n_f=45), -4.0, 4.0, 0.25)
    fstar_case("fstar_sweep.csv", config(n_f=70), [10.0, 30.0], 0.5, 3.0, 0.5)
    qfunc_case("qfunc.csv", config(nbar=4.0, n_f=30), (-2.0, 5.0), (-3.0, 3.0), 0.5)
    channel_case(
        "channel.json",
        config(nbar=1.5, n_f=12, kappa=0.05, gamma=0.02, n_T=0.1, gtau1=1.0, gtau_f=0.5, gtau2=1.2, p=0.3, tol=1e-10),
    )


if __name__ == "__main__":
    main()
