import numpy as np

from covest.acquisition import draw_rf_combiner, whitened_combiner
from covest.channel import ChannelScene, draw_gains


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_combiner(rng, n_ant, m_rf):
    return whitened_combiner(draw_rf_combiner(n_ant, m_rf, rng))


PAPER_AOAS_DEG = [-66, 13, 49, -7, 81, 62]
PAPER_DELAYS = [0, 4.34, 7.13, 17.05, 21.08, 25.73]


def paper_scene(rng, t_frm=20, k_sbcr=128, n_ant=64):
    return ChannelScene(
        aoas_rad=np.deg2rad(PAPER_AOAS_DEG),
        delays=np.array(PAPER_DELAYS),
        gains=draw_gains(rng, t_frm, 6),
        n_ant=n_ant,
        k_sbcr=k_sbcr,
        t_frm=t_frm,
        n_cp=k_sbcr // 4,
    )


def numerical_fim(scene, comb, sigma=1.0, h=1e-4):
    """Complex FIM over (phi, tau, g, conj g) from a finite-difference Hessian.

    At noiseless data the Hessian of the log-likelihood equals minus the
    real-parameter FIM exactly, so central differences of ``log_likelihood``
    over (phi, tau, Re g, Im g) give an oracle independent of the closed-form
    blocks. Returns ``(complex_fim, real_fim)``.
    """
    from covest.acquisition import measure
    from covest.channel import ChannelScene, channel_tensor
    from covest.crlb import log_likelihood

    l, t = scene.n_paths, scene.t_frm
    tl = t * l
    h_tensor, _ = channel_tensor(scene)
    y = measure(h_tensor, comb, 0.0, None)
    g0 = scene.gains.ravel(order="F")
    theta0 = np.concatenate([scene.aoas_rad, scene.delays, g0.real, g0.imag])

    def f(theta):
        g = (theta[2 * l : 2 * l + tl] + 1j * theta[2 * l + tl :]).reshape((t, l), order="F")
        s = ChannelScene(theta[:l], theta[l : 2 * l], g, scene.n_ant, scene.k_sbcr, t, scene.n_cp, scene.spacing_ratio)
        return log_likelihood(y, s, comb, sigma)

    p = theta0.size
    hess = np.zeros((p, p))
    eye = np.eye(p) * h
    for i in range(p):
        for j in range(i, p):
            v = (
                f(theta0 + eye[i] + eye[j])
                - f(theta0 + eye[i] - eye[j])
                - f(theta0 - eye[i] + eye[j])
                + f(theta0 - eye[i] - eye[j])
            ) / (4 * h * h)
            hess[i, j] = hess[j, i] = v
    f_real = -hess
    # Wirtinger map: s_g = (s_re - j s_im) / 2, s_gc = (s_re + j s_im) / 2
    m = np.zeros((2 * l + 2 * tl, p), complex)
    m[: 2 * l, : 2 * l] = np.eye(2 * l)
    i_tl = np.eye(tl)
    m[2 * l : 2 * l + tl, 2 * l : 2 * l + tl] = 0.5 * i_tl
    m[2 * l : 2 * l + tl, 2 * l + tl :] = -0.5j * i_tl
    m[2 * l + tl :, 2 * l : 2 * l + tl] = 0.5 * i_tl
    m[2 * l + tl :, 2 * l + tl :] = 0.5j * i_tl
    return m @ f_real @ m.conj().T, f_real


def oracle_scene(rng, n_ant, k_sbcr, t_frm, n_paths):
    """Small scene with delays kept inside the valid range for finite differences."""
    from covest.channel import ChannelScene, draw_gains

    n_cp = max(2, k_sbcr // 4)
    return ChannelScene(
        aoas_rad=rng.uniform(-1.2, 1.2, n_paths),
        delays=rng.uniform(0.2, n_cp - 0.2, n_paths),
        gains=draw_gains(rng, t_frm, n_paths),
        n_ant=n_ant,
        k_sbcr=k_sbcr,
        t_frm=t_frm,
        n_cp=n_cp,
    )


def block_errors(blocks, oracle):
    """Relative Frobenius error of each closed-form block against the oracle FIM."""
    l = blocks.n_paths
    tl = blocks.omega_gg.shape[0]
    sl = {"phi": slice(0, l), "tau": slice(l, 2 * l), "g": slice(2 * l, 2 * l + tl), "gc": slice(2 * l + tl, None)}
    pairs = {
        "phi_phi": ("phi", "phi", blocks.omega_phi_phi),
        "tau_tau": ("tau", "tau", blocks.omega_tau_tau),
        "phi_tau": ("phi", "tau", blocks.omega_phi_tau),
        "gg": ("g", "g", blocks.omega_gg),
        "phi_g": ("phi", "g", blocks.omega_phi_g),
        "tau_g": ("tau", "g", blocks.omega_tau_g),
        "g_gc": ("g", "gc", np.zeros((tl, tl))),
    }
    out = {}
    for name, (a, b, mat) in pairs.items():
        ref = oracle[sl[a], sl[b]]
        denom = max(np.linalg.norm(ref), np.linalg.norm(oracle) * 1e-12)
        out[name] = float(np.linalg.norm(mat - ref) / denom)
    return out


ACCEPTANCE_LINES = []


def report(label, ok, detail):
    """Record and print one acceptance line, then fail the test if needed."""
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line
