"""Pure numpy LSTM sequence kernels (reference backend).

Single-direction forward and backward over one sequence. Gate layout in the
stacked weight matrices is ``(input, forget, output, candidate)`` blocks of
width ``H``. Masked steps carry the previous hidden/cell state through
unchanged and contribute no parameter gradients; callers are responsible for
zeroing per-step outputs of masked positions where the contract requires an
emitted zero.

All arrays are float64. The compiled twin in ``_lstm_cy.pyx`` implements the
same contract with the same operation order.
"""

import numpy as np


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_forward(wx, wh, b, x, mask):
    """Run one LSTM direction over a sequence.

    wx: (I, 4H) input weights, wh: (H, 4H) recurrent weights, b: (4H,) bias.
    x: (T, I) inputs, mask: (T,) 1.0 for real steps, 0.0 for padding.

    Returns (h, c, gates): per-step hidden states (T, H), cell states (T, H)
    and post-activation gate values (T, 4H). Rows at masked steps repeat the
    carried state and have zero gates. h[-1] / c[-1] are the final states.
    """
    T = x.shape[0]
    H = wh.shape[0]
    h = np.zeros((T, H))
    c = np.zeros((T, H))
    gates = np.zeros((T, 4 * H))
    h_prev = np.zeros(H)
    c_prev = np.zeros(H)
    for t in range(T):
        if mask[t] == 0.0:
            h[t] = h_prev
            c[t] = c_prev
            continue
        z = x[t] @ wx + h_prev @ wh + b
        i = _sigmoid(z[:H])
        f = _sigmoid(z[H:2 * H])
        o = _sigmoid(z[2 * H:3 * H])
        g = np.tanh(z[3 * H:])
        c_prev = f * c_prev + i * g
        h_prev = o * np.tanh(c_prev)
        gates[t, :H] = i
        gates[t, H:2 * H] = f
        gates[t, 2 * H:3 * H] = o
        gates[t, 3 * H:] = g
        h[t] = h_prev
        c[t] = c_prev
    return h, c, gates


def lstm_backward(wx, wh, x, mask, h, c, gates, dh_seq, dh_last, dc_last):
    """Backpropagate through `lstm_forward`.

    dh_seq: (T, H) gradients on the per-step hidden outputs (rows at masked
    steps must be zero). dh_last / dc_last: gradients on the final states.

    Returns (dx, dwx, dwh, db).
    """
    T, I = x.shape
    H = wh.shape[0]
    dx = np.zeros((T, I))
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(4 * H)
    dh_carry = dh_last.copy()
    dc_carry = dc_last.copy()
    for t in range(T - 1, -1, -1):
        dh_total = dh_seq[t] + dh_carry
        if mask[t] == 0.0:
            dh_carry = dh_total
            continue
        i = gates[t, :H]
        f = gates[t, H:2 * H]
        o = gates[t, 2 * H:3 * H]
        g = gates[t, 3 * H:]
        c_t = c[t]
        c_prev = c[t - 1] if t > 0 else np.zeros(H)
        h_prev = h[t - 1] if t > 0 else np.zeros(H)
        tc = np.tanh(c_t)
        do = dh_total * tc
        dc = dh_total * o * (1.0 - tc * tc) + dc_carry
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            do * o * (1.0 - o),
            dg * (1.0 - g * g),
        ])
        dwx += np.outer(x[t], dz)
        dwh += np.outer(h_prev, dz)
        db += dz
        dx[t] = wx @ dz
        dh_carry = wh @ dz
        dc_carry = dc * f
    return dx, dwx, dwh, db
