"""Numerical core of the tracking model.

Everything here operates on plain float64 numpy arrays. Matrices act on
column vectors from the left (``y = W @ x + b``), so a weight of shape
(out, in) maps an (in,) vector to an (out,) vector.

The model graph is fixed: a tanh dense encoder for the static vector, an
LSTM over the daily input vectors, per-day concatenation of the static
representation with the hidden state, scalar-score attention pooling over
days, a 2-class success head on [static ; pooled] and a 2-class per-day
emotion head. ``forward_pass`` records every intermediate so ``backward``
can produce exact analytic gradients, which ``gradcheck`` verifies against
central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable, NamedTuple, Sequence

import numpy as np


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def dense(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Affine map ``w @ x + b``. Raises ValueError on non-conforming shapes."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if w.ndim != 2 or x.ndim != 1 or b.ndim != 1:
        raise ValueError("dense expects a matrix, an input vector and a bias vector")
    if w.shape[1] != x.shape[0] or w.shape[0] != b.shape[0]:
        raise ValueError(
            f"dense shape mismatch: w {w.shape}, x {x.shape}, b {b.shape}"
        )
    return w @ x + b


def _softmax(z: np.ndarray) -> np.ndarray:
    """Stable softmax with max subtraction."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - np.max(z))
    return e / np.sum(e)


def softmax_binary(z: np.ndarray) -> np.ndarray:
    """Softmax over exactly two logits."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (2,):
        raise ValueError(f"softmax_binary expects a 2-vector, got shape {z.shape}")
    return _softmax(z)


_CLAMP = 1e-12


def cross_entropy(p: np.ndarray, label: int) -> float:
    """Negative log likelihood of ``label`` under probability vector ``p``.

    Probabilities are clamped to [1e-12, 1 - 1e-12] before the log.
    """
    p = np.asarray(p, dtype=np.float64)
    if not 0 <= label < p.shape[0]:
        raise ValueError(f"invalid label {label} for {p.shape[0]} classes")
    return float(-np.log(np.clip(p[label], _CLAMP, 1.0 - _CLAMP)))


class LstmState(NamedTuple):
    h: np.ndarray
    c: np.ndarray

    @staticmethod
    def zeros(hidden_dim: int) -> "LstmState":
        return LstmState(np.zeros(hidden_dim), np.zeros(hidden_dim))


@dataclass
class LstmParameters:
    """Gate weights of the LSTM cell.

    ``w_e*`` map the day input (hidden x input), ``w_h*`` the previous
    hidden state (hidden x hidden), ``b_*`` are gate biases (hidden,).
    """

    w_ei: np.ndarray
    w_hi: np.ndarray
    b_i: np.ndarray
    w_ef: np.ndarray
    w_hf: np.ndarray
    b_f: np.ndarray
    w_ec: np.ndarray
    w_hc: np.ndarray
    b_c: np.ndarray
    w_eo: np.ndarray
    w_ho: np.ndarray
    b_o: np.ndarray

    @property
    def hidden_dim(self) -> int:
        return self.b_i.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_ei.shape[1]


def lstm_step(r_t: np.ndarray, prev: LstmState, p: LstmParameters) -> LstmState:
    """One LSTM update.

    Gates are sigmoid of (input weight @ r_t + recurrent weight @ h_prev +
    bias), the candidate is the tanh counterpart, the cell is
    forget * c_prev + input * candidate, and the output is
    output_gate * tanh(cell).
    """
    r_t = np.asarray(r_t, dtype=np.float64)
    if r_t.shape != (p.input_dim,):
        raise ValueError(f"day input shape {r_t.shape} != ({p.input_dim},)")
    if prev.h.shape != (p.hidden_dim,) or prev.c.shape != (p.hidden_dim,):
        raise ValueError("previous state does not match hidden size")
    i = sigmoid(p.w_ei @ r_t + p.w_hi @ prev.h + p.b_i)
    f = sigmoid(p.w_ef @ r_t + p.w_hf @ prev.h + p.b_f)
    g = np.tanh(p.w_ec @ r_t + p.w_hc @ prev.h + p.b_c)
    o = sigmoid(p.w_eo @ r_t + p.w_ho @ prev.h + p.b_o)
    c = f * prev.c + i * g
    h = o * np.tanh(c)
    return LstmState(h, c)


@dataclass
class AttentionParameters:
    """Scalar-score attention: weight vector plus a length-1 bias."""

    w: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        self.b = np.atleast_1d(np.asarray(self.b, dtype=np.float64))


def attention_weights(day_reprs: np.ndarray, p: AttentionParameters) -> np.ndarray:
    """Softmax over per-day scores tanh(v . w + b).

    The tanh sits inside the softmax, so scores are bounded to (-1, 1),
    which caps the attainable contrast between days.
    """
    v = np.asarray(day_reprs, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    if v.shape[0] == 0:
        raise ValueError("attention over an empty sequence")
    if v.shape[1] != p.w.shape[0]:
        raise ValueError(f"day repr width {v.shape[1]} != weight width {p.w.shape[0]}")
    scores = np.tanh(v @ p.w + p.b[0])
    return _softmax(scores)


def attention_pool(alphas: np.ndarray, day_reprs: np.ndarray) -> np.ndarray:
    """Convex combination of day representations."""
    alphas = np.asarray(alphas, dtype=np.float64)
    v = np.asarray(day_reprs, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    if alphas.shape[0] != v.shape[0]:
        raise ValueError(f"{alphas.shape[0]} weights for {v.shape[0]} vectors")
    return alphas @ v


@dataclass
class DctCore:
    """Every trainable tensor of the tracking model."""

    encoder_w: np.ndarray  # (static_dim, static_raw_dim)
    encoder_b: np.ndarray  # (static_dim,)
    lstm: LstmParameters
    attention: AttentionParameters
    success_w: np.ndarray  # (2, static_dim + static_dim + hidden_dim)
    success_b: np.ndarray  # (2,)
    emotion_w: np.ndarray  # (2, static_dim + hidden_dim)
    emotion_b: np.ndarray  # (2,)

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        """All parameter tensors as (name, array) in a fixed order."""
        out = [("encoder_w", self.encoder_w), ("encoder_b", self.encoder_b)]
        for f in fields(LstmParameters):
            out.append((f.name, getattr(self.lstm, f.name)))
        out.append(("attn_w", self.attention.w))
        out.append(("attn_b", self.attention.b))
        out += [
            ("success_w", self.success_w),
            ("success_b", self.success_b),
            ("emotion_w", self.emotion_w),
            ("emotion_b", self.emotion_b),
        ]
        return out

    @property
    def static_dim(self) -> int:
        return self.encoder_b.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.lstm.hidden_dim

    @property
    def input_dim(self) -> int:
        return self.lstm.input_dim


def init_core(
    static_raw_dim: int,
    static_dim: int,
    hidden_dim: int,
    input_dim: int,
    rng: np.random.Generator,
) -> DctCore:
    """Seeded initialization.

    Weight tensors are uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
    Biases start at zero except the forget gate bias, which starts at 1 so
    the cell retains memory early in training.
    """

    def glorot(n_out, n_in):
        a = np.sqrt(6.0 / (n_in + n_out))
        return rng.uniform(-a, a, size=(n_out, n_in))

    def glorot_vec(n_in):
        a = np.sqrt(6.0 / (n_in + 1))
        return rng.uniform(-a, a, size=n_in)

    d_v = static_dim + hidden_dim
    lstm = LstmParameters(
        w_ei=glorot(hidden_dim, input_dim),
        w_hi=glorot(hidden_dim, hidden_dim),
        b_i=np.zeros(hidden_dim),
        w_ef=glorot(hidden_dim, input_dim),
        w_hf=glorot(hidden_dim, hidden_dim),
        b_f=np.ones(hidden_dim),
        w_ec=glorot(hidden_dim, input_dim),
        w_hc=glorot(hidden_dim, hidden_dim),
        b_c=np.zeros(hidden_dim),
        w_eo=glorot(hidden_dim, input_dim),
        w_ho=glorot(hidden_dim, hidden_dim),
        b_o=np.zeros(hidden_dim),
    )
    return DctCore(
        encoder_w=glorot(static_dim, static_raw_dim),
        encoder_b=np.zeros(static_dim),
        lstm=lstm,
        attention=AttentionParameters(w=glorot_vec(d_v), b=np.zeros(1)),
        success_w=glorot(2, static_dim + d_v),
        success_b=np.zeros(2),
        emotion_w=glorot(2, d_v),
        emotion_b=np.zeros(2),
    )


class HeadResult(NamedTuple):
    alphas: np.ndarray
    pooled: np.ndarray
    combined: np.ndarray
    success_logits: np.ndarray
    success_probs: np.ndarray


def head_forward(
    static_repr: np.ndarray,
    day_reprs: np.ndarray,
    scores: np.ndarray,
    t: int,
    core: DctCore,
) -> HeadResult:
    """Attention pooling over days 1..t plus the success head.

    Per-day scores do not depend on the prefix length, so callers can
    compute them once and re-normalize here for every prefix.
    """
    if t < 1:
        raise ValueError("prefix must contain at least one day")
    alphas = _softmax(scores[:t])
    pooled = alphas @ day_reprs[:t]
    combined = np.concatenate([static_repr, pooled])
    logits = core.success_w @ combined + core.success_b
    return HeadResult(alphas, pooled, combined, logits, _softmax(logits))


@dataclass
class ForwardRecord:
    """Tape of one sequence forward pass, consumed by ``backward``."""

    static_raw: np.ndarray
    static_pre: np.ndarray
    static_repr: np.ndarray
    day_inputs: np.ndarray  # (n, input_dim)
    gate_i: np.ndarray  # (n, hidden)
    gate_f: np.ndarray
    gate_o: np.ndarray
    cand: np.ndarray
    cells: np.ndarray
    hiddens: np.ndarray
    day_reprs: np.ndarray  # (n, static_dim + hidden)
    score_pre: np.ndarray  # (n,) raw scores before tanh
    scores: np.ndarray  # (n,) tanh scores
    head: HeadResult
    emotion_logits: np.ndarray  # (n, 2)
    emotion_probs: np.ndarray  # (n, 2)

    @property
    def n_days(self) -> int:
        return self.day_inputs.shape[0]


def forward_pass(
    static_raw: np.ndarray, day_inputs: np.ndarray, core: DctCore
) -> ForwardRecord:
    """Run the full model on one sequence, recording all intermediates."""
    static_raw = np.asarray(static_raw, dtype=np.float64)
    day_inputs = np.asarray(day_inputs, dtype=np.float64)
    if day_inputs.ndim != 2 or day_inputs.shape[0] < 1:
        raise ValueError("day_inputs must be a nonempty (n_days, input_dim) array")
    n = day_inputs.shape[0]
    hd = core.hidden_dim

    static_pre = dense(static_raw, core.encoder_w, core.encoder_b)
    static_repr = np.tanh(static_pre)

    gate_i = np.zeros((n, hd))
    gate_f = np.zeros((n, hd))
    gate_o = np.zeros((n, hd))
    cand = np.zeros((n, hd))
    cells = np.zeros((n, hd))
    hiddens = np.zeros((n, hd))
    state = LstmState.zeros(hd)
    p = core.lstm
    for t in range(n):
        r_t = day_inputs[t]
        if r_t.shape != (p.input_dim,):
            raise ValueError(f"day input width {r_t.shape[0]} != {p.input_dim}")
        gate_i[t] = sigmoid(p.w_ei @ r_t + p.w_hi @ state.h + p.b_i)
        gate_f[t] = sigmoid(p.w_ef @ r_t + p.w_hf @ state.h + p.b_f)
        cand[t] = np.tanh(p.w_ec @ r_t + p.w_hc @ state.h + p.b_c)
        gate_o[t] = sigmoid(p.w_eo @ r_t + p.w_ho @ state.h + p.b_o)
        cells[t] = gate_f[t] * state.c + gate_i[t] * cand[t]
        hiddens[t] = gate_o[t] * np.tanh(cells[t])
        state = LstmState(hiddens[t], cells[t])

    day_reprs = np.concatenate([np.tile(static_repr, (n, 1)), hiddens], axis=1)
    score_pre = day_reprs @ core.attention.w + core.attention.b[0]
    scores = np.tanh(score_pre)
    head = head_forward(static_repr, day_reprs, scores, n, core)

    emotion_logits = day_reprs @ core.emotion_w.T + core.emotion_b
    emotion_probs = np.empty_like(emotion_logits)
    for t in range(n):
        emotion_probs[t] = _softmax(emotion_logits[t])

    return ForwardRecord(
        static_raw=static_raw,
        static_pre=static_pre,
        static_repr=static_repr,
        day_inputs=day_inputs,
        gate_i=gate_i,
        gate_f=gate_f,
        gate_o=gate_o,
        cand=cand,
        cells=cells,
        hiddens=hiddens,
        day_reprs=day_reprs,
        score_pre=score_pre,
        scores=scores,
        head=head,
        emotion_logits=emotion_logits,
        emotion_probs=emotion_probs,
    )


def zero_gradients(core: DctCore) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in core.tensors()}


def backward(
    record: ForwardRecord,
    core: DctCore,
    d_success_logits: np.ndarray,
    d_emotion_logits: np.ndarray | None = None,
) -> dict[str, np.ndarray]:
    """Backpropagation through the recorded pass.

    ``d_success_logits`` is the loss gradient at the success head logits,
    ``d_emotion_logits`` (n, 2) the per-day gradient at the emotion head
    logits (zeros for days that carry no loss). Returns one gradient array
    per parameter tensor, keyed like ``DctCore.tensors``.
    """
    n = record.n_days
    hd = core.hidden_dim
    sd = core.static_dim
    d_success_logits = np.asarray(d_success_logits, dtype=np.float64)
    if d_success_logits.shape != (2,):
        raise ValueError("success logit gradient must be a 2-vector")
    if d_emotion_logits is None:
        d_emotion_logits = np.zeros((n, 2))
    d_emotion_logits = np.asarray(d_emotion_logits, dtype=np.float64)
    if d_emotion_logits.shape != (n, 2):
        raise ValueError(f"emotion logit gradient must have shape ({n}, 2)")

    g = zero_gradients(core)
    head = record.head
    alphas = head.alphas

    # Success head and its two concatenated inputs.
    g["success_w"] += np.outer(d_success_logits, head.combined)
    g["success_b"] += d_success_logits
    d_combined = core.success_w.T @ d_success_logits
    d_static = d_combined[:sd].copy()
    d_pooled = d_combined[sd:]

    # Emotion head, every day at once.
    g["emotion_w"] += d_emotion_logits.T @ record.day_reprs
    g["emotion_b"] += d_emotion_logits.sum(axis=0)
    d_reprs = d_emotion_logits @ core.emotion_w

    # Attention pooling: pooled = sum_t alpha_t * repr_t.
    d_reprs += alphas[:, None] * d_pooled[None, :]
    d_alphas = record.day_reprs @ d_pooled

    # Softmax over tanh scores.
    d_scores = alphas * (d_alphas - float(alphas @ d_alphas))
    d_score_pre = (1.0 - record.scores**2) * d_scores
    g["attn_w"] += record.day_reprs.T @ d_score_pre
    g["attn_b"] += np.array([d_score_pre.sum()])
    d_reprs += np.outer(d_score_pre, core.attention.w)

    # Split day representations into static and hidden parts.
    d_static += d_reprs[:, :sd].sum(axis=0)
    d_hidden = d_reprs[:, sd:].copy()

    # Backpropagation through time.
    p = core.lstm
    dh_next = np.zeros(hd)
    dc_next = np.zeros(hd)
    for t in range(n - 1, -1, -1):
        dh = d_hidden[t] + dh_next
        tanh_c = np.tanh(record.cells[t])
        do = dh * tanh_c
        dc = dc_next + dh * record.gate_o[t] * (1.0 - tanh_c**2)
        c_prev = record.cells[t - 1] if t > 0 else np.zeros(hd)
        h_prev = record.hiddens[t - 1] if t > 0 else np.zeros(hd)
        df = dc * c_prev
        di = dc * record.cand[t]
        dg = dc * record.gate_i[t]
        dc_next = dc * record.gate_f[t]

        i, f, o = record.gate_i[t], record.gate_f[t], record.gate_o[t]
        dai = di * i * (1.0 - i)
        daf = df * f * (1.0 - f)
        dao = do * o * (1.0 - o)
        dag = dg * (1.0 - record.cand[t] ** 2)

        r_t = record.day_inputs[t]
        g["w_ei"] += np.outer(dai, r_t)
        g["w_ef"] += np.outer(daf, r_t)
        g["w_ec"] += np.outer(dag, r_t)
        g["w_eo"] += np.outer(dao, r_t)
        g["w_hi"] += np.outer(dai, h_prev)
        g["w_hf"] += np.outer(daf, h_prev)
        g["w_hc"] += np.outer(dag, h_prev)
        g["w_ho"] += np.outer(dao, h_prev)
        g["b_i"] += dai
        g["b_f"] += daf
        g["b_c"] += dag
        g["b_o"] += dao

        dh_next = p.w_hi.T @ dai + p.w_hf.T @ daf + p.w_hc.T @ dag + p.w_ho.T @ dao

    # Static encoder.
    d_static_pre = d_static * (1.0 - record.static_repr**2)
    g["encoder_w"] += np.outer(d_static_pre, record.static_raw)
    g["encoder_b"] += d_static_pre
    return g


def sequence_loss(
    static_raw: np.ndarray,
    day_inputs: np.ndarray,
    outcome: int,
    emotion_labels: Sequence[int | None],
    aux_weight: float,
    core: DctCore,
) -> tuple[float, ForwardRecord]:
    """Composite training loss for one sequence.

    Cross entropy of the success head against ``outcome`` plus
    ``aux_weight`` times the mean emotion-head cross entropy over days
    whose label is not None.
    """
    record = forward_pass(static_raw, day_inputs, core)
    loss = cross_entropy(record.head.success_probs, outcome)
    labeled = [t for t, lab in enumerate(emotion_labels) if lab is not None]
    if aux_weight > 0.0 and labeled:
        aux = sum(
            cross_entropy(record.emotion_probs[t], emotion_labels[t]) for t in labeled
        )
        loss += aux_weight * aux / len(labeled)
    return loss, record


def sequence_gradients(
    record: ForwardRecord,
    core: DctCore,
    outcome: int,
    emotion_labels: Sequence[int | None],
    aux_weight: float,
) -> dict[str, np.ndarray]:
    """Analytic gradients of ``sequence_loss`` at the recorded pass."""
    d_success = record.head.success_probs.copy()
    d_success[outcome] -= 1.0
    n = record.n_days
    d_emotion = np.zeros((n, 2))
    labeled = [t for t, lab in enumerate(emotion_labels) if lab is not None]
    if aux_weight > 0.0 and labeled:
        scale = aux_weight / len(labeled)
        for t in labeled:
            d_emotion[t] = record.emotion_probs[t] * scale
            d_emotion[t, emotion_labels[t]] -= scale
    return backward(record, core, d_success, d_emotion)


def gradcheck(
    loss_fn: Callable[[], float],
    param: np.ndarray,
    grad: np.ndarray,
    epsilon: float = 1e-5,
    seed: int = 0,
    sample_limit: int = 200,
) -> float:
    """Max relative error between ``grad`` and central differences.

    ``loss_fn`` must re-evaluate the loss reading ``param`` in place; the
    array is perturbed one coordinate at a time and restored afterwards.
    At most ``sample_limit`` coordinates are checked, sampled with the
    given seed. Relative error is |a - n| / max(1e-8, |a| + |n|).
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if param.shape != grad.shape:
        raise ValueError("gradient shape does not match parameter shape")
    idx = np.arange(param.size)
    if param.size > sample_limit:
        rng = np.random.default_rng(seed)
        idx = rng.choice(param.size, size=sample_limit, replace=False)
    worst = 0.0
    for k in idx:
        # multi-index write so the perturbation lands in the original array
        # even when it is not contiguous
        pos = np.unravel_index(k, param.shape)
        saved = param[pos]
        param[pos] = saved + epsilon
        f_plus = loss_fn()
        param[pos] = saved - epsilon
        f_minus = loss_fn()
        param[pos] = saved
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise ValueError("loss is not finite during gradient check")
        numeric = (f_plus - f_minus) / (2.0 * epsilon)
        analytic = grad[pos]
        err = abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))
        worst = max(worst, err)
    return worst


def gradcheck_model(
    static_raw_dim: int = 6,
    static_dim: int = 4,
    hidden_dim: int = 3,
    input_dim: int = 8,
    n_days: int = 4,
    aux_weight: float = 0.2,
    epsilon: float = 1e-5,
    seed: int = 0,
) -> dict[str, float]:
    """Per-tensor gradient check of the full model on a random instance."""
    rng = np.random.default_rng(seed)
    core = init_core(static_raw_dim, static_dim, hidden_dim, input_dim, rng)
    static_raw = rng.uniform(-1.0, 1.0, size=static_raw_dim)
    day_inputs = rng.uniform(-1.0, 1.0, size=(n_days, input_dim))
    outcome = 1
    emotion_labels = [int(rng.integers(0, 2)) for _ in range(n_days)]

    def loss_fn():
        loss, _ = sequence_loss(
            static_raw, day_inputs, outcome, emotion_labels, aux_weight, core
        )
        return loss

    _, record = sequence_loss(
        static_raw, day_inputs, outcome, emotion_labels, aux_weight, core
    )
    grads = sequence_gradients(record, core, outcome, emotion_labels, aux_weight)
    report = {}
    for name, arr in core.tensors():
        report[name] = gradcheck(
            loss_fn, arr, grads[name], epsilon=epsilon, seed=seed
        )
    return report
