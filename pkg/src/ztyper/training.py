"""Multi-label max-margin training with Adam and gradient verification.

The objective for one mention is the summed pairwise hinge
``max(0, margin - s_pos + s_neg)`` over every (positive, negative)
candidate pair, with the sigmoid scores as the s values and margin 1. The
hinge subgradient at the kink is taken as 0 (terms enter only when strictly
positive). Batch gradients are the mean over the batch's non-skipped
examples; the learning rate is multiplied by the decay rate after every
epoch. Fixed seeds fix initialization, batch order and the whole loss
trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Config
from .errors import DivergenceError, EmptyPositiveSet, ZtyperError
from .model import ModelParams, ScoringContext, make_scoring_context, model_backward, model_forward
from .ontology import LabelBank, TypeHierarchy
from . import memory as mem


# ---------------------------------------------------------------------------
# loss


def _check_pair_sets(scores, positive_ids, negative_ids):
    pos = np.asarray(sorted(positive_ids), dtype=np.intp)
    neg = np.asarray(sorted(negative_ids), dtype=np.intp)
    if pos.size == 0:
        raise EmptyPositiveSet("mention has no positive candidate labels")
    if np.intersect1d(pos, neg).size:
        raise ZtyperError("positive and negative label sets overlap")
    n = np.asarray(scores).shape[0]
    for ids in (pos, neg):
        if ids.size and (ids.min() < 0 or ids.max() >= n):
            raise ZtyperError(f"label id out of range for {n} scores")
    return pos, neg


def margin_loss(scores: np.ndarray, positive_ids, negative_ids,
                margin: float = 1.0) -> float:
    """Sum of max(0, margin - s_pos + s_neg) over all pos/neg pairs."""
    loss, _ = margin_loss_grad(scores, positive_ids, negative_ids, margin)
    return loss


def margin_loss_grad(scores: np.ndarray, positive_ids, negative_ids,
                     margin: float = 1.0) -> tuple[float, np.ndarray]:
    """Loss and its (sub)gradient w.r.t. the score vector.

    Terms exactly at the kink (margin - s_pos + s_neg == 0) contribute zero
    loss and zero gradient.
    """
    scores = np.asarray(scores, dtype=np.float64)
    pos, neg = _check_pair_sets(scores, positive_ids, negative_ids)
    dscores = np.zeros_like(scores)
    if neg.size == 0:
        return 0.0, dscores
    terms = margin - scores[pos][:, None] + scores[neg][None, :]
    active = terms > 0.0
    loss = float(terms[active].sum())
    np.subtract.at(dscores, pos, active.sum(axis=1).astype(np.float64))
    np.add.at(dscores, neg, active.sum(axis=0).astype(np.float64))
    return loss, dscores


def min_kink_distance(scores, positive_ids, negative_ids, margin: float = 1.0) -> float:
    """Smallest |margin - s_pos + s_neg| over all pairs (for kink exclusion)."""
    scores = np.asarray(scores, dtype=np.float64)
    pos, neg = _check_pair_sets(scores, positive_ids, negative_ids)
    if neg.size == 0:
        return np.inf
    terms = margin - scores[pos][:, None] + scores[neg][None, :]
    return float(np.abs(terms).min())


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(tensors: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState, lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One adaptive-moment update, in place, with bias correction."""
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    for name in sorted(tensors):
        param = tensors[name]
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(param)
        if grad.shape != param.shape:
            raise ZtyperError(f"gradient shape {grad.shape} != {param.shape} for {name}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(param)
            state.v[name] = np.zeros_like(param)
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        param -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


# ---------------------------------------------------------------------------
# training loop


@dataclass
class FeaturizedExample:
    mention_id: str
    inputs: object            # encoder.EncoderInputs
    gold_ids: tuple[int, ...]  # global type ids


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    lr: float


@dataclass
class TrainResult:
    trajectory: list[EpochStats]
    skipped: int


def _negatives(rng: np.random.Generator, d_seen: int, pos: set[int],
               cap: int) -> list[int]:
    neg = [i for i in range(d_seen) if i not in pos]
    if cap and len(neg) > cap:
        neg = sorted(rng.choice(len(neg), size=cap, replace=False))
        return [int(i) for i in neg]
    return neg


def train(cfg: Config, model: ModelParams, bank: LabelBank,
          hierarchy: TypeHierarchy, examples: list[FeaturizedExample]) -> TrainResult:
    """Train on seen-type gold labels; returns the per-epoch loss trajectory."""
    d_seen = hierarchy.d_seen
    for ex in examples:
        bad = [g for g in ex.gold_ids if g >= d_seen]
        if bad:
            raise ZtyperError(
                f"training mention {ex.mention_id!r} carries unseen gold ids {bad}"
            )
    ctx = make_scoring_context(model, cfg, bank, hierarchy, "seen")
    rng = np.random.default_rng(cfg.seed)
    tensors = model.tensors()
    adam = AdamState()
    trajectory: list[EpochStats] = []
    skipped = 0
    lr = cfg.learning_rate
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(examples))
        epoch_loss = 0.0
        epoch_count = 0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            if ctx.kind == "memory":
                ctx.state = mem.build_memory(model.memory, bank.f_seen(hierarchy))
            batch_grads: dict[str, np.ndarray] = {}
            batch_loss = 0.0
            count = 0
            for idx in batch:
                ex = examples[int(idx)]
                pos = sorted(set(ex.gold_ids))
                neg = _negatives(rng, d_seen, set(pos), cfg.negative_cap)
                record, cache = model_forward(model, cfg, ex.inputs, ctx,
                                              mention_id=ex.mention_id)
                try:
                    loss, dscores = margin_loss_grad(record.scores, pos, neg, cfg.margin)
                except EmptyPositiveSet:
                    skipped += 1
                    continue
                grads = model_backward(model, cfg, ctx, cache, dscores)
                for name, g in grads.items():
                    if name in batch_grads:
                        batch_grads[name] += g
                    else:
                        batch_grads[name] = g
                batch_loss += loss
                count += 1
            if count == 0:
                continue
            if not np.isfinite(batch_loss):
                raise DivergenceError(
                    f"non-finite loss in epoch {epoch} (batch at {start}): {batch_loss}"
                )
            for name in batch_grads:
                batch_grads[name] /= count
            adam_step(tensors, batch_grads, adam, lr)
            epoch_loss += batch_loss
            epoch_count += count
        mean_loss = epoch_loss / epoch_count if epoch_count else 0.0
        if not np.isfinite(mean_loss):
            raise DivergenceError(f"non-finite mean loss in epoch {epoch}")
        trajectory.append(EpochStats(epoch=epoch, mean_loss=mean_loss, lr=lr))
        lr *= cfg.decay_rate
    return TrainResult(trajectory=trajectory, skipped=skipped)


def write_training_log(path, trajectory: list[EpochStats]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,mean_loss,lr\n")
        for row in trajectory:
            fh.write(f"{row.epoch},{row.mean_loss!r},{row.lr!r}\n")


# ---------------------------------------------------------------------------
# gradient verification


@dataclass
class GradCheckResult:
    max_rel_error: float
    worst_tensor: str
    worst_index: tuple[int, ...]
    analytic: float
    numeric: float
    per_tensor: dict[str, float]

    def summary(self) -> str:
        return (f"max rel error {self.max_rel_error:.3e} at "
                f"{self.worst_tensor}{list(self.worst_index)} "
                f"(analytic {self.analytic:.6e}, numeric {self.numeric:.6e})")


def grad_check(tensors: dict[str, np.ndarray], loss_fn, analytic: dict[str, np.ndarray],
               epsilon: float = 1e-4, floor: float = 1e-6) -> GradCheckResult:
    """Compare analytic gradients against central finite differences.

    Perturbs every scalar parameter in place, calling ``loss_fn()`` twice per
    coordinate. The relative error denominator is floored (default 1e-6) so
    coordinates where both gradients vanish are not dominated by
    finite-difference roundoff.
    """
    worst = GradCheckResult(max_rel_error=0.0, worst_tensor="", worst_index=(),
                            analytic=0.0, numeric=0.0, per_tensor={})
    for name in sorted(tensors):
        param = tensors[name]
        grad = analytic.get(name)
        if grad is None:
            grad = np.zeros_like(param)
        tensor_worst = 0.0
        for flat in range(param.size):
            orig = param.flat[flat]
            param.flat[flat] = orig + epsilon
            up = loss_fn()
            param.flat[flat] = orig - epsilon
            down = loss_fn()
            param.flat[flat] = orig
            numeric = (up - down) / (2.0 * epsilon)
            a = grad.flat[flat]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            tensor_worst = max(tensor_worst, rel)
            if rel > worst.max_rel_error:
                worst.max_rel_error = rel
                worst.worst_tensor = name
                worst.worst_index = tuple(int(i) for i in np.unravel_index(flat, param.shape))
                worst.analytic = float(a)
                worst.numeric = float(numeric)
        worst.per_tensor[name] = tensor_worst
    return worst
