"""Training loop, evaluation protocol and gradient checking."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Optional

import numpy as np

from . import classifier as clf
from .checkpoint import read_checkpoint, write_checkpoint
from .corpus import Instance, Vocab, build_vocab, expand_multilabel, label_set, parse_record
from .encoder import compile_tree, encode_argument, encoder_backward
from .errors import DataError, InvalidArgument
from .model import EMBEDDINGS, MODES, Gradients, ModelParams
from .optimizer import OptimizerState, adagrad_step


@dataclass
class TrainingConfig:
    """Hyper-parameters. The defaults suit the tag-enhanced Tree-LSTM at full scale."""

    word_dim: int = 50
    tag_dim: int = 50
    hidden: int = 250
    lr: float = 0.01
    l2: float = 0.0001
    batch_size: int = 10
    epochs: int = 20
    seed: int = 0
    mode: str = "tag_tree_lstm"
    level: int = 1
    regularize_embeddings: bool = False
    init_scale: float = 0.05
    eps: float = 1e-8

    def __post_init__(self):
        if min(self.word_dim, self.tag_dim, self.hidden) <= 0:
            raise InvalidArgument("dimensions must be positive")
        if self.lr <= 0 or self.l2 < 0 or self.batch_size < 1 or self.epochs < 0:
            raise InvalidArgument("need lr > 0, l2 >= 0, batch_size >= 1, epochs >= 0")
        if self.mode not in MODES:
            raise InvalidArgument(f"unknown mode {self.mode!r}")
        if self.level not in (1, 2):
            raise InvalidArgument("level must be 1 or 2")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, values):
        known = {f.name: f for f in fields(cls)}
        unknown = set(values) - set(known)
        if unknown:
            raise InvalidArgument(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: _coerce(known[k].type, k, v) for k, v in values.items()})

    def replace(self, **changes):
        return TrainingConfig.from_dict({**self.to_dict(), **changes})


def _coerce(kind, key, value):
    if not isinstance(value, str):
        return value
    try:
        if kind in ("int", int):
            return int(value)
        if kind in ("float", float):
            return float(value)
        if kind in ("bool", bool):
            low = value.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
    except ValueError:
        raise InvalidArgument(f"bad value for {key}: {value!r}") from None
    return value.strip()


def parse_config_text(text):
    """``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgument(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values


def format_config(cfg: TrainingConfig):
    return "".join(f"{k} = {v}\n" for k, v in cfg.to_dict().items())


@dataclass
class Example:
    """An instance with both arguments compiled against a vocabulary."""

    arg1: object
    arg2: object
    labels: tuple


def compile_instances(instances, vocab):
    return [
        Example(compile_tree(i.arg1_tree, vocab), compile_tree(i.arg2_tree, vocab), i.labels) for i in instances
    ]


def forward(params: ModelParams, ex: Example, backend=None):
    e1 = encode_argument(ex.arg1, params, backend=backend)
    e2 = encode_argument(ex.arg2, params, backend=backend)
    probs = clf.predict(e1.r, e2.r, params["cls.W"], params["cls.b"])
    return e1, e2, probs


def instance_gradients(params: ModelParams, ex: Example, gold=None, backend=None):
    """Cross-entropy of one instance and its gradient (no L2 term)."""
    gold = ex.labels[0] if gold is None else gold
    e1, e2, probs = forward(params, ex, backend)
    loss = clf.cross_entropy(probs, gold)
    grads = Gradients(params)
    dW, db, dr1, dr2 = clf.classifier_backward(probs, gold, e1.r, e2.r, params["cls.W"])
    grads.dense["cls.W"] += dW
    grads.dense["cls.b"] += db
    encoder_backward(dr1, e1, params, grads, backend)
    encoder_backward(dr2, e2, params, grads, backend)
    return loss, grads


def batch_gradients(params, batch, l2, regularize_embeddings=False, pool=None, backend=None):
    """Objective and gradient of one batch.

    Per-instance gradients are computed independently (on ``pool`` if given) and
    reduced in batch order, so the result does not depend on thread scheduling.
    """
    if pool is None:
        results = [instance_gradients(params, ex, backend=backend) for ex in batch]
    else:
        results = list(pool.map(lambda ex: instance_gradients(params, ex, backend=backend), batch))
    total = Gradients(params)
    for _, g in results:
        total.merge(g)
    n = len(results)
    total.scale(1.0 / n)
    reg = params.regularized_names(regularize_embeddings)
    for name in reg:
        if name in total.dense:
            total.dense[name] += l2 * params[name]
    losses = [loss for loss, _ in results]
    obj = clf.objective(losses, [params[n_] for n_ in reg], l2)
    # a penalized embedding table receives gradient on every row, so go dense
    densify = [n_ for n_ in reg if n_ in EMBEDDINGS]
    grads = []
    for name, g in total.items(densify=densify):
        if name in densify:
            g = g + l2 * params[name]
        grads.append((name, g))
    return obj, losses, grads


@dataclass
class EvalReport:
    accuracy: float
    hits: int
    instances: int
    per_class: dict = field(default_factory=dict)

    def to_json(self):
        return asdict(self)


def predict_labels(params, examples, backend=None):
    out = []
    for ex in examples:
        _, _, probs = forward(params, ex, backend)
        out.append((clf.argmax(probs), probs))
    return out


def evaluate(params, examples, label_names=None, backend=None) -> EvalReport:
    """Accuracy where a prediction counts if it matches *any* gold label.

    ``per_class[name]`` counts instances carrying that gold label (``total``) and
    those among them predicted as that label (``hits``).
    """
    names = list(label_names) if label_names is not None else [str(i) for i in range(params.n_labels)]
    per_class = {name: {"hits": 0, "total": 0} for name in names}
    hits = 0
    for ex, (pred, _) in zip(examples, predict_labels(params, examples, backend)):
        if pred in ex.labels:
            hits += 1
        for label in ex.labels:
            per_class[names[label]]["total"] += 1
            if pred == label:
                per_class[names[label]]["hits"] += 1
    n = len(examples)
    return EvalReport(hits / n if n else 0.0, hits, n, per_class)


@dataclass
class TrainResult:
    params: ModelParams
    last_params: ModelParams
    opt_state: OptimizerState
    log: list
    best_epoch: int
    best_dev_accuracy: Optional[float]
    epoch: int


def init_model(config: TrainingConfig, vocab_size, tag_count, n_labels, word_emb=None, tag_emb=None):
    rng = np.random.default_rng([config.seed, 1])
    if word_emb is None:
        word_emb = rng.uniform(-config.init_scale, config.init_scale, (vocab_size, config.word_dim))
    if tag_emb is None and MODES[config.mode].tagged:
        tag_emb = rng.uniform(-config.init_scale, config.init_scale, (tag_count, config.tag_dim))
    return ModelParams.initialize(
        config.mode,
        word_emb,
        n_labels,
        config.hidden,
        tag_emb=tag_emb if MODES[config.mode].tagged else None,
        rng=rng,
        scale=config.init_scale,
    )


def train(
    config: TrainingConfig,
    corpus,
    vocab: Vocab,
    embeddings,
    tag_embeddings=None,
    threads=1,
    resume: Optional[TrainResult] = None,
    on_epoch: Optional[Callable[[dict], None]] = None,
    backend=None,
) -> TrainResult:
    """Train with per-epoch dev validation and keep the best epoch's parameters.

    ``corpus`` holds instances of any split; training instances are expanded to one
    per gold label. Without dev instances the last epoch is kept. ``on_epoch``
    receives each log record as it is produced.
    """
    train_set = expand_multilabel([i for i in corpus if i.split == "train"])
    if not train_set:
        raise DataError("no training instances")
    dev_set = [i for i in corpus if i.split == "dev"]
    train_ex = compile_instances(train_set, vocab)
    dev_ex = compile_instances(dev_set, vocab)
    n_labels = len(vocab.label_names)

    if resume is None:
        emb = getattr(embeddings, "matrix", embeddings)
        temb = getattr(tag_embeddings, "matrix", tag_embeddings)
        params = init_model(config, len(vocab.word_to_id), len(vocab.tag_to_id), n_labels, emb, temb)
        state = OptimizerState.for_params(params.tensors, config.lr, config.eps)
        best, best_epoch, best_acc, start, log = params.copy(), 0, None, 1, []
    else:
        params = resume.last_params.copy()
        state = OptimizerState(config.lr, config.eps, {k: v.copy() for k, v in resume.opt_state.accum.items()},
                               resume.opt_state.steps)
        best, best_epoch, best_acc = resume.params.copy(), resume.best_epoch, resume.best_dev_accuracy
        start, log = resume.epoch + 1, list(resume.log)

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for epoch in range(start, config.epochs + 1):
            order = np.random.default_rng(config.seed + epoch).permutation(len(train_ex))
            losses = []
            for lo in range(0, len(order), config.batch_size):
                batch = [train_ex[k] for k in order[lo : lo + config.batch_size]]
                _, batch_losses, grads = batch_gradients(
                    params, batch, config.l2, config.regularize_embeddings, pool, backend
                )
                adagrad_step(params.tensors, grads, state)
                losses.extend(batch_losses)
            record = {"epoch": epoch, "train_loss": float(np.mean(losses))}
            if dev_ex:
                acc = evaluate(params, dev_ex, backend=backend).accuracy
                record["dev_accuracy"] = acc
                if best_acc is None or acc > best_acc:
                    best, best_epoch, best_acc = params.copy(), epoch, acc
            else:
                record["dev_accuracy"] = None
                best, best_epoch = params.copy(), epoch
            record["best_epoch"] = best_epoch
            log.append(record)
            if on_epoch is not None:
                on_epoch(record)
    finally:
        if pool is not None:
            pool.shutdown()
    last_epoch = max(start - 1, config.epochs)
    return TrainResult(best, params, state, log, best_epoch, best_acc, last_epoch)


# -- checkpoints ---------------------------------------------------------------


def save_model(path, config: TrainingConfig, vocab: Vocab, result: TrainResult):
    tensors = {}
    for name, arr in result.params.tensors.items():
        tensors[f"params/{name}"] = arr
    for name, arr in result.last_params.tensors.items():
        tensors[f"last/{name}"] = arr
    for name, arr in result.opt_state.accum.items():
        tensors[f"adagrad/{name}"] = arr
    manifest = {
        "config": config.to_dict(),
        "mode": config.mode,
        "vocab": vocab.to_json(),
        "vocab_sha256": vocab.digest(),
        "epoch": result.epoch,
        "best_epoch": result.best_epoch,
        "best_dev_accuracy": result.best_dev_accuracy,
        "optimizer_steps": result.opt_state.steps,
        "log": result.log,
    }
    write_checkpoint(path, manifest, tensors)


def load_model(path):
    """Return ``(config, vocab, TrainResult)`` from a checkpoint."""
    manifest, tensors = read_checkpoint(path)
    config = TrainingConfig.from_dict(manifest["config"])
    vocab = Vocab.from_json(manifest["vocab"])
    if vocab.digest() != manifest.get("vocab_sha256"):
        raise DataError(f"{path}: vocabulary hash mismatch")

    def group(prefix):
        return {k[len(prefix) :]: v for k, v in tensors.items() if k.startswith(prefix)}

    best = ModelParams(config.mode, group("params/"))
    last = ModelParams(config.mode, group("last/"))
    state = OptimizerState(config.lr, config.eps, group("adagrad/"), manifest.get("optimizer_steps", 0))
    result = TrainResult(
        best, last, state, manifest.get("log", []), manifest["best_epoch"], manifest["best_dev_accuracy"],
        manifest["epoch"],
    )
    return config, vocab, result


# -- gradient check --------------------------------------------------------------


def objective_terms(params, ex, l2, regularize_embeddings=False, backend=None):
    """``(cross_entropy, l2_penalty)`` of one instance; their sum is the full objective."""
    _, _, probs = forward(params, ex, backend)
    reg = params.regularized_names(regularize_embeddings)
    return clf.cross_entropy(probs, ex.labels[0]), clf.l2_penalty([params[n] for n in reg], l2)


def full_objective(params, ex, l2, regularize_embeddings=False, backend=None):
    return sum(objective_terms(params, ex, l2, regularize_embeddings, backend))


def gradient_check(config: TrainingConfig, instance=None, tolerance=1e-4, step=1e-5, max_entries=400,
                   init_scale=0.5, params=None, vocab=None, backend=None, seed=None):
    """Compare analytic gradients of the full objective with central differences.

    Without ``instance`` a random one is drawn; without ``params`` a model is built
    from ``config`` with weights from U(-init_scale, init_scale). Tensors with more
    than ``max_entries`` entries are checked on a random subset of that many
    entries. Entries where both gradients are below 1e-10 are skipped.

    Returns ``{"passed": bool, "tolerance": float, "tensors": {name: max_rel_err}}``.
    """
    from .synthetic import GRADCHECK_WORDS, gradcheck_records

    seed = config.seed if seed is None else seed
    rng = np.random.default_rng([seed, 7])
    labels = label_set(config.level)
    if instance is None:
        record = gradcheck_records(seed=seed)[0]
        instance = parse_record(record, 1, labels)
    if vocab is None:
        vocab, _, _ = build_vocab([instance], None, config.word_dim, config.tag_dim, rng, labels)
        for word in GRADCHECK_WORDS:
            vocab.word_to_id.setdefault(word, len(vocab.word_to_id))
    if params is None:
        cfg = config.replace(init_scale=init_scale)
        params = init_model(cfg, len(vocab.word_to_id), len(vocab.tag_to_id), len(labels))
        # biases start at zero in training; randomize them here so their paths are exercised
        for name, arr in params.tensors.items():
            if name.endswith(".b"):
                arr[:] = rng.uniform(-init_scale, init_scale, arr.shape)
    ex = compile_instances([instance], vocab)[0]
    _, grads = instance_gradients(params, ex, backend=backend)
    reg = set(params.regularized_names(config.regularize_embeddings))

    report = {}
    for name, theta in params.tensors.items():
        analytic = grads.full(name).copy()
        if name in reg:
            analytic += config.l2 * theta
        flat = theta.reshape(-1)
        idx = np.arange(flat.size)
        if flat.size > max_entries:
            idx = np.sort(rng.choice(flat.size, max_entries, replace=False))
        worst = 0.0
        for k in idx:
            orig = flat[k]
            flat[k] = orig + step
            plus = objective_terms(params, ex, config.l2, config.regularize_embeddings, backend)
            flat[k] = orig - step
            minus = objective_terms(params, ex, config.l2, config.regularize_embeddings, backend)
            flat[k] = orig
            # difference each term on its own: a tiny L2 slope would otherwise be
            # swamped by rounding in the much larger cross-entropy
            num = sum((p - m) / (2 * step) for p, m in zip(plus, minus))
            a = analytic.reshape(-1)[k]
            if abs(a) + abs(num) < 1e-10:
                continue
            worst = max(worst, abs(a - num) / max(abs(a), abs(num)))
        report[name] = worst
    return {"passed": all(v < tolerance for v in report.values()), "tolerance": tolerance, "tensors": report}


def dumps_log(log):
    return "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in log)
