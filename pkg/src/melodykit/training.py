"""Training loop: stateful batch lanes, epoch loop, validation, checkpoints.

The token stream is folded into `batch_size` contiguous lanes; each epoch
step consumes the next `seq_len` tokens of every lane. Recurrent state
carries across steps within an epoch and resets between epochs.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import nn
from .dataset import EncodedDataset

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"MMCK"
CHECKPOINT_VERSION = 1


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    model: nn.ModelConfig
    batch_size: int = 64
    seq_len: int = 100
    epochs: int = 200
    optimizer: nn.AdamConfig = field(default_factory=nn.AdamConfig)
    checkpoint_every: int = 10
    val_fraction: float = 0.1
    carry_state: bool = True  # reset state between epochs either way

    def __post_init__(self):
        if self.batch_size < 1 or self.seq_len < 1 or self.epochs < 0:
            raise ValueError("batch_size/seq_len must be positive, epochs >= 0")


@dataclass
class CurveRow:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class Checkpoint:
    model_config: nn.ModelConfig
    dataset_fingerprint: int
    epoch: int
    step: int  # Adam step counter
    params: dict[str, np.ndarray]
    moments: nn.AdamMoments
    rng_state: dict


def dataset_fingerprint(path: str | Path) -> int:
    """First 8 bytes of the dataset file's sha256, as an unsigned 64-bit int."""
    digest = hashlib.sha256(Path(path).read_bytes()).digest()
    return int.from_bytes(digest[:8], "little")


def make_batches(X, Y, batch_size: int, seq_len: int):
    """Fold X/Y into contiguous lanes and slice per-step blocks.

    Returns a list of (X_block, Y_block), each (batch_size, seq_len). Tokens
    beyond batch_size * lane_len are dropped.
    """
    X = np.asarray(X)
    Y = np.asarray(Y)
    if len(X) < batch_size * seq_len:
        raise TrainingError(
            f"dataset too small: {len(X)} tokens < batch {batch_size} x seq {seq_len}"
        )
    lane_len = len(X) // batch_size
    steps = lane_len // seq_len
    Xl = X[: batch_size * lane_len].reshape(batch_size, lane_len)
    Yl = Y[: batch_size * lane_len].reshape(batch_size, lane_len)
    return [
        (Xl[:, s * seq_len : (s + 1) * seq_len], Yl[:, s * seq_len : (s + 1) * seq_len])
        for s in range(steps)
    ]


def validate(params: dict, cfg: TrainConfig, val_X, val_Y) -> float:
    """Mean cross-entropy over the validation stream with a fresh zero state.

    Uses the training lane layout when the stream is large enough, otherwise
    falls back to a single lane so short validation sets remain scorable.
    """
    val_X = np.asarray(val_X)
    val_Y = np.asarray(val_Y)
    if val_X.size == 0:
        raise TrainingError("empty validation split")
    if len(val_X) >= cfg.batch_size * cfg.seq_len:
        blocks = make_batches(val_X, val_Y, cfg.batch_size, cfg.seq_len)
    elif len(val_X) >= cfg.seq_len:
        blocks = make_batches(val_X, val_Y, 1, cfg.seq_len)
    else:
        blocks = [(val_X[None, :], val_Y[None, :])]
    batch = blocks[0][0].shape[0]
    state = nn.zero_state(cfg.model, batch)
    total, count = 0.0, 0
    for xb, yb in blocks:
        loss, _, state, _ = nn.forward_sequence(params, cfg.model, state, xb, yb)
        total += loss * xb.size
        count += xb.size
    return total / count


def train(
    cfg: TrainConfig,
    dataset: EncodedDataset,
    out_dir: str | Path | None = None,
    fingerprint: int = 0,
    resume_from: "Checkpoint | None" = None,
    val_dataset: EncodedDataset | None = None,
):
    """Run the epoch loop; returns (curve rows, final checkpoint, best checkpoint).

    When `out_dir` is given, periodic and best checkpoints are written there.
    `val_dataset` overrides the automatic song-boundary split.
    """
    from .dataset import split_train_val

    if val_dataset is None:
        train_ds, val_ds = split_train_val(dataset, cfg.val_fraction)
    else:
        train_ds, val_ds = dataset, val_dataset
    if cfg.model.vocab_size != len(dataset.vocab):
        raise TrainingError(
            f"model vocab_size {cfg.model.vocab_size} != dataset vocab {len(dataset.vocab)}"
        )

    rng = np.random.default_rng(cfg.model.seed)
    if resume_from is not None:
        _check_compat(resume_from, cfg.model, fingerprint)
        params = {k: v.copy() for k, v in resume_from.params.items()}
        moments = nn.AdamMoments(
            m={k: v.copy() for k, v in resume_from.moments.m.items()},
            v={k: v.copy() for k, v in resume_from.moments.v.items()},
        )
        step = resume_from.step
        start_epoch = resume_from.epoch
        rng.bit_generator.state = resume_from.rng_state
    else:
        params = nn.init_params(cfg.model)
        moments = nn.AdamMoments.zeros(params)
        step = 0
        start_epoch = 0

    blocks = make_batches(train_ds.X, train_ds.Y, cfg.batch_size, cfg.seq_len)
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    def snapshot(epoch):
        return Checkpoint(
            model_config=cfg.model,
            dataset_fingerprint=fingerprint,
            epoch=epoch,
            step=step,
            params={k: v.copy() for k, v in params.items()},
            moments=nn.AdamMoments(
                m={k: v.copy() for k, v in moments.m.items()},
                v={k: v.copy() for k, v in moments.v.items()},
            ),
            rng_state=rng.bit_generator.state,
        )

    curve: list[CurveRow] = []
    best: Checkpoint | None = None
    best_val = np.inf
    last_good = snapshot(start_epoch)
    if out_dir is not None and resume_from is None:
        save_checkpoint(last_good, out_dir / "initial.mmck")

    for epoch in range(start_epoch + 1, cfg.epochs + 1):
        state = nn.zero_state(cfg.model, cfg.batch_size)
        epoch_loss = 0.0
        for xb, yb in blocks:
            loss, _, new_state, cache = nn.forward_sequence(params, cfg.model, state, xb, yb)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite training loss at epoch {epoch}; "
                    f"last good checkpoint is epoch {last_good.epoch}"
                )
            grads = nn.backward_sequence(cache)
            step += 1
            nn.adam_step(params, grads, moments, step, cfg.optimizer)
            epoch_loss += loss
            state = new_state if cfg.carry_state else nn.zero_state(cfg.model, cfg.batch_size)
        train_loss = epoch_loss / len(blocks)
        val_loss = validate(params, cfg, val_ds.X, val_ds.Y)
        curve.append(CurveRow(epoch=epoch, train_loss=train_loss, val_loss=val_loss))
        log.info("epoch %d: train %.4f val %.4f", epoch, train_loss, val_loss)

        last_good = snapshot(epoch)
        if val_loss < best_val:
            best_val = val_loss
            best = last_good
            if out_dir is not None:
                save_checkpoint(best, out_dir / "best.mmck")
        if out_dir is not None and epoch % cfg.checkpoint_every == 0:
            save_checkpoint(last_good, out_dir / f"epoch_{epoch:04d}.mmck")

    if best is None:
        best = last_good
    return curve, last_good, best


def _check_compat(ckpt: Checkpoint, model_cfg: nn.ModelConfig, fingerprint: int):
    if ckpt.model_config.vocab_size != model_cfg.vocab_size:
        raise TrainingError(
            f"checkpoint vocab size {ckpt.model_config.vocab_size} "
            f"!= dataset vocab size {model_cfg.vocab_size}"
        )
    if ckpt.model_config != model_cfg:
        raise TrainingError("checkpoint model config does not match")
    if fingerprint and ckpt.dataset_fingerprint and ckpt.dataset_fingerprint != fingerprint:
        raise TrainingError(
            f"dataset fingerprint mismatch: checkpoint {ckpt.dataset_fingerprint:#x} "
            f"vs file {fingerprint:#x}"
        )


def write_curve_csv(curve: list[CurveRow], path: str | Path) -> None:
    lines = ["epoch,train_loss,val_loss"]
    lines += [f"{r.epoch},{r.train_loss:.6f},{r.val_loss:.6f}" for r in curve]
    Path(path).write_text("\n".join(lines) + "\n")


def read_curve_csv(path: str | Path) -> list[CurveRow]:
    rows = []
    for line in Path(path).read_text().splitlines()[1:]:
        e, t, v = line.split(",")
        rows.append(CurveRow(epoch=int(e), train_loss=float(t), val_loss=float(v)))
    return rows


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    """Binary checkpoint: config/rng as JSON blocks, parameters as named
    little-endian float blocks."""
    def json_block(obj) -> bytes:
        raw = json.dumps(obj).encode()
        return struct.pack("<I", len(raw)) + raw

    def param_blocks(d: dict[str, np.ndarray]) -> bytes:
        out = bytearray(struct.pack("<I", len(d)))
        for name in sorted(d):
            arr = d[name]
            nb = name.encode()
            out += struct.pack("<H", len(nb)) + nb
            out += struct.pack("<B", len(arr.shape))
            for s in arr.shape:
                out += struct.pack("<I", s)
            dt = "f4" if arr.dtype == np.float32 else "f8"
            out += dt.encode()
            payload = arr.astype("<" + dt).tobytes()
            out += struct.pack("<Q", len(payload)) + payload
        return bytes(out)

    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<H", CHECKPOINT_VERSION))
        fh.write(json_block(asdict(ckpt.model_config)))
        fh.write(struct.pack("<QIQ", ckpt.dataset_fingerprint, ckpt.epoch, ckpt.step))
        fh.write(json_block(_rng_state_jsonable(ckpt.rng_state)))
        fh.write(param_blocks(ckpt.params))
        fh.write(param_blocks(ckpt.moments.m))
        fh.write(param_blocks(ckpt.moments.v))


def load_checkpoint(path: str | Path) -> Checkpoint:
    data = Path(path).read_bytes()
    if data[:4] != CHECKPOINT_MAGIC:
        raise TrainingError(f"bad checkpoint magic {data[:4]!r}")
    pos = 4
    (version,) = struct.unpack_from("<H", data, pos)
    pos += 2
    if version != CHECKPOINT_VERSION:
        raise TrainingError(f"unsupported checkpoint version {version}")

    def read_json(pos):
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        return json.loads(data[pos : pos + length]), pos + length

    def read_params(pos):
        (count,) = struct.unpack_from("<I", data, pos)
        pos += 4
        out = {}
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos : pos + nlen].decode()
            pos += nlen
            (ndim,) = struct.unpack_from("<B", data, pos)
            pos += 1
            shape = []
            for _ in range(ndim):
                (s,) = struct.unpack_from("<I", data, pos)
                pos += 4
                shape.append(s)
            dt = data[pos : pos + 2].decode()
            pos += 2
            (nbytes,) = struct.unpack_from("<Q", data, pos)
            pos += 8
            arr = np.frombuffer(data, dtype="<" + dt, count=nbytes // int(dt[1]), offset=pos)
            out[name] = arr.reshape(shape).astype(dt)
            pos += nbytes
        return out, pos

    cfg_dict, pos = read_json(pos)
    model_config = nn.ModelConfig(**cfg_dict)
    fingerprint, epoch, step = struct.unpack_from("<QIQ", data, pos)
    pos += 20
    rng_state, pos = read_json(pos)
    params, pos = read_params(pos)
    m, pos = read_params(pos)
    v, pos = read_params(pos)
    return Checkpoint(
        model_config=model_config,
        dataset_fingerprint=fingerprint,
        epoch=epoch,
        step=step,
        params=params,
        moments=nn.AdamMoments(m=m, v=v),
        rng_state=_rng_state_from_jsonable(rng_state),
    )


def _rng_state_jsonable(state: dict) -> dict:
    return json.loads(json.dumps(state, default=int))


def _rng_state_from_jsonable(state: dict) -> dict:
    return state
