#   Licensed under the Apache License, Version 2.0 (the "License"); you may
#   not use this file except in compliance with the License. You may obtain
#   a copy of the License at
#
#        http://www.apache.org/licenses/LICENSE-2.0
#
#   Unless required by applicable law or agreed to in writing, software
#   distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
#   WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
#   License for the specific language governing permissions and limitations
#   under the License.
#

"""Two-stage optimization of the radiance field

Stage 1 fits the shared trunk and the well head to the well exposed
frames. Stage 2 trains the fast head on both exposures while the shared
trunk and the well head are fine-tuned at a reduced rate. The one-step
mode trains everything at once on both exposures and the linearize-before
mode computes the loss on linearized values.
"""

import csv
import logging
import math
import os
import time

import numpy as np
import torch

from dualexpo import constants
from dualexpo import exceptions
from dualexpo import field as field_mod
from dualexpo import geometry
from dualexpo import imaging
from dualexpo import renderer
from dualexpo import utils


LOG = logging.getLogger(__name__)

WHICH = ('well', 'fast', 'both')
_CAMERA_TAGS = {constants.CAMERA_WELL: 0, constants.CAMERA_FAST: 1}


class TrainConfig(object):

    def __init__(self, iters_stage1=30000, iters_stage2=30000,
                 batch_rays=4096, lr_shared=1e-2, lr_well=1e-3,
                 lr_fast=1e-3, finetune_factor=0.1, lr_final_ratio=0.1,
                 betas=(0.9, 0.999), eps=1e-15,
                 mode=constants.MODE_TWO_STAGE, seed=0,
                 n_samples=constants.TRAIN_SAMPLES, stratified=True,
                 checkpoint_every=0, log_every=100, view_layout=None,
                 view_fov=constants.VIEW_FOV, view_size=constants.VIEW_SIZE):
        self.iters_stage1 = int(iters_stage1)
        self.iters_stage2 = int(iters_stage2)
        self.batch_rays = int(batch_rays)
        self.lr_shared = float(lr_shared)
        self.lr_well = float(lr_well)
        self.lr_fast = float(lr_fast)
        self.finetune_factor = float(finetune_factor)
        self.lr_final_ratio = float(lr_final_ratio)
        self.betas = [float(b) for b in betas]
        self.eps = float(eps)
        self.mode = mode
        self.seed = int(seed)
        self.n_samples = int(n_samples)
        self.stratified = bool(stratified)
        self.checkpoint_every = int(checkpoint_every)
        self.log_every = int(log_every)
        self.view_layout = None if view_layout is None else \
            [[float(yaw), float(pitch)] for yaw, pitch in view_layout]
        self.view_fov = float(view_fov)
        self.view_size = int(view_size)
        self.validate()

    def validate(self):
        if self.mode not in constants.TRAIN_MODES:
            raise exceptions.InvalidConfiguration(
                "Unknown training mode %r, expected one of %s"
                % (self.mode, ', '.join(constants.TRAIN_MODES)))
        for name in ('iters_stage1', 'iters_stage2', 'batch_rays',
                     'n_samples'):
            if getattr(self, name) <= 0:
                raise exceptions.InvalidConfiguration(
                    "%s must be positive" % name)
        for name in ('lr_shared', 'lr_well', 'lr_fast', 'finetune_factor',
                     'lr_final_ratio', 'eps'):
            if not getattr(self, name) > 0:
                raise exceptions.InvalidConfiguration(
                    "%s must be positive" % name)
        if len(self.betas) != 2 or not all(0 <= b < 1 for b in self.betas):
            raise exceptions.InvalidConfiguration(
                "betas must be two numbers in [0, 1)")
        if self.checkpoint_every < 0 or self.log_every < 0:
            raise exceptions.InvalidConfiguration(
                "checkpoint_every and log_every cannot be negative")

    @property
    def total_iterations(self):
        return self.iters_stage1 + self.iters_stage2

    def to_dict(self):
        return {
            'iters_stage1': self.iters_stage1,
            'iters_stage2': self.iters_stage2,
            'batch_rays': self.batch_rays,
            'lr_shared': self.lr_shared,
            'lr_well': self.lr_well,
            'lr_fast': self.lr_fast,
            'finetune_factor': self.finetune_factor,
            'lr_final_ratio': self.lr_final_ratio,
            'betas': list(self.betas),
            'eps': self.eps,
            'mode': self.mode,
            'seed': self.seed,
            'n_samples': self.n_samples,
            'stratified': self.stratified,
            'checkpoint_every': self.checkpoint_every,
            'log_every': self.log_every,
            'view_layout': self.view_layout,
            'view_fov': self.view_fov,
            'view_size': self.view_size,
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data or {})
        unknown = set(data) - set(cls().to_dict())
        if unknown:
            raise exceptions.InvalidConfiguration(
                "Unknown training settings: %s" % ', '.join(sorted(unknown)))
        return cls(**data)

    def __eq__(self, other):
        return isinstance(other, TrainConfig) and \
            self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self == other


def _loss_terms(pred, batch, which, crf=None, crf_fast=None):
    """Per-head squared error sums, element counts and d(sse)/dz."""
    if which not in WHICH:
        raise exceptions.InvalidConfiguration(
            "Unknown loss selection %r" % which)
    terms = {}
    for head, tag, curve in (('well', 0, crf), ('fast', 1, crf_fast or crf)):
        if which not in (head, 'both'):
            continue
        z = getattr(pred, 'z_' + head)
        target = getattr(batch, 'target_' + head)
        if z is None or target is None:
            raise exceptions.InvalidConfiguration(
                "No %s prediction or target in the batch" % head)
        select = batch.valid
        if batch.camera is not None:
            select = select & (batch.camera == tag)
        weight = select.to(z.dtype)[:, None]
        target = target.to(z.dtype)
        if curve is not None and curve.gamma != 1.0:
            gamma = curve.gamma
            z_lin = torch.clamp(z, min=0.0) ** gamma
            t_lin = torch.clamp(target, min=0.0) ** gamma
            residual = (z_lin - t_lin) * weight
            grad = 2.0 * residual * gamma * \
                torch.clamp(z, min=0.0) ** (gamma - 1.0)
        else:
            residual = (z - target) * weight
            grad = 2.0 * residual
        count = 3 * int(select.sum())
        terms[head] = (torch.sum(residual ** 2), count, grad.detach())
    return terms


def photometric_loss(pred, batch, which='both', crf=None, crf_fast=None):
    """Mean squared error between predictions and observed pixels

    Only valid rays count; with camera tags the well term uses well rays
    and the fast term fast rays. When ``crf`` is given both prediction and
    target are linearized through it first.

    :returns: ``(loss, grads)`` where ``grads`` maps ``z_well``/``z_fast``
              to the gradient of the loss with respect to that prediction
    """
    terms = _loss_terms(pred, batch, which, crf, crf_fast)
    count = sum(c for _, c, _ in terms.values())
    if count == 0:
        raise exceptions.EmptyInput("empty batch")
    loss = sum(sse for sse, _, _ in terms.values()) / count
    grads = dict(('z_' + head, grad / count)
                 for head, (_, _, grad) in terms.items())
    return loss, grads


def _head_means(pred, batch, which, crf=None, crf_fast=None):
    means = {'well': None, 'fast': None}
    for head, (sse, count, _) in _loss_terms(pred, batch, which, crf,
                                             crf_fast).items():
        if count:
            means[head] = float(sse.detach()) / count
    return means


class RayPool(object):
    """Every valid observed ray of a dataset, tagged by camera"""

    def __init__(self, origins, directions, t_near, t_far, targets, camera):
        self.origins = origins
        self.directions = directions
        self.t_near = t_near
        self.t_far = t_far
        self.targets = targets
        self.camera = camera

    def __len__(self):
        return self.origins.shape[0]

    @classmethod
    def from_dataset(cls, dataset, cameras=constants.CAMERAS, layout=None,
                     fov=constants.VIEW_FOV, size=constants.VIEW_SIZE):
        parts = []
        for camera in cameras:
            for frame in dataset.frames(camera):
                for image, cam in _frame_views(frame, layout, fov, size):
                    origins, directions = geometry.camera_rays(cam)
                    origins = origins.reshape(-1, 3)
                    directions = directions.reshape(-1, 3)
                    t_near, t_far, hit = renderer.ray_bounds(
                        origins, directions, dataset.bounds)
                    keep = hit & image.valid().reshape(-1)
                    parts.append((origins[keep], directions[keep],
                                  t_near[keep], t_far[keep],
                                  image.data.reshape(-1, 3)[keep],
                                  np.full(int(keep.sum()),
                                          _CAMERA_TAGS[camera])))
        if not parts or sum(len(p[0]) for p in parts) == 0:
            raise exceptions.EmptyInput("No valid rays in the dataset")
        pool = cls(*[np.concatenate(column) for column in zip(*parts)])
        LOG.debug("Ray pool of %d rays from cameras %s", len(pool),
                  ', '.join(cameras))
        return pool

    def draw(self, rng, count):
        """Uniformly draw ``count`` rays as a :class:`renderer.RayBatch`."""
        index = rng.integers(0, len(self), size=count)
        camera = self.camera[index]
        targets = self.targets[index]
        is_well = (camera == 0)[:, None]
        return renderer.RayBatch(
            self.origins[index], self.directions[index], self.t_near[index],
            self.t_far[index], np.where(is_well, targets, 0.0),
            np.where(is_well, 0.0, targets), camera=camera)


def _frame_views(frame, layout, fov, size):
    cam = geometry.EquirectCamera(frame.image.width, frame.image.height,
                                  frame.pose)
    if layout is None:
        return [(frame.image, cam)]
    return geometry.extract_perspective_views(frame.image, cam, fov, size,
                                              layout)


def cosine_lr(base, step, steps, final_ratio):
    """Cosine decay from ``base`` to ``base * final_ratio`` over steps."""
    progress = min(float(step) / max(steps, 1), 1.0)
    return base * (final_ratio + (1.0 - final_ratio) * 0.5 *
                   (1.0 + math.cos(math.pi * progress)))


class Stage(object):
    """One optimization stage: its groups, rates, targets and length"""

    def __init__(self, number, start, length, lrs, which, render_mode):
        self.number = number
        self.start = start
        self.length = length
        self.lrs = lrs
        self.which = which
        self.render_mode = render_mode

    @property
    def end(self):
        return self.start + self.length


def plan_stages(config):
    n1, n2 = config.iters_stage1, config.iters_stage2
    if config.mode == constants.MODE_ONE_STEP:
        return [Stage(1, 0, n1 + n2,
                      {'shared': config.lr_shared, 'well': config.lr_well,
                       'fast': config.lr_fast},
                      'both', renderer.MODE_BOTH)]
    factor = config.finetune_factor
    return [
        Stage(1, 0, n1, {'shared': config.lr_shared, 'well': config.lr_well},
              'well', renderer.MODE_WELL_ONLY),
        Stage(2, n1, n2, {'shared': config.lr_shared * factor,
                          'well': config.lr_well * factor,
                          'fast': config.lr_fast},
              'both', renderer.MODE_BOTH),
    ]


class Trainer(object):
    """Drives the optimization of one field on one dataset

    Rays of iteration ``k`` are drawn from a generator seeded with
    ``[seed, k]`` so a run resumed from a checkpoint at ``k`` continues
    exactly like an uninterrupted one.
    """

    def __init__(self, dataset, field_config, config, out_dir=None):
        self.dataset = dataset
        self.field_config = field_config
        self.config = config
        self.out_dir = out_dir
        self.field = field_mod.RadianceField(field_config, seed=config.seed)
        self.stages = plan_stages(config)
        self.iteration = 0
        self.optimizer = None
        self.optimizer_stage = None
        self.log_rows = []
        self.history = []
        self._pools = {}
        linear = config.mode == constants.MODE_LINEARIZE_BEFORE
        self.loss_crf = dataset.crf if linear else None
        self.loss_crf_fast = dataset.crf_for(constants.CAMERA_FAST) \
            if linear else None

    def stage_at(self, iteration):
        for stage in self.stages:
            if iteration < stage.end:
                return stage
        return self.stages[-1]

    def _pool(self, stage):
        cameras = (constants.CAMERA_WELL,) if stage.which == 'well' \
            else constants.CAMERAS
        if cameras not in self._pools:
            self._pools[cameras] = RayPool.from_dataset(
                self.dataset, cameras, self.config.view_layout,
                self.config.view_fov, self.config.view_size)
        return self._pools[cameras]

    def _make_optimizer(self, stage):
        groups = self.field.parameter_partition()
        param_groups = [{'params': groups[name], 'lr': lr, 'name': name}
                        for name, lr in sorted(stage.lrs.items())]
        LOG.info("Stage %d: %d iterations, learning rates %s",
                 stage.number, stage.length,
                 ', '.join('%s=%g' % kv for kv in sorted(stage.lrs.items())))
        self.optimizer = torch.optim.Adam(
            param_groups, betas=tuple(self.config.betas),
            eps=self.config.eps)
        self.optimizer_stage = stage.number

    def _set_learning_rates(self, stage, iteration):
        for group in self.optimizer.param_groups:
            group['lr'] = cosine_lr(stage.lrs[group['name']],
                                    iteration - stage.start, stage.length,
                                    self.config.lr_final_ratio)

    def step(self):
        """Run one optimization iteration and return its log row."""
        k = self.iteration
        stage = self.stage_at(k)
        if self.optimizer is None or self.optimizer_stage != stage.number:
            self._make_optimizer(stage)
        self._set_learning_rates(stage, k)
        started = time.time()

        rng = utils.seeded_rng(self.config.seed, k)
        batch = self._pool(stage).draw(rng, self.config.batch_rays)
        pred = renderer.render_batch(
            self.field, batch, self.config.n_samples, stage.render_mode,
            stratified=self.config.stratified, rng_seed=rng)
        loss, _ = photometric_loss(pred, batch, stage.which,
                                   self.loss_crf, self.loss_crf_fast)
        if not torch.isfinite(loss):
            self.flush_log()
            raise exceptions.TrainingDiverged(
                "Loss is %s at iteration %d (stage %d, learning rates %s)"
                % (float(loss), k, stage.number,
                   ', '.join('%s=%g' % (g['name'], g['lr'])
                             for g in self.optimizer.param_groups)))
        self.optimizer.zero_grad()
        loss.backward()
        self.optimizer.step()

        means = _head_means(pred, batch, stage.which, self.loss_crf,
                            self.loss_crf_fast)
        row = (k, stage.number, means['well'], means['fast'],
               int(round((time.time() - started) * 1000)))
        self.log_rows.append(row)
        self.history.append(row)
        self.iteration = k + 1
        if self.config.log_every and self.iteration % \
                self.config.log_every == 0:
            LOG.info("iteration %d stage %d loss_well %s loss_fast %s",
                     k, stage.number, _fmt(means['well']),
                     _fmt(means['fast']))
        return row

    def run(self, until=None):
        """Train up to ``until`` iterations (default: the full budget)."""
        until = self.config.total_iterations if until is None \
            else min(until, self.config.total_iterations)
        while self.iteration < until:
            self.step()
            if self.out_dir and self.config.checkpoint_every and \
                    self.iteration % self.config.checkpoint_every == 0:
                self.save(os.path.join(
                    self.out_dir,
                    constants.CHECKPOINT_PATTERN % self.iteration))
        if self.out_dir:
            self.save(os.path.join(self.out_dir, constants.CHECKPOINT_NAME))
        return self.field

    def flush_log(self):
        if not self.out_dir or not self.log_rows:
            return
        path = os.path.join(self.out_dir, constants.TRAIN_LOG_NAME)
        append_training_log(path, self.log_rows)
        self.log_rows = []

    def save(self, path):
        self.flush_log()
        checkpoint_save(path, self)
        return path

    @classmethod
    def resume(cls, path, dataset, out_dir=None, config=None):
        """Rebuild a trainer from a checkpoint written by :meth:`save`."""
        payload = checkpoint_load(path)
        if config is None:
            config = TrainConfig.from_dict(payload['train'])
        trainer = cls(dataset, trainer_field(payload).config, config,
                      out_dir)
        trainer.field.load_state_dict(payload['field']['state'])
        trainer.iteration = int(payload['iteration'])
        stage = trainer.stage_at(trainer.iteration)
        # A checkpoint taken at a stage boundary starts the next stage
        # with a fresh optimizer.
        if payload['stage'] == stage.number and \
                trainer.iteration < config.total_iterations:
            trainer._make_optimizer(stage)
            trainer.optimizer.load_state_dict(payload['optimizer'])
        LOG.info("Resumed training at iteration %d from %s",
                 trainer.iteration, path)
        return trainer


def _fmt(value):
    return 'n/a' if value is None else '%.6g' % value


def append_training_log(path, rows):
    """Append rows to the CSV training log, writing the header once."""
    new = not os.path.isfile(path)
    with open(path, 'a') as f:
        writer = csv.writer(f)
        if new:
            writer.writerow(constants.TRAIN_LOG_COLUMNS)
        for row in rows:
            writer.writerow(['' if v is None else v for v in row])
    return path


def train(dataset, field_config, config, out_dir=None):
    """Train a field from scratch

    :returns: ``(field, log)`` where ``log`` holds one
              ``(iteration, stage, loss_well, loss_fast, wall_ms)`` row
              per iteration
    """
    trainer = Trainer(dataset, field_config, config, out_dir)
    trainer.run()
    return trainer.field, trainer.history


def checkpoint_save(path, trainer):
    dataset = trainer.dataset
    payload = {
        'version': constants.CHECKPOINT_VERSION,
        'field': field_mod.field_payload(trainer.field),
        'optimizer': None if trainer.optimizer is None
        else trainer.optimizer.state_dict(),
        'iteration': trainer.iteration,
        'stage': trainer.optimizer_stage,
        'train': trainer.config.to_dict(),
        'photometric': {
            'gamma': dataset.crf.gamma,
            'gamma_fast': None if dataset.crf_fast is None
            else dataset.crf_fast.gamma,
            'exposure_factor': dataset.exposure_factor.factor,
        },
    }
    torch.save(payload, path)
    LOG.info("Saved checkpoint at iteration %d to %s",
             trainer.iteration, path)
    return path


def checkpoint_load(path):
    payload = field_mod.load_torch_file(path)
    if not isinstance(payload, dict) or 'version' not in payload:
        raise exceptions.CheckpointError("%s: not a training checkpoint"
                                         % path)
    if payload['version'] != constants.CHECKPOINT_VERSION:
        raise exceptions.CheckpointVersionMismatch(
            "%s: checkpoint version %r, expected %d"
            % (path, payload['version'], constants.CHECKPOINT_VERSION))
    missing = [k for k in ('field', 'optimizer', 'iteration', 'stage',
                           'train', 'photometric') if k not in payload]
    if missing:
        raise exceptions.CheckpointError("%s: missing %s"
                                         % (path, ', '.join(missing)))
    return payload


def trainer_field(payload, source='<checkpoint>'):
    return field_mod.field_from_payload(payload['field'], source)


def load_checkpoint_field(path):
    """Field and photometric setup stored in a training checkpoint

    :returns: ``(field, crf, crf_fast, exposure_factor)``
    """
    payload = checkpoint_load(path)
    field = trainer_field(payload, path)
    photometric = payload['photometric']
    crf_fast = None
    if photometric.get('gamma_fast') is not None:
        crf_fast = imaging.CRF(photometric['gamma_fast'])
    return (field, imaging.CRF(photometric['gamma']), crf_fast,
            imaging.ExposureFactor(photometric['exposure_factor']))


def recover_hdr_panorama(field, cam, crf, ef, crf_fast=None,
                         n_samples=constants.RENDER_SAMPLES):
    """Render both heads and fuse them into an HDR panorama

    :returns: ``(ImageBuffer[HDR], hole_mask)``
    """
    well, fast = renderer.render_panorama(field, cam, n_samples)
    hdr, holes = imaging.merge_hdr(imaging.linearize(well, crf),
                                   imaging.linearize(fast, crf_fast or crf),
                                   ef)
    if holes.any():
        LOG.warning("%d pixels have no valid exposure", int(holes.sum()))
    return hdr, holes
