"""Pauli frame Monte Carlo sampler for noisy circuits.

Frames are stored bit-packed: one row of uint64 words per qubit, with one
shot (or one injected error, see :func:`propagate`) per bit lane. Gates
conjugate whole rows with :func:`pauli.conjugate_frame`. Noise channels are
sampled sparsely: a binomial draw picks how many (target, shot) trials get an
error, the trials are chosen uniformly, and each error's Pauli comes from a
Walker alias table over the channel's non-identity outcomes.

Randomness comes from a Philox counter-based generator keyed by (seed, chunk
index). Chunks have a fixed size, so results don't depend on how chunks are
spread across workers.
"""
import collections
from concurrent import futures
import logging
import struct
import time

import humanfriendly
import numpy as np

from . import circuit as circuit_mod
from . import pauli
from .pauli import PauliString

CHUNK_SHOTS = 8192
DUMP_HEADER = struct.Struct('<IHH')
MAX_DUMP_COUNT = 0xFFFF


class UnboundNoiseSite(ValueError):
  """Raised when sampling a circuit whose noise sites have no channels yet."""


class ShotDumpError(ValueError):
  """Raised for shot dumps that can't be written or read."""


class ShotBatch(collections.namedtuple('ShotBatch', [
    'shots', 'num_detectors', 'num_observables', 'detector_bits',
    'observable_bits', 'seed'])):
  """Sampled detection events and observable flips.

  Bits are packed per shot, little endian within each byte.

  Attributes:
    shots: int
    num_detectors: int
    num_observables: int
    detector_bits: numpy uint8 array, shots x ceil(num_detectors / 8)
    observable_bits: numpy uint8 array, shots x ceil(num_observables / 8)
    seed: int, or None if loaded from a dump
  """
  __slots__ = ()

  def detectors(self):
    """Returns the unpacked detector bits, shots x num_detectors."""
    return np.unpackbits(self.detector_bits, axis=1, bitorder='little',
                         count=self.num_detectors)

  def observables(self):
    """Returns the unpacked observable bits, shots x num_observables."""
    return np.unpackbits(self.observable_bits, axis=1, bitorder='little',
                         count=self.num_observables)

  def events(self, shot):
    """Returns the sorted indices of the detectors flagged in one shot."""
    return np.flatnonzero(np.unpackbits(
      self.detector_bits[shot], bitorder='little', count=self.num_detectors))


def merge(batches):
  """Concatenates :class:`ShotBatch` es in order."""
  batches = list(batches)
  first = batches[0]
  return ShotBatch(
    shots=sum(b.shots for b in batches),
    num_detectors=first.num_detectors,
    num_observables=first.num_observables,
    detector_bits=np.concatenate([b.detector_bits for b in batches]),
    observable_bits=np.concatenate([b.observable_bits for b in batches]),
    seed=first.seed)


class AliasTable(object):
  """Walker alias table for O(1) sampling from a discrete distribution."""

  def __init__(self, probs):
    probs = np.asarray(probs, dtype=float)
    k = len(probs)
    scaled = probs * k / probs.sum()
    self.prob = np.ones(k)
    self.alias = np.arange(k)

    small = [i for i in range(k) if scaled[i] < 1]
    large = [i for i in range(k) if scaled[i] >= 1]
    while small and large:
      s, l = small.pop(), large.pop()
      self.prob[s] = scaled[s]
      self.alias[s] = l
      scaled[l] -= 1 - scaled[s]
      (small if scaled[l] < 1 else large).append(l)

  def sample(self, rng, size):
    i = rng.integers(0, len(self.prob), size=size)
    return np.where(rng.random(size) < self.prob[i], i, self.alias[i])


class FrameSimulator(object):
  """Bit-packed Pauli frames over a number of lanes.

  If gauge_rng is set, the frame component that leaves the post-reset or
  post-measurement state unchanged is randomized, so a detector that is not
  deterministic shows up as random flips even without noise.

  Attributes:
    xs, zs: numpy uint64 arrays, qubits x words
    records: numpy uint64 array, measurements x words. Measurement flips.
  """

  def __init__(self, num_qubits, num_measurements, lanes, gauge_rng=None):
    self.lanes = lanes
    self.gauge_rng = gauge_rng
    self.words = max(1, -(-lanes // 64))
    self.xs = np.zeros((num_qubits, self.words), dtype=np.uint64)
    self.zs = np.zeros((num_qubits, self.words), dtype=np.uint64)
    self.records = np.zeros((num_measurements, self.words), dtype=np.uint64)
    self.num_recorded = 0

  def apply(self, inst):
    """Applies a gate, reset or measurement. Noise is handled by the caller."""
    name = inst.name
    if name in pauli.UNITARY_GATES:
      pauli.conjugate_frame(name, inst.targets, self.xs, self.zs)
    elif name in pauli.RESETS:
      targets = list(inst.targets)
      self.xs[targets] = 0
      self.zs[targets] = 0
      self._randomize(self.xs if name == pauli.RPLUS else self.zs, targets)
    elif name in pauli.MEASUREMENTS:
      frame = self.zs if name == pauli.MX else self.xs
      end = self.num_recorded + len(inst.targets)
      self.records[self.num_recorded:end] = frame[list(inst.targets)]
      self.num_recorded = end
      self._randomize(self.xs if name == pauli.MX else self.zs,
                      list(inst.targets))

  def _randomize(self, frame, targets):
    if self.gauge_rng is not None:
      frame[targets] ^= self.gauge_rng.integers(
        0, np.iinfo(np.uint64).max, size=(len(targets), self.words),
        dtype=np.uint64, endpoint=True)

  def flip(self, qubits, lanes, x_bits, z_bits):
    """XORs single-qubit Paulis into the frames.

    Args:
      qubits, lanes: int numpy arrays
      x_bits, z_bits: bool numpy arrays
    """
    masks = np.left_shift(np.uint64(1), (lanes & 63).astype(np.uint64))
    words = lanes >> 6
    np.bitwise_xor.at(self.xs, (qubits[x_bits], words[x_bits]), masks[x_bits])
    np.bitwise_xor.at(self.zs, (qubits[z_bits], words[z_bits]), masks[z_bits])

  def parities(self, groups):
    """XORs measurement records into one packed row per group of indices."""
    out = np.zeros((len(groups), self.words), dtype=np.uint64)
    for i, recs in enumerate(groups):
      if recs:
        out[i] = np.bitwise_xor.reduce(self.records[list(recs)], axis=0)
    return out


def unpack_lanes(packed, lanes):
  """Unpacks a rows x words uint64 array into a lanes x rows uint8 bit array."""
  as_bytes = packed.astype('<u8').view(np.uint8)
  bits = np.unpackbits(as_bytes, axis=1, bitorder='little')
  return np.ascontiguousarray(bits[:, :lanes].T)


def sparse_lanes(packed, lanes):
  """Returns, per lane, the sorted tuple of rows whose bit is set."""
  rows, words = np.nonzero(packed)
  out = [[] for _ in range(lanes)]
  if len(rows):
    values = packed[rows, words].astype('<u8').view(np.uint8).reshape(-1, 8)
    bits = np.unpackbits(values, axis=1, bitorder='little')
    hit, bit = np.nonzero(bits)
    for row, lane in zip(rows[hit], words[hit] * 64 + bit):
      if lane < lanes:
        out[lane].append(int(row))
  return [tuple(sorted(hits)) for hits in out]


NoiseOp = collections.namedtuple('NoiseOp', [
  'groups', 'p_error', 'alias', 'x_table', 'z_table'])


def _channel_probs(inst):
  """Returns the full Pauli probability vector of a noise channel instruction."""
  args = [float(a) for a in inst.args]
  if inst.name == circuit_mod.X_ERROR:
    errors = [args[0], 0, 0]
  elif inst.name == circuit_mod.Z_ERROR:
    errors = [0, 0, args[0]]
  else:
    errors = args
  return np.array([1 - sum(errors)] + errors)


def compile_noise(inst, cache=None):
  """Converts a noise channel instruction into a :class:`NoiseOp`, or None."""
  arity = 2 if inst.name == circuit_mod.PAULI_CHANNEL_2 else 1
  key = (inst.name, inst.args)
  if cache is not None and key in cache:
    tables = cache[key]
  else:
    probs = _channel_probs(inst)
    if len(probs) != 4 ** arity:
      raise ValueError('%s takes %d probabilities, got %d' %
                       (inst.name, 4 ** arity - 1, len(probs) - 1))
    p_error = probs[1:].sum()
    if p_error <= 0:
      tables = None
    else:
      letters = [PauliString.from_index(e, arity).label()
                 for e in range(1, 4 ** arity)]
      tables = (p_error, AliasTable(probs[1:]),
                np.array([[l in 'XY' for l in label] for label in letters]),
                np.array([[l in 'YZ' for l in label] for label in letters]))
    if cache is not None:
      cache[key] = tables

  if tables is None:
    return None
  groups = np.array(inst.targets, dtype=np.int64).reshape(-1, arity)
  return NoiseOp(groups, *tables)


def compile_circuit(circuit):
  """Turns a noise-bound circuit into a list of ops for :func:`sample_chunk`.

  Each op is either an :class:`circuit.Instruction` gate, reset or
  measurement, or a :class:`NoiseOp`.

  Raises:
    :class:`UnboundNoiseSite`
  """
  ops = []
  cache = {}
  for i, inst in enumerate(circuit.instructions):
    if inst.name == circuit_mod.NOISE_SITE:
      raise UnboundNoiseSite('Instruction %d (%s on %s) has no channel. Call '
                             'circuit.attach_noise first.' %
                             (i, inst.args[0], inst.targets))
    elif inst.name in circuit_mod.NOISE_CHANNELS:
      op = compile_noise(inst, cache)
      if op:
        ops.append(op)
    else:
      ops.append(inst)
  return ops


def _sample_noise(sim, op, shots, rng):
  trials = len(op.groups) * shots
  count = rng.binomial(trials, op.p_error)
  if not count:
    return
  picked = rng.choice(trials, size=count, replace=False)
  group, lane = np.divmod(picked, shots)
  errors = op.alias.sample(rng, count)
  for j in range(op.groups.shape[1]):
    sim.flip(op.groups[group, j], lane, op.x_table[errors, j],
             op.z_table[errors, j])


def _pack_shots(packed, shots):
  """Converts rows x words lanes into shots x bytes per-shot packing."""
  bits = unpack_lanes(packed, shots)
  return np.packbits(bits, axis=1, bitorder='little')


def sample_chunk(circuit, ops, chunk, shots, seed, randomize_gauge=False):
  """Samples one chunk of shots.

  Args:
    circuit: noise-bound :class:`circuit.CircuitProgram`
    ops: list, output of :func:`compile_circuit`
    chunk: int chunk index, part of the RNG key
    shots: int, number of shots in this chunk
    seed: int
    randomize_gauge: bool, see :class:`FrameSimulator`

  Returns:
    :class:`ShotBatch`
  """
  rng = np.random.Generator(np.random.Philox(
    key=np.array([seed, chunk], dtype=np.uint64)))
  sim = FrameSimulator(circuit.qubit_count, circuit.num_measurements(), shots,
                       gauge_rng=rng if randomize_gauge else None)

  for op in ops:
    if isinstance(op, NoiseOp):
      _sample_noise(sim, op, shots, rng)
    else:
      sim.apply(op)

  return ShotBatch(
    shots=shots,
    num_detectors=len(circuit.detectors),
    num_observables=len(circuit.observables),
    detector_bits=_pack_shots(sim.parities(circuit.detectors), shots),
    observable_bits=_pack_shots(sim.parities(circuit.observables), shots),
    seed=seed)


def _sample_chunk_task(args):
  circuit, chunk, shots, seed, randomize_gauge = args
  return sample_chunk(circuit, compile_circuit(circuit), chunk, shots, seed,
                      randomize_gauge)


def chunk_sizes(shots, chunk_shots=CHUNK_SHOTS):
  """Returns the list of chunk sizes that cover a number of shots."""
  full, rest = divmod(shots, chunk_shots)
  return [chunk_shots] * full + ([rest] if rest else [])


def sample(circuit, shots, seed=0, chunk_shots=CHUNK_SHOTS, workers=1,
           first_chunk=0, randomize_gauge=False):
  """Samples detection events and observable flips.

  Deterministic given (circuit, shots, seed, chunk_shots, first_chunk). The
  worker count only affects speed.

  Args:
    circuit: noise-bound :class:`circuit.CircuitProgram`
    shots: int >= 1
    seed: int in [0, 2^64)
    chunk_shots: int, shots per RNG chunk
    workers: int, number of worker processes
    first_chunk: int, index of the first chunk. Lets callers continue a run.
    randomize_gauge: bool. Randomizes frames after resets and measurements,
      which makes nondeterministic detectors fire. Changes the random stream.

  Returns:
    :class:`ShotBatch`

  Raises:
    :class:`UnboundNoiseSite`, ValueError
  """
  if shots < 1:
    raise ValueError('shots must be >= 1, got %r' % shots)
  if not 0 <= seed < 2 ** 64:
    raise ValueError('seed must be in [0, 2^64), got %r' % seed)

  start = time.time()
  ops = compile_circuit(circuit)
  tasks = [(circuit, first_chunk + i, size, seed, randomize_gauge)
           for i, size in enumerate(chunk_sizes(shots, chunk_shots))]

  if workers <= 1 or len(tasks) == 1:
    batches = [sample_chunk(circuit, ops, chunk, size, seed, randomize_gauge)
               for _, chunk, size, _, _ in tasks]
  else:
    with futures.ProcessPoolExecutor(max_workers=workers) as executor:
      batches = list(executor.map(_sample_chunk_task, tasks))

  batch = merge(batches)
  logging.debug('Sampled %s shots in %d chunks in %s',
                humanfriendly.format_number(shots), len(tasks),
                humanfriendly.format_timespan(time.time() - start))
  return batch


def _injection_arrays(circuit, injections):
  positions, qubits, lanes, x_bits, z_bits = [], [], [], [], []
  for lane, (position, p) in enumerate(injections):
    if p.n != circuit.qubit_count:
      raise pauli.DimensionError('Injected Pauli has %d qubits, circuit has %d'
                                 % (p.n, circuit.qubit_count))
    if not 0 <= position <= len(circuit.instructions):
      raise ValueError('Injection position %d out of range' % position)
    for q in p.support():
      positions.append(position)
      qubits.append(q)
      lanes.append(lane)
      x_bits.append(bool(p.x_mask >> q & 1))
      z_bits.append(bool(p.z_mask >> q & 1))
  return (np.array(positions, dtype=np.int64), np.array(qubits, dtype=np.int64),
          np.array(lanes, dtype=np.int64), np.array(x_bits, dtype=bool),
          np.array(z_bits, dtype=bool))


def propagate_parts(circuit, positions, qubits, x_bits, z_bits):
  """Propagates single-qubit Paulis, one per lane, through a circuit noiselessly.

  Args:
    circuit: :class:`circuit.CircuitProgram`
    positions: int numpy array. Each Pauli is applied just before the
      instruction at this index.
    qubits: int numpy array
    x_bits, z_bits: bool numpy arrays

  Returns:
    (detectors, observables) tuple of lists, one sorted tuple of flipped
    detector (observable) indices per lane
  """
  lanes = np.arange(len(positions), dtype=np.int64)
  return _propagate(circuit, len(positions), positions, qubits, lanes, x_bits,
                    z_bits)


def _propagate(circuit, num_lanes, positions, qubits, lanes, x_bits, z_bits):
  sim = FrameSimulator(circuit.qubit_count, circuit.num_measurements(),
                       num_lanes)
  order = np.argsort(positions, kind='stable')
  positions, qubits, lanes = positions[order], qubits[order], lanes[order]
  x_bits, z_bits = x_bits[order], z_bits[order]
  bounds = np.searchsorted(positions,
                           np.arange(len(circuit.instructions) + 2))

  for i in range(len(circuit.instructions) + 1):
    lo, hi = bounds[i], bounds[i + 1]
    if hi > lo:
      sim.flip(qubits[lo:hi], lanes[lo:hi], x_bits[lo:hi], z_bits[lo:hi])
    if i < len(circuit.instructions):
      inst = circuit.instructions[i]
      if inst.name in pauli.GATE_KINDS:
        sim.apply(inst)

  return (sparse_lanes(sim.parities(circuit.detectors), num_lanes),
          sparse_lanes(sim.parities(circuit.observables), num_lanes))


def propagate(circuit, injections):
  """Deterministically propagates injected Paulis, each in its own lane.

  Noise instructions are ignored, so this is a test hook for hand-placed
  errors as well as the engine behind DEM extraction.

  Args:
    circuit: :class:`circuit.CircuitProgram`
    injections: sequence of (position, :class:`PauliString`) tuples. The
      Pauli acts on all circuit qubits and is applied just before
      instruction ``position``.

  Returns:
    list of (detectors, observables) tuples of sorted flipped indices, one
    per injection
  """
  injections = list(injections)
  positions, qubits, lanes, x_bits, z_bits = _injection_arrays(circuit,
                                                               injections)
  detectors, observables = _propagate(circuit, len(injections), positions,
                                      qubits, lanes, x_bits, z_bits)
  return list(zip(detectors, observables))


def dump(batch, path):
  """Writes a :class:`ShotBatch` to a binary file. See docs/formats.md.

  Layout: little endian header (uint32 shots, uint16 detectors, uint16
  observables), then one row per shot of detector bits followed by observable
  bits, packed little endian and padded to a whole byte.
  """
  if batch.num_detectors > MAX_DUMP_COUNT or batch.num_observables > MAX_DUMP_COUNT:
    raise ShotDumpError('Too many detectors or observables for a dump: %d, %d'
                        % (batch.num_detectors, batch.num_observables))
  if batch.shots >= 2 ** 32:
    raise ShotDumpError('Too many shots for a dump: %d' % batch.shots)

  size = DUMP_HEADER.size
  with open(path, 'wb') as f:
    f.write(DUMP_HEADER.pack(batch.shots, batch.num_detectors,
                             batch.num_observables))
    for start in range(0, batch.shots, CHUNK_SHOTS):
      end = start + CHUNK_SHOTS
      bits = np.concatenate([
        np.unpackbits(batch.detector_bits[start:end], axis=1,
                      bitorder='little', count=batch.num_detectors),
        np.unpackbits(batch.observable_bits[start:end], axis=1,
                      bitorder='little', count=batch.num_observables),
      ], axis=1)
      rows = np.packbits(bits, axis=1, bitorder='little')
      f.write(rows.tobytes())
      size += rows.size

  logging.info('Wrote %s shots to %s (%s)',
               humanfriendly.format_number(batch.shots), path,
               humanfriendly.format_size(size))


def load(path):
  """Reads a :class:`ShotBatch` written by :func:`dump`."""
  with open(path, 'rb') as f:
    data = f.read()

  if len(data) < DUMP_HEADER.size:
    raise ShotDumpError('%s is too short for a shot dump header' % path)
  shots, num_detectors, num_observables = DUMP_HEADER.unpack_from(data)

  row_bytes = -(-(num_detectors + num_observables) // 8)
  body = np.frombuffer(data, dtype=np.uint8, offset=DUMP_HEADER.size)
  if len(body) != shots * row_bytes:
    raise ShotDumpError('%s has %d data bytes, expected %d for %d shots' %
                        (path, len(body), shots * row_bytes, shots))

  bits = np.unpackbits(body.reshape(shots, row_bytes), axis=1,
                       bitorder='little', count=num_detectors + num_observables)
  return ShotBatch(
    shots=shots,
    num_detectors=num_detectors,
    num_observables=num_observables,
    detector_bits=np.packbits(bits[:, :num_detectors], axis=1,
                              bitorder='little'),
    observable_bits=np.packbits(bits[:, num_detectors:], axis=1,
                                bitorder='little'),
    seed=None)
