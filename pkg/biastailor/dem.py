"""Detector error models: extraction from noisy circuits and graphlike decomposition.

Extraction propagates every single-qubit component of every noise site, ie X
and Z on each target of each channel, through the rest of the circuit, all at
once in bit lanes. Frame propagation is linear, so the symptom of any Pauli
error at a site is the XOR of its components' symptoms.

Text format, one statement per line::

  detectors 72
  observables 1
  error(0.0012) D3 D11 L0
"""
import collections
import logging
import re

import numpy as np

from . import circuit as circuit_mod
from . import sampler
from .pauli import PauliString

PRUNE_BELOW = 1e-15
MAX_SEARCH_DETECTORS = 12

ERROR_RE = re.compile(r'^error\(([^)]+)\)((?:\s+[DL]\d+)*)\s*$')
HEADER_RE = re.compile(r'^(detectors|observables)\s+(\d+)\s*$')


class DecompositionError(ValueError):
  """Raised when a mechanism can't be split into graphlike components."""


class DemFormatError(ValueError):
  """Raised when DEM text doesn't parse."""


class ErrorMechanism(collections.namedtuple('ErrorMechanism', [
    'probability', 'detectors', 'observables', 'parts', 'site'])):
  """An independent error with the detectors and observables it flips.

  Attributes:
    probability: float in (0, 0.5]
    detectors: sorted tuple of int
    observables: sorted tuple of int
    parts: tuple of (detectors, observables) symptoms of its per-qubit X and
      Z components, or None. Hints for :func:`decompose_graphlike`.
    site: string describing the noise site it came from, or None
  """
  __slots__ = ()

  def __new__(cls, probability, detectors, observables, parts=None, site=None):
    return super(ErrorMechanism, cls).__new__(
      cls, probability, tuple(sorted(detectors)), tuple(sorted(observables)),
      parts, site)

  def key(self):
    return self.detectors, self.observables


DetectorErrorModel = collections.namedtuple('DetectorErrorModel', [
  'num_detectors', 'num_observables', 'mechanisms', 'graphlike'])


def xor_probability(q1, q2):
  """Probability that exactly one of two independent events happens."""
  return q1 * (1 - q2) + q2 * (1 - q1)


def _xor(a, b):
  """XORs two sorted index tuples."""
  return tuple(sorted(set(a) ^ set(b)))


class _Merger(object):
  """Accumulates mechanisms, merging equal symptoms."""

  def __init__(self):
    self.probs = collections.OrderedDict()
    self.hints = {}

  def add(self, probability, detectors, observables, parts=None, site=None):
    key = (tuple(sorted(detectors)), tuple(sorted(observables)))
    if not key[0] and not key[1]:
      return
    old = self.probs.get(key)
    if old is None:
      self.probs[key] = probability
      self.hints[key] = (probability, parts, site)
    else:
      self.probs[key] = xor_probability(old, probability)
      if probability > self.hints[key][0]:
        self.hints[key] = (probability, parts, site)

  def mechanisms(self):
    out = []
    pruned = 0
    for key, prob in self.probs.items():
      if prob < PRUNE_BELOW:
        pruned += 1
        continue
      _, parts, site = self.hints[key]
      out.append(ErrorMechanism(prob, key[0], key[1], parts=parts, site=site))
    if pruned:
      logging.debug('Pruned %d mechanisms below %g', pruned, PRUNE_BELOW)
    return out


def _site_name(index, inst, group):
  return 'instruction %d (%s on %s, tick %d)' % (
    index, inst.name, ' '.join(str(q) for q in group), inst.tick)


def extract_dem(circuit):
  """Builds the detector error model of a noise-bound circuit.

  Args:
    circuit: :class:`circuit.CircuitProgram` after :func:`circuit.attach_noise`

  Returns:
    :class:`DetectorErrorModel`

  Raises:
    :class:`sampler.UnboundNoiseSite`
  """
  # (instruction index, instruction, target group, probabilities, first lane)
  sites = []
  positions, qubits, x_bits, z_bits = [], [], [], []

  for i, inst in enumerate(circuit.instructions):
    if inst.name == circuit_mod.NOISE_SITE:
      raise sampler.UnboundNoiseSite(
        'Instruction %d (%s) has no channel' % (i, inst.args[0]))
    if inst.name not in circuit_mod.NOISE_CHANNELS:
      continue

    probs = sampler._channel_probs(inst)
    if probs[1:].sum() <= 0:
      continue
    arity = 2 if inst.name == circuit_mod.PAULI_CHANNEL_2 else 1
    for g in range(0, len(inst.targets), arity):
      group = inst.targets[g:g + arity]
      sites.append((i, inst, group, probs, len(positions)))
      for q in group:
        for x, z in (True, False), (False, True):
          positions.append(i + 1)
          qubits.append(q)
          x_bits.append(x)
          z_bits.append(z)

  detectors, observables = sampler.propagate_parts(
    circuit, np.array(positions, dtype=np.int64),
    np.array(qubits, dtype=np.int64), np.array(x_bits, dtype=bool),
    np.array(z_bits, dtype=bool))

  merger = _Merger()
  for i, inst, group, probs, lane in sites:
    arity = len(group)
    site = _site_name(i, inst, group)
    for index in range(1, len(probs)):
      if probs[index] <= 0:
        continue
      error = PauliString.from_index(index, arity)
      parts = []
      for j in range(arity):
        x_lane, z_lane = lane + 2 * j, lane + 2 * j + 1
        letter = error.letter(j)
        for use, part_lane in ((letter in 'XY', x_lane), (letter in 'YZ', z_lane)):
          if use:
            parts.append((detectors[part_lane], observables[part_lane]))

      dets, obs = (), ()
      for part_dets, part_obs in parts:
        dets, obs = _xor(dets, part_dets), _xor(obs, part_obs)
      merger.add(float(probs[index]), dets, obs,
                 parts=tuple(p for p in parts if p[0] or p[1]), site=site)

  mechanisms = merger.mechanisms()
  undetectable = [m for m in mechanisms if not m.detectors]
  if undetectable:
    logging.warning('%d mechanisms flip observables without any detector, eg '
                    'at %s', len(undetectable), undetectable[0].site)

  dem = DetectorErrorModel(len(circuit.detectors), len(circuit.observables),
                           mechanisms, is_graphlike(mechanisms))
  logging.info('Extracted DEM: %d detectors, %d mechanisms from %d noise sites',
               dem.num_detectors, len(mechanisms), len(sites))
  return dem


def is_graphlike(mechanisms):
  return all(len(m.detectors) <= 2 for m in mechanisms)


class _Edges(object):
  """Index of known graphlike symptoms by detector."""

  def __init__(self, keys):
    self.keys = set(keys)
    self.by_detector = collections.defaultdict(list)
    # pairs first, so existing edges are preferred over boundary splits
    for key in sorted(self.keys, key=lambda k: (-len(k[0]), k)):
      for d in key[0]:
        self.by_detector[d].append(key)

  def cover(self, detectors, observables):
    """Finds known symptoms whose XOR is (detectors, observables).

    Components have disjoint detector sets. Returns a list of keys, or None.
    """
    key = (tuple(detectors), tuple(observables))
    if key in self.keys:
      return [key]
    if len(detectors) > MAX_SEARCH_DETECTORS:
      return None

    def search(remaining, obs):
      if not remaining:
        return [] if not obs else None
      first = min(remaining)
      for key in self.by_detector.get(first, ()):
        if set(key[0]) <= remaining:
          rest = search(remaining - set(key[0]), _xor(obs, key[1]))
          if rest is not None:
            return [key] + rest
      return None

    return search(set(detectors), tuple(observables))


def _split(mechanism, edges):
  """Returns the graphlike components of one mechanism, or None."""
  if mechanism.parts:
    components = []
    for dets, obs in mechanism.parts:
      found = edges.cover(dets, obs)
      if found is None:
        break
      components.extend(found)
    else:
      return components

  return edges.cover(mechanism.detectors, mechanism.observables)


def decompose_graphlike(dem):
  """Splits mechanisms that flip more than two detectors.

  Each component's symptom is a known mechanism with at most two detectors,
  and the components XOR back to the original. Components inherit the full
  mechanism probability and are merged with the rest.

  Returns:
    :class:`DetectorErrorModel` with graphlike set

  Raises:
    :class:`DecompositionError`
  """
  if dem.graphlike and is_graphlike(dem.mechanisms):
    return dem

  edges = _Edges(m.key() for m in dem.mechanisms if len(m.detectors) <= 2)
  merger = _Merger()
  split = 0
  for m in dem.mechanisms:
    if len(m.detectors) <= 2:
      merger.add(m.probability, m.detectors, m.observables, site=m.site)
      continue

    components = _split(m, edges)
    if components is None:
      raise DecompositionError(
        'Cannot decompose mechanism %s %s from %s' %
        (' '.join('D%d' % d for d in m.detectors),
         ' '.join('L%d' % l for l in m.observables), m.site or 'unknown site'))
    split += 1
    for dets, obs in components:
      merger.add(m.probability, dets, obs, site=m.site)

  mechanisms = merger.mechanisms()
  logging.info('Decomposed %d mechanisms; %d graphlike mechanisms', split,
               len(mechanisms))
  return DetectorErrorModel(dem.num_detectors, dem.num_observables,
                            mechanisms, True)


def to_text(dem):
  """Serializes a :class:`DetectorErrorModel`. Drops decomposition hints."""
  lines = ['detectors %d' % dem.num_detectors,
           'observables %d' % dem.num_observables]
  for m in dem.mechanisms:
    lines.append(' '.join(['error(%r)' % float(m.probability)] +
                          ['D%d' % d for d in m.detectors] +
                          ['L%d' % l for l in m.observables]))
  return '\n'.join(lines) + '\n'


def parse(text):
  """Parses text written by :func:`to_text`.

  Raises:
    :class:`DemFormatError`
  """
  counts = {}
  mechanisms = []
  for num, line in enumerate(text.splitlines(), start=1):
    line = line.split('#')[0].strip()
    if not line:
      continue

    header = HEADER_RE.match(line)
    if header:
      counts[header.group(1)] = int(header.group(2))
      continue

    error = ERROR_RE.match(line)
    if not error:
      raise DemFormatError('Line %d: cannot parse %r' % (num, line))
    try:
      prob = float(error.group(1))
    except ValueError:
      raise DemFormatError('Line %d: bad probability %r' % (num, error.group(1)))
    if not 0 < prob <= 1:
      raise DemFormatError('Line %d: probability %r out of range' % (num, prob))

    targets = error.group(2).split()
    mechanisms.append(ErrorMechanism(
      prob, [int(t[1:]) for t in targets if t[0] == 'D'],
      [int(t[1:]) for t in targets if t[0] == 'L']))

  if set(counts) != {'detectors', 'observables'}:
    raise DemFormatError('Missing detectors/observables header')
  for m in mechanisms:
    if (any(d >= counts['detectors'] for d in m.detectors) or
        any(l >= counts['observables'] for l in m.observables)):
      raise DemFormatError('Mechanism %s is out of range' % (m.key(),))

  return DetectorErrorModel(counts['detectors'], counts['observables'],
                            mechanisms, is_graphlike(mechanisms))
