"""Rotated XZZX surface code memory experiment circuits.

Layout
------
Data qubits sit on a d x d grid, qubit ``r * d + c`` at (row r, column c).
Checks are plaquettes named by their top-left data corner (r, c) with
-1 <= r, c <= d - 1. Every check measures X on its top-left and bottom-right
corners and Z on its top-right and bottom-left corners. The (d-1)^2 bulk
plaquettes are all kept. Weight two boundary plaquettes are kept on the left
(c = -1, r odd), right (c = d-1, r even), top (r = -1, c even) and bottom
(r = d-1, c odd) edges, for d^2 - 1 checks in total. Check qubit j is qubit
d^2 + j, in (r, c) order.

Checks with r + c even are sublattice A, the others sublattice B. Both run their
legs in the temporal order X, Z, Z, X. A visits the corners top-left,
bottom-left, top-right, bottom-right; B visits top-left, top-right,
bottom-left, bottom-right. Every pair of overlapping checks then commutes at
every step, and each data qubit is touched at most once per step.

Memory experiments
------------------
H memory prepares data qubit (r, c) in |+> if r + c is even, otherwise |0>. V
memory does the opposite. A check's first round outcome is deterministic iff
its X legs land on |+> qubits and its Z legs on |0> qubits, which selects
sublattice A for H memory and B for V memory. The final transversal readout
uses the preparation bases, so the same checks get final detectors. The
logical observable is data row 1 (H) or column 0 (V), with each factor
matching its qubit's preparation basis.

The CZ-only compilation replaces each CNOT with H CZ H on the data qubit. The
inner Hadamards cancel, which leaves the data in a Hadamard frame between
rounds: preparation and readout bases are swapped, and each round has two
extra layers of Hadamards on all data qubits.
"""
import collections
import logging
import math
import re

import numpy as np

from . import noisemodel
from . import pauli
from .noisemodel import ModelCoverageError
from .pauli import PauliString

MEMORY_H = 'H'
MEMORY_V = 'V'
MEMORIES = (MEMORY_H, MEMORY_V)

CNOT_CZ = 'cnot-cz'
CZ_ONLY = 'cz-only'
COMPILATIONS = (CNOT_CZ, CZ_ONLY)

# instruction names beyond the gate kinds in pauli
NOISE_SITE = 'NOISE_SITE'
PAULI_CHANNEL_1 = 'PAULI_CHANNEL_1'
PAULI_CHANNEL_2 = 'PAULI_CHANNEL_2'
X_ERROR = 'X_ERROR'
Z_ERROR = 'Z_ERROR'
NOISE_CHANNELS = frozenset((PAULI_CHANNEL_1, PAULI_CHANNEL_2, X_ERROR, Z_ERROR))
TICK = 'TICK'
QUBIT_COORDS = 'QUBIT_COORDS'
DETECTOR = 'DETECTOR'
OBSERVABLE = 'OBSERVABLE'

# per site kind, the reset/measurement it annotates
PREP_SITES = {pauli.R0: noisemodel.PREP_Z, pauli.RPLUS: noisemodel.PREP_X}
MEAS_SITES = {pauli.MZ: noisemodel.MEAS_Z, pauli.MX: noisemodel.MEAS_X}

SUBLATTICE_A = 'A'
SUBLATTICE_B = 'B'
# corner offsets (dr, dc) and Pauli type per time slot
SCHEDULES = {
  SUBLATTICE_A: ((0, 0, 'X'), (1, 0, 'Z'), (0, 1, 'Z'), (1, 1, 'X')),
  SUBLATTICE_B: ((0, 0, 'X'), (0, 1, 'Z'), (1, 0, 'Z'), (1, 1, 'X')),
}

STATEVECTOR_MAX_QUBITS = 20

LINE_RE = re.compile(r'^([A-Z_0-9]+)(?:\(([^)]*)\))?((?:\s+\S+)*)\s*$')
REC_RE = re.compile(r'^rec\[(\d+)\]$')


class UnsupportedDistance(ValueError):
  """Raised for code distances that aren't odd and at least 3."""


class CircuitFormatError(ValueError):
  """Raised when circuit text doesn't parse."""


Instruction = collections.namedtuple('Instruction', [
  'tick', 'name', 'targets', 'args'])

# legs: tuple of four (data qubit or None, 'X' or 'Z') in time order
Check = collections.namedtuple('Check', [
  'index', 'qubit', 'corner', 'sublattice', 'legs'])


class CircuitProgram(collections.namedtuple('CircuitProgram', [
    'qubit_count', 'instructions', 'detectors', 'observables', 'coords',
    'detector_coords'])):
  """An immutable circuit with detector and observable declarations.

  Attributes:
    qubit_count: int
    instructions: tuple of :class:`Instruction`, in execution order
    detectors: tuple of tuples of absolute measurement record indices
    observables: tuple of tuples of absolute measurement record indices
    coords: dict, int qubit => (row, col)
    detector_coords: tuple of (row, col, round), parallel to detectors
  """
  __slots__ = ()

  def num_measurements(self):
    return sum(len(inst.targets) for inst in self.instructions
               if inst.name in pauli.MEASUREMENTS)

  def num_ticks(self):
    return self.instructions[-1].tick + 1 if self.instructions else 0

  def is_noise_bound(self):
    return not any(inst.name == NOISE_SITE for inst in self.instructions)

  def count(self, name):
    """Returns the number of instructions with the given name."""
    return sum(1 for inst in self.instructions if inst.name == name)

  def validate(self):
    """Checks that no qubit is acted on twice in one tick.

    Noise instructions annotate the gates they follow and don't count.

    Raises:
      ValueError
    """
    seen = set()
    tick = None
    for inst in self.instructions:
      if inst.tick != tick:
        tick = inst.tick
        seen = set()
      if inst.name in pauli.GATE_KINDS:
        for q in inst.targets:
          if q in seen:
            raise ValueError('Qubit %d used twice in tick %d' % (q, tick))
          seen.add(q)

  def to_text(self):
    """Serializes to the line-based circuit text format. See docs/formats.md."""
    lines = ['%s(%s) %d' % (QUBIT_COORDS, _format_args(self.coords[q]), q)
             for q in sorted(self.coords)]

    tick = 0
    for inst in self.instructions:
      lines.extend([TICK] * (inst.tick - tick))
      tick = inst.tick
      head = inst.name
      if inst.args:
        head += '(%s)' % _format_args(inst.args)
      lines.append(' '.join([head] + [str(t) for t in inst.targets]))

    for recs, coords in zip(self.detectors, self.detector_coords):
      lines.append(' '.join(['%s(%s)' % (DETECTOR, _format_args(coords))] +
                            ['rec[%d]' % r for r in recs]))
    for recs in self.observables:
      lines.append(' '.join([OBSERVABLE] + ['rec[%d]' % r for r in recs]))

    return '\n'.join(lines) + '\n'


def _format_args(args):
  return ', '.join(arg if isinstance(arg, str) else repr(float(arg))
                   for arg in args)


def parse(text):
  """Parses circuit text written by :meth:`CircuitProgram.to_text`.

  Returns:
    :class:`CircuitProgram`

  Raises:
    :class:`CircuitFormatError`
  """
  coords = {}
  instructions = []
  detectors = []
  detector_coords = []
  observables = []
  tick = 0
  max_qubit = -1

  for num, line in enumerate(text.splitlines(), start=1):
    line = line.split('#')[0].strip()
    if not line:
      continue

    match = LINE_RE.match(line)
    if not match:
      raise CircuitFormatError('Line %d: cannot parse %r' % (num, line))
    name, args, targets = match.groups()
    args = [a.strip() for a in args.split(',')] if args else []
    targets = targets.split()

    try:
      if name == TICK:
        tick += 1
      elif name in (DETECTOR, OBSERVABLE):
        recs = []
        for target in targets:
          rec = REC_RE.match(target)
          if not rec:
            raise CircuitFormatError('Line %d: bad record target %r' %
                                     (num, target))
          recs.append(int(rec.group(1)))
        if name == DETECTOR:
          detectors.append(tuple(recs))
          detector_coords.append(tuple(float(a) for a in args))
        else:
          observables.append(tuple(recs))
      else:
        qubits = tuple(int(t) for t in targets)
        max_qubit = max((max_qubit,) + qubits)
        if name == QUBIT_COORDS:
          coords[qubits[0]] = tuple(float(a) for a in args)
        elif name == NOISE_SITE:
          if args[0] not in noisemodel.SITE_KINDS:
            raise CircuitFormatError('Line %d: unknown site kind %r' %
                                     (num, args[0]))
          instructions.append(Instruction(tick, name, qubits, (args[0],)))
        elif name in pauli.GATE_KINDS or name in NOISE_CHANNELS:
          instructions.append(Instruction(
            tick, name, qubits, tuple(float(a) for a in args)))
        else:
          raise CircuitFormatError('Line %d: unknown instruction %s' %
                                   (num, name))
    except (ValueError, IndexError) as e:
      if isinstance(e, CircuitFormatError):
        raise
      raise CircuitFormatError('Line %d: %s' % (num, e))

  circuit = CircuitProgram(max_qubit + 1, tuple(instructions),
                           tuple(detectors), tuple(observables), coords,
                           tuple(detector_coords))
  num_measurements = circuit.num_measurements()
  for recs in detectors + observables:
    for rec in recs:
      if rec >= num_measurements:
        raise CircuitFormatError('Record index %d out of range, only %d '
                                 'measurements' % (rec, num_measurements))

  return circuit


def _check_distance(d):
  if not isinstance(d, int) or d < 3 or d % 2 == 0:
    raise UnsupportedDistance('Distance must be an odd integer >= 3, got %r' % d)


def data_qubit(d, r, c):
  return r * d + c


def checks(d):
  """Returns the list of :class:`Check` for distance d, in qubit order."""
  _check_distance(d)

  corners = [(r, c) for r in range(d - 1) for c in range(d - 1)]
  corners += [(r, -1) for r in range(1, d - 1, 2)]
  corners += [(r, d - 1) for r in range(0, d - 1, 2)]
  corners += [(-1, c) for c in range(0, d - 1, 2)]
  corners += [(d - 1, c) for c in range(1, d - 1, 2)]

  result = []
  for index, (r, c) in enumerate(sorted(corners)):
    sublattice = SUBLATTICE_A if (r + c) % 2 == 0 else SUBLATTICE_B
    legs = []
    for dr, dc, kind in SCHEDULES[sublattice]:
      row, col = r + dr, c + dc
      on_grid = 0 <= row < d and 0 <= col < d
      legs.append((data_qubit(d, row, col) if on_grid else None, kind))
    result.append(Check(index, d * d + index, (r, c), sublattice, tuple(legs)))

  return result


def check_stabilizers(d):
  """Returns each check's XZZX stabilizer as a :class:`PauliString` on the data."""
  stabilizers = []
  for check in checks(d):
    p = PauliString(d * d)
    for q, kind in check.legs:
      if q is not None:
        p = p * PauliString.single(d * d, q, kind)
    stabilizers.append(p)
  return stabilizers


def _starts_plus(d, memory, q):
  """Returns True if data qubit q is prepared in |+> (logically)."""
  r, c = divmod(q, d)
  even = (r + c) % 2 == 0
  return even if memory == MEMORY_H else not even


def logical_operator(d, memory):
  """Returns the logical observable as a :class:`PauliString` on the data.

  Row 1 for H memory, column 0 for V memory. Each factor is X on qubits
  prepared in |+> and Z on qubits prepared in |0>.
  """
  _check_distance(d)
  if memory not in MEMORIES:
    raise ValueError('Unknown memory %r' % memory)

  if memory == MEMORY_H:
    qubits = [data_qubit(d, 1, c) for c in range(d)]
  else:
    qubits = [data_qubit(d, r, 0) for r in range(d)]

  p = PauliString(d * d)
  for q in qubits:
    p = p * PauliString.single(d * d, q, 'X' if _starts_plus(d, memory, q)
                               else 'Z')
  return p


def deterministic_checks(d, memory):
  """Returns the checks whose first round outcome is fixed by the preparation."""
  return [check for check in checks(d)
          if all(_starts_plus(d, memory, q) == (kind == 'X')
                 for q, kind in check.legs if q is not None)]


class _Builder(object):
  """Accumulates instructions tick by tick."""

  def __init__(self):
    self.tick = 0
    self.instructions = []
    self.num_measurements = 0

  def next_tick(self):
    self.tick += 1

  def append(self, name, targets, args=()):
    if targets:
      self.instructions.append(Instruction(self.tick, name, tuple(targets),
                                           tuple(args)))

  def gate(self, name, targets, site):
    self.append(name, targets)
    self.append(NOISE_SITE, targets, (site,))

  def reset(self, name, qubits):
    self.append(name, qubits)
    self.append(NOISE_SITE, qubits, (PREP_SITES[name],))

  def measure(self, name, qubits):
    """Returns a dict mapping each measured qubit to its record index."""
    self.append(NOISE_SITE, qubits, (MEAS_SITES[name],))
    self.append(name, qubits)
    recs = {}
    for q in qubits:
      recs[q] = self.num_measurements
      self.num_measurements += 1
    return recs


def build_xzzx_memory(d, memory=MEMORY_H, rounds=None, compilation=CNOT_CZ):
  """Builds a rotated XZZX memory experiment with noise site markers.

  Args:
    d: odd int >= 3, code distance
    memory: :data:`MEMORY_H` or :data:`MEMORY_V`
    rounds: int >= 1, number of syndrome extraction rounds. Defaults to 3d.
    compilation: :data:`CNOT_CZ` or :data:`CZ_ONLY`

  Returns:
    :class:`CircuitProgram` with NOISE_SITE markers, see :func:`attach_noise`

  Raises:
    :class:`UnsupportedDistance`, ValueError
  """
  _check_distance(d)
  if rounds is None:
    rounds = 3 * d
  if rounds < 1:
    raise ValueError('rounds must be >= 1, got %r' % rounds)
  if memory not in MEMORIES:
    raise ValueError('Unknown memory %r, expected one of %s' %
                     (memory, MEMORIES))
  if compilation not in COMPILATIONS:
    raise ValueError('Unknown compilation %r, expected one of %s' %
                     (compilation, COMPILATIONS))

  all_checks = checks(d)
  data = list(range(d * d))
  check_qubits = [check.qubit for check in all_checks]
  cz_only = compilation == CZ_ONLY

  # physical preparation and readout bases, swapped in the CZ-only Hadamard frame
  plus = [q for q in data if _starts_plus(d, memory, q) != cz_only]
  zero = [q for q in data if _starts_plus(d, memory, q) == cz_only]

  b = _Builder()
  check_recs = []
  for k in range(rounds):
    if k > 0:
      b.next_tick()
    b.reset(pauli.R0, check_qubits)
    if k == 0:
      b.reset(pauli.R0, zero)
      b.reset(pauli.RPLUS, plus)

    b.next_tick()
    b.gate(pauli.H, check_qubits, noisemodel.H)

    for slot in range(4):
      b.next_tick()
      pairs = []
      for check in all_checks:
        q, kind = check.legs[slot]
        if q is not None:
          pairs.extend((check.qubit, q))
      kind = all_checks[0].legs[slot][1]
      if kind == 'Z' or cz_only:
        b.gate(pauli.CZ, pairs, noisemodel.CZ)
      else:
        b.gate(pauli.CNOT, pairs, noisemodel.CNOT)
      if cz_only and slot in (0, 2):
        b.next_tick()
        b.gate(pauli.H, data, noisemodel.H)

    b.next_tick()
    b.gate(pauli.H, check_qubits, noisemodel.H)

    b.next_tick()
    check_recs.append(b.measure(pauli.MZ, check_qubits))
    if k == rounds - 1:
      data_recs = b.measure(pauli.MZ, zero)
      data_recs.update(b.measure(pauli.MX, plus))

  detectors = []
  detector_coords = []

  def detector(recs, check, k):
    r, c = check.corner
    detectors.append(tuple(sorted(recs)))
    detector_coords.append((r + .5, c + .5, k))

  deterministic = set(check.index for check in deterministic_checks(d, memory))
  for check in all_checks:
    if check.index in deterministic:
      detector([check_recs[0][check.qubit]], check, 0)
  for k in range(1, rounds):
    for check in all_checks:
      detector([check_recs[k - 1][check.qubit],
                check_recs[k][check.qubit]], check, k)
  for check in all_checks:
    if check.index in deterministic:
      detector([check_recs[-1][check.qubit]] +
               [data_recs[q] for q, _ in check.legs if q is not None],
               check, rounds)

  observable = tuple(sorted(data_recs[q] for q in
                            logical_operator(d, memory).support()))

  coords = {data_qubit(d, r, c): (r, c) for r in range(d) for c in range(d)}
  coords.update({check.qubit: (check.corner[0] + .5, check.corner[1] + .5)
                 for check in all_checks})

  circuit = CircuitProgram(2 * d * d - 1, tuple(b.instructions),
                           tuple(detectors), (observable,), coords,
                           tuple(detector_coords))
  logging.info('Built d=%d %s memory, %d rounds, %s: %d qubits, %d detectors',
               d, memory, rounds, compilation, circuit.qubit_count,
               len(detectors))
  return circuit


def _channel_instruction(tick, site, targets, channel):
  """Converts a bound site into a noise channel instruction, or None."""
  if channel.is_identity():
    return None
  if site in (noisemodel.PREP_Z, noisemodel.MEAS_Z):
    return Instruction(tick, X_ERROR, targets, (channel.probs[1],))
  elif site in (noisemodel.PREP_X, noisemodel.MEAS_X):
    return Instruction(tick, Z_ERROR, targets, (channel.probs[3],))
  name = PAULI_CHANNEL_2 if channel.n == 2 else PAULI_CHANNEL_1
  return Instruction(tick, name, targets, tuple(channel.probs[1:]))


def attach_noise(circuit, spec):
  """Binds every noise site to its channel and adds idle noise.

  Each NOISE_SITE marker becomes a PAULI_CHANNEL_1, PAULI_CHANNEL_2, X_ERROR or
  Z_ERROR instruction. Every qubit that no gate, reset or measurement touches
  in a tick gets an idle channel at the end of that tick. Identity channels
  are dropped.

  Args:
    circuit: :class:`CircuitProgram`
    spec: :class:`noisemodel.NoiseSpec`

  Returns:
    :class:`CircuitProgram`

  Raises:
    :class:`ModelCoverageError` for unknown site kinds
  """
  channels = {}

  def channel(site):
    if site not in channels:
      channels[site] = noisemodel.channel_for_site(spec, site)
    return channels[site]

  out = []
  ticks = collections.OrderedDict()
  for inst in circuit.instructions:
    ticks.setdefault(inst.tick, []).append(inst)

  for tick, insts in ticks.items():
    busy = set()
    for inst in insts:
      if inst.name == NOISE_SITE:
        site = inst.args[0]
        if site not in noisemodel.SITE_KINDS:
          raise ModelCoverageError('No channel for site kind %r' % site)
        bound = _channel_instruction(tick, site, inst.targets, channel(site))
        if bound:
          out.append(bound)
      else:
        out.append(inst)
        if inst.name in pauli.GATE_KINDS:
          busy.update(inst.targets)

    idle = [q for q in range(circuit.qubit_count) if q not in busy]
    if idle:
      bound = _channel_instruction(tick, noisemodel.IDLE, tuple(idle),
                                   channel(noisemodel.IDLE))
      if bound:
        out.append(bound)

  return circuit._replace(instructions=tuple(out))


def statevector_records(circuit, shots, seed=0):
  """Runs a circuit noiselessly on a dense state vector.

  Noise markers and channels are ignored. Only for small circuits, as a
  reference for the frame sampler.

  Returns:
    numpy uint8 array, shots x num_measurements
  """
  n = circuit.qubit_count
  if n > STATEVECTOR_MAX_QUBITS:
    raise ValueError('State vector simulation needs <= %d qubits, got %d' %
                     (STATEVECTOR_MAX_QUBITS, n))

  rng = np.random.Generator(np.random.Philox(seed))
  hadamard = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
  records = np.zeros((shots, circuit.num_measurements()), dtype=np.uint8)

  def index(*fixed):
    sl = [slice(None)] * n
    for q, v in fixed:
      sl[q] = v
    return tuple(sl)

  def apply_h(psi, q):
    return np.moveaxis(np.tensordot(hadamard, psi, axes=([1], [q])), 0, q)

  def measure(psi, q):
    ones = psi[index((q, 1))]
    p1 = float(np.sum(np.abs(ones) ** 2))
    bit = int(rng.random() < p1)
    psi[index((q, 1 - bit))] = 0
    return psi / math.sqrt(p1 if bit else 1 - p1), bit

  for shot in range(shots):
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1
    rec = 0
    for inst in circuit.instructions:
      name, targets = inst.name, inst.targets
      if name == pauli.H:
        for q in targets:
          psi = apply_h(psi, q)
      elif name == pauli.X:
        for q in targets:
          psi = np.flip(psi, axis=q)
      elif name == pauli.Z:
        for q in targets:
          psi[index((q, 1))] *= -1
      elif name == pauli.CNOT:
        for c, t in zip(targets[::2], targets[1::2]):
          axis = t if t < c else t - 1
          psi[index((c, 1))] = np.flip(psi[index((c, 1))], axis=axis).copy()
      elif name == pauli.CZ:
        for a, b in zip(targets[::2], targets[1::2]):
          psi[index((a, 1), (b, 1))] *= -1
      elif name in pauli.RESETS:
        for q in targets:
          psi, bit = measure(psi, q)
          if bit:
            psi = np.flip(psi, axis=q)
          if name == pauli.RPLUS:
            psi = apply_h(psi, q)
      elif name in pauli.MEASUREMENTS:
        for q in targets:
          if name == pauli.MX:
            psi = apply_h(psi, q)
          psi, records[shot, rec] = measure(psi, q)
          rec += 1
          if name == pauli.MX:
            psi = apply_h(psi, q)

  return records


def statevector_detector_parities(circuit, shots, seed=0):
  """Evaluates the declared detectors and observables on state vector runs.

  Returns:
    (detector bits, observable bits) tuple of numpy uint8 arrays, shots x
    num_detectors and shots x num_observables
  """
  records = statevector_records(circuit, shots, seed=seed)

  def parities(groups):
    out = np.zeros((shots, len(groups)), dtype=np.uint8)
    for i, recs in enumerate(groups):
      out[:, i] = np.bitwise_xor.reduce(records[:, list(recs)], axis=1)
    return out

  return parities(circuit.detectors), parities(circuit.observables)
