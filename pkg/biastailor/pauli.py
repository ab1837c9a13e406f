"""Pauli strings and the Clifford conjugation rules for the circuit gate set.

Paulis are tracked as a pair of X/Z bit masks, without phases. That's all frame
propagation needs: detector and observable flips only depend on which qubits
carry an X and/or Z component.

Text rendering is sparse, e.g. ``X0*Z3*Y5``, or ``I`` for the identity.
"""
import collections
import itertools
import re

# gate kinds. these double as the instruction names in the circuit text format.
H = 'H'
CNOT = 'CNOT'
CZ = 'CZ'
X = 'X'
Z = 'Z'
R0 = 'R'
RPLUS = 'RX'
MZ = 'M'
MX = 'MX'
IDLE = 'IDLE'

TWO_QUBIT_GATES = frozenset((CNOT, CZ))
UNITARY_GATES = frozenset((H, CNOT, CZ, X, Z, IDLE))
RESETS = frozenset((R0, RPLUS))
MEASUREMENTS = frozenset((MZ, MX))
GATE_KINDS = UNITARY_GATES | RESETS | MEASUREMENTS

# single qubit Paulis in lexicographic order, as (x bit, z bit)
LETTERS = 'IXYZ'
LETTER_TO_BITS = {'I': (0, 0), 'X': (1, 0), 'Y': (1, 1), 'Z': (0, 1)}
BITS_TO_LETTER = {bits: letter for letter, bits in LETTER_TO_BITS.items()}

SPARSE_RE = re.compile(r'^([XYZ])(\d+)$')


class DimensionError(ValueError):
  """Raised when operands act on different numbers of qubits."""


class UnsupportedGate(ValueError):
  """Raised for gates that conjugation doesn't cover, eg resets and measurements."""


Gate = collections.namedtuple('Gate', ['kind', 'targets'])


def gate(kind, *targets):
  """Creates and validates a :class:`Gate`.

  Args:
    kind: string, one of :data:`GATE_KINDS`
    targets: int qubit indices. Two distinct ones for CNOT (control, target)
      and CZ, one for everything else.

  Returns:
    :class:`Gate`
  """
  if kind not in GATE_KINDS:
    raise UnsupportedGate('Unknown gate kind %r' % kind)

  want = 2 if kind in TWO_QUBIT_GATES else 1
  if len(targets) != want:
    raise ValueError('%s takes %d target(s), got %r' % (kind, want, targets))
  if want == 2 and targets[0] == targets[1]:
    raise ValueError('%s targets must be distinct, got %r' % (kind, targets))
  if any(t < 0 for t in targets):
    raise ValueError('Negative qubit index in %r' % (targets,))

  return Gate(kind, tuple(targets))


class PauliString(collections.namedtuple('PauliString',
                                          ['n', 'x_mask', 'z_mask'])):
  """An n-qubit Pauli operator, up to phase.

  Qubit q carries X iff bit q of x_mask is set, Z iff bit q of z_mask is set,
  and Y iff both are. Immutable.

  Attributes:
    n: int, number of qubits
    x_mask: int
    z_mask: int
  """
  __slots__ = ()

  def __new__(cls, n, x_mask=0, z_mask=0):
    if n < 0:
      raise DimensionError('Qubit count must be nonnegative, got %d' % n)
    limit = 1 << n
    if not (0 <= x_mask < limit and 0 <= z_mask < limit):
      raise DimensionError('Masks %x/%x have bits beyond %d qubits' %
                           (x_mask, z_mask, n))
    return super(PauliString, cls).__new__(cls, n, x_mask, z_mask)

  @classmethod
  def from_label(cls, label):
    """Parses a dense label like ``'XIZY'``. Character q is qubit q."""
    x_mask = z_mask = 0
    for q, letter in enumerate(label.upper()):
      if letter not in LETTER_TO_BITS:
        raise ValueError('Bad Pauli letter %r in %r' % (letter, label))
      x, z = LETTER_TO_BITS[letter]
      x_mask |= x << q
      z_mask |= z << q
    return cls(len(label), x_mask, z_mask)

  @classmethod
  def from_text(cls, text, n):
    """Parses the sparse rendering, eg ``'X0*Z3*Y5'``, onto n qubits."""
    x_mask = z_mask = 0
    if text.strip() not in ('', 'I'):
      for factor in text.split('*'):
        match = SPARSE_RE.match(factor.strip())
        if not match:
          raise ValueError('Bad Pauli factor %r in %r' % (factor, text))
        letter, q = match.group(1), int(match.group(2))
        if q >= n:
          raise DimensionError('Qubit %d out of range for %d qubits' % (q, n))
        x, z = LETTER_TO_BITS[letter]
        x_mask ^= x << q
        z_mask ^= z << q
    return cls(n, x_mask, z_mask)

  @classmethod
  def single(cls, n, q, letter):
    """Returns the weight-one Pauli ``letter`` on qubit q."""
    x, z = LETTER_TO_BITS[letter]
    return cls(n, x << q, z << q)

  @classmethod
  def from_index(cls, index, n):
    """Inverse of :meth:`index`."""
    if not 0 <= index < 4 ** n:
      raise DimensionError('Index %d out of range for %d qubits' % (index, n))
    label = []
    for _ in range(n):
      index, code = divmod(index, 4)
      label.append(LETTERS[code])
    return cls.from_label(''.join(reversed(label)))

  def index(self):
    """Position in the lexicographic basis {I,X,Y,Z}^n, qubit 0 most significant."""
    index = 0
    for letter in self.label():
      index = index * 4 + LETTERS.index(letter)
    return index

  def letter(self, q):
    return BITS_TO_LETTER[((self.x_mask >> q) & 1, (self.z_mask >> q) & 1)]

  def label(self):
    return ''.join(self.letter(q) for q in range(self.n))

  def support(self):
    """Returns the sorted list of qubits with a non-identity factor."""
    mask = self.x_mask | self.z_mask
    return [q for q in range(self.n) if mask >> q & 1]

  def weight(self):
    return bin(self.x_mask | self.z_mask).count('1')

  def is_identity(self):
    return not (self.x_mask or self.z_mask)

  def is_z_type(self):
    """True for non-identity Paulis built only from Z factors."""
    return not self.x_mask and bool(self.z_mask)

  def __mul__(self, other):
    _check_sizes(self, other)
    return PauliString(self.n, self.x_mask ^ other.x_mask,
                       self.z_mask ^ other.z_mask)

  def __str__(self):
    factors = ['%s%d' % (self.letter(q), q) for q in self.support()]
    return '*'.join(factors) or 'I'

  def __repr__(self):
    return 'PauliString(%d, %r)' % (self.n, str(self))


def _check_sizes(a, b):
  if a.n != b.n:
    raise DimensionError('Pauli sizes differ: %d vs %d' % (a.n, b.n))


def commutes(a, b):
  """Returns True iff a and b commute, ie their symplectic product is even."""
  _check_sizes(a, b)
  product = (a.x_mask & b.z_mask) ^ (a.z_mask & b.x_mask)
  return bin(product).count('1') % 2 == 0


def all_paulis(n):
  """Yields every n-qubit Pauli in lexicographic order, identity first."""
  for letters in itertools.product(LETTERS, repeat=n):
    yield PauliString.from_label(''.join(letters))


def conjugate_frame(kind, targets, xs, zs):
  """Conjugates a Pauli frame in place by a layer of identical gates.

  xs and zs are indexed by qubit and hold anything that supports ``^=``: ints
  for a single Pauli, numpy rows of packed lanes for a batch of shots. Two
  qubit gates take their targets as consecutive pairs.

  Args:
    kind: string gate kind
    targets: sequence of int qubit indices
    xs: mutable sequence of X components, indexed by qubit
    zs: mutable sequence of Z components, indexed by qubit
  """
  if kind not in UNITARY_GATES:
    raise UnsupportedGate("Can't conjugate by non-unitary %s" % kind)

  if kind == H:
    for q in targets:
      xs[q] ^= zs[q]
      zs[q] ^= xs[q]
      xs[q] ^= zs[q]
  elif kind == CNOT:
    for c, t in zip(targets[::2], targets[1::2]):
      xs[t] ^= xs[c]
      zs[c] ^= zs[t]
  elif kind == CZ:
    for a, b in zip(targets[::2], targets[1::2]):
      zs[a] ^= xs[b]
      zs[b] ^= xs[a]
  # X, Z and IDLE only change signs


def conjugate(g, p):
  """Returns g p g^dagger, dropping the sign.

  Args:
    g: :class:`Gate`
    p: :class:`PauliString`

  Returns:
    :class:`PauliString`
  """
  if g.kind not in UNITARY_GATES:
    raise UnsupportedGate("Can't conjugate by non-unitary %s" % g.kind)
  if any(t >= p.n for t in g.targets):
    raise DimensionError('Gate %s%r out of range for %d qubits' %
                         (g.kind, g.targets, p.n))

  xs = [(p.x_mask >> q) & 1 for q in range(p.n)]
  zs = [(p.z_mask >> q) & 1 for q in range(p.n)]
  conjugate_frame(g.kind, g.targets, xs, zs)
  return PauliString(p.n,
                     sum(bit << q for q, bit in enumerate(xs)),
                     sum(bit << q for q, bit in enumerate(zs)))
