"""Characterizes noisy gates with the Lindblad master equation.

Each gate is a time-independent Hamiltonian that realizes the ideal gate at
VT = pi/2 (V = 1, hbar = 1), evolved under Pauli jump operators whose rates
are split into a dephasing (Z-type) class and everything else. The pipeline:

1. build the Liouvillian superoperator
2. exponentiate it to get the noisy channel, and the dissipator-free one for
   the ideal gate
3. convert both to Pauli transfer matrices
4. R_noise = R_noisy R_ideal^-1
5. Walsh-Hadamard transform the diagonal of R_noise into Pauli error
   probabilities, then compute the residual bias.

Superoperators act on column-stacked density matrices:
vec(A rho B) = (B^T kron A) vec(rho).
"""
import collections
from concurrent import futures
import logging
import math

import numpy as np
import scipy.linalg

from . import pauli
from .pauli import DimensionError, PauliString

DEFAULT_LAMBDA = 0.002
GATE_TIME = math.pi / 2
TRACE_TOLERANCE = 1e-9
NEGATIVE_PROB_TOLERANCE = 1e-6
# inversions with a condition number beyond this are treated as singular
MAX_CONDITION = 1e12
# default eta_sys grid for residual bias tables, 10^0 ... 10^4 in quarter decades
ETA_GRID = tuple(float(10 ** (k / 4)) for k in range(17))

PAULI_MATRICES = {
  'I': np.eye(2, dtype=complex),
  'X': np.array([[0, 1], [1, 0]], dtype=complex),
  'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
  'Z': np.array([[1, 0], [0, -1]], dtype=complex),
}

# maps upper case gate name to GateModel subclass. populated by GateModelMeta.
gates = {}

HamiltonianSpec = collections.namedtuple('HamiltonianSpec', [
  'n', 'terms', 'evolution_time'])
DissipatorSpec = collections.namedtuple('DissipatorSpec', ['jumps'])
ChannelPTM = collections.namedtuple('ChannelPTM', ['n', 'R'])
GateNoiseProfile = collections.namedtuple('GateNoiseProfile', [
  'gate', 'eta_sys', 'n', 'pauli_probs', 'residual_bias',
  'process_infidelity', 'offdiag_max'])


class NumericalOverflow(ArithmeticError):
  """Raised when a superoperator exponential has non-finite entries."""


class InversionError(ValueError):
  """Raised when the ideal gate's transfer matrix can't be inverted."""


class NonPauliChannel(ValueError):
  """Raised when the transformed fidelities give clearly negative probabilities.

  That means the diagonal of the noise transfer matrix doesn't describe a
  Pauli channel, ie the twirling assumption is violated.
  """


def pauli_matrix(p):
  """Returns the dense 2^n x 2^n matrix of a :class:`PauliString`.

  Qubit 0 is the leftmost tensor factor.
  """
  matrix = np.eye(1, dtype=complex)
  for letter in p.label():
    matrix = np.kron(matrix, PAULI_MATRICES[letter])
  return matrix


def hamiltonian_matrix(h):
  """Returns the dense matrix of a :class:`HamiltonianSpec`."""
  matrix = np.zeros((2 ** h.n, 2 ** h.n), dtype=complex)
  for p, coeff in h.terms:
    if p.n != h.n:
      raise DimensionError('Hamiltonian term %s acts on %d qubits, expected %d' %
                           (p, p.n, h.n))
    if not math.isfinite(coeff):
      raise ValueError('Non-finite coefficient %r for %s' % (coeff, p))
    matrix += coeff * pauli_matrix(p)
  return matrix


def build_liouvillian(h, d):
  """Builds the Lindblad generator for a Hamiltonian and Pauli dissipators.

  Implements drho/dt = -i[H, rho] + sum_i lambda_i (L rho L^+ - 1/2 {L^+ L, rho})
  in the general form, even though L^+ L = I for Pauli jumps.

  Args:
    h: :class:`HamiltonianSpec`
    d: :class:`DissipatorSpec`

  Returns:
    complex numpy array, 4^n x 4^n
  """
  dim = 2 ** h.n
  eye = np.eye(dim, dtype=complex)
  H = hamiltonian_matrix(h)
  L = -1j * (np.kron(eye, H) - np.kron(H.T, eye))

  for jump, rate in d.jumps:
    if jump.n != h.n:
      raise DimensionError('Jump operator %s acts on %d qubits, expected %d' %
                           (jump, jump.n, h.n))
    if rate < 0:
      raise ValueError('Negative coupling rate %r for %s' % (rate, jump))
    if rate == 0:
      continue
    op = pauli_matrix(jump)
    op_dag_op = op.conj().T @ op
    L += rate * (np.kron(op.conj(), op)
                 - 0.5 * np.kron(eye, op_dag_op)
                 - 0.5 * np.kron(op_dag_op.T, eye))

  return L


def evolve_channel(liouvillian, t):
  """Returns the channel superoperator exp(L t).

  Uses scipy's scaling and squaring Pade approximant.
  """
  if t < 0:
    raise ValueError('Evolution time must be nonnegative, got %r' % t)
  channel = scipy.linalg.expm(liouvillian * t)
  if not np.all(np.isfinite(channel)):
    raise NumericalOverflow('exp(L t) overflowed at t=%r' % t)
  return channel


def pauli_basis_vectors(n):
  """Returns a 4^n x 4^n matrix whose column j is vec(P_j)."""
  return np.stack([pauli_matrix(p).reshape(-1, order='F')
                   for p in pauli.all_paulis(n)], axis=1)


def compute_ptm(channel, n):
  """Converts a channel superoperator to its Pauli transfer matrix.

  R_ij = Tr[P_i channel(P_j)] / 2^n over the lexicographic Pauli basis.

  Returns:
    :class:`ChannelPTM`
  """
  if channel.shape != (4 ** n, 4 ** n):
    raise DimensionError('Superoperator shape %s does not act on %d qubits' %
                         (channel.shape, n))
  basis = pauli_basis_vectors(n)
  R = (basis.conj().T @ channel @ basis).real / 2 ** n
  return ChannelPTM(n, R)


def isolate_noise(ptm_noisy, ptm_ideal):
  """Strips the ideal gate off a noisy gate: R_noise = R_noisy R_ideal^-1.

  Returns:
    :class:`ChannelPTM`
  """
  if ptm_noisy.n != ptm_ideal.n or ptm_noisy.R.shape != ptm_ideal.R.shape:
    raise DimensionError('PTM sizes differ: %s vs %s' %
                         (ptm_noisy.R.shape, ptm_ideal.R.shape))

  cond = np.linalg.cond(ptm_ideal.R)
  logging.debug('Ideal PTM condition number %.3g', cond)
  if not np.isfinite(cond) or cond > MAX_CONDITION:
    raise InversionError('Ideal PTM is singular (condition number %.3g)' % cond)

  try:
    inverse = np.linalg.inv(ptm_ideal.R)
  except np.linalg.LinAlgError as e:
    raise InversionError('Ideal PTM is singular: %s' % e)

  return ChannelPTM(ptm_noisy.n, ptm_noisy.R @ inverse)


def commutation_matrix(n):
  """Returns the 4^n x 4^n matrix s(k, j) = +1 if P_k, P_j commute, else -1."""
  paulis = list(pauli.all_paulis(n))
  return np.array([[1 if pauli.commutes(a, b) else -1 for b in paulis]
                   for a in paulis], dtype=float)


def ptm_to_pauli_probs(noise_ptm):
  """Converts a noise PTM's diagonal (Pauli fidelities) into error probabilities.

  Solves d_j = sum_k p_k s(k, j) with the symplectic Walsh-Hadamard transform,
  p = S d / 4^n. Off-diagonal entries are ignored, ie the channel is twirled.

  Returns:
    numpy float array of length 4^n, index 0 is the identity
  """
  n = noise_ptm.n
  R = noise_ptm.R
  offdiag = np.abs(R - np.diag(np.diag(R))).max() if R.size > 1 else 0.0
  logging.debug('Discarding PTM off-diagonal entries up to %.3g', offdiag)

  probs = commutation_matrix(n) @ np.diag(R) / 4 ** n
  if probs.min() < -NEGATIVE_PROB_TOLERANCE:
    raise NonPauliChannel('Negative Pauli probability %.3g at %s' % (
      probs.min(), PauliString.from_index(int(probs.argmin()), n)))

  probs = np.clip(probs, 0, None)
  return probs / probs.sum()


def bias_of(probs, n):
  """Returns the dephasing bias of a Pauli probability vector.

  That's the Z-type error mass (pure Z factors, eg ZI, IZ, ZZ) over everything
  else that isn't the identity: p_z / (p_x + p_y) for one qubit.
  """
  z_mass = other = 0.0
  for p, prob in zip(pauli.all_paulis(n), probs):
    if p.is_identity():
      continue
    elif p.is_z_type():
      z_mass += prob
    else:
      other += prob
  return z_mass / other if other > 0 else math.inf


class GateModelMeta(type):
  """GateModel metaclass. Registers all gate classes in the gates global."""
  def __new__(meta, name, bases, class_dict):
    cls = type.__new__(meta, name, bases, class_dict)
    name = getattr(cls, 'NAME', None)
    if name:
      gates[name.upper()] = cls
    return cls


class GateModel(object, metaclass=GateModelMeta):
  """Abstract base class for a gate realized by a Hamiltonian interaction.

  Concrete subclasses must override the class constants below and implement
  :meth:`hamiltonian()`.

  Class constants:

  * NAME: string, the gate's name, eg 'CNOT'
  * N: int, number of qubits
  """
  NAME = None
  N = None

  @classmethod
  def hamiltonian(cls):
    """Returns the :class:`HamiltonianSpec` that realizes this gate at VT = pi/2."""
    raise NotImplementedError()

  @classmethod
  def dissipators(cls, eta_sys, lambda_biased_total=DEFAULT_LAMBDA):
    """Returns the :class:`DissipatorSpec` for a system bias.

    The Z-type jumps share lambda_biased_total equally. The remaining jumps
    share lambda_biased_total / eta_sys equally, so the combined Z-type rate is
    eta_sys times the rest. eta_sys may be math.inf, which turns the rest off.
    """
    if not eta_sys > 0:
      raise ValueError('eta_sys must be positive, got %r' % eta_sys)
    if not lambda_biased_total > 0:
      raise ValueError('lambda_biased_total must be positive, got %r' %
                       lambda_biased_total)

    jumps = [p for p in pauli.all_paulis(cls.N) if not p.is_identity()]
    z_type = [p for p in jumps if p.is_z_type()]
    rest = [p for p in jumps if not p.is_z_type()]
    rest_total = lambda_biased_total / eta_sys

    return DissipatorSpec(
      [(p, lambda_biased_total / len(z_type)) for p in z_type] +
      [(p, rest_total / len(rest)) for p in rest])

  @classmethod
  def ideal_hamiltonian(cls):
    return cls.hamiltonian()


def _terms(**coeffs):
  return [(PauliString.from_label(label), coeff)
          for label, coeff in sorted(coeffs.items())]


class Cnot(GateModel):
  """H = V [(I+Z)/2 kron I + (I-Z)/2 kron X]; CNOT at VT = pi/2 up to phase."""
  NAME = 'CNOT'
  N = 2

  @classmethod
  def hamiltonian(cls):
    return HamiltonianSpec(2, _terms(II=.5, ZI=.5, IX=.5, ZX=-.5), GATE_TIME)


class Cy(GateModel):
  """Like :class:`Cnot` with Y on the target."""
  NAME = 'CY'
  N = 2

  @classmethod
  def hamiltonian(cls):
    return HamiltonianSpec(2, _terms(II=.5, ZI=.5, IY=.5, ZY=-.5), GATE_TIME)


class Cz(GateModel):
  """Like :class:`Cnot` with Z on the target.

  Equal to the -ZZ interaction plus simultaneous local Z rotations, up to a
  global phase, so it commutes with every Z-type jump.
  """
  NAME = 'CZ'
  N = 2

  @classmethod
  def hamiltonian(cls):
    return HamiltonianSpec(2, _terms(II=.5, ZI=.5, IZ=.5, ZZ=-.5), GATE_TIME)


class Hadamard(GateModel):
  """H = V (X+Z)/sqrt(2); Hadamard at VT = pi/2 up to phase.

  Dissipators: lambda_Z = lambda_biased_total, lambda_X = lambda_Y =
  lambda_biased_total / (2 eta_sys).
  """
  NAME = 'HADAMARD'
  N = 1

  @classmethod
  def hamiltonian(cls):
    return HamiltonianSpec(1, _terms(X=math.sqrt(.5), Z=math.sqrt(.5)),
                           GATE_TIME)


def gate_model(name):
  """Looks up a :class:`GateModel` subclass by name, case insensitive."""
  cls = gates.get(name.upper())
  if not cls:
    raise ValueError('Unknown gate %r, expected one of %s' %
                     (name, sorted(gates)))
  return cls


def characterize_gate(gate, eta_sys, lambda_biased_total=DEFAULT_LAMBDA):
  """Runs the full Lindblad characterization pipeline for one gate.

  Args:
    gate: string gate name, eg 'CNOT', or a :class:`GateModel` subclass
    eta_sys: positive float system bias. math.inf means Z-type jumps only.
    lambda_biased_total: float, combined rate of the Z-type jumps

  Returns:
    :class:`GateNoiseProfile`
  """
  model = gate_model(gate) if isinstance(gate, str) else gate
  h = model.hamiltonian()

  noisy = evolve_channel(
    build_liouvillian(h, model.dissipators(eta_sys, lambda_biased_total)),
    h.evolution_time)
  ideal = evolve_channel(build_liouvillian(h, DissipatorSpec([])),
                         h.evolution_time)

  ptm_noisy = compute_ptm(noisy, h.n)
  if abs(ptm_noisy.R[0][0] - 1) > TRACE_TOLERANCE:
    raise NumericalOverflow('Channel is not trace preserving: R00 = %r' %
                            ptm_noisy.R[0][0])

  noise = isolate_noise(ptm_noisy, compute_ptm(ideal, h.n))
  R = noise.R
  offdiag = float(np.abs(R - np.diag(np.diag(R))).max())
  probs = ptm_to_pauli_probs(noise)

  profile = GateNoiseProfile(
    gate=model.NAME, eta_sys=eta_sys, n=h.n, pauli_probs=probs,
    residual_bias=bias_of(probs, h.n), process_infidelity=1 - probs[0],
    offdiag_max=offdiag)
  logging.debug('%s at eta_sys=%g: residual bias %.4g, infidelity %.4g',
                model.NAME, eta_sys, profile.residual_bias,
                profile.process_infidelity)
  return profile


def characterize_sweep(gate, etas, lambda_biased_total=DEFAULT_LAMBDA,
                       workers=1):
  """Characterizes a gate over several system biases, optionally in parallel.

  Returns:
    list of :class:`GateNoiseProfile`, in the same order as etas
  """
  etas = list(etas)
  if workers <= 1:
    return [characterize_gate(gate, eta, lambda_biased_total) for eta in etas]

  with futures.ProcessPoolExecutor(max_workers=workers) as executor:
    return list(executor.map(characterize_gate, [gate] * len(etas), etas,
                             [lambda_biased_total] * len(etas)))


def is_bias_preserving(profile, rtol=0.1):
  """Returns True if a gate's residual bias matches its system bias.

  That's the bias-preserving property: the noisy gate is the ideal gate
  followed by a Pauli channel with the system's bias.
  """
  if math.isinf(profile.eta_sys):
    return math.isinf(profile.residual_bias)
  return abs(profile.residual_bias - profile.eta_sys) <= rtol * profile.eta_sys


def sample_trajectories(gate, eta_sys, shots, seed=0,
                        lambda_biased_total=DEFAULT_LAMBDA):
  """Estimates twirled Pauli error probabilities with quantum jump trajectories.

  Pauli jumps have L^+ L = I, so the no-jump evolution is unitary and jumps
  arrive as a Poisson process with the total rate, independent of the state.
  Each trajectory gives an operator G = (trajectory) U(T)^+ applied after the
  ideal gate, which twirls into Pauli P_k with probability |Tr(P_k G)|^2 / 4^n.

  Returns:
    (probs, stderr) tuple of numpy float arrays of length 4^n
  """
  if shots < 1:
    raise ValueError('shots must be positive, got %r' % shots)

  model = gate_model(gate) if isinstance(gate, str) else gate
  h = model.hamiltonian()
  jumps = [(p, rate) for p, rate in
           model.dissipators(eta_sys, lambda_biased_total).jumps if rate > 0]
  rates = np.array([rate for _, rate in jumps])
  total_rate = rates.sum()
  jump_matrices = [pauli_matrix(p) for p, _ in jumps]
  basis = [pauli_matrix(p) for p in pauli.all_paulis(h.n)]
  dim = 2 ** h.n

  energies, vectors = np.linalg.eigh(hamiltonian_matrix(h))

  def evolution(t):
    return (vectors * np.exp(-1j * energies * t)) @ vectors.conj().T

  T = h.evolution_time
  ideal_dag = evolution(T).conj().T
  rng = np.random.Generator(np.random.Philox(seed))

  counts = rng.poisson(total_rate * T, size=shots)
  # trajectories without jumps contribute weight 1 to the identity
  total = np.zeros(len(basis))
  total_sq = np.zeros(len(basis))
  total[0] = total_sq[0] = np.count_nonzero(counts == 0)

  for count in counts[counts > 0]:
    times = np.sort(rng.uniform(0, T, size=count))
    kinds = rng.choice(len(jumps), size=count, p=rates / total_rate)
    op = np.eye(dim, dtype=complex)
    last = 0.0
    for t, kind in zip(times, kinds):
      op = jump_matrices[kind] @ evolution(t - last) @ op
      last = t
    G = evolution(T - last) @ op @ ideal_dag
    weights = np.array([abs(np.trace(P @ G)) ** 2 / dim ** 2 for P in basis])
    total += weights
    total_sq += weights ** 2

  mean = total / shots
  variance = np.clip(total_sq / shots - mean ** 2, 0, None) * shots / max(shots - 1, 1)
  return mean, np.sqrt(variance / shots)
