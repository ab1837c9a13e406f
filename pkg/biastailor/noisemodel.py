"""Hybrid biased-depolarizing (HBD) circuit-level noise model.

Every noisy location in a syndrome extraction circuit is a *site* with a kind.
:func:`channel_for_site` maps a :class:`NoiseSpec` and a site kind to a Pauli
channel:

* H: single-qubit depolarizing, p/3 each
* CNOT: two-qubit depolarizing, p/15 each, or biased with the residual CNOT
  bias in the hbd-residual-cnot variant
* CZ: two-qubit biased with the system bias, or depolarizing in the
  hbd-depol-cz variant
* PREP_Z, MEAS_Z: X flip with probability p. PREP_X, MEAS_X: Z flip.
* IDLE: single-qubit biased, Z with eta p/(1+eta), X and Y each p/(2(1+eta))

The standard depolarizing (SD) model is a separate sentinel, not eta=1/2: it
makes every gate and idle channel fully depolarizing.
"""
import collections
import logging
import math

import numpy as np
from oauth_dropins.webutil import util
from oauth_dropins.webutil.util import json_dumps, json_loads
import scipy.interpolate

from . import gatechar
from . import pauli

SD = 'sd'

HBD_BP_CZ = 'hbd-bp-cz'
HBD_DEPOL_CZ = 'hbd-depol-cz'
HBD_RESIDUAL_CNOT = 'hbd-residual-cnot'
VARIANTS = (HBD_BP_CZ, HBD_DEPOL_CZ, HBD_RESIDUAL_CNOT)

# site kinds
H = 'H'
CNOT = 'CNOT'
CZ = 'CZ'
PREP_Z = 'PREP_Z'
PREP_X = 'PREP_X'
MEAS_Z = 'MEAS_Z'
MEAS_X = 'MEAS_X'
IDLE = 'IDLE'
SITE_KINDS = (H, CNOT, CZ, PREP_Z, PREP_X, MEAS_Z, MEAS_X, IDLE)
TWO_QUBIT_SITES = frozenset((CNOT, CZ))

# residual CNOT bias tables, keyed by source: None for the computed default,
# otherwise a file path.
_tables = {}


class NoiseConfigError(ValueError):
  """Raised for invalid noise parameters."""


class ModelCoverageError(ValueError):
  """Raised for site kinds the noise model doesn't cover."""


NoiseSpec = collections.namedtuple('NoiseSpec', [
  'p', 'eta', 'variant', 'eta_cnot'])


def noise_spec(p, eta, variant=HBD_BP_CZ, eta_cnot=None):
  """Creates and validates a :class:`NoiseSpec`.

  Args:
    p: float physical error rate in [0, 1)
    eta: positive float system bias, math.inf, or :data:`SD`
    variant: one of :data:`VARIANTS`
    eta_cnot: positive float residual CNOT bias. Required for
      hbd-residual-cnot unless eta is SD.

  Returns:
    :class:`NoiseSpec`

  Raises:
    :class:`NoiseConfigError`
  """
  if isinstance(eta, str) and eta.lower() == SD:
    eta = SD
  elif isinstance(eta, str):
    raise NoiseConfigError('eta must be a number or %r, got %r' % (SD, eta))

  if not 0 <= p < 1:
    raise NoiseConfigError('p must be in [0, 1), got %r' % p)
  if eta != SD and not eta > 0:
    raise NoiseConfigError('eta must be positive, got %r' % eta)
  if variant not in VARIANTS:
    raise NoiseConfigError('Unknown variant %r, expected one of %s' %
                           (variant, VARIANTS))
  if variant == HBD_RESIDUAL_CNOT and eta != SD:
    if eta_cnot is None:
      raise NoiseConfigError('%s needs eta_cnot' % variant)
    if not eta_cnot > 0:
      raise NoiseConfigError('eta_cnot must be positive, got %r' % eta_cnot)

  return NoiseSpec(p, eta, variant, eta_cnot)


class PauliChannel(collections.namedtuple('PauliChannel', ['n', 'probs'])):
  """A Pauli channel on n qubits.

  probs is a tuple of 4^n probabilities over the lexicographic Pauli basis,
  index 0 is the identity.
  """
  __slots__ = ()

  def error_probability(self):
    return math.fsum(self.probs[1:])

  def is_identity(self):
    return not any(self.probs[1:])

  def errors(self):
    """Yields (:class:`PauliString`, probability) for each nonzero error."""
    for index, prob in enumerate(self.probs):
      if index and prob:
        yield pauli.PauliString.from_index(index, self.n), prob


def _channel(n, error_probs):
  """Builds a :class:`PauliChannel` from its 4^n - 1 error probabilities."""
  error_probs = [float(p) for p in error_probs]
  return PauliChannel(n, tuple([1 - math.fsum(error_probs)] + error_probs))


def depolarizing(n, p):
  """p / (4^n - 1) on every non-identity Pauli."""
  return _channel(n, [p / (4 ** n - 1)] * (4 ** n - 1))


def biased(n, p, eta):
  """Splits p between Z-type errors and the rest with ratio eta.

  Z-type errors (pure Z factors, 2^n - 1 of them) get eta p / (1 + eta) and
  the rest get p / (1 + eta), equally within each class. For two qubits that's
  eta p / (3(1 + eta)) on ZI, IZ, ZZ and p / (12(1 + eta)) on the other 12.
  eta may be math.inf.
  """
  if not eta > 0:
    raise NoiseConfigError('eta must be positive, got %r' % eta)

  num_z = 2 ** n - 1
  num_other = 4 ** n - 2 ** n
  if math.isinf(eta):
    z_prob, other_prob = p / num_z, 0.0
  else:
    z_prob = eta * p / (num_z * (1 + eta))
    other_prob = p / (num_other * (1 + eta))

  return _channel(n, [z_prob if e.is_z_type() else other_prob
                      for e in pauli.all_paulis(n) if not e.is_identity()])


def legacy_biased_channel(n, p, eta):
  """Fraction-style biased model: Z-type p/(4^n-1) each, others p/((4^n-1) eta).

  Unlike :func:`biased`, the total error probability depends on eta. Kept
  for comparison with earlier biased circuit models.
  """
  if not eta > 0:
    raise NoiseConfigError('eta must be positive, got %r' % eta)
  z_prob = p / (4 ** n - 1)
  return _channel(n, [z_prob if e.is_z_type() else z_prob / eta
                      for e in pauli.all_paulis(n) if not e.is_identity()])


def flip(p, letter):
  """Single-qubit channel applying ``letter`` with probability p."""
  return _channel(1, [p if l == letter else 0 for l in pauli.LETTERS[1:]])


def channel_for_site(spec, site):
  """Returns the :class:`PauliChannel` for a site kind under a noise spec.

  Raises:
    :class:`ModelCoverageError` for unknown site kinds
    :class:`NoiseConfigError` if the residual CNOT variant has no eta_cnot
  """
  p, eta, variant = spec.p, spec.eta, spec.variant

  if site in (PREP_Z, MEAS_Z):
    return flip(p, 'X')
  elif site in (PREP_X, MEAS_X):
    return flip(p, 'Z')
  elif site not in SITE_KINDS:
    raise ModelCoverageError('No channel for site kind %r' % site)

  n = 2 if site in TWO_QUBIT_SITES else 1
  if eta == SD or site == H:
    return depolarizing(n, p)

  if site == IDLE:
    return biased(1, p, eta)
  elif site == CZ:
    return depolarizing(2, p) if variant == HBD_DEPOL_CZ else biased(2, p, eta)
  elif site == CNOT:
    if variant != HBD_RESIDUAL_CNOT:
      return depolarizing(2, p)
    if spec.eta_cnot is None:
      raise NoiseConfigError('%s needs eta_cnot' % variant)
    return biased(2, p, spec.eta_cnot)


class ResidualBiasTable(object):
  """Residual CNOT bias as a function of system bias.

  Interpolates monotonically (PCHIP) in log10 eta_sys between characterized
  grid points. Grid points return their stored values exactly.

  Attributes:
    etas: sorted tuple of float eta_sys grid points
    values: tuple of float residual biases, parallel to etas
  """

  def __init__(self, etas, values):
    if len(etas) != len(values) or len(etas) < 2:
      raise NoiseConfigError('Need at least two (eta_sys, eta_cnot) points')
    order = np.argsort(etas)
    self.etas = tuple(float(etas[i]) for i in order)
    self.values = tuple(float(values[i]) for i in order)
    if any(a == b for a, b in zip(self.etas, self.etas[1:])):
      raise NoiseConfigError('Duplicate eta_sys grid points')
    self._interp = scipy.interpolate.PchipInterpolator(
      np.log10(self.etas), self.values)

  @classmethod
  def characterize(cls, etas=gatechar.ETA_GRID, workers=1,
                   lambda_biased_total=gatechar.DEFAULT_LAMBDA):
    """Builds a table by running the Lindblad pipeline for CNOT on each eta."""
    profiles = gatechar.characterize_sweep(
      'CNOT', etas, lambda_biased_total=lambda_biased_total, workers=workers)
    logging.info('Characterized CNOT residual bias at %d system biases',
                 len(profiles))
    return cls([p.eta_sys for p in profiles],
               [p.residual_bias for p in profiles])

  @classmethod
  def load(cls, path):
    with open(path) as f:
      data = json_loads(f.read())
    try:
      return cls(data['eta_sys'], data['eta_cnot'])
    except (KeyError, TypeError) as e:
      raise NoiseConfigError('Bad residual bias table %s: %s' % (path, e))

  def save(self, path):
    with open(path, 'w') as f:
      f.write(json_dumps(util.trim_nulls({
        'gate': 'CNOT',
        'eta_sys': list(self.etas),
        'eta_cnot': list(self.values),
      }), indent=2))

  def __call__(self, eta_sys):
    if not eta_sys > 0:
      raise NoiseConfigError('eta_sys must be positive, got %r' % eta_sys)
    if eta_sys in self.etas:
      return self.values[self.etas.index(eta_sys)]

    lo, hi = self.etas[0], self.etas[-1]
    if not lo <= eta_sys <= hi:
      logging.warning('eta_sys=%g is outside the characterized range [%g, %g]; '
                      'clamping', eta_sys, lo, hi)
      return self.values[0] if eta_sys < lo else self.values[-1]

    return float(self._interp(math.log10(eta_sys)))


def residual_bias_table(path=None):
  """Returns the cached residual bias table, building it on first use.

  Args:
    path: optional JSON file written by :meth:`ResidualBiasTable.save`.
      Otherwise the table is characterized on the default grid.
  """
  table = _tables.get(path)
  if table is None:
    table = (ResidualBiasTable.load(path) if path
             else ResidualBiasTable.characterize())
    _tables[path] = table
  return table


def residual_bias_lookup(eta_sys, path=None):
  """Returns the residual CNOT bias for a system bias.

  Args:
    eta_sys: positive float
    path: optional residual bias table file, see :func:`residual_bias_table`
  """
  return residual_bias_table(path)(eta_sys)
